#include "microsplat/camera.hpp"

#include "microsplat/error.hpp"

namespace microsplat {

void Camera::validate() const {
    require(fx > 0.0 && fy > 0.0, ErrorCode::InvalidParameter, "focal lengths must be positive");
    require(width >= 1 && height >= 1, ErrorCode::InvalidParameter, "image size must be >= 1");
    require(rotation.allFinite() && translation.allFinite(), ErrorCode::InvalidParameter,
            "camera pose must be finite");
    const double err = (rotation * rotation.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff();
    require(err <= 1e-8, ErrorCode::InvalidParameter, "camera rotation is not orthonormal");
    require(near_plane > 0.0, ErrorCode::InvalidParameter, "near plane must be positive");
}

Camera Camera::look_at(const Vec3 &eye, const Vec3 &target, const Vec3 &up, double fx,
                       double fy, int width, int height) {
    const Vec3 forward = (target - eye).normalized();
    Vec3 right = forward.cross(up);
    require(right.norm() > 1e-9, ErrorCode::InvalidParameter, "look_at: up parallel to view");
    right.normalize();
    const Vec3 down = forward.cross(right);

    Camera cam;
    cam.fx = fx;
    cam.fy = fy;
    cam.width = width;
    cam.height = height;
    cam.cx = 0.5 * width;
    cam.cy = 0.5 * height;
    cam.rotation.row(0) = right.transpose();
    cam.rotation.row(1) = down.transpose();
    cam.rotation.row(2) = forward.transpose();
    cam.translation = -cam.rotation * eye;
    return cam;
}

} // namespace microsplat
