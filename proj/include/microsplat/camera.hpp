#pragma once

#include "microsplat/splat.hpp"

namespace microsplat {

/// Pinhole camera with a world-to-camera pose. Camera space is x right,
/// y down, z forward. Pixel (x, y) is sampled at integer coordinates (x, y).
struct Camera {
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 1;
    int height = 1;
    Mat3 rotation = Mat3::Identity();  // world -> camera
    Vec3 translation = Vec3::Zero();   // world -> camera
    double near_plane = 0.01;

    /// Throws InvalidParameter when an invariant is broken.
    void validate() const;

    Vec3 to_camera(const Vec3 &world) const { return rotation * world + translation; }
    Vec3 center() const { return -rotation.transpose() * translation; }

    /// Camera at `eye` looking at `target`; `up` is the approximate world up.
    static Camera look_at(const Vec3 &eye, const Vec3 &target, const Vec3 &up, double fx,
                          double fy, int width, int height);

    bool operator==(const Camera &) const = default;
};

} // namespace microsplat
