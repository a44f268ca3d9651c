#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <vector>

namespace microsplat {

/// Row-major H x W x 3 float64 image, linear RGB.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    Image() = default;
    Image(int w, int h, double fill = 0.0)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, fill) {}

    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
    std::size_t size() const { return data.size(); }

    double &at(int x, int y, int c) { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
    double at(int x, int y, int c) const {
        return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }

    Eigen::Vector3d pixel(int x, int y) const {
        const double *p = &data[(static_cast<std::size_t>(y) * width + x) * 3];
        return {p[0], p[1], p[2]};
    }
    void set_pixel(int x, int y, const Eigen::Vector3d &v) {
        double *p = &data[(static_cast<std::size_t>(y) * width + x) * 3];
        p[0] = v[0];
        p[1] = v[1];
        p[2] = v[2];
    }

    bool same_shape(const Image &o) const { return width == o.width && height == o.height; }
    bool operator==(const Image &) const = default;
};

} // namespace microsplat
