#include "thermo/geometry.hpp"

#include <algorithm>

namespace thermo {

Mat3 rotation_from_axis_angle(const Vec3& aa) {
    const double theta = aa.norm();
    if (theta < 1e-15) return Mat3::identity();
    const Vec3 k = aa * (1.0 / theta);
    const double c = std::cos(theta), s = std::sin(theta), v = 1.0 - c;
    Mat3 R;
    R.m = {c + k.x * k.x * v,       k.x * k.y * v - k.z * s, k.x * k.z * v + k.y * s,
           k.y * k.x * v + k.z * s, c + k.y * k.y * v,       k.y * k.z * v - k.x * s,
           k.z * k.x * v - k.y * s, k.z * k.y * v + k.x * s, c + k.z * k.z * v};
    return R;
}

Vec3 axis_angle_from_rotation(const Mat3& R) {
    const double cos_theta = std::clamp((R.trace() - 1.0) / 2.0, -1.0, 1.0);
    const double theta = std::acos(cos_theta);
    if (theta < 1e-12) return {0, 0, 0};
    Vec3 w{R.m[7] - R.m[5], R.m[2] - R.m[6], R.m[3] - R.m[1]};
    const double s = 2.0 * std::sin(theta);
    if (s < 1e-12) {
        // theta ~ pi: extract axis from the symmetric part.
        Vec3 axis{std::sqrt(std::max(0.0, (R.m[0] + 1.0) / 2.0)),
                  std::sqrt(std::max(0.0, (R.m[4] + 1.0) / 2.0)),
                  std::sqrt(std::max(0.0, (R.m[8] + 1.0) / 2.0))};
        if (R.m[1] + R.m[3] < 0) axis.y = -axis.y;
        if (R.m[2] + R.m[6] < 0) axis.z = -axis.z;
        return axis * theta;
    }
    return w * (theta / s);
}

double bilinear_sample(const Image<double>& img, double x, double y) {
    // Snap coordinates a rounding error away from a grid node so that
    // project(backproject(.)) round-trips sample values exactly.
    const double rx = std::round(x), ry = std::round(y);
    if (std::abs(x - rx) < 1e-9) x = rx;
    if (std::abs(y - ry) < 1e-9) y = ry;
    const int x0 = std::clamp(static_cast<int>(std::floor(x)), 0, img.width - 1);
    const int y0 = std::clamp(static_cast<int>(std::floor(y)), 0, img.height - 1);
    const int x1 = std::min(x0 + 1, img.width - 1);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double fx = x - x0, fy = y - y0;
    return (1 - fy) * ((1 - fx) * img.at(x0, y0) + fx * img.at(x1, y0)) +
           fy * ((1 - fx) * img.at(x0, y1) + fx * img.at(x1, y1));
}

namespace {

struct Projection {
    double u = 0, v = 0, z = 0;
    bool valid = false;
};

Projection project_target_pixel(int x, int y, const DepthMap& depth_t, const RigidTransform& pose,
                                const CameraIntrinsics& K, int src_w, int src_h) {
    const double d = depth_t.at(x, y);
    if (!(d > 0)) return {};
    const Vec3 pt = backproject({static_cast<double>(x), static_cast<double>(y)}, d, K);
    const Vec3 ps = pose.apply(pt);
    if (!(ps.z > 0)) return {};
    double u = K.fx * ps.x / ps.z + K.cx;
    double v = K.fy * ps.y / ps.z + K.cy;
    // Snap off round-trip rounding error so identity-like poses stay valid at
    // the image border.
    const double ru = std::round(u), rv = std::round(v);
    if (std::abs(u - ru) < 1e-9) u = ru;
    if (std::abs(v - rv) < 1e-9) v = rv;
    if (u < 0 || u > src_w - 1 || v < 0 || v > src_h - 1) return {};
    return {u, v, ps.z, true};
}

}  // namespace

WarpResult inverse_warp(const EnhancedFrame& source, const DepthMap& depth_t,
                        const RigidTransform& pose, const CameraIntrinsics& K) {
    K.validate();
    if (!source.same_shape(depth_t)) throw Error("inverse_warp: shape mismatch");

    WarpResult r{EnhancedFrame(source.width, source.height), ValidMask(source.width, source.height)};
    for (int y = 0; y < source.height; ++y) {
        for (int x = 0; x < source.width; ++x) {
            const Projection p = project_target_pixel(x, y, depth_t, pose, K, source.width, source.height);
            if (!p.valid) continue;
            r.warped.at(x, y) = bilinear_sample(source, p.u, p.v);
            r.mask.set(x, y, true);
        }
    }
    return r;
}

DepthWarpResult warp_depth(const DepthMap& depth_s, const DepthMap& depth_t,
                           const RigidTransform& pose, const CameraIntrinsics& K) {
    K.validate();
    if (!depth_s.same_shape(depth_t)) throw Error("warp_depth: shape mismatch");

    DepthWarpResult r{DepthMap(depth_t.width, depth_t.height),
                      DepthMap(depth_t.width, depth_t.height),
                      ValidMask(depth_t.width, depth_t.height)};
    for (int y = 0; y < depth_t.height; ++y) {
        for (int x = 0; x < depth_t.width; ++x) {
            const Projection p = project_target_pixel(x, y, depth_t, pose, K, depth_s.width, depth_s.height);
            if (!p.valid) continue;
            const double sampled = bilinear_sample(depth_s, p.u, p.v);
            if (!(sampled > 0)) continue;
            r.d_syn.at(x, y) = sampled;
            r.d_interp.at(x, y) = p.z;
            r.mask.set(x, y, true);
        }
    }
    return r;
}

}  // namespace thermo
