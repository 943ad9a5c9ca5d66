#pragma once

#include <array>
#include <cmath>

#include "thermo/image.hpp"

namespace thermo {

struct Vec3 {
    double x = 0, y = 0, z = 0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const { return std::sqrt(dot(*this)); }
};

struct Mat3 {
    // Row-major.
    std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

    static Mat3 identity() { return {}; }

    Vec3 operator*(const Vec3& v) const {
        return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
                m[3] * v.x + m[4] * v.y + m[5] * v.z,
                m[6] * v.x + m[7] * v.y + m[8] * v.z};
    }
    Mat3 operator*(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double s = 0;
                for (int k = 0; k < 3; ++k) s += m[i * 3 + k] * o.m[k * 3 + j];
                r.m[i * 3 + j] = s;
            }
        return r;
    }
    Mat3 transposed() const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r.m[i * 3 + j] = m[j * 3 + i];
        return r;
    }
    double trace() const { return m[0] + m[4] + m[8]; }
};

/// Rodrigues' formula; zero vector gives the identity.
Mat3 rotation_from_axis_angle(const Vec3& aa);

/// Inverse of rotation_from_axis_angle (angle in [0, pi]).
Vec3 axis_angle_from_rotation(const Mat3& R);

struct CameraIntrinsics {
    double fx = 0, fy = 0, cx = 0, cy = 0;

    void validate() const {
        if (!(fx > 0) || !(fy > 0)) throw Error("CameraIntrinsics: focal lengths must be > 0");
    }
};

/// 6-DoF relative camera pose; maps points from the "from" frame into the
/// "to" frame as R*p + t.
struct RigidTransform {
    Mat3 rotation;
    Vec3 translation;

    static RigidTransform identity() { return {}; }
    static RigidTransform from_axis_angle(const Vec3& aa, const Vec3& t) {
        return {rotation_from_axis_angle(aa), t};
    }

    Vec3 apply(const Vec3& p) const { return rotation * p + translation; }

    RigidTransform compose(const RigidTransform& inner) const {
        // (*this) after inner: p -> R_outer (R_inner p + t_inner) + t_outer
        return {rotation * inner.rotation, rotation * inner.translation + translation};
    }

    RigidTransform inverse() const {
        const Mat3 Rt = rotation.transposed();
        return {Rt, (Rt * translation) * -1.0};
    }
};

struct Pixel {
    double u = 0, v = 0;
};

/// Pinhole back-projection to the camera frame.
inline Vec3 backproject(const Pixel& p, double depth, const CameraIntrinsics& K) {
    if (!(depth > 0)) throw Error("backproject: non-positive depth");
    return {(p.u - K.cx) / K.fx * depth, (p.v - K.cy) / K.fy * depth, depth};
}

/// Pinhole projection; the point must be in front of the camera.
inline Pixel project(const Vec3& pt, const CameraIntrinsics& K) {
    if (!(pt.z > 0)) throw Error("project: point behind camera");
    return {K.fx * pt.x / pt.z + K.cx, K.fy * pt.y / pt.z + K.cy};
}

/// Bilinear sample at (x, y); caller guarantees 0 <= x <= W-1, 0 <= y <= H-1.
double bilinear_sample(const Image<double>& img, double x, double y);

struct WarpResult {
    EnhancedFrame warped;
    ValidMask mask;
};

/// Synthesizes the target view from the source image: each target pixel is
/// back-projected with depth_t, moved by pose (target -> source), projected
/// into the source, and sampled bilinearly. Out-of-bounds or behind-camera
/// pixels are masked invalid, never clamped.
WarpResult inverse_warp(const EnhancedFrame& source, const DepthMap& depth_t,
                        const RigidTransform& pose, const CameraIntrinsics& K);

struct DepthWarpResult {
    DepthMap d_syn;     // source depth sampled at the projected coordinate
    DepthMap d_interp;  // target depth transported into the source frame
    ValidMask mask;
};

/// Depth pair for the geometric consistency check: d_syn is the source depth
/// map sampled at the sub-pixel projection of each target pixel; d_interp is
/// the z-component of the target point expressed in the source camera frame.
/// Both share the source-frame coordinate, so they agree on a consistent
/// static scene.
DepthWarpResult warp_depth(const DepthMap& depth_s, const DepthMap& depth_t,
                           const RigidTransform& pose, const CameraIntrinsics& K);

}  // namespace thermo
