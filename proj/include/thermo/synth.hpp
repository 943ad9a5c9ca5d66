#pragma once

#include <cstdint>
#include <string>

#include "thermo/config.hpp"
#include "thermo/geometry.hpp"
#include "thermo/image.hpp"
#include "thermo/loss.hpp"

namespace thermo {

/// Synthetic fronto-parallel radiometric scene with known geometry: smooth
/// band-limited temperature texture over a plane, plus an optional intense
/// circular heat source.
struct SceneSpec {
    int width = 64;
    int height = 64;
    CameraIntrinsics intrinsics{300, 300, 31.5, 31.5};
    double plane_depth = 5.0;          // meters
    double background_temp_base = 7000;  // counts
    double texture_amplitude = 60;       // counts
    int texture_waves = 6;
    double texture_wavelength_min_px = 8;
    double texture_wavelength_max_px = 24;
    double hotspot_fraction = 0.0;  // fraction of image pixels
    double hotspot_value = 0.0;     // counts
    double noise_sigma = 0.0;       // counts
    Vec3 pose_axis_angle{0, 0, 0};  // true T_{t->s}
    Vec3 pose_translation{0, 0, 0};

    void validate() const;
    RigidTransform true_pose() const {
        return RigidTransform::from_axis_angle(pose_axis_angle, pose_translation);
    }

    static SceneSpec from_file(const std::string& path);
};

struct RenderedScene {
    RawFrame frame_t;
    RawFrame frame_s;
    DepthMap gt_depth_t;
    DepthMap gt_depth_s;
    RigidTransform gt_pose;               // T_{t->s}
    Image<std::uint8_t> hotspot_mask_t;   // hot pixels in the target view
    Image<std::uint8_t> hotspot_mask_s;
};

/// Renders both views of one continuous temperature field through the true
/// geometry, so the pair is exactly photometrically consistent before noise.
/// All randomness (texture phases, noise) is drawn from `seed`.
RenderedScene render_scene(const SceneSpec& spec, std::uint64_t seed);

struct DominationReport {
    double hot_loss_share = 0;     // share of |I_t - I_s| mass on hotspot pixels
    double background_contrast = 0;  // RMS texture of non-hot pixels after mapping
};

/// Quantifies how much of the photometric difference signal the heat source
/// absorbs under a given mapping mode.
DominationReport domination_report(const RenderedScene& scene, MappingMode mode,
                                   const EnhanceConfig& cfg);

}  // namespace thermo
