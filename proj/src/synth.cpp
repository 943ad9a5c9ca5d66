#include "thermo/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace thermo {

namespace {

struct Wave {
    double kx, ky, phase;
};

/// Continuous temperature field over the plane, in counts.
struct TemperatureField {
    const SceneSpec* spec;
    std::vector<Wave> waves;
    double hot_cx = 0, hot_cy = 0, hot_r = 0;  // world coords on the plane

    double texture(double X, double Y) const {
        double s = 0;
        for (const auto& w : waves) s += std::sin(w.kx * X + w.ky * Y + w.phase);
        return s / static_cast<double>(waves.size());
    }

    bool hot(double X, double Y) const {
        if (spec->hotspot_fraction <= 0) return false;
        const double dx = X - hot_cx, dy = Y - hot_cy;
        return dx * dx + dy * dy <= hot_r * hot_r;
    }

    double value(double X, double Y) const {
        if (hot(X, Y)) return spec->hotspot_value;
        return spec->background_temp_base + spec->texture_amplitude * texture(X, Y);
    }
};

TemperatureField make_field(const SceneSpec& spec, std::mt19937_64& rng) {
    TemperatureField f;
    f.spec = &spec;

    // Pixel-to-world scale on the plane.
    const double px = spec.plane_depth / spec.intrinsics.fx;
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    std::uniform_real_distribution<double> wavelength(spec.texture_wavelength_min_px,
                                                      spec.texture_wavelength_max_px);
    for (int i = 0; i < spec.texture_waves; ++i) {
        const double a = angle(rng);
        const double k = 2.0 * std::numbers::pi / (wavelength(rng) * px);
        f.waves.push_back({k * std::cos(a), k * std::sin(a), angle(rng)});
    }

    if (spec.hotspot_fraction > 0) {
        // Disk sized to cover ~hotspot_fraction of the target image.
        const double area_px = spec.hotspot_fraction * spec.width * spec.height;
        f.hot_r = std::sqrt(area_px / std::numbers::pi) * px;
        f.hot_cx = (0.30 * spec.width - spec.intrinsics.cx) * px;
        f.hot_cy = (0.30 * spec.height - spec.intrinsics.cy) * px;
    }
    return f;
}

std::uint16_t to_count(double v) {
    return static_cast<std::uint16_t>(std::clamp(std::llround(v), 0LL, 65535LL));
}

}  // namespace

void SceneSpec::validate() const {
    if (width < 2 || height < 2) throw Error("SceneSpec: image size must be >= 2x2");
    intrinsics.validate();
    if (!(plane_depth > 0)) throw Error("SceneSpec: plane_depth must be > 0");
    if (hotspot_fraction < 0 || hotspot_fraction >= 1)
        throw Error("SceneSpec: hotspot_fraction must be in [0,1)");
    if (hotspot_fraction > 0 && (hotspot_value < 0 || hotspot_value > 65535))
        throw Error("SceneSpec: hotspot value outside 16-bit range");
    if (background_temp_base < 0 || background_temp_base > 65535)
        throw Error("SceneSpec: background_temp_base outside 16-bit range");
    if (texture_waves < 1) throw Error("SceneSpec: texture_waves must be >= 1");
}

SceneSpec SceneSpec::from_file(const std::string& path) {
    const KvConfig cfg = KvConfig::from_file(path);
    SceneSpec s;
    s.width = cfg.get_int("width", s.width);
    s.height = cfg.get_int("height", s.height);
    s.intrinsics = {cfg.get_double("fx", 300), cfg.get_double("fy", 300),
                    cfg.get_double("cx", (s.width - 1) / 2.0),
                    cfg.get_double("cy", (s.height - 1) / 2.0)};
    s.plane_depth = cfg.get_double("plane_depth", s.plane_depth);
    s.background_temp_base = cfg.get_double("background_temp_base", s.background_temp_base);
    s.texture_amplitude = cfg.get_double("texture_amplitude", s.texture_amplitude);
    s.texture_waves = cfg.get_int("texture_waves", s.texture_waves);
    s.texture_wavelength_min_px = cfg.get_double("texture_wavelength_min_px", s.texture_wavelength_min_px);
    s.texture_wavelength_max_px = cfg.get_double("texture_wavelength_max_px", s.texture_wavelength_max_px);
    s.hotspot_fraction = cfg.get_double("hotspot_fraction", 0.0);
    s.hotspot_value = cfg.get_double("hotspot_value", 0.0);
    s.noise_sigma = cfg.get_double("noise_sigma", 0.0);
    s.pose_axis_angle = {cfg.get_double("rx", 0), cfg.get_double("ry", 0), cfg.get_double("rz", 0)};
    s.pose_translation = {cfg.get_double("tx", 0), cfg.get_double("ty", 0), cfg.get_double("tz", 0)};
    s.validate();
    return s;
}

RenderedScene render_scene(const SceneSpec& spec, std::uint64_t seed) {
    spec.validate();
    std::mt19937_64 rng(seed);
    const TemperatureField field = make_field(spec, rng);
    const CameraIntrinsics& K = spec.intrinsics;
    const double Z = spec.plane_depth;

    RenderedScene out;
    out.gt_pose = spec.true_pose();
    out.frame_t = RawFrame(spec.width, spec.height);
    out.frame_s = RawFrame(spec.width, spec.height);
    out.frame_s.frame_index = 1;
    out.gt_depth_t = DepthMap(spec.width, spec.height, Z);
    out.gt_depth_s = DepthMap(spec.width, spec.height);
    out.hotspot_mask_t = Image<std::uint8_t>(spec.width, spec.height, 0);
    out.hotspot_mask_s = Image<std::uint8_t>(spec.width, spec.height, 0);

    // Target view: rays hit the plane z = Z directly.
    for (int y = 0; y < spec.height; ++y)
        for (int x = 0; x < spec.width; ++x) {
            const double X = (x - K.cx) / K.fx * Z;
            const double Y = (y - K.cy) / K.fy * Z;
            out.frame_t.at(x, y) = to_count(field.value(X, Y));
            out.hotspot_mask_t.at(x, y) = field.hot(X, Y) ? 1 : 0;
        }

    // Source view: intersect each source ray with the plane in target coords.
    const RigidTransform s_to_t = out.gt_pose.inverse();
    for (int y = 0; y < spec.height; ++y)
        for (int x = 0; x < spec.width; ++x) {
            const Vec3 dir{(x - K.cx) / K.fx, (y - K.cy) / K.fy, 1.0};
            const Vec3 rd = s_to_t.rotation * dir;
            if (std::abs(rd.z) < 1e-12)
                throw Error("render_scene: source ray parallel to scene plane");
            const double lambda = (Z - s_to_t.translation.z) / rd.z;
            if (!(lambda > 0)) throw Error("render_scene: scene plane behind source camera");
            const Vec3 pt = s_to_t.apply(dir * lambda);
            out.frame_s.at(x, y) = to_count(field.value(pt.x, pt.y));
            out.hotspot_mask_s.at(x, y) = field.hot(pt.x, pt.y) ? 1 : 0;
            out.gt_depth_s.at(x, y) = lambda;  // dir.z == 1, so z-depth == lambda
        }

    if (spec.noise_sigma > 0) {
        std::normal_distribution<double> noise(0.0, spec.noise_sigma);
        for (auto& c : out.frame_t.counts) c = to_count(c + noise(rng));
        for (auto& c : out.frame_s.counts) c = to_count(c + noise(rng));
    }
    return out;
}

DominationReport domination_report(const RenderedScene& scene, MappingMode mode,
                                   const EnhanceConfig& cfg) {
    EnhanceConfig mode_cfg = cfg;
    mode_cfg.mode = mode;
    const RawFrame group[2] = {scene.frame_t, scene.frame_s};
    const std::vector<EnhancedFrame> eh = enhance_snippet(group, mode_cfg);

    DominationReport r;
    double total = 0, hot = 0;
    for (std::size_t k = 0; k < eh[0].size(); ++k) {
        const double d = std::abs(eh[0].data[k] - eh[1].data[k]);
        total += d;
        if (scene.hotspot_mask_t.data[k] || scene.hotspot_mask_s.data[k]) hot += d;
    }
    r.hot_loss_share = (total > 0) ? hot / total : 0.0;

    double mean = 0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < eh[0].size(); ++k)
        if (!scene.hotspot_mask_t.data[k]) {
            mean += eh[0].data[k];
            ++n;
        }
    if (n > 0) {
        mean /= static_cast<double>(n);
        double var = 0;
        for (std::size_t k = 0; k < eh[0].size(); ++k)
            if (!scene.hotspot_mask_t.data[k]) {
                const double d = eh[0].data[k] - mean;
                var += d * d;
            }
        r.background_contrast = std::sqrt(var / static_cast<double>(n));
    }
    return r;
}

}  // namespace thermo
