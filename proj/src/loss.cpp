#include "thermo/loss.hpp"

#include <algorithm>
#include <cmath>

namespace thermo {

namespace {

constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

// 3x3 uniform box filter with replicate padding.
Image<double> box3(const Image<double>& img) {
    Image<double> out(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            double s = 0;
            for (int dy = -1; dy <= 1; ++dy) {
                const int yy = std::clamp(y + dy, 0, img.height - 1);
                for (int dx = -1; dx <= 1; ++dx)
                    s += img.at(std::clamp(x + dx, 0, img.width - 1), yy);
            }
            out.at(x, y) = s / 9.0;
        }
    }
    return out;
}

Image<double> hadamard(const Image<double>& a, const Image<double>& b) {
    Image<double> out(a.width, a.height);
    for (std::size_t k = 0; k < a.size(); ++k) out.data[k] = a.data[k] * b.data[k];
    return out;
}

}  // namespace

MappingMode parse_mapping_mode(const std::string& name) {
    if (name == "minmax") return MappingMode::MinMax;
    if (name == "tctr") return MappingMode::Tctr;
    if (name == "tctr+lde") return MappingMode::TctrLde;
    throw Error("unknown mapping mode: " + name + " (expected minmax|tctr|tctr+lde)");
}

std::string mapping_mode_name(MappingMode mode) {
    switch (mode) {
        case MappingMode::MinMax: return "minmax";
        case MappingMode::Tctr: return "tctr";
        case MappingMode::TctrLde: return "tctr+lde";
    }
    throw Error("unknown mapping mode");
}

std::vector<EnhancedFrame> enhance_snippet(std::span<const RawFrame> frames,
                                           const EnhanceConfig& cfg) {
    std::vector<EnhancedFrame> out;
    out.reserve(frames.size());
    if (cfg.mode == MappingMode::MinMax) {
        const auto [lo, hi] = group_extent(frames);
        for (const auto& f : frames) out.push_back(minmax_normalize_group(f, lo, hi));
        return out;
    }
    out = enhance_group(frames, cfg.n_bin);
    if (cfg.mode == MappingMode::TctrLde)
        for (auto& f : out) f = clahe(f, cfg.clahe);
    return out;
}

Image<double> abs_diff_map(const EnhancedFrame& a, const EnhancedFrame& b) {
    if (!a.same_shape(b)) throw Error("abs_diff_map: shape mismatch");
    Image<double> out(a.width, a.height);
    for (std::size_t k = 0; k < a.size(); ++k) out.data[k] = std::abs(a.data[k] - b.data[k]);
    return out;
}

Image<double> ssim_map(const EnhancedFrame& a, const EnhancedFrame& b) {
    if (!a.same_shape(b)) throw Error("ssim_map: shape mismatch");
    const Image<double> mu_a = box3(a);
    const Image<double> mu_b = box3(b);
    const Image<double> aa = box3(hadamard(a, a));
    const Image<double> bb = box3(hadamard(b, b));
    const Image<double> ab = box3(hadamard(a, b));

    Image<double> out(a.width, a.height);
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double ma = mu_a.data[k], mb = mu_b.data[k];
        const double va = aa.data[k] - ma * ma;
        const double vb = bb.data[k] - mb * mb;
        const double cov = ab.data[k] - ma * mb;
        out.data[k] = ((2 * ma * mb + kC1) * (2 * cov + kC2)) /
                      ((ma * ma + mb * mb + kC1) * (va + vb + kC2));
    }
    return out;
}

Image<double> photometric_loss(const EnhancedFrame& a, const EnhancedFrame& b, double gamma) {
    if (!a.same_shape(b)) throw Error("photometric_loss: shape mismatch");
    const Image<double> ssim = ssim_map(a, b);
    Image<double> out(a.width, a.height);
    for (std::size_t k = 0; k < a.size(); ++k)
        out.data[k] = gamma / 2.0 * (1.0 - ssim.data[k]) +
                      (1.0 - gamma) * std::abs(a.data[k] - b.data[k]);
    return out;
}

double smoothness_loss(const DepthMap& depth, const EnhancedFrame& image) {
    if (!depth.same_shape(image)) throw Error("smoothness_loss: shape mismatch");
    double mean = 0;
    for (double d : depth.data) mean += d;
    mean /= static_cast<double>(depth.size());
    if (std::abs(mean) < 1e-300) throw Error("smoothness_loss: zero-mean depth");

    double sum_x = 0, sum_y = 0;
    for (int y = 0; y < depth.height; ++y)
        for (int x = 0; x + 1 < depth.width; ++x) {
            const double dd = (depth.at(x + 1, y) - depth.at(x, y)) / mean;
            const double di = image.at(x + 1, y) - image.at(x, y);
            sum_x += std::abs(dd) * std::exp(-std::abs(di));
        }
    for (int y = 0; y + 1 < depth.height; ++y)
        for (int x = 0; x < depth.width; ++x) {
            const double dd = (depth.at(x, y + 1) - depth.at(x, y)) / mean;
            const double di = image.at(x, y + 1) - image.at(x, y);
            sum_y += std::abs(dd) * std::exp(-std::abs(di));
        }

    const double nx = static_cast<double>(depth.width - 1) * depth.height;
    const double ny = static_cast<double>(depth.width) * (depth.height - 1);
    return (nx > 0 ? sum_x / nx : 0.0) + (ny > 0 ? sum_y / ny : 0.0);
}

Image<double> geometric_diff(const DepthMap& d_syn, const DepthMap& d_interp,
                             const ValidMask& mask) {
    if (!d_syn.same_shape(d_interp)) throw Error("geometric_diff: shape mismatch");
    Image<double> out(d_syn.width, d_syn.height);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x) {
            if (!mask.at(x, y)) continue;
            const double a = d_syn.at(x, y), b = d_interp.at(x, y);
            if (!(a > 0) || !(b > 0))
                throw Error("geometric_diff: non-positive depth on a valid pixel");
            out.at(x, y) = std::abs(a - b) / (a + b);
        }
    return out;
}

double geometric_loss(const Image<double>& g_diff, const ValidMask& mask) {
    double sum = 0;
    std::size_t n = 0;
    for (int y = 0; y < g_diff.height; ++y)
        for (int x = 0; x < g_diff.width; ++x)
            if (mask.at(x, y)) {
                sum += g_diff.at(x, y);
                ++n;
            }
    if (n == 0) throw Error("geometric_loss: empty valid set");
    return sum / static_cast<double>(n);
}

MaskedReconstruction masked_reconstruction_loss(const EnhancedFrame& target,
                                                const EnhancedFrame& warped,
                                                const EnhancedFrame& source,
                                                const Image<double>& g_diff,
                                                const ValidMask& mask, double gamma) {
    if (!target.same_shape(warped) || !target.same_shape(source))
        throw Error("masked_reconstruction_loss: shape mismatch");

    const Image<double> l_pe_warp = photometric_loss(target, warped, gamma);
    const Image<double> l_pe_id = photometric_loss(target, source, gamma);

    MaskedReconstruction r;
    r.m_gp = Image<double>(target.width, target.height);
    r.m_sp = Image<std::uint8_t>(target.width, target.height);

    double sum = 0;
    std::size_t n = 0;
    for (int y = 0; y < target.height; ++y)
        for (int x = 0; x < target.width; ++x) {
            if (!mask.at(x, y)) continue;
            ++n;
            const double m_gp = 1.0 - g_diff.at(x, y);
            const bool m_sp = l_pe_warp.at(x, y) < l_pe_id.at(x, y);  // strict
            r.m_gp.at(x, y) = m_gp;
            r.m_sp.at(x, y) = m_sp ? 1 : 0;
            if (m_sp) sum += m_gp * l_pe_warp.at(x, y);
        }
    if (n == 0) throw Error("masked_reconstruction_loss: empty valid set");
    r.l_rec = sum / static_cast<double>(n);
    return r;
}

PairDiagnostics pair_loss(const EnhancedFrame& target, const EnhancedFrame& source,
                          const DepthMap& depth_t, const DepthMap& depth_s,
                          const RigidTransform& pose_t_to_s, const CameraIntrinsics& K,
                          double gamma) {
    WarpResult warp = inverse_warp(source, depth_t, pose_t_to_s, K);
    DepthWarpResult dwarp = warp_depth(depth_s, depth_t, pose_t_to_s, K);

    // Intersection of photometric and depth validity.
    ValidMask mask(target.width, target.height);
    for (int y = 0; y < target.height; ++y)
        for (int x = 0; x < target.width; ++x)
            mask.set(x, y, warp.mask.at(x, y) && dwarp.mask.at(x, y));

    PairDiagnostics d;
    d.g_diff_map = geometric_diff(dwarp.d_syn, dwarp.d_interp, mask);
    d.l_gc = geometric_loss(d.g_diff_map, mask);
    MaskedReconstruction rec =
        masked_reconstruction_loss(target, warp.warped, source, d.g_diff_map, mask, gamma);
    d.l_rec = rec.l_rec;
    d.l_pe_map = photometric_loss(target, warp.warped, gamma);
    d.m_gp = std::move(rec.m_gp);
    d.m_sp = std::move(rec.m_sp);
    d.v_p = std::move(mask);
    d.warped = std::move(warp.warped);
    return d;
}

LossBreakdown total_loss(std::span<const RawFrame> frames, std::span<const DepthMap> depths,
                         const std::array<RigidTransform, 2>& poses, const CameraIntrinsics& K,
                         const LossWeights& weights, const EnhanceConfig& cfg) {
    weights.validate();
    if (frames.size() != 3 || depths.size() != 3)
        throw Error("total_loss: expected exactly 3 frames and 3 depth maps");

    const std::vector<EnhancedFrame> eh = enhance_snippet(frames, cfg);

    struct Directed {
        int t, s;
        RigidTransform pose;
    };
    const Directed directed[4] = {{1, 0, poses[0].inverse()},
                                  {0, 1, poses[0]},
                                  {1, 2, poses[1]},
                                  {2, 1, poses[1].inverse()}};

    LossBreakdown out;
    double rec = 0, gc = 0;
    for (const auto& dir : directed) {
        PairDiagnostics d =
            pair_loss(eh[dir.t], eh[dir.s], depths[dir.t], depths[dir.s], dir.pose, K, weights.gamma);
        d.target_index = dir.t;
        d.source_index = dir.s;
        rec += d.l_rec;
        gc += d.l_gc;
        out.pairs.push_back(std::move(d));
    }
    out.l_rec = rec / 4.0;
    out.l_gc = gc / 4.0;

    double sm = 0;
    for (int i = 0; i < 3; ++i) sm += smoothness_loss(depths[i], eh[i]);
    out.l_sm = sm / 3.0;

    out.l_total = out.l_rec + weights.lambda_gc * out.l_gc + weights.lambda_sm * out.l_sm;

    const PairDiagnostics& first = out.pairs.front();
    out.l_pe_map = first.l_pe_map;
    out.g_diff_map = first.g_diff_map;
    out.m_gp = first.m_gp;
    out.m_sp = first.m_sp;
    out.v_p = first.v_p;
    return out;
}

}  // namespace thermo
