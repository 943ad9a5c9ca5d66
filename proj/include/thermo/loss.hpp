#pragma once

#include <array>
#include <span>
#include <vector>

#include "thermo/clahe.hpp"
#include "thermo/geometry.hpp"
#include "thermo/image.hpp"
#include "thermo/tctr.hpp"

namespace thermo {

struct LossWeights {
    double gamma = 0.85;
    double lambda_gc = 0.5;
    double lambda_sm = 0.1;

    void validate() const {
        if (gamma < 0 || gamma > 1) throw Error("LossWeights: gamma must be in [0,1]");
        if (lambda_gc < 0 || lambda_sm < 0) throw Error("LossWeights: lambdas must be >= 0");
    }
};

enum class MappingMode { MinMax, Tctr, TctrLde };

MappingMode parse_mapping_mode(const std::string& name);
std::string mapping_mode_name(MappingMode mode);

/// How raw counts become [0,1] intensities before any photometric term.
/// MinMax is the group-extent linear baseline.
struct EnhanceConfig {
    MappingMode mode = MappingMode::TctrLde;
    int n_bin = 30;
    ClaheConfig clahe;
};

/// One shared mapping for the whole snippet, applied per frame.
std::vector<EnhancedFrame> enhance_snippet(std::span<const RawFrame> frames,
                                           const EnhanceConfig& cfg);

/// Per-pixel |a - b|.
Image<double> abs_diff_map(const EnhancedFrame& a, const EnhancedFrame& b);

/// SSIM over a 3x3 uniform window with replicate padding; C1 = 0.01^2,
/// C2 = 0.03^2 for unit dynamic range.
Image<double> ssim_map(const EnhancedFrame& a, const EnhancedFrame& b);

/// Per-pixel (gamma/2)(1 - SSIM) + (1 - gamma)|a - b|.
Image<double> photometric_loss(const EnhancedFrame& a, const EnhancedFrame& b, double gamma);

/// Edge-aware smoothness: forward differences of the mean-normalized depth,
/// attenuated by image gradients; x and y terms each averaged over the pixels
/// where the difference exists.
double smoothness_loss(const DepthMap& depth, const EnhancedFrame& image);

/// |d_syn - d_interp| / (d_syn + d_interp) on valid pixels, 0 elsewhere.
Image<double> geometric_diff(const DepthMap& d_syn, const DepthMap& d_interp,
                             const ValidMask& mask);

/// Mean of g_diff over the valid set.
double geometric_loss(const Image<double>& g_diff, const ValidMask& mask);

struct MaskedReconstruction {
    double l_rec = 0;
    Image<double> m_gp;        // 1 - G_diff on valid pixels
    Image<std::uint8_t> m_sp;  // strict Iverson bracket
};

/// Masked mean of the photometric loss over the valid set.
MaskedReconstruction masked_reconstruction_loss(const EnhancedFrame& target,
                                                const EnhancedFrame& warped,
                                                const EnhancedFrame& source,
                                                const Image<double>& g_diff,
                                                const ValidMask& mask, double gamma);

/// Diagnostics for one directed (target, source) pair.
struct PairDiagnostics {
    int target_index = 0;
    int source_index = 0;
    double l_rec = 0;
    double l_gc = 0;
    EnhancedFrame warped;
    Image<double> l_pe_map;
    Image<double> g_diff_map;
    Image<double> m_gp;
    Image<std::uint8_t> m_sp;
    ValidMask v_p;
};

struct LossBreakdown {
    // Maps from the first directed pair (middle frame as target).
    Image<double> l_pe_map;
    Image<double> g_diff_map;
    Image<double> m_gp;
    Image<std::uint8_t> m_sp;
    ValidMask v_p;
    double l_rec = 0;
    double l_gc = 0;
    double l_sm = 0;
    double l_total = 0;
    std::vector<PairDiagnostics> pairs;
};

/// Directed-pair loss terms; pose maps target-frame points into the source
/// camera frame.
PairDiagnostics pair_loss(const EnhancedFrame& target, const EnhancedFrame& source,
                          const DepthMap& depth_t, const DepthMap& depth_s,
                          const RigidTransform& pose_t_to_s, const CameraIntrinsics& K,
                          double gamma);

/// Full objective on a three-frame snippet: one shared mapping profile,
/// reconstruction and geometric terms over the four directed adjacent pairs,
/// smoothness per frame. poses[0] maps frame 0 into frame 1, poses[1] maps
/// frame 1 into frame 2.
LossBreakdown total_loss(std::span<const RawFrame> frames, std::span<const DepthMap> depths,
                         const std::array<RigidTransform, 2>& poses, const CameraIntrinsics& K,
                         const LossWeights& weights, const EnhanceConfig& cfg);

}  // namespace thermo
