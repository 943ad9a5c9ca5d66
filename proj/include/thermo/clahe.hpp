#pragma once

#include "thermo/image.hpp"

namespace thermo {

/// Contrast-limited adaptive histogram equalization settings. clip_limit is a
/// multiplier of the uniform per-tile bin height.
struct ClaheConfig {
    double clip_limit = 2.0;
    int tile_cols = 8;
    int tile_rows = 8;
    int levels = 65536;

    void validate() const {
        if (!(clip_limit > 0)) throw Error("ClaheConfig: clip_limit must be > 0");
        if (tile_cols < 1 || tile_rows < 1) throw Error("ClaheConfig: tile dims must be >= 1");
        if (levels < 2) throw Error("ClaheConfig: levels must be >= 2");
    }
};

/// Local detail enhancement of a [0,1] frame: per-tile clipped histogram
/// equalization with bilinear blending of the four surrounding tile mappings.
EnhancedFrame clahe(const EnhancedFrame& frame, const ClaheConfig& cfg);

namespace clahe_detail {

/// Clips each bin at clip_limit * (tile_pixels / levels) and redistributes the
/// excess uniformly in a single pass; total mass is conserved exactly.
void clip_and_redistribute(std::vector<long long>& hist, long long tile_pixels,
                           double clip_limit);

/// Normalized CDF of a (clipped) tile histogram: the level -> value mapping.
std::vector<double> tile_cdf_map(const std::vector<long long>& hist, long long tile_pixels);

}  // namespace clahe_detail

}  // namespace thermo
