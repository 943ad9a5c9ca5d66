#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "thermo/image.hpp"

namespace thermo {

/// Raised when a frame group has zero dynamic range (t_min == t_max).
class DegenerateGroupError : public Error {
public:
    explicit DegenerateGroupError(std::uint16_t v)
        : Error("degenerate group: all counts equal " + std::to_string(v)) {}
};

/// Group-wise histogram of raw counts over uniform bins spanning the global
/// extent of every frame in the group.
struct GroupHistogram {
    double t_min = 0;
    double t_max = 0;
    int n_bin = 0;
    std::vector<double> edges;              // n_bin + 1 boundaries
    std::vector<long long> counts_per_bin;  // n_i
    long long total = 0;

    /// Bin index of count x: half-open [b_i, b_{i+1}), last bin closed.
    int bin_of(double x) const;
};

/// The shared piecewise-linear remap for one frame group. Output-range width
/// allocated to bin i is exactly alpha_i; empty bins collapse to one point.
struct MappingProfile {
    GroupHistogram histogram;
    std::vector<double> alphas;   // n_i / total
    std::vector<double> offsets;  // cumulative sums of alphas

    /// Direct per-value evaluation of the rearrangement map, clamped to [0,1].
    double remap_value(double x) const;

    /// 65536-entry lookup for uint16 counts; entries outside the group extent
    /// are NaN. Built by build_profile.
    std::vector<double> lut;

    bool contains(std::uint16_t x) const {
        return x >= histogram.t_min && x <= histogram.t_max;
    }
};

/// Global min/max counts over all frames in the group (not per-frame).
/// Throws on an empty group; throws DegenerateGroupError when min == max.
std::pair<std::uint16_t, std::uint16_t> group_extent(std::span<const RawFrame> frames);

GroupHistogram build_histogram(std::span<const RawFrame> frames, int n_bin);

MappingProfile build_profile(const GroupHistogram& hist);

/// Table-driven application of the profile to one frame. Every pixel must lie
/// within the profile's extent.
EnhancedFrame remap(const RawFrame& frame, const MappingProfile& profile);

/// Per-frame min-max normalization: the consistency-destroying baseline.
EnhancedFrame minmax_normalize(const RawFrame& frame);

/// Group-extent linear normalization (shared across the group).
EnhancedFrame minmax_normalize_group(const RawFrame& frame, double t_min, double t_max);

/// Convenience: profile + remap for a whole group. A degenerate group maps
/// every pixel to 0.5; `degenerate` reports that this happened.
std::vector<EnhancedFrame> enhance_group(std::span<const RawFrame> frames, int n_bin,
                                         bool* degenerate = nullptr);

}  // namespace thermo
