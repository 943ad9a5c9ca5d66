#include "thermo/tctr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace thermo {

int GroupHistogram::bin_of(double x) const {
    if (n_bin <= 0) throw Error("histogram not built");
    const double width = (t_max - t_min) / n_bin;
    int i = static_cast<int>(std::floor((x - t_min) / width));
    i = std::clamp(i, 0, n_bin - 1);
    // Float round-off can land one bin off; snap to the edge convention.
    while (i > 0 && x < edges[i]) --i;
    while (i + 1 < n_bin && x >= edges[i + 1]) ++i;
    return i;
}

double MappingProfile::remap_value(double x) const {
    const auto& h = histogram;
    const int i = h.bin_of(x);
    const double span = h.edges[i + 1] - h.edges[i];
    const double v = alphas[i] * ((x - h.edges[i]) / span) + offsets[i];
    return std::clamp(v, 0.0, 1.0);
}

std::pair<std::uint16_t, std::uint16_t> group_extent(std::span<const RawFrame> frames) {
    if (frames.empty()) throw Error("group_extent: empty group");
    std::uint16_t lo = std::numeric_limits<std::uint16_t>::max();
    std::uint16_t hi = 0;
    for (const auto& f : frames) {
        f.validate();
        for (auto c : f.counts) {
            lo = std::min(lo, c);
            hi = std::max(hi, c);
        }
    }
    if (lo == hi) throw DegenerateGroupError(lo);
    return {lo, hi};
}

GroupHistogram build_histogram(std::span<const RawFrame> frames, int n_bin) {
    if (n_bin < 2) throw Error("build_histogram: n_bin must be >= 2");
    const auto [lo, hi] = group_extent(frames);

    GroupHistogram h;
    h.t_min = lo;
    h.t_max = hi;
    h.n_bin = n_bin;
    h.edges.resize(n_bin + 1);
    for (int i = 0; i <= n_bin; ++i)
        h.edges[i] = h.t_min + (h.t_max - h.t_min) * (static_cast<double>(i) / n_bin);
    h.edges[0] = h.t_min;
    h.edges[n_bin] = h.t_max;

    h.counts_per_bin.assign(n_bin, 0);
    for (const auto& f : frames)
        for (auto c : f.counts) ++h.counts_per_bin[h.bin_of(c)];
    h.total = 0;
    for (auto n : h.counts_per_bin) h.total += n;
    return h;
}

MappingProfile build_profile(const GroupHistogram& hist) {
    if (hist.total <= 0) throw Error("build_profile: empty histogram");
    MappingProfile p;
    p.histogram = hist;
    p.alphas.resize(hist.n_bin);
    p.offsets.resize(hist.n_bin);
    double cum = 0.0;
    for (int i = 0; i < hist.n_bin; ++i) {
        p.alphas[i] = static_cast<double>(hist.counts_per_bin[i]) / static_cast<double>(hist.total);
        p.offsets[i] = cum;
        cum += p.alphas[i];
    }

    p.lut.assign(65536, std::numeric_limits<double>::quiet_NaN());
    const int lo = static_cast<int>(hist.t_min);
    const int hi = static_cast<int>(hist.t_max);
    for (int v = lo; v <= hi; ++v) p.lut[v] = p.remap_value(v);
    return p;
}

EnhancedFrame remap(const RawFrame& frame, const MappingProfile& profile) {
    frame.validate();
    EnhancedFrame out(frame.width, frame.height);
    for (std::size_t k = 0; k < frame.counts.size(); ++k) {
        const std::uint16_t c = frame.counts[k];
        if (!profile.contains(c))
            throw Error("remap: frame not in profile group (count " + std::to_string(c) +
                        " outside extent)");
        out.data[k] = profile.lut[c];
    }
    return out;
}

EnhancedFrame minmax_normalize(const RawFrame& frame) {
    const RawFrame* one = &frame;
    const auto [lo, hi] = group_extent(std::span<const RawFrame>(one, 1));
    return minmax_normalize_group(frame, lo, hi);
}

EnhancedFrame minmax_normalize_group(const RawFrame& frame, double t_min, double t_max) {
    frame.validate();
    if (!(t_max > t_min)) throw Error("minmax_normalize_group: degenerate extent");
    EnhancedFrame out(frame.width, frame.height);
    const double span = t_max - t_min;
    for (std::size_t k = 0; k < frame.counts.size(); ++k)
        out.data[k] = std::clamp((frame.counts[k] - t_min) / span, 0.0, 1.0);
    return out;
}

std::vector<EnhancedFrame> enhance_group(std::span<const RawFrame> frames, int n_bin,
                                         bool* degenerate) {
    if (degenerate) *degenerate = false;
    try {
        const MappingProfile profile = build_profile(build_histogram(frames, n_bin));
        std::vector<EnhancedFrame> out;
        out.reserve(frames.size());
        for (const auto& f : frames) out.push_back(remap(f, profile));
        return out;
    } catch (const DegenerateGroupError&) {
        if (degenerate) *degenerate = true;
        std::vector<EnhancedFrame> out;
        for (const auto& f : frames) out.emplace_back(f.width, f.height, 0.5);
        return out;
    }
}

}  // namespace thermo
