#include "thermo/clahe.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace thermo {

namespace {

struct TileGrid {
    std::vector<int> x_edges;  // tile_cols + 1
    std::vector<int> y_edges;  // tile_rows + 1
};

TileGrid make_grid(int width, int height, int cols, int rows) {
    TileGrid g;
    g.x_edges.resize(cols + 1);
    g.y_edges.resize(rows + 1);
    for (int c = 0; c <= cols; ++c)
        g.x_edges[c] = static_cast<int>(static_cast<long long>(c) * width / cols);
    for (int r = 0; r <= rows; ++r)
        g.y_edges[r] = static_cast<int>(static_cast<long long>(r) * height / rows);
    return g;
}

}  // namespace

namespace clahe_detail {

// Integer remainder of the uniform redistribution goes to the lowest-index
// levels so total mass is conserved exactly.
void clip_and_redistribute(std::vector<long long>& hist, long long tile_pixels, double clip_limit) {
    const int levels = static_cast<int>(hist.size());
    const double raw_limit = clip_limit * static_cast<double>(tile_pixels) / levels;
    if (raw_limit >= static_cast<double>(tile_pixels)) return;  // nothing can exceed it
    const long long limit = std::max<long long>(1, static_cast<long long>(std::llround(raw_limit)));

    long long excess = 0;
    for (auto& n : hist) {
        if (n > limit) {
            excess += n - limit;
            n = limit;
        }
    }
    if (excess == 0) return;
    const long long per_level = excess / levels;
    const long long remainder = excess % levels;
    for (int l = 0; l < levels; ++l) hist[l] += per_level + (l < remainder ? 1 : 0);
}

std::vector<double> tile_cdf_map(const std::vector<long long>& hist, long long tile_pixels) {
    std::vector<double> map(hist.size());
    long long cdf = 0;
    for (std::size_t l = 0; l < hist.size(); ++l) {
        cdf += hist[l];
        map[l] = static_cast<double>(cdf) / static_cast<double>(tile_pixels);
    }
    return map;
}

}  // namespace clahe_detail

EnhancedFrame clahe(const EnhancedFrame& frame, const ClaheConfig& cfg) {
    cfg.validate();
    if (frame.width < cfg.tile_cols || frame.height < cfg.tile_rows)
        throw Error("clahe: frame " + std::to_string(frame.width) + "x" +
                    std::to_string(frame.height) + " smaller than tile grid");

    const int levels = cfg.levels;
    const int cols = cfg.tile_cols;
    const int rows = cfg.tile_rows;
    const TileGrid grid = make_grid(frame.width, frame.height, cols, rows);

    Image<int> quant(frame.width, frame.height);
    for (std::size_t k = 0; k < frame.size(); ++k) {
        const double v = frame.data[k];
        if (!(v >= 0.0 && v <= 1.0)) throw Error("clahe: input value outside [0,1]");
        quant.data[k] = std::clamp(static_cast<int>(std::lround(v * (levels - 1))), 0, levels - 1);
    }

    // Per-tile level -> value mapping, as the normalized clipped CDF.
    std::vector<std::vector<double>> maps(static_cast<std::size_t>(rows) * cols);
    std::vector<double> centers_x(cols), centers_y(rows);
    for (int tr = 0; tr < rows; ++tr) {
        for (int tc = 0; tc < cols; ++tc) {
            const int x0 = grid.x_edges[tc], x1 = grid.x_edges[tc + 1];
            const int y0 = grid.y_edges[tr], y1 = grid.y_edges[tr + 1];
            const long long tile_pixels = static_cast<long long>(x1 - x0) * (y1 - y0);

            std::vector<long long> hist(levels, 0);
            for (int y = y0; y < y1; ++y)
                for (int x = x0; x < x1; ++x) ++hist[quant.at(x, y)];

            clahe_detail::clip_and_redistribute(hist, tile_pixels, cfg.clip_limit);
            maps[static_cast<std::size_t>(tr) * cols + tc] =
                clahe_detail::tile_cdf_map(hist, tile_pixels);
            centers_x[tc] = 0.5 * (x0 + x1 - 1);
            centers_y[tr] = 0.5 * (y0 + y1 - 1);
        }
    }

    EnhancedFrame out(frame.width, frame.height);
    for (int y = 0; y < frame.height; ++y) {
        // Neighbouring tile rows and vertical weight.
        int r0 = rows - 1;
        while (r0 > 0 && centers_y[r0] > y) --r0;
        int r1 = std::min(r0 + 1, rows - 1);
        if (centers_y[r1] <= y) r0 = r1;
        const double wy = (centers_y[r1] > centers_y[r0])
                              ? std::clamp((y - centers_y[r0]) / (centers_y[r1] - centers_y[r0]), 0.0, 1.0)
                              : 0.0;

        for (int x = 0; x < frame.width; ++x) {
            int c0 = cols - 1;
            while (c0 > 0 && centers_x[c0] > x) --c0;
            int c1 = std::min(c0 + 1, cols - 1);
            if (centers_x[c1] <= x) c0 = c1;
            const double wx = (centers_x[c1] > centers_x[c0])
                                  ? std::clamp((x - centers_x[c0]) / (centers_x[c1] - centers_x[c0]), 0.0, 1.0)
                                  : 0.0;

            const int l = quant.at(x, y);
            const double v00 = maps[static_cast<std::size_t>(r0) * cols + c0][l];
            const double v01 = maps[static_cast<std::size_t>(r0) * cols + c1][l];
            const double v10 = maps[static_cast<std::size_t>(r1) * cols + c0][l];
            const double v11 = maps[static_cast<std::size_t>(r1) * cols + c1][l];
            const double v = (1 - wy) * ((1 - wx) * v00 + wx * v01) + wy * ((1 - wx) * v10 + wx * v11);
            out.at(x, y) = std::clamp(v, 0.0, 1.0);
        }
    }
    return out;
}

}  // namespace thermo
