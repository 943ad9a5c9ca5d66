#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace thermo {

/// Error type for all library failures; the message is the diagnostic.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Row-major 2-D grid.
template <typename T>
struct Image {
    int width = 0;
    int height = 0;
    std::vector<T> data;

    Image() = default;
    Image(int w, int h, T fill = T{})
        : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

    T& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    const T& at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }

    std::size_t size() const { return data.size(); }

    bool same_shape(const Image& other) const {
        return width == other.width && height == other.height;
    }
};

/// Unitless intensities in [0,1] after mapping/enhancement.
using EnhancedFrame = Image<double>;

/// Per-pixel metric depth in meters.
using DepthMap = Image<double>;

/// True where a warped coordinate landed inside the source bounds with
/// positive depth.
struct ValidMask {
    Image<std::uint8_t> flags;

    ValidMask() = default;
    ValidMask(int w, int h, bool fill = false)
        : flags(w, h, fill ? std::uint8_t{1} : std::uint8_t{0}) {}

    bool at(int x, int y) const { return flags.at(x, y) != 0; }
    void set(int x, int y, bool v) { flags.at(x, y) = v ? 1 : 0; }

    std::size_t count() const {
        std::size_t n = 0;
        for (auto f : flags.data) n += (f != 0);
        return n;
    }
};

/// Raw radiometric measurement straight off the sensor; no normalization.
struct RawFrame {
    int width = 0;
    int height = 0;
    std::vector<std::uint16_t> counts;
    int frame_index = 0;

    RawFrame() = default;
    RawFrame(int w, int h, std::uint16_t fill = 0)
        : width(w), height(h), counts(static_cast<std::size_t>(w) * h, fill) {}

    std::uint16_t& at(int x, int y) { return counts[static_cast<std::size_t>(y) * width + x]; }
    std::uint16_t at(int x, int y) const { return counts[static_cast<std::size_t>(y) * width + x]; }

    void validate() const {
        if (width < 2 || height < 2)
            throw Error("RawFrame: width and height must both be >= 2");
        if (counts.size() != static_cast<std::size_t>(width) * height)
            throw Error("RawFrame: counts length does not match width*height");
    }
};

/// Ordered list of same-sized raw frames.
struct FrameSequence {
    std::vector<RawFrame> frames;
    std::string source_dir;
};

}  // namespace thermo
