#include "thermo/frame_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fnmatch.h>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace thermo {

namespace {

void write_file_atomic(const std::string& path, const std::string& bytes) {
    const fs::path target(path);
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("unwritable path: " + path);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw Error("write failed: " + path);
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp);
        throw Error("rename failed for " + path + ": " + ec.message());
    }
}

// Skips whitespace and '#' comments between PGM header tokens.
std::string next_pgm_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {}
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) return tok;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    return tok;
}

std::string pgm16_bytes(int width, int height, const std::vector<std::uint16_t>& samples) {
    std::ostringstream out;
    out << "P5\n" << width << " " << height << "\n65535\n";
    for (auto s : samples) {
        out.put(static_cast<char>(s >> 8));  // big-endian per PGM convention
        out.put(static_cast<char>(s & 0xFF));
    }
    return out.str();
}

void append_be32(std::string& s, std::uint32_t v) {
    s.push_back(static_cast<char>(v >> 24));
    s.push_back(static_cast<char>((v >> 16) & 0xFF));
    s.push_back(static_cast<char>((v >> 8) & 0xFF));
    s.push_back(static_cast<char>(v & 0xFF));
}

void append_chunk(std::string& out, const char type[4], const std::string& payload) {
    append_be32(out, static_cast<std::uint32_t>(payload.size()));
    const std::size_t crc_start = out.size();
    out.append(type, 4);
    out += payload;
    const auto crc = crc32(0L, reinterpret_cast<const Bytef*>(out.data() + crc_start),
                           static_cast<uInt>(out.size() - crc_start));
    append_be32(out, static_cast<std::uint32_t>(crc));
}

std::string zlib_deflate(const std::string& raw) {
    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::string out(bound, '\0');
    if (compress2(reinterpret_cast<Bytef*>(out.data()), &bound,
                  reinterpret_cast<const Bytef*>(raw.data()), static_cast<uLong>(raw.size()),
                  6) != Z_OK)
        throw Error("zlib compression failed");
    out.resize(bound);
    return out;
}

// color_type 0 = grayscale, 2 = RGB; scanlines must already carry filter bytes.
std::string png_bytes(int width, int height, int bit_depth, int color_type,
                      const std::string& scanlines) {
    std::string out("\x89PNG\r\n\x1a\n", 8);
    std::string ihdr;
    append_be32(ihdr, static_cast<std::uint32_t>(width));
    append_be32(ihdr, static_cast<std::uint32_t>(height));
    ihdr.push_back(static_cast<char>(bit_depth));
    ihdr.push_back(static_cast<char>(color_type));
    ihdr.append(3, '\0');  // deflate, adaptive filtering, no interlace
    append_chunk(out, "IHDR", ihdr);
    append_chunk(out, "IDAT", zlib_deflate(scanlines));
    append_chunk(out, "IEND", "");
    return out;
}

std::vector<std::uint16_t> quantize(const EnhancedFrame& frame, int bits) {
    const double scale = std::pow(2.0, bits) - 1.0;
    std::vector<std::uint16_t> out(frame.size());
    for (std::size_t k = 0; k < frame.size(); ++k) {
        const double v = frame.data[k];
        if (std::isnan(v)) throw Error("export_frame: NaN pixel value");
        if (v < 0.0 || v > 1.0)
            throw Error("export_frame: value " + std::to_string(v) + " outside [0,1]");
        out[k] = static_cast<std::uint16_t>(std::lround(v * scale));
    }
    return out;
}

void export_samples(const std::string& path, ExportFormat fmt, int width, int height,
                    const std::vector<std::uint16_t>& samples) {
    switch (fmt) {
        case ExportFormat::Pgm16:
            write_file_atomic(path, pgm16_bytes(width, height, samples));
            return;
        case ExportFormat::Png8: {
            std::string scan;
            scan.reserve(static_cast<std::size_t>(height) * (width + 1));
            for (int y = 0; y < height; ++y) {
                scan.push_back('\0');
                for (int x = 0; x < width; ++x)
                    scan.push_back(static_cast<char>(samples[static_cast<std::size_t>(y) * width + x] & 0xFF));
            }
            write_file_atomic(path, png_bytes(width, height, 8, 0, scan));
            return;
        }
        case ExportFormat::Png16: {
            std::string scan;
            scan.reserve(static_cast<std::size_t>(height) * (2 * width + 1));
            for (int y = 0; y < height; ++y) {
                scan.push_back('\0');
                for (int x = 0; x < width; ++x) {
                    const std::uint16_t s = samples[static_cast<std::size_t>(y) * width + x];
                    scan.push_back(static_cast<char>(s >> 8));
                    scan.push_back(static_cast<char>(s & 0xFF));
                }
            }
            write_file_atomic(path, png_bytes(width, height, 16, 0, scan));
            return;
        }
    }
    throw Error("unknown export format");
}

// Piecewise-linear blue->cyan->yellow->red ramp, 256 entries.
std::array<std::array<std::uint8_t, 3>, 256> build_ramp() {
    std::array<std::array<std::uint8_t, 3>, 256> ramp{};
    for (int i = 0; i < 256; ++i) {
        const double t = i / 255.0;
        auto seg = [](double u) { return static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(u, 0.0, 1.0))); };
        ramp[i] = {seg(std::min(4.0 * t - 1.5, -4.0 * t + 4.5)),
                   seg(std::min(4.0 * t - 0.5, -4.0 * t + 3.5)),
                   seg(std::min(4.0 * t + 0.5, -4.0 * t + 2.5))};
    }
    return ramp;
}

}  // namespace

ExportFormat parse_export_format(const std::string& name) {
    if (name == "pgm16") return ExportFormat::Pgm16;
    if (name == "png8") return ExportFormat::Png8;
    if (name == "png16") return ExportFormat::Png16;
    throw Error("unknown export format: " + name);
}

std::string format_extension(ExportFormat fmt) {
    return fmt == ExportFormat::Pgm16 ? ".pgm" : ".png";
}

RawFrame load_raw_frame(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open file: " + path);

    if (next_pgm_token(in) != "P5") throw Error("malformed header (not binary PGM P5): " + path);
    const std::string ws = next_pgm_token(in);
    const std::string hs = next_pgm_token(in);
    const std::string ms = next_pgm_token(in);
    int width = 0, height = 0;
    long maxval = 0;
    try {
        width = std::stoi(ws);
        height = std::stoi(hs);
        maxval = std::stol(ms);
    } catch (const std::exception&) {
        throw Error("malformed header (bad dimensions/maxval): " + path);
    }
    if (width < 2 || height < 2) throw Error("malformed header (dimensions too small): " + path);
    if (maxval != 65535) throw Error("unsupported bit depth (maxval " + std::to_string(maxval) +
                                     ", expected 65535): " + path);

    RawFrame frame(width, height);
    std::vector<char> buf(frame.counts.size() * 2);
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (static_cast<std::size_t>(in.gcount()) != buf.size())
        throw Error("truncated payload: " + path);
    for (std::size_t k = 0; k < frame.counts.size(); ++k)
        frame.counts[k] = static_cast<std::uint16_t>(
            (static_cast<std::uint8_t>(buf[2 * k]) << 8) | static_cast<std::uint8_t>(buf[2 * k + 1]));
    return frame;
}

FrameSequence load_sequence(const std::string& dir, const std::string& glob_pattern) {
    if (!fs::is_directory(dir)) throw Error("not a directory: " + dir);
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        if (fnmatch(glob_pattern.c_str(), name.c_str(), 0) == 0) names.push_back(name);
    }
    if (names.empty()) throw Error("no frames matching '" + glob_pattern + "' in " + dir);
    std::sort(names.begin(), names.end());

    FrameSequence seq;
    seq.source_dir = dir;
    for (std::size_t i = 0; i < names.size(); ++i) {
        RawFrame f = load_raw_frame((fs::path(dir) / names[i]).string());
        f.frame_index = static_cast<int>(i);
        if (!seq.frames.empty() &&
            (f.width != seq.frames.front().width || f.height != seq.frames.front().height))
            throw Error("dimension mismatch: " + names[i] + " is " + std::to_string(f.width) + "x" +
                        std::to_string(f.height) + ", expected " +
                        std::to_string(seq.frames.front().width) + "x" +
                        std::to_string(seq.frames.front().height));
        seq.frames.push_back(std::move(f));
    }
    return seq;
}

void export_frame(const RawFrame& frame, const std::string& path, ExportFormat fmt) {
    frame.validate();
    export_samples(path, fmt, frame.width, frame.height, frame.counts);
}

void export_frame(const EnhancedFrame& frame, const std::string& path, ExportFormat fmt) {
    const int bits = (fmt == ExportFormat::Png8) ? 8 : 16;
    export_samples(path, fmt, frame.width, frame.height, quantize(frame, bits));
}

void export_depth_pgm(const DepthMap& depth, const std::string& path) {
    std::vector<std::uint16_t> mm(depth.size());
    for (std::size_t k = 0; k < depth.size(); ++k) {
        const double v = depth.data[k];
        if (std::isnan(v)) throw Error("export_depth_pgm: NaN depth value");
        mm[k] = static_cast<std::uint16_t>(std::clamp(std::llround(v * 1000.0), 0LL, 65535LL));
    }
    export_samples(path, ExportFormat::Pgm16, depth.width, depth.height, mm);
}

DepthMap load_depth_pgm(const std::string& path) {
    const RawFrame raw = load_raw_frame(path);
    DepthMap depth(raw.width, raw.height);
    for (std::size_t k = 0; k < raw.counts.size(); ++k)
        depth.data[k] = raw.counts[k] / 1000.0;
    return depth;
}

void export_histogram_csv(const MappingProfile& profile, const std::string& path) {
    const auto& h = profile.histogram;
    std::ostringstream out;
    out << "bin_start,bin_end,count,alpha,offset\n";
    out.precision(17);
    for (int i = 0; i < h.n_bin; ++i)
        out << h.edges[i] << ',' << h.edges[i + 1] << ',' << h.counts_per_bin[i] << ','
            << profile.alphas[i] << ',' << profile.offsets[i] << '\n';
    write_file_atomic(path, out.str());
}

void export_heatmap(const EnhancedFrame& frame, const std::string& path) {
    static const auto ramp = build_ramp();
    double lo = frame.data.empty() ? 0.0 : frame.data[0];
    double hi = lo;
    for (double v : frame.data) {
        if (std::isnan(v)) throw Error("export_heatmap: NaN pixel value");
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double span = (hi > lo) ? (hi - lo) : 1.0;

    std::string scan;
    scan.reserve(static_cast<std::size_t>(frame.height) * (3 * frame.width + 1));
    for (int y = 0; y < frame.height; ++y) {
        scan.push_back('\0');
        for (int x = 0; x < frame.width; ++x) {
            const int idx = static_cast<int>(std::lround((frame.at(x, y) - lo) / span * 255.0));
            const auto& rgb = ramp[std::clamp(idx, 0, 255)];
            scan.push_back(static_cast<char>(rgb[0]));
            scan.push_back(static_cast<char>(rgb[1]));
            scan.push_back(static_cast<char>(rgb[2]));
        }
    }
    write_file_atomic(path, png_bytes(frame.width, frame.height, 8, 2, scan));
}

void write_png_gray(const std::string& path, int width, int height, int bit_depth,
                    const std::vector<std::uint32_t>& samples) {
    std::vector<std::uint16_t> s16(samples.begin(), samples.end());
    export_samples(path, bit_depth == 8 ? ExportFormat::Png8 : ExportFormat::Png16, width, height,
                   s16);
}

void write_text_atomic(const std::string& path, const std::string& contents) {
    write_file_atomic(path, contents);
}

}  // namespace thermo
