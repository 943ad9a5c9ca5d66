#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <zlib.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "thermo/frame_io.hpp"

using namespace thermo;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("thermo_test_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_bytes(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::uint32_t be32(const std::string& s, std::size_t at) {
    return (static_cast<std::uint8_t>(s[at]) << 24) | (static_cast<std::uint8_t>(s[at + 1]) << 16) |
           (static_cast<std::uint8_t>(s[at + 2]) << 8) | static_cast<std::uint8_t>(s[at + 3]);
}

// Minimal test-side PNG decode: grayscale, filter 0 rows only.
struct DecodedPng {
    int width, height, bit_depth, color_type;
    std::vector<std::uint32_t> samples;
};

DecodedPng decode_png(const std::string& path) {
    const std::string bytes = read_bytes(path);
    REQUIRE(bytes.substr(1, 3) == "PNG");
    DecodedPng png{};
    std::string idat;
    std::size_t at = 8;
    while (at + 8 <= bytes.size()) {
        const std::uint32_t len = be32(bytes, at);
        const std::string type = bytes.substr(at + 4, 4);
        const std::string payload = bytes.substr(at + 8, len);
        if (type == "IHDR") {
            png.width = static_cast<int>(be32(payload, 0));
            png.height = static_cast<int>(be32(payload, 4));
            png.bit_depth = static_cast<std::uint8_t>(payload[8]);
            png.color_type = static_cast<std::uint8_t>(payload[9]);
        } else if (type == "IDAT") {
            idat += payload;
        }
        at += 12 + len;
    }
    const int bpp = png.bit_depth / 8;
    const int channels = png.color_type == 2 ? 3 : 1;
    uLongf raw_len = static_cast<uLongf>(png.height) * (1 + png.width * bpp * channels);
    std::string raw(raw_len, '\0');
    REQUIRE(uncompress(reinterpret_cast<Bytef*>(raw.data()), &raw_len,
                       reinterpret_cast<const Bytef*>(idat.data()),
                       static_cast<uLong>(idat.size())) == Z_OK);
    for (int y = 0; y < png.height; ++y) {
        const std::size_t row = static_cast<std::size_t>(y) * (1 + png.width * bpp * channels);
        REQUIRE(raw[row] == 0);  // filter type none
        for (int x = 0; x < png.width * channels; ++x) {
            std::uint32_t v = static_cast<std::uint8_t>(raw[row + 1 + x * bpp]);
            if (bpp == 2) v = (v << 8) | static_cast<std::uint8_t>(raw[row + 2 + x * bpp]);
            png.samples.push_back(v);
        }
    }
    return png;
}

}  // namespace

TEST_CASE("load_raw_frame reads a hand-written P5 file exactly") {
    TempDir dir;
    std::string bytes = "P5\n2 2\n65535\n";
    const std::uint16_t vals[4] = {0, 65535, 1000, 2000};
    for (auto v : vals) {
        bytes.push_back(static_cast<char>(v >> 8));
        bytes.push_back(static_cast<char>(v & 0xFF));
    }
    write_bytes(dir.file("f.pgm"), bytes);
    const RawFrame f = load_raw_frame(dir.file("f.pgm"));
    CHECK(f.width == 2);
    CHECK(f.height == 2);
    CHECK(f.counts == std::vector<std::uint16_t>{0, 65535, 1000, 2000});
}

TEST_CASE("load_raw_frame reports header errors distinctly") {
    TempDir dir;
    write_bytes(dir.file("depth8.pgm"), std::string("P5\n2 2\n255\n") + std::string(4, 'x'));
    CHECK_THROWS_WITH_AS(load_raw_frame(dir.file("depth8.pgm")),
                         doctest::Contains("unsupported bit depth"), Error);

    write_bytes(dir.file("ascii.pgm"), "P2\n2 2\n65535\n0 1 2 3\n");
    CHECK_THROWS_WITH_AS(load_raw_frame(dir.file("ascii.pgm")),
                         doctest::Contains("malformed header"), Error);

    write_bytes(dir.file("short.pgm"), std::string("P5\n2 2\n65535\n") + std::string(3, 'x'));
    CHECK_THROWS_WITH_AS(load_raw_frame(dir.file("short.pgm")),
                         doctest::Contains("truncated payload"), Error);

    CHECK_THROWS_WITH_AS(load_raw_frame(dir.file("missing.pgm")),
                         doctest::Contains("cannot open"), Error);
}

TEST_CASE("pgm16 round-trip is bit-exact") {
    TempDir dir;
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> d(0, 65535);
    RawFrame f(7, 5);
    for (auto& c : f.counts) c = static_cast<std::uint16_t>(d(rng));
    export_frame(f, dir.file("rt.pgm"), ExportFormat::Pgm16);
    const RawFrame g = load_raw_frame(dir.file("rt.pgm"));
    CHECK(g.counts == f.counts);
}

TEST_CASE("load_sequence sorts lexicographically and assigns indices") {
    TempDir dir;
    RawFrame f(2, 2);
    f.counts = {1, 2, 3, 4};
    export_frame(f, dir.file("f002.pgm"), ExportFormat::Pgm16);
    export_frame(f, dir.file("f000.pgm"), ExportFormat::Pgm16);
    export_frame(f, dir.file("f001.pgm"), ExportFormat::Pgm16);
    const FrameSequence seq = load_sequence(dir.path.string(), "*.pgm");
    REQUIRE(seq.frames.size() == 3);
    for (int i = 0; i < 3; ++i) CHECK(seq.frames[i].frame_index == i);
}

TEST_CASE("load_sequence error cases") {
    TempDir dir;
    CHECK_THROWS_WITH_AS(load_sequence(dir.path.string(), "*.pgm"),
                         doctest::Contains("no frames"), Error);

    RawFrame small(2, 2);
    small.counts = {1, 2, 3, 4};
    RawFrame big(3, 3);
    big.counts.assign(9, 7);
    export_frame(small, dir.file("a.pgm"), ExportFormat::Pgm16);
    export_frame(big, dir.file("b.pgm"), ExportFormat::Pgm16);
    CHECK_THROWS_WITH_AS(load_sequence(dir.path.string(), "*.pgm"),
                         doctest::Contains("dimension mismatch"), Error);
}

TEST_CASE("export quantization endpoints") {
    TempDir dir;
    EnhancedFrame f(2, 2);
    f.data = {1.0, 0.5, 0.0, 0.25};

    export_frame(f, dir.file("q8.png"), ExportFormat::Png8);
    const DecodedPng p8 = decode_png(dir.file("q8.png"));
    CHECK(p8.bit_depth == 8);
    CHECK(p8.samples[0] == 255);

    export_frame(f, dir.file("q16.png"), ExportFormat::Png16);
    const DecodedPng p16 = decode_png(dir.file("q16.png"));
    CHECK(p16.bit_depth == 16);
    CHECK(p16.samples[0] == 65535);
    CHECK(p16.samples[1] == 32768);  // round(0.5 * 65535)
}

TEST_CASE("export rejects NaN and out-of-range values") {
    TempDir dir;
    EnhancedFrame f(2, 2, 0.5);
    f.data[3] = std::nan("");
    CHECK_THROWS_WITH_AS(export_frame(f, dir.file("nan.png"), ExportFormat::Png8),
                         doctest::Contains("NaN"), Error);
    f.data[3] = 1.5;
    CHECK_THROWS_AS(export_frame(f, dir.file("oob.png"), ExportFormat::Png8), Error);
}

TEST_CASE("property: export/import cycle error bounded by half a quantum") {
    TempDir dir;
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> d(0.0, 1.0);
    EnhancedFrame f(6, 4);
    for (auto& v : f.data) v = d(rng);
    export_frame(f, dir.file("c.pgm"), ExportFormat::Pgm16);
    const RawFrame back = load_raw_frame(dir.file("c.pgm"));
    for (std::size_t k = 0; k < f.size(); ++k)
        CHECK(std::abs(back.counts[k] / 65535.0 - f.data[k]) <= 0.5 / 65535.0 + 1e-15);
}

TEST_CASE("histogram CSV layout") {
    TempDir dir;
    RawFrame a(2, 2);
    a.counts = {1000, 1100, 1150, 1600};
    std::vector<RawFrame> group{a};
    const MappingProfile p = build_profile(build_histogram(group, 3));
    export_histogram_csv(p, dir.file("h.csv"));

    std::ifstream in(dir.file("h.csv"));
    std::string line;
    std::getline(in, line);
    CHECK(line == "bin_start,bin_end,count,alpha,offset");
    int rows = 0;
    double alpha_sum = 0;
    bool saw_empty = false;
    while (std::getline(in, line)) {
        ++rows;
        std::istringstream ls(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        REQUIRE(cells.size() == 5);
        alpha_sum += std::stod(cells[3]);
        if (cells[2] == "0") {
            saw_empty = true;
            CHECK(std::stod(cells[3]) == 0.0);
        }
    }
    CHECK(rows == 3);
    CHECK(saw_empty);
    CHECK(alpha_sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("heatmap export writes an RGB png of the same size") {
    TempDir dir;
    EnhancedFrame f(8, 4);
    for (std::size_t k = 0; k < f.size(); ++k) f.data[k] = static_cast<double>(k) / (f.size() - 1);
    export_heatmap(f, dir.file("hm.png"));
    const DecodedPng png = decode_png(dir.file("hm.png"));
    CHECK(png.color_type == 2);
    CHECK(png.width == 8);
    CHECK(png.height == 4);
    CHECK(png.samples.size() == 8u * 4u * 3u);
}
