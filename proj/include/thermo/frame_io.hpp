#pragma once

#include <string>

#include "thermo/image.hpp"
#include "thermo/tctr.hpp"

namespace thermo {

enum class ExportFormat { Pgm16, Png8, Png16 };

ExportFormat parse_export_format(const std::string& name);
std::string format_extension(ExportFormat fmt);

/// Reads a binary 16-bit grayscale PGM (P5, maxval 65535).
RawFrame load_raw_frame(const std::string& path);

/// Loads every PGM in `dir` matching `glob_pattern`, sorted lexicographically
/// by filename; frame_index assigned 0..N-1.
FrameSequence load_sequence(const std::string& dir, const std::string& glob_pattern = "*.pgm");

/// Writes a raw frame verbatim (counts unchanged).
void export_frame(const RawFrame& frame, const std::string& path, ExportFormat fmt);

/// Quantizes [0,1] values by round(v * (2^bits - 1)) and writes them.
void export_frame(const EnhancedFrame& frame, const std::string& path, ExportFormat fmt);

/// Depth maps travel as 16-bit PGM in millimeters (rounded, clamped to the
/// sample range). load_depth_pgm converts back to meters.
void export_depth_pgm(const DepthMap& depth, const std::string& path);
DepthMap load_depth_pgm(const std::string& path);

/// CSV rows (bin_start, bin_end, count, alpha, offset) with a header row.
void export_histogram_csv(const MappingProfile& profile, const std::string& path);

/// Writes a false-color PNG using the built-in 256-entry ramp. Values are
/// min-max stretched over the frame before lookup.
void export_heatmap(const EnhancedFrame& frame, const std::string& path);

/// Grayscale PNG writers (bit_depth 8 or 16); samples in [0, 2^bits - 1].
void write_png_gray(const std::string& path, int width, int height, int bit_depth,
                    const std::vector<std::uint32_t>& samples);

/// Atomic text write: temp file + rename.
void write_text_atomic(const std::string& path, const std::string& contents);

}  // namespace thermo
