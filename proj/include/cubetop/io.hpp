#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "cubetop/image.hpp"

namespace cubetop {

enum class StackFormat { pgm_dir, raw_u16 };

StackFormat parse_stack_format(std::string_view name);

/// Reads `frame_%06d.pgm` files (contiguous from 0) or `header.json` +
/// `frames.bin` (little-endian u16, frame-major, row-major).
ImageStack load_stack(const std::filesystem::path& path, StackFormat format);

void save_stack(const ImageStack& stack, const std::filesystem::path& dir, StackFormat format);

/// Binary P5. Samples are 8-bit when maxval < 256, otherwise 16-bit big-endian.
ImageFrame read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const ImageFrame& frame, int maxval);

/// Parses {"polygon": [[x, y], ...]} and/or {"rect": [x0, y0, x1, y1]}.
RegionSpec region_from_json(const nlohmann::json& j);
nlohmann::json region_to_json(const RegionSpec& region);
PixelRect rect_from_json(const nlohmann::json& j);

/// Writes to a sibling temp file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

} // namespace cubetop
