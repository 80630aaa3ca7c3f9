#include "cubetop/io.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "cubetop/error.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace cubetop {

StackFormat parse_stack_format(std::string_view name) {
  if (name == "pgm_dir") return StackFormat::pgm_dir;
  if (name == "raw_u16") return StackFormat::raw_u16;
  throw std::invalid_argument("unknown stack format '" + std::string(name) + "' (expected pgm_dir or raw_u16)");
}

namespace {

std::string read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Next whitespace-delimited PGM header token; '#' starts a comment line.
std::string next_token(const std::string& buf, std::size_t& pos, const fs::path& path) {
  while (pos < buf.size()) {
    char c = buf[pos];
    if (c == '#') {
      while (pos < buf.size() && buf[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++pos;
    } else {
      break;
    }
  }
  std::size_t start = pos;
  while (pos < buf.size() && !std::isspace(static_cast<unsigned char>(buf[pos]))) ++pos;
  if (start == pos) throw IoError(path.string() + ": truncated PGM header");
  return buf.substr(start, pos - start);
}

long parse_header_int(const std::string& tok, const fs::path& path) {
  try {
    std::size_t used = 0;
    long v = std::stol(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw IoError(path.string() + ": bad PGM header field '" + tok + "'");
  }
}

fs::path pgm_frame_path(const fs::path& dir, std::size_t k) {
  char name[32];
  std::snprintf(name, sizeof name, "frame_%06zu.pgm", k);
  return dir / name;
}

} // namespace

ImageFrame read_pgm(const fs::path& path) {
  const std::string buf = read_all(path);
  std::size_t pos = 0;
  if (next_token(buf, pos, path) != "P5") throw IoError(path.string() + ": not a binary (P5) PGM");
  long w = parse_header_int(next_token(buf, pos, path), path);
  long h = parse_header_int(next_token(buf, pos, path), path);
  long maxval = parse_header_int(next_token(buf, pos, path), path);
  if (w < 1 || h < 1) throw IoError(path.string() + ": invalid PGM dimensions");
  if (maxval < 1 || maxval > 65535) throw IoError(path.string() + ": PGM maxval out of range (1..65535)");
  ++pos; // single whitespace byte before the raster
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  const std::size_t bytes = maxval < 256 ? 1 : 2;
  if (buf.size() < pos + n * bytes) throw IoError(path.string() + ": truncated frame data");
  std::vector<double> px(n);
  const auto* raw = reinterpret_cast<const unsigned char*>(buf.data() + pos);
  for (std::size_t i = 0; i < n; ++i) {
    unsigned v = bytes == 1 ? raw[i] : (unsigned(raw[2 * i]) << 8) | raw[2 * i + 1];
    if (v > static_cast<unsigned>(maxval)) throw IoError(path.string() + ": sample exceeds maxval");
    px[i] = v;
  }
  return ImageFrame(static_cast<int>(w), static_cast<int>(h), std::move(px));
}

void write_pgm(const fs::path& path, const ImageFrame& frame, int maxval) {
  if (maxval < 1 || maxval > 65535) throw std::invalid_argument("PGM maxval must be in 1..65535");
  std::string out = "P5\n" + std::to_string(frame.width()) + " " + std::to_string(frame.height()) + "\n" +
                    std::to_string(maxval) + "\n";
  const bool wide = maxval >= 256;
  out.reserve(out.size() + frame.size() * (wide ? 2 : 1));
  for (double v : frame.pixels()) {
    long s = std::lround(v);
    if (s > maxval) throw std::invalid_argument("pixel value exceeds PGM maxval");
    if (wide) out.push_back(static_cast<char>((s >> 8) & 0xff));
    out.push_back(static_cast<char>(s & 0xff));
  }
  write_file_atomic(path, out);
}

ImageStack load_stack(const fs::path& path, StackFormat format) {
  if (!fs::exists(path)) throw IoError("stack path does not exist: " + path.string());
  if (format == StackFormat::pgm_dir) {
    // Frame indices must be contiguous from 0.
    std::map<std::size_t, fs::path> files;
    for (const auto& entry : fs::directory_iterator(path)) {
      const std::string name = entry.path().filename().string();
      unsigned long idx = 0;
      char tail = 0;
      if (name.size() == 16 && std::sscanf(name.c_str(), "frame_%6lu.pg%c", &idx, &tail) == 2 && tail == 'm') {
        files.emplace(idx, entry.path());
      }
    }
    if (files.empty()) throw IoError(path.string() + ": no frame_%06d.pgm files");
    std::size_t expect = 0;
    std::optional<ImageStack> stack;
    for (const auto& [idx, file] : files) {
      if (idx != expect) throw IoError(path.string() + ": missing frame " + pgm_frame_path(path, expect).filename().string());
      ImageFrame f = read_pgm(file);
      if (!stack) stack.emplace(f.width(), f.height());
      if (f.width() != stack->width() || f.height() != stack->height()) {
        throw IoError(file.string() + ": inconsistent frame dimensions");
      }
      stack->push_back(f);
      ++expect;
    }
    return std::move(*stack);
  }

  json header;
  try {
    header = json::parse(read_all(path / "header.json"));
  } catch (const json::exception& e) {
    throw IoError((path / "header.json").string() + ": " + e.what());
  }
  long w = 0, h = 0, n = 0;
  try {
    w = header.at("width").get<long>();
    h = header.at("height").get<long>();
    n = header.at("num_frames").get<long>();
    if (header.contains("dtype") && header["dtype"].get<std::string>() != "u16le") {
      throw IoError("unsupported dtype " + header["dtype"].get<std::string>());
    }
  } catch (const json::exception& e) {
    throw IoError((path / "header.json").string() + ": " + e.what());
  }
  if (w < 1 || h < 1 || n < 1) throw IoError((path / "header.json").string() + ": invalid dimensions");
  const std::string data = read_all(path / "frames.bin");
  const std::size_t per_frame = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  const std::size_t need = per_frame * static_cast<std::size_t>(n) * 2;
  if (data.size() < need) throw IoError((path / "frames.bin").string() + ": truncated frame data");
  if (data.size() > need) throw IoError((path / "frames.bin").string() + ": unexpected trailing data");
  ImageStack stack(static_cast<int>(w), static_cast<int>(h));
  const auto* raw = reinterpret_cast<const unsigned char*>(data.data());
  for (long k = 0; k < n; ++k) {
    std::vector<std::uint16_t> counts(per_frame);
    const auto* f = raw + static_cast<std::size_t>(k) * per_frame * 2;
    for (std::size_t i = 0; i < per_frame; ++i) {
      counts[i] = static_cast<std::uint16_t>(f[2 * i] | (f[2 * i + 1] << 8));
    }
    stack.push_back(std::move(counts));
  }
  return stack;
}

void save_stack(const ImageStack& stack, const fs::path& dir, StackFormat format) {
  fs::create_directories(dir);
  if (format == StackFormat::pgm_dir) {
    for (std::size_t k = 0; k < stack.frame_count(); ++k) {
      auto c = stack.counts(k);
      int maxval = std::max<int>(1, *std::max_element(c.begin(), c.end()));
      write_pgm(pgm_frame_path(dir, k), stack.frame(k), maxval);
    }
    return;
  }
  json header = {{"width", stack.width()}, {"height", stack.height()}, {"num_frames", stack.frame_count()},
                 {"dtype", "u16le"}};
  write_file_atomic(dir / "header.json", header.dump(2) + "\n");
  std::string data;
  data.reserve(stack.frame_count() * static_cast<std::size_t>(stack.width()) * static_cast<std::size_t>(stack.height()) * 2);
  for (std::size_t k = 0; k < stack.frame_count(); ++k) {
    for (std::uint16_t v : stack.counts(k)) {
      data.push_back(static_cast<char>(v & 0xff));
      data.push_back(static_cast<char>(v >> 8));
    }
  }
  write_file_atomic(dir / "frames.bin", data);
}

PixelRect rect_from_json(const json& j) {
  if (!j.is_array() || j.size() != 4) throw std::invalid_argument("rect must be [x0, y0, x1, y1]");
  PixelRect r{j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
  if (r.empty()) throw std::invalid_argument("rect must be non-empty");
  return r;
}

RegionSpec region_from_json(const json& j) {
  RegionSpec r;
  if (!j.is_object()) throw std::invalid_argument("region must be an object");
  if (j.contains("polygon")) {
    for (const auto& v : j.at("polygon")) {
      if (!v.is_array() || v.size() != 2) throw std::invalid_argument("polygon vertices must be [x, y]");
      r.polygon.push_back({v[0].get<double>(), v[1].get<double>()});
    }
    validate_polygon(r.polygon);
  }
  if (j.contains("rect")) r.rect = rect_from_json(j.at("rect"));
  if (r.polygon.empty() && !r.rect) throw std::invalid_argument("region needs a polygon or a rect");
  return r;
}

json region_to_json(const RegionSpec& region) {
  json j = json::object();
  if (!region.polygon.empty()) {
    json poly = json::array();
    for (const auto& p : region.polygon) poly.push_back({p.x, p.y});
    j["polygon"] = poly;
  }
  if (region.rect) j["rect"] = {region.rect->x0, region.rect->y0, region.rect->x1, region.rect->y1};
  return j;
}

void write_file_atomic(const fs::path& path, std::string_view contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

} // namespace cubetop
