#include "tilt/io.hpp"

#include <png.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace tilt {

namespace {

// --- atomic file replacement -------------------------------------------

fs::path temp_path_for(const fs::path& path) {
  static std::atomic<unsigned long> counter{0};
  return fs::path(path.string() + ".tmp-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
}

void commit(const fs::path& tmp, const fs::path& path) {
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw FileError("cannot write " + path.string());
  }
}

// --- raw PNG access -----------------------------------------------------

struct RawPng {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 0;
  std::vector<std::uint16_t> samples;  // row-major, channel-interleaved
};

struct PngFile {
  std::FILE* fp = nullptr;
  ~PngFile() {
    if (fp) std::fclose(fp);
  }
};

// libpng reports errors by longjmp; the functions below keep only trivially
// destructible locals between setjmp and the libpng calls.
bool write_png_rows(std::FILE* fp, int width, int height, int color_type, int bit_depth, png_bytepp rows) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, png_uint_32(width), png_uint_32(height), bit_depth, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (bit_depth == 16) png_set_swap(png);
  png_write_image(png, rows);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

void write_png(const fs::path& path, const RawPng& img) {
  const int color_type = img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
  const std::size_t row_samples = std::size_t(img.width) * img.channels;
  const std::size_t bytes_per_sample = img.bit_depth == 16 ? 2 : 1;
  std::vector<std::uint8_t> buffer(row_samples * bytes_per_sample * img.height);
  for (std::size_t i = 0; i < img.samples.size(); ++i) {
    if (bytes_per_sample == 2) {
      std::uint16_t v = img.samples[i];
      std::memcpy(&buffer[2 * i], &v, 2);
    } else {
      buffer[i] = std::uint8_t(img.samples[i]);
    }
  }
  std::vector<png_bytep> rows(img.height);
  for (int r = 0; r < img.height; ++r) rows[r] = buffer.data() + std::size_t(r) * row_samples * bytes_per_sample;

  const fs::path tmp = temp_path_for(path);
  bool ok = false;
  {
    PngFile f{std::fopen(tmp.c_str(), "wb")};
    if (!f.fp) throw FileError("cannot open " + path.string() + " for writing");
    ok = write_png_rows(f.fp, img.width, img.height, color_type, img.bit_depth, rows.data());
    ok = (std::fflush(f.fp) == 0) && ok;
  }
  if (!ok) {
    std::error_code ec;
    fs::remove(tmp, ec);
    throw FileError("failed to encode " + path.string());
  }
  commit(tmp, path);
}

struct PngHeader {
  png_uint_32 width = 0, height = 0;
  int bit_depth = 0, color_type = 0;
};

bool read_png_header(png_structp png, png_infop info, std::FILE* fp, PngHeader* hdr) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_init_io(png, fp);
  png_read_info(png, info);
  png_get_IHDR(png, info, &hdr->width, &hdr->height, &hdr->bit_depth, &hdr->color_type, nullptr, nullptr, nullptr);
  return true;
}

bool read_png_rows(png_structp png, png_infop info, png_bytepp rows, int bit_depth) {
  if (setjmp(png_jmpbuf(png))) return false;
  if (bit_depth == 16) png_set_swap(png);
  png_read_update_info(png, info);
  png_read_image(png, rows);
  png_read_end(png, nullptr);
  return true;
}

RawPng read_png(const fs::path& path) {
  PngFile f{std::fopen(path.c_str(), "rb")};
  if (!f.fp) throw FileError("cannot open " + path.string());
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, f.fp) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw FormatError(path.string() + " is not a PNG file");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FileError("libpng initialisation failed");
  }
  png_set_sig_bytes(png, 8);
  PngHeader hdr;
  if (!read_png_header(png, info, f.fp, &hdr)) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("corrupt PNG header in " + path.string());
  }
  RawPng out;
  out.width = int(hdr.width);
  out.height = int(hdr.height);
  out.bit_depth = hdr.bit_depth;
  switch (hdr.color_type) {
    case PNG_COLOR_TYPE_GRAY: out.channels = 1; break;
    case PNG_COLOR_TYPE_GRAY_ALPHA: out.channels = 2; break;
    case PNG_COLOR_TYPE_RGB: out.channels = 3; break;
    case PNG_COLOR_TYPE_RGB_ALPHA: out.channels = 4; break;
    default:
      png_destroy_read_struct(&png, &info, nullptr);
      throw FormatError(path.string() + ": palette PNGs are not supported");
  }
  if (hdr.bit_depth != 8 && hdr.bit_depth != 16) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError(path.string() + ": unsupported bit depth " + std::to_string(hdr.bit_depth));
  }
  const std::size_t bps = hdr.bit_depth == 16 ? 2 : 1;
  const std::size_t row_bytes = std::size_t(out.width) * out.channels * bps;
  std::vector<std::uint8_t> buffer(row_bytes * out.height);
  std::vector<png_bytep> rows(out.height);
  for (int r = 0; r < out.height; ++r) rows[r] = buffer.data() + std::size_t(r) * row_bytes;
  const bool ok = read_png_rows(png, info, rows.data(), hdr.bit_depth);
  png_destroy_read_struct(&png, &info, nullptr);
  if (!ok) throw FormatError("corrupt PNG data in " + path.string());

  out.samples.resize(std::size_t(out.width) * out.height * out.channels);
  for (std::size_t i = 0; i < out.samples.size(); ++i) {
    if (bps == 2) {
      std::uint16_t v;
      std::memcpy(&v, &buffer[2 * i], 2);
      out.samples[i] = v;
    } else {
      out.samples[i] = buffer[i];
    }
  }
  return out;
}

void require_format(const RawPng& img, int channels, int bit_depth, const fs::path& path, const char* what) {
  if (img.channels != channels || img.bit_depth != bit_depth) {
    throw FormatError(path.string() + ": expected " + what + ", found " + std::to_string(img.bit_depth) + "-bit with " +
                      std::to_string(img.channels) + " channel(s)");
  }
}

std::uint16_t encode_component(double c) {
  return std::uint16_t(std::lround(std::clamp((c + 1.0) / 2.0, 0.0, 1.0) * 65535.0));
}

Vector3d decode_normal(const std::array<int, 3>& code) {
  Vector3d n;
  for (int c = 0; c < 3; ++c) n[c] = double(code[c]) / 65535.0 * 2.0 - 1.0;
  return n.normalized();
}

// Rounded code, or the neighbour within one step whose renormalized decode is
// closest per component when rounding alone misses the 1/65535 bound.
std::array<std::uint16_t, 3> encode_normal(const Vector3d& n) {
  std::array<int, 3> base;
  for (int c = 0; c < 3; ++c) base[c] = encode_component(n[c]);
  const auto error = [&](const std::array<int, 3>& code) { return (decode_normal(code) - n).cwiseAbs().maxCoeff(); };
  std::array<int, 3> best = base;
  double best_err = base == std::array<int, 3>{0, 0, 0} ? HUGE_VAL : error(base);
  if (best_err > 1.0 / 65535.0) {
    for (int d = 0; d < 27; ++d) {
      const std::array<int, 3> code{base[0] + d % 3 - 1, base[1] + d / 3 % 3 - 1, base[2] + d / 9 - 1};
      if (*std::min_element(code.begin(), code.end()) < 0 || *std::max_element(code.begin(), code.end()) > 65535) continue;
      if (code == std::array<int, 3>{0, 0, 0}) continue;
      const double err = error(code);
      if (err < best_err) {
        best_err = err;
        best = code;
      }
    }
  }
  return {std::uint16_t(best[0]), std::uint16_t(best[1]), std::uint16_t(best[2])};
}

// --- canonical JSON -----------------------------------------------------

void dump_string(std::ostringstream& os, const std::string& s) { os << Json(s).dump(); }

void dump_value(std::ostringstream& os, const Json& v, int indent) {
  const std::string pad(std::size_t(indent + 2), ' ');
  const std::string close(std::size_t(indent), ' ');
  switch (v.type()) {
    case Json::value_t::object: {
      if (v.empty()) {
        os << "{}";
        return;
      }
      os << "{\n";
      bool first = true;
      for (auto it = v.begin(); it != v.end(); ++it) {  // std::map order: sorted keys
        if (!first) os << ",\n";
        first = false;
        os << pad;
        dump_string(os, it.key());
        os << ": ";
        dump_value(os, it.value(), indent + 2);
      }
      os << "\n" << close << "}";
      return;
    }
    case Json::value_t::array: {
      if (v.empty()) {
        os << "[]";
        return;
      }
      bool scalars = true;
      for (const auto& x : v) scalars = scalars && !x.is_structured();
      if (scalars) {
        os << "[";
        for (std::size_t i = 0; i < v.size(); ++i) {
          if (i) os << ", ";
          dump_value(os, v[i], indent);
        }
        os << "]";
        return;
      }
      os << "[\n";
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) os << ",\n";
        os << pad;
        dump_value(os, v[i], indent + 2);
      }
      os << "\n" << close << "]";
      return;
    }
    case Json::value_t::number_float: {
      const double d = v.get<double>();
      if (!std::isfinite(d)) throw RangeError("canonical_dump: non-finite number");
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.9g", d);
      os << buf;
      return;
    }
    default:
      os << v.dump();
  }
}

std::string where_of(const std::string& where, const char* key) {
  return where.empty() ? std::string(key) : where + "." + key;
}

}  // namespace

// --- PNG payloads -------------------------------------------------------

void write_normal_map(const NormalMap& map, const fs::path& path) {
  RawPng img{map.width, map.height, 3, 16, std::vector<std::uint16_t>(std::size_t(map.width) * map.height * 3, 0)};
  for (std::size_t i = 0; i < map.normals.size(); ++i) {
    if (!map.valid[i]) continue;
    std::uint16_t* px = &img.samples[3 * i];
    const auto code = encode_normal(map.normals[i]);
    std::copy(code.begin(), code.end(), px);
  }
  write_png(path, img);
}

NormalMap read_normal_map(const fs::path& path) {
  const RawPng img = read_png(path);
  require_format(img, 3, 16, path, "16-bit RGB normal map");
  NormalMap map(img.width, img.height);
  for (std::size_t i = 0; i < map.normals.size(); ++i) {
    const std::uint16_t* px = &img.samples[3 * i];
    if (px[0] == 0 && px[1] == 0 && px[2] == 0) continue;
    Vector3d n;
    for (int c = 0; c < 3; ++c) n[c] = double(px[c]) / 65535.0 * 2.0 - 1.0;
    if (n.norm() < 1e-12) continue;
    map.normals[i] = n.normalized();
    map.valid[i] = 1;
  }
  return map;
}

void write_depth_map(const DepthMap& map, const fs::path& path) {
  RawPng img{map.width, map.height, 1, 16, std::vector<std::uint16_t>(std::size_t(map.width) * map.height, 0)};
  for (std::size_t i = 0; i < map.depth.size(); ++i) {
    if (!map.valid[i]) continue;
    const long mm = std::lround(map.depth[i] * 1000.0);
    if (mm > 65535) throw RangeError("write_depth_map: depth " + std::to_string(map.depth[i]) + " m exceeds 65.535 m");
    img.samples[i] = std::uint16_t(std::max(mm, 0L));
  }
  write_png(path, img);
}

DepthMap read_depth_map(const fs::path& path) {
  const RawPng img = read_png(path);
  require_format(img, 1, 16, path, "16-bit grayscale depth map");
  DepthMap map(img.width, img.height);
  for (std::size_t i = 0; i < img.samples.size(); ++i) {
    if (img.samples[i] == 0) continue;
    map.depth[i] = double(img.samples[i]) / 1000.0;
    map.valid[i] = 1;
  }
  return map;
}

void write_mask(const Mask& mask, const fs::path& path) {
  RawPng img{mask.width, mask.height, 1, 8, std::vector<std::uint16_t>(mask.bits.size())};
  for (std::size_t i = 0; i < mask.bits.size(); ++i) img.samples[i] = mask.bits[i] ? 255 : 0;
  write_png(path, img);
}

Mask read_mask(const fs::path& path) {
  const RawPng img = read_png(path);
  require_format(img, 1, 8, path, "8-bit grayscale mask");
  Mask mask(img.width, img.height);
  for (std::size_t i = 0; i < img.samples.size(); ++i) mask.bits[i] = img.samples[i] != 0;
  return mask;
}

void write_image(const ImageGrid& image, const fs::path& path) {
  if (image.channels != 1 && image.channels != 3) throw InvalidArgument("write_image: 1 or 3 channels required");
  RawPng img{image.width, image.height, image.channels, 8, std::vector<std::uint16_t>(image.data.size())};
  for (std::size_t i = 0; i < image.data.size(); ++i) {
    img.samples[i] = std::uint16_t(std::lround(std::clamp(image.data[i], 0.0, 1.0) * 255.0));
  }
  write_png(path, img);
}

ImageGrid read_image(const fs::path& path) {
  const RawPng img = read_png(path);
  const int color = img.channels >= 3 ? 3 : 1;
  const double scale = img.bit_depth == 16 ? 65535.0 : 255.0;
  ImageGrid out(img.width, img.height, color);
  for (long p = 0; p < out.pixel_count(); ++p) {
    for (int c = 0; c < color; ++c) {
      out.data[std::size_t(p) * color + c] = double(img.samples[std::size_t(p) * img.channels + c]) / scale;
    }
  }
  return out;
}

// --- JSON ---------------------------------------------------------------

std::string canonical_dump(const Json& doc) {
  std::ostringstream os;
  dump_value(os, doc, 0);
  os << "\n";
  return os.str();
}

Json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_text(const std::string& text, const fs::path& path) {
  const fs::path tmp = temp_path_for(path);
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw FileError("cannot open " + path.string() + " for writing");
    out << text;
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw FileError("cannot write " + path.string());
    }
  }
  commit(tmp, path);
}

void write_json(const Json& doc, const fs::path& path) { write_text(canonical_dump(doc), path); }

void require_keys(const Json& doc, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!doc.is_object()) throw SchemaError(where.empty() ? "<root>" : where, "expected an object");
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    bool known = false;
    for (const char* k : allowed) known = known || it.key() == k;
    if (!known) throw SchemaError(where_of(where, it.key().c_str()), "unknown key");
  }
  for (const char* k : allowed) {
    if (!doc.contains(k)) throw SchemaError(where_of(where, k), "missing");
  }
}

double json_number(const Json& doc, const char* key, const std::string& where) {
  const Json& v = doc.at(key);
  if (!v.is_number()) throw SchemaError(where_of(where, key), "expected a number");
  return v.get<double>();
}

long json_integer(const Json& doc, const char* key, const std::string& where) {
  const Json& v = doc.at(key);
  if (!v.is_number_integer()) throw SchemaError(where_of(where, key), "expected an integer");
  return v.get<long>();
}

Json intrinsics_to_json(const CameraIntrinsics& k) {
  return Json{{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
}

CameraIntrinsics intrinsics_from_json(const Json& doc) {
  require_keys(doc, {"fx", "fy", "cx", "cy", "width", "height"}, "");
  CameraIntrinsics k;
  k.fx = json_number(doc, "fx", "");
  k.fy = json_number(doc, "fy", "");
  k.cx = json_number(doc, "cx", "");
  k.cy = json_number(doc, "cy", "");
  k.width = int(json_integer(doc, "width", ""));
  k.height = int(json_integer(doc, "height", ""));
  k.validate();
  return k;
}

CameraIntrinsics read_intrinsics(const fs::path& path) { return intrinsics_from_json(read_json(path)); }
void write_intrinsics(const CameraIntrinsics& k, const fs::path& path) { write_json(intrinsics_to_json(k), path); }

Json histogram_to_json(const SphericalHistogram& h) {
  return Json{{"n_theta", h.binning.n_theta}, {"n_phi", h.binning.n_phi}, {"floor", h.floor}, {"mass", h.mass}};
}

SphericalHistogram histogram_from_json(const Json& doc) {
  require_keys(doc, {"n_theta", "n_phi", "floor", "mass"}, "");
  SphericalHistogram h;
  h.binning.n_theta = int(json_integer(doc, "n_theta", ""));
  h.binning.n_phi = int(json_integer(doc, "n_phi", ""));
  try {
    h.binning.validate();
  } catch (const Error& e) {
    throw ValidationError(e.what());
  }
  h.floor = json_number(doc, "floor", "");
  const Json& mass = doc.at("mass");
  if (!mass.is_array()) throw SchemaError("mass", "expected an array");
  if (int(mass.size()) != h.binning.size()) {
    throw SchemaError("mass", "expected " + std::to_string(h.binning.size()) + " entries");
  }
  double total = 0;
  for (std::size_t i = 0; i < mass.size(); ++i) {
    if (!mass[i].is_number()) throw SchemaError("mass[" + std::to_string(i) + "]", "expected a number");
    const double m = mass[i].get<double>();
    if (!(m >= 0)) throw ValidationError("histogram mass must be non-negative");
    h.mass.push_back(m);
    total += m;
  }
  if (std::abs(total - 1.0) > 1e-6) throw ValidationError("histogram mass must sum to 1");
  return h;
}

SphericalHistogram read_histogram(const fs::path& path) { return histogram_from_json(read_json(path)); }
void write_histogram(const SphericalHistogram& h, const fs::path& path) { write_json(histogram_to_json(h), path); }

namespace {
constexpr const char* kBelowKeys[5] = {"p5", "p7_5", "p11_25", "p22_5", "p30"};
}

Json summary_to_json(const EvalSummary& s) {
  Json doc{{"mean", s.mean}, {"median", s.median}, {"rmse", s.rmse}, {"count", s.count}};
  for (int i = 0; i < 5; ++i) doc[kBelowKeys[i]] = s.below[i];
  return doc;
}

EvalSummary summary_from_json(const Json& doc) {
  require_keys(doc, {"mean", "median", "rmse", "p5", "p7_5", "p11_25", "p22_5", "p30", "count"}, "");
  EvalSummary s;
  s.mean = json_number(doc, "mean", "");
  s.median = json_number(doc, "median", "");
  s.rmse = json_number(doc, "rmse", "");
  const long count = json_integer(doc, "count", "");
  if (count < 0) throw ValidationError("count must be non-negative");
  s.count = std::size_t(count);
  for (int i = 0; i < 5; ++i) s.below[i] = json_number(doc, kBelowKeys[i], "");
  return s;
}

EvalSummary read_summary(const fs::path& path) { return summary_from_json(read_json(path)); }
void write_summary(const EvalSummary& s, const fs::path& path) { write_json(summary_to_json(s), path); }

std::string summary_csv_header() { return "mean,median,rmse,p5,p7_5,p11_25,p22_5,p30,count"; }

std::string summary_csv_row(const EvalSummary& s) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%zu", s.mean, s.median, s.rmse, s.below[0],
                s.below[1], s.below[2], s.below[3], s.below[4], s.count);
  return buf;
}

}  // namespace tilt
