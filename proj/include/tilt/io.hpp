#pragma once

// File formats: 16-bit normal and depth PNGs, 8-bit mask and image PNGs, and
// strict, canonically serialized JSON documents. Every write goes to a
// temporary file that is renamed into place.

#include <filesystem>
#include <initializer_list>
#include <string>

#include <json.hpp>

#include "tilt/direction_stats.hpp"
#include "tilt/geometry.hpp"
#include "tilt/image.hpp"
#include "tilt/metrics.hpp"

namespace tilt {

namespace fs = std::filesystem;
using Json = nlohmann::json;

// --- PNG ----------------------------------------------------------------

/// 16-bit RGB, v = round((n + 1) / 2 * 65535) per channel; (0, 0, 0) marks an
/// invalid pixel. When the renormalized decode of the rounded code misses
/// 1/65535 per component, the best code within one step per channel is stored
/// instead (never (0, 0, 0)). Reading renormalizes.
void write_normal_map(const NormalMap& map, const fs::path& path);
NormalMap read_normal_map(const fs::path& path);

/// 16-bit grayscale in millimetres, 0 = invalid. Depths above 65.535 m throw
/// RangeError.
void write_depth_map(const DepthMap& map, const fs::path& path);
DepthMap read_depth_map(const fs::path& path);

/// 8-bit grayscale, 255 inside the mask. Any non-zero value reads as set.
void write_mask(const Mask& mask, const fs::path& path);
Mask read_mask(const fs::path& path);

/// 8-bit RGB (3 channels) or grayscale (1 channel); values in [0, 1] are
/// clamped and rounded.
void write_image(const ImageGrid& image, const fs::path& path);
/// 8- or 16-bit gray, gray+alpha, RGB or RGBA; alpha is dropped, values
/// scaled to [0, 1].
ImageGrid read_image(const fs::path& path);

// --- JSON ---------------------------------------------------------------

/// Sorted keys, two-space indent, integers verbatim, other numbers as %.9g.
/// Non-finite numbers throw RangeError.
std::string canonical_dump(const Json& doc);

Json read_json(const fs::path& path);
void write_json(const Json& doc, const fs::path& path);
void write_text(const std::string& text, const fs::path& path);

/// {"cx", "cy", "fx", "fy", "height", "width"}
Json intrinsics_to_json(const CameraIntrinsics& k);
CameraIntrinsics intrinsics_from_json(const Json& doc);
CameraIntrinsics read_intrinsics(const fs::path& path);
void write_intrinsics(const CameraIntrinsics& k, const fs::path& path);

/// {"floor", "mass", "n_phi", "n_theta"}
Json histogram_to_json(const SphericalHistogram& h);
SphericalHistogram histogram_from_json(const Json& doc);
SphericalHistogram read_histogram(const fs::path& path);
void write_histogram(const SphericalHistogram& h, const fs::path& path);

/// {"count", "mean", "median", "p11_25", "p22_5", "p30", "p5", "p7_5", "rmse"}
Json summary_to_json(const EvalSummary& s);
EvalSummary summary_from_json(const Json& doc);
EvalSummary read_summary(const fs::path& path);
void write_summary(const EvalSummary& s, const fs::path& path);
/// Header and one row in the same field order as summary_csv_row.
std::string summary_csv_header();
std::string summary_csv_row(const EvalSummary& s);

/// Strict field access for hand-written schemas: throws SchemaError naming
/// the field path when a key is missing, has the wrong type, or when the
/// object carries keys outside `allowed`.
void require_keys(const Json& doc, std::initializer_list<const char*> allowed, const std::string& where);
double json_number(const Json& doc, const char* key, const std::string& where);
long json_integer(const Json& doc, const char* key, const std::string& where);

}  // namespace tilt
