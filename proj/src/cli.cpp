#include "tilt/cli.hpp"

#include <fnmatch.h>
#include <openssl/evp.h>

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include "tilt/gradcheck.hpp"
#include "tilt/io.hpp"
#include "tilt/losses.hpp"
#include "tilt/metrics.hpp"
#include "tilt/parallel.hpp"
#include "tilt/plane_refine.hpp"
#include "tilt/rectifier.hpp"
#include "tilt/synthesis.hpp"
#include "tilt/warping.hpp"

namespace tilt {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

class UsageError : public Error {
  using Error::Error;
};

// --- small helpers --------------------------------------------------------

Json vec_json(const Vector3d& v) { return Json::array({v.x(), v.y(), v.z()}); }

UnitVec3 parse_vec3(const std::string& text, const char* flag) {
  std::stringstream ss(text);
  std::string part;
  std::vector<double> vals;
  while (std::getline(ss, part, ',')) {
    try {
      std::size_t used = 0;
      vals.push_back(std::stod(part, &used));
      while (used < part.size() && std::isspace(static_cast<unsigned char>(part[used]))) ++used;
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw UsageError(std::string(flag) + ": expected \"x,y,z\", got \"" + text + "\"");
    }
  }
  if (vals.size() != 3) throw UsageError(std::string(flag) + ": expected \"x,y,z\", got \"" + text + "\"");
  try {
    return UnitVec3(vals[0], vals[1], vals[2]);
  } catch (const InvalidArgument&) {
    throw UsageError(std::string(flag) + ": zero vector");
  }
}

/// Expands shell-style wildcards in the file-name component; sorted.
std::vector<std::string> expand_globs(const std::vector<std::string>& patterns) {
  std::vector<std::string> out;
  for (const std::string& pat : patterns) {
    const fs::path p(pat);
    const std::string name = p.filename().string();
    if (name.find_first_of("*?[") == std::string::npos) {
      if (fs::exists(p)) out.push_back(pat);
      continue;
    }
    const fs::path dir = p.has_parent_path() ? p.parent_path() : fs::path(".");
    std::vector<std::string> hits;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(dir, ec)) {
      const std::string fname = entry.path().filename().string();
      if (entry.is_regular_file() && ::fnmatch(name.c_str(), fname.c_str(), 0) == 0) {
        hits.push_back((p.has_parent_path() ? (dir / fname) : fs::path(fname)).string());
      }
    }
    std::sort(hits.begin(), hits.end());
    out.insert(out.end(), hits.begin(), hits.end());
  }
  return out;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw FileError("cannot create output directory " + dir.string());
  const fs::path probe = dir / ".tilt-write-probe";
  {
    std::ofstream f(probe);
    if (!f) throw FileError("output directory " + dir.string() + " is not writable");
  }
  fs::remove(probe, ec);
}

// --- run manifest ---------------------------------------------------------

struct Run {
  std::string command;
  std::vector<std::string> argv;
  Json config = Json::object();
  Json inputs = Json::array();
  std::vector<std::string> outputs;
  Json items = Json::array();
  std::string status = "ok";
  fs::path manifest_path;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  void input(const std::string& p) { inputs.push_back(p); }
  void output(const fs::path& p) { outputs.push_back(p.string()); }

  void write() const {
    if (manifest_path.empty()) return;
    Json out = Json::array();
    for (const auto& p : outputs) out.push_back(Json{{"path", p}, {"sha256", file_sha256(p)}});
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    Json doc{{"tool", "tilt-rectify"},
             {"command", command},
             {"argv", argv},
             {"cwd", fs::current_path().string()},
             {"config", config},
             {"inputs", inputs},
             {"outputs", out},
             {"items", items},
             {"status", status},
             {"wall_time_s", wall}};
    write_json(doc, manifest_path);
  }
};

fs::path sidecar_manifest(const fs::path& out, const std::string& override_path) {
  if (!override_path.empty()) return override_path;
  return fs::path(out.string() + ".manifest.json");
}

// --- scene config ---------------------------------------------------------

SceneSpec scene_from_json(const Json& doc) {
  require_keys(doc, {"room", "camera", "yaw_deg", "texture", "intrinsics"}, "");
  SceneSpec s;
  auto triple = [&](const char* key) {
    const Json& a = doc.at(key);
    if (!a.is_array() || a.size() != 3) throw SchemaError(key, "expected an array of 3 numbers");
    Vector3d v;
    for (int i = 0; i < 3; ++i) {
      if (!a[i].is_number()) throw SchemaError(std::string(key) + "[" + std::to_string(i) + "]", "expected a number");
      v[i] = a[i].get<double>();
    }
    return v;
  };
  const Vector3d room = triple("room");
  s.room_width = room.x();
  s.room_height = room.y();
  s.room_depth = room.z();
  s.camera = triple("camera");
  s.yaw = json_number(doc, "yaw_deg", "") * kDeg;
  const Json& tex = doc.at("texture");
  if (tex == "checker") {
    s.texture = Texture::checker;
  } else if (tex == "gradient") {
    s.texture = Texture::gradient;
  } else {
    throw SchemaError("texture", "expected \"checker\" or \"gradient\"");
  }
  try {
    s.k = intrinsics_from_json(doc.at("intrinsics"));
  } catch (const SchemaError& e) {
    throw SchemaError("intrinsics." + e.field(), e.what());
  }
  s.validate();
  return s;
}

Json scene_to_json(const SceneSpec& s) {
  return Json{{"room", Json::array({s.room_width, s.room_height, s.room_depth})},
              {"camera", vec_json(s.camera)},
              {"yaw_deg", s.yaw / kDeg},
              {"texture", s.texture == Texture::checker ? "checker" : "gradient"},
              {"intrinsics", intrinsics_to_json(s.k)}};
}

Json mixture_json(const GaussianMixture& p) {
  Json modes = Json::array();
  for (int j = 0; j < p.k(); ++j) {
    modes.push_back(Json{{"weight", p.weights[j]}, {"mean", vec_json(p.means[j])}, {"variance", p.variances[j]}});
  }
  return modes;
}

// --- commands -------------------------------------------------------------

struct SynthArgs {
  std::string scene, out, q, manifest;
  int count = 1;
  double roll_deg = 45, pitch_deg = 45;
  std::uint64_t seed = 0;
  bool optimize = false;
};

int cmd_synth(const SynthArgs& a, Run& run) {
  if (a.count < 1) throw UsageError("--count must be >= 1");
  const SceneSpec spec = a.scene.empty() ? SceneSpec{} : scene_from_json(read_json(a.scene));
  if (!a.scene.empty()) run.input(a.scene);
  if (a.optimize && a.q.empty()) throw UsageError("--optimize-e-gt needs --q");
  std::optional<EgtSearch> search;
  if (a.optimize) {
    search = EgtSearch{read_histogram(a.q), 5, RectifierConfig{}};
    run.input(a.q);
  }
  const fs::path out(a.out);
  ensure_dir(out);
  run.manifest_path = a.manifest.empty() ? out / "manifest.json" : fs::path(a.manifest);
  run.config = Json{{"scene", scene_to_json(spec)}, {"count", a.count}, {"roll_deg", a.roll_deg},
                    {"pitch_deg", a.pitch_deg}, {"seed", a.seed}, {"optimize_e_gt", a.optimize}};

  const Render upright = render_upright(spec);
  write_intrinsics(spec.k, out / "intrinsics.json");
  write_image(upright.image, out / "upright_image.png");
  write_normal_map(upright.normals, out / "upright_normals.png");
  write_depth_map(upright.depth, out / "upright_depth.png");
  for (const char* f : {"intrinsics.json", "upright_image.png", "upright_normals.png", "upright_depth.png"}) {
    run.output(out / f);
  }

  std::vector<Json> items(std::size_t(a.count));
  parallel_for(std::size_t(a.count), [&](std::size_t i) {
    const std::uint64_t seed = a.seed + i;
    const TiltDraw draw = random_tilt(a.roll_deg * kDeg, a.pitch_deg * kDeg, seed);
    const TiltedSample s = synthesize_tilted(upright, spec.k, draw.rotation, search);
    char stem[32];
    std::snprintf(stem, sizeof stem, "sample_%04zu", i);
    const fs::path img = out / (std::string(stem) + "_image.png");
    const fs::path nrm = out / (std::string(stem) + "_normals.png");
    const fs::path vis = out / (std::string(stem) + "_visible.png");
    write_image(s.image, img);
    write_normal_map(s.normals, nrm);
    write_mask(s.visible, vis);
    items[i] = Json{{"seed", seed},
                    {"roll_deg", draw.roll / kDeg},
                    {"pitch_deg", draw.pitch / kDeg},
                    {"g", vec_json(s.g.vec())},
                    {"e_gt", vec_json(s.e_gt.vec())},
                    {"e_gt_source", s.e_gt_source == EgtSource::analytic ? "analytic" : "optimized"},
                    {"image", img.string()},
                    {"normals", nrm.string()},
                    {"visible", vis.string()},
                    {"status", "ok"}};
  });
  for (const Json& item : items) {
    run.items.push_back(item);
    for (const char* key : {"image", "normals", "visible"}) run.output(item[key].get<std::string>());
  }
  return kExitOk;
}

struct BuildQArgs {
  std::vector<std::string> normals;
  std::string bins = "19x36", out, manifest;
  double floor = 1e-8;
};

SphereBinning parse_bins(const std::string& text) {
  const auto x = text.find('x');
  try {
    if (x == std::string::npos) throw std::invalid_argument(text);
    SphereBinning b{std::stoi(text.substr(0, x)), std::stoi(text.substr(x + 1))};
    b.validate();
    return b;
  } catch (const std::exception&) {
    throw UsageError("--bins: expected TxP with valid counts, got \"" + text + "\"");
  }
}

int cmd_build_q(const BuildQArgs& a, Run& run) {
  const SphereBinning binning = parse_bins(a.bins);
  const auto files = expand_globs(a.normals);
  if (files.empty()) throw UsageError("--normals matched no files");
  run.manifest_path = sidecar_manifest(a.out, a.manifest);
  run.config = Json{{"bins", a.bins}, {"floor", a.floor}};
  std::vector<double> counts(std::size_t(binning.size()), 0.0);
  for (const auto& f : files) {
    run.input(f);
    const NormalMap m = read_normal_map(f);
    const auto c = bin_counts(m.valid_normals(), binning);
    for (std::size_t b = 0; b < counts.size(); ++b) counts[b] += c[b];
    run.items.push_back(Json{{"file", f}, {"valid_pixels", m.valid_count()}});
  }
  write_histogram(histogram_from_counts(counts, binning, a.floor), a.out);
  run.output(a.out);
  return kExitOk;
}

struct OptimizeArgs {
  std::string image, normals, gravity, init, q, k, out, manifest;
  double lambda_e = 0.1, step = 0.05, tol = 1e-6, decay = 0.5;
  int iters = 500, modes = 5, decay_every = 100;
  std::uint64_t seed = 0;
};

int cmd_optimize_e(const OptimizeArgs& a, Run& run) {
  const UnitVec3 g = parse_vec3(a.gravity, "--gravity");
  const UnitVec3 init = a.init.empty() ? g : parse_vec3(a.init, "--init");
  run.manifest_path = sidecar_manifest(a.out, a.manifest);
  run.config = Json{{"gravity", vec_json(g.vec())}, {"init", vec_json(init.vec())}, {"lambda_e", a.lambda_e},
                    {"step", a.step}, {"iters", a.iters}, {"tol", a.tol}, {"modes", a.modes}, {"seed", a.seed},
                    {"decay", a.decay}, {"decay_every", a.decay_every}};
  for (const auto* f : {&a.normals, &a.q, &a.k}) run.input(*f);

  const NormalMap normals = read_normal_map(a.normals);
  RectificationProblem pb;
  pb.g = g;
  pb.q = read_histogram(a.q);
  pb.k = read_intrinsics(a.k);
  if (!a.image.empty()) {
    run.input(a.image);
    const ImageGrid img = read_image(a.image);
    if (img.width != normals.width || img.height != normals.height) {
      throw UsageError("--image and --normals differ in size");
    }
  }
  if (pb.k.width != normals.width || pb.k.height != normals.height) {
    throw UsageError("intrinsics size does not match the normal map");
  }
  const std::vector<UnitVec3> sample = normals.valid_normals();
  if (sample.empty()) throw UsageError("--normals has no valid pixels");
  pb.p = fit_gmm(sample, a.modes, a.seed);

  RectifierConfig cfg;
  cfg.lambda_e = a.lambda_e;
  cfg.step = a.step;
  cfg.iters = a.iters;
  cfg.tol = a.tol;
  cfg.seed = a.seed;
  cfg.decay = a.decay;
  cfg.decay_every = a.decay_every;
  try {
    const RectifierResult res = optimize_e(pb, init, cfg);
    const SphericalHistogram rect = rectified_histogram(sample, g, res.e_star, pb.q.binning, pb.q.floor);
    const ObjectiveTerms terms = objective_terms(pb, res.e_star);
    Json doc{{"e_star", vec_json(res.e_star.vec())},
             {"g", vec_json(g.vec())},
             {"init", vec_json(init.vec())},
             {"converged", res.converged},
             {"iterations", res.objective_trace.size() - 1},
             {"objective_trace", res.objective_trace},
             {"objective", Json{{"kl", terms.kl}, {"visibility", terms.visibility}, {"total", terms.total}}},
             {"histogram_kl", kl_divergence(rect, pb.q)},
             {"invisible_count", invisible_count(rotate_view(ImageGrid(pb.k.width, pb.k.height, 1),
                                                             rotation_between(g, res.e_star), pb.k,
                                                             Interpolation::nearest))},
             {"mixture", mixture_json(pb.p)}};
    write_json(doc, a.out);
    run.output(a.out);
  } catch (const AntipodalDrift& e) {
    run.status = "aborted";
    run.items.push_back(Json{{"error", e.what()},
                             {"objective_trace", e.trace},
                             {"last_e", Json::array({e.last_e[0], e.last_e[1], e.last_e[2]})}});
    throw;
  }
  return kExitOk;
}

struct RectifyArgs {
  std::string image, normals, g, e, intrinsics, out, interp = "bilinear", manifest;
};

Interpolation parse_interp(const std::string& s) {
  if (s == "bilinear") return Interpolation::bilinear;
  if (s == "nearest") return Interpolation::nearest;
  throw UsageError("--interp: expected bilinear or nearest");
}

int cmd_rectify(const RectifyArgs& a, Run& run) {
  const UnitVec3 g = parse_vec3(a.g, "--g");
  const UnitVec3 e = parse_vec3(a.e, "--e");
  const Interpolation interp = parse_interp(a.interp);
  const CameraIntrinsics k = read_intrinsics(a.intrinsics);
  const ImageGrid img = read_image(a.image);
  const NormalMap normals = read_normal_map(a.normals);
  for (const auto* f : {&a.image, &a.normals, &a.intrinsics}) run.input(*f);
  if (img.width != k.width || img.height != k.height || normals.width != k.width || normals.height != k.height) {
    throw UsageError("image, normal map and intrinsics differ in size");
  }
  const fs::path out(a.out);
  ensure_dir(out);
  run.manifest_path = a.manifest.empty() ? out / "manifest.json" : fs::path(a.manifest);
  run.config = Json{{"g", vec_json(g.vec())}, {"e", vec_json(e.vec())}, {"interp", a.interp}};

  const Rotation3 r = rotation_between(g, e);
  const ImageWarp wi = rotate_view(img, r, k, interp);
  const NormalWarp wn = warp_normal_map(normals, r, k, interp);
  write_image(wi.image, out / "image.png");
  write_normal_map(wn.normals, out / "normals.png");
  write_mask(wi.visible, out / "visible.png");
  const Json stats{{"invisible_count", invisible_count(wi)},
                   {"visible_count", wi.visible.count()},
                   {"pixel_count", k.pixel_count()},
                   {"valid_normals", wn.normals.valid_count()},
                   {"visibility_term", visibility_term(k, g, e)},
                   {"g", vec_json(g.vec())},
                   {"e", vec_json(e.vec())}};
  write_json(stats, out / "stats.json");
  for (const char* f : {"image.png", "normals.png", "visible.png", "stats.json"}) run.output(out / f);
  return kExitOk;
}

struct EvalArgs {
  std::vector<std::string> pred, gt;
  std::string loss = "al", report, csv, manifest;
  double lambda = 1.0;
};

using PixelLoss = std::function<double(const UnitVec3&, const UnitVec3&)>;

PixelLoss make_loss(const std::string& name, double lambda) {
  auto angles = [](const UnitVec3& n) { return slant_tilt_angles(to_viewer_frame(n)); };
  if (name == "l2") return [](const UnitVec3& p, const UnitVec3& g) { return l2_loss(p, g); };
  if (name == "al") return [](const UnitVec3& p, const UnitVec3& g) { return angular_loss(p, g); };
  if (name == "tal") return [](const UnitVec3& p, const UnitVec3& g) { return truncated_angular_loss(p, g); };
  if (name == "slant-tilt") {
    return [angles](const UnitVec3& p, const UnitVec3& g) { return slant_tilt_loss(angles(p), angles(g)); };
  }
  if (name == "satd") {
    return [lambda](const UnitVec3& p, const UnitVec3& g) {
      const auto a = slant_tilt_from_normal(to_viewer_frame(p));
      const auto b = slant_tilt_from_normal(to_viewer_frame(g));
      return satd_loss(a.theta, a.z, b.theta, b.z, lambda);
    };
  }
  throw UsageError("--loss: expected one of l2, al, tal, slant-tilt, satd");
}

int cmd_eval(const EvalArgs& a, Run& run) {
  const PixelLoss loss = make_loss(a.loss, a.lambda);
  const auto preds = expand_globs(a.pred);
  const auto gts = expand_globs(a.gt);
  if (preds.empty() || gts.empty()) throw UsageError("--pred/--gt matched no files");
  if (preds.size() != gts.size()) {
    throw UsageError("--pred matched " + std::to_string(preds.size()) + " files but --gt matched " +
                     std::to_string(gts.size()));
  }
  run.manifest_path = sidecar_manifest(a.report, a.manifest);
  run.config = Json{{"loss", a.loss}, {"lambda", a.lambda}};

  struct PairResult {
    std::vector<double> errors;
    std::vector<double> losses;
    std::string error;
  };
  std::vector<PairResult> results(preds.size());
  parallel_for(preds.size(), [&](std::size_t i) {
    PairResult& r = results[i];
    try {
      const NormalMap p = read_normal_map(preds[i]);
      const NormalMap g = read_normal_map(gts[i]);
      if (!p.same_shape(g)) throw InvalidArgument("dimension mismatch");
      std::vector<LossSample> samples;
      std::vector<std::uint8_t> valid;
      for (std::size_t j = 0; j < p.normals.size(); ++j) {
        if (!p.valid[j] || !g.valid[j]) continue;
        const LossSample s{UnitVec3(p.normals[j]), UnitVec3(g.normals[j])};
        r.errors.push_back(angular_error(s.pred, s.gt));
        r.losses.push_back(loss(s.pred, s.gt));
      }
      if (r.errors.empty()) throw NoValidSamples("no pixel valid in both maps");
    } catch (const Error& e) {
      r.error = e.what();
      r.errors.clear();
      r.losses.clear();
    }
  });

  std::string csv = "pred,gt,status,loss," + summary_csv_header() + "\n";
  Json pairs = Json::array();
  std::vector<double> all_errors, all_losses;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    run.input(preds[i]);
    run.input(gts[i]);
    const PairResult& r = results[i];
    Json item{{"pred", preds[i]}, {"gt", gts[i]}};
    if (!r.error.empty()) {
      item["status"] = "error";
      item["error"] = r.error;
      csv += preds[i] + "," + gts[i] + ",error,,,,,,,,,,\n";
    } else {
      const EvalSummary s = summarize(r.errors);
      const double mean_loss = pairwise_sum(r.losses) / double(r.losses.size());
      item["status"] = "ok";
      item["summary"] = summary_to_json(s);
      item["loss"] = mean_loss;
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.9g", mean_loss);
      csv += preds[i] + "," + gts[i] + ",ok," + buf + "," + summary_csv_row(s) + "\n";
      all_errors.insert(all_errors.end(), r.errors.begin(), r.errors.end());
      all_losses.insert(all_losses.end(), r.losses.begin(), r.losses.end());
    }
    pairs.push_back(item);
    run.items.push_back(Json{{"pred", preds[i]}, {"status", item["status"]}});
  }
  Json report{{"loss_name", a.loss}, {"pairs", pairs}};
  if (!all_errors.empty()) {
    report["aggregate"] = Json{{"summary", summary_to_json(summarize(all_errors))},
                               {"loss", pairwise_sum(all_losses) / double(all_losses.size())}};
  } else {
    report["aggregate"] = nullptr;
    run.status = "no valid pairs";
  }
  write_json(report, a.report);
  run.output(a.report);
  if (!a.csv.empty()) {
    write_text(csv, a.csv);
    run.output(a.csv);
  }
  return all_errors.empty() ? kExitUsage : kExitOk;
}

struct RefineArgs {
  std::string depth, normals, intrinsics, out, manifest;
  std::vector<std::string> masks;
  double keep_ratio = 0.5, inlier_thresh = 0.02, dist_thresh = 0.20, angle_deg = 30.0;
  int iters = 500;
  std::uint64_t seed = 0;
};

int cmd_refine_planes(const RefineArgs& a, Run& run) {
  const auto files = expand_globs(a.masks);
  if (files.empty()) throw UsageError("--masks matched no files");
  const CameraIntrinsics k = read_intrinsics(a.intrinsics);
  const DepthMap depth = read_depth_map(a.depth);
  const NormalMap normals = read_normal_map(a.normals);
  for (const auto* f : {&a.depth, &a.normals, &a.intrinsics}) run.input(*f);
  if (depth.width != k.width || depth.height != k.height || normals.width != k.width || normals.height != k.height) {
    throw UsageError("depth, normal map and intrinsics differ in size");
  }
  std::vector<PlaneMask> masks;
  for (const auto& f : files) {
    run.input(f);
    masks.push_back(read_mask(f));
  }
  const fs::path out(a.out);
  ensure_dir(out);
  run.manifest_path = a.manifest.empty() ? out / "manifest.json" : fs::path(a.manifest);

  RefineConfig cfg;
  cfg.keep_ratio = a.keep_ratio;
  cfg.inlier_thresh = a.inlier_thresh;
  cfg.dist_thresh = a.dist_thresh;
  cfg.angle_thresh = a.angle_deg * kDeg;
  cfg.iters = a.iters;
  cfg.seed = a.seed;
  run.config = Json{{"keep_ratio", cfg.keep_ratio}, {"inlier_thresh", cfg.inlier_thresh},
                    {"dist_thresh", cfg.dist_thresh}, {"angle_deg", a.angle_deg},
                    {"iters", cfg.iters},           {"seed", cfg.seed}};
  const RefineResult res = refine_masks(masks, depth, normals, k, cfg);

  Json kept = Json::array(), discarded = Json::array(), stats = Json::array();
  std::size_t next_kept = 0;
  for (const MaskOutcome& o : res.outcomes) {
    const std::string src = files[o.index];
    Json st{{"mask", src},
            {"kept", o.kept},
            {"original_pixels", o.original_pixels},
            {"refined_pixels", o.refined_pixels},
            {"ransac_inliers", o.ransac_inliers},
            {"plane", Json{{"normal", vec_json(o.plane.normal.vec())}, {"offset", o.plane.offset}}}};
    if (!o.error.empty()) st["error"] = o.error;
    if (o.kept) {
      const fs::path dst = out / ("refined_" + fs::path(src).stem().string() + ".png");
      write_mask(res.kept[next_kept++], dst);
      run.output(dst);
      st["refined"] = dst.string();
      kept.push_back(src);
    } else {
      discarded.push_back(src);
    }
    stats.push_back(st);
    run.items.push_back(Json{{"mask", src}, {"status", o.error.empty() ? "ok" : "error"}});
  }
  write_json(Json{{"kept", kept}, {"discarded", discarded}, {"masks", stats}}, out / "refine.json");
  run.output(out / "refine.json");
  return kExitOk;
}

struct GradcheckArgs {
  int trials = 1000;
  std::uint64_t seed = 0;
  std::string report, manifest;
  bool flip = false;
};

int cmd_gradcheck(const GradcheckArgs& a, Run& run) {
  if (a.trials < 1) throw UsageError("--trials must be >= 1");
  GradcheckConfig cfg;
  cfg.trials = a.trials;
  cfg.seed = a.seed;
  cfg.flip_sign = a.flip;
  run.config = Json{{"trials", a.trials}, {"seed", a.seed}, {"inject_sign_flip", a.flip}};
  const GradcheckReport rep = run_gradcheck(cfg);
  Json suites = Json::array();
  for (const auto& s : rep.suites) {
    std::printf("%-26s instances %6d  max rel err %.3e  tol %.0e  %s\n", s.name.c_str(), s.instances, s.max_rel_error,
                s.tolerance, s.pass() ? "ok" : "FAIL");
    suites.push_back(Json{{"name", s.name},
                          {"instances", s.instances},
                          {"max_rel_error", s.max_rel_error},
                          {"tolerance", s.tolerance},
                          {"pass", s.pass()}});
  }
  std::printf("gradcheck: %s\n", rep.pass() ? "PASS" : "FAIL");
  if (!a.report.empty()) {
    run.manifest_path = sidecar_manifest(a.report, a.manifest);
    write_json(Json{{"suites", suites}, {"pass", rep.pass()}}, a.report);
    run.output(a.report);
  } else if (!a.manifest.empty()) {
    run.manifest_path = a.manifest;
  }
  if (!rep.pass()) run.status = "audit failed";
  return rep.pass() ? kExitOk : kExitAuditFailure;
}

int cmd_replay(const std::string& manifest) {
  const Json doc = read_json(manifest);
  if (!doc.contains("argv") || !doc["argv"].is_array()) throw SchemaError("argv", "missing or not an array");
  std::vector<std::string> args;
  for (const auto& v : doc["argv"]) args.push_back(v.get<std::string>());
  if (args.empty() || args[0] == "replay") throw SchemaError("argv", "not a replayable command");
  const fs::path cwd = fs::current_path();
  if (doc.contains("cwd") && doc["cwd"].is_string()) fs::current_path(doc["cwd"].get<std::string>());
  const int code = run_cli(args);
  fs::current_path(cwd);
  return code;
}

}  // namespace

std::string file_sha256(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open " + path);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, std::size_t(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char byte[3];
  for (unsigned i = 0; i < len; ++i) {
    std::snprintf(byte, sizeof byte, "%02x", md[i]);
    hex += byte;
  }
  return hex;
}

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Spatial rectification toolkit for tilted-camera imagery", "tilt-rectify"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Synthesize tilted box-room samples");
  s->add_option("--scene", synth.scene, "Scene config JSON (defaults to the built-in room)");
  s->add_option("--count", synth.count, "Number of samples")->default_val(1);
  s->add_option("--roll-deg", synth.roll_deg, "Roll range, degrees")->default_val(45);
  s->add_option("--pitch-deg", synth.pitch_deg, "Pitch range, degrees")->default_val(45);
  s->add_option("--seed", synth.seed, "Seed of the first sample")->default_val(0);
  s->add_option("--out", synth.out, "Output directory")->required();
  s->add_flag("--optimize-e-gt", synth.optimize, "Compute e_gt with the optimizer (needs --q)");
  s->add_option("--q", synth.q, "Target histogram for --optimize-e-gt");
  s->add_option("--manifest", synth.manifest, "Manifest path");

  BuildQArgs bq;
  auto* b = app.add_subcommand("build-q", "Build the target normal histogram Q");
  b->add_option("--normals", bq.normals, "Normal map files or patterns")->required()->expected(1, -1);
  b->add_option("--bins", bq.bins, "Slant x tilt bin counts")->default_val("19x36");
  b->add_option("--floor", bq.floor, "Per-bin probability floor")->default_val(1e-8);
  b->add_option("--out", bq.out, "Output histogram JSON")->required();
  b->add_option("--manifest", bq.manifest, "Manifest path");

  OptimizeArgs oe;
  auto* o = app.add_subcommand("optimize-e", "Optimize the principle direction e");
  o->add_option("--image", oe.image, "Tilted image (size check only)");
  o->add_option("--normals", oe.normals, "Normal map of the tilted image")->required();
  o->add_option("--gravity", oe.gravity, "Gravity \"x,y,z\" in the camera frame")->required();
  o->add_option("--init", oe.init, "Initial e (defaults to gravity)");
  o->add_option("--q", oe.q, "Target histogram JSON")->required();
  o->add_option("--k,--intrinsics", oe.k, "Intrinsics JSON")->required();
  o->add_option("--lambda-e", oe.lambda_e, "Visibility weight")->default_val(0.1);
  o->add_option("--modes", oe.modes, "Gaussian mixture modes")->default_val(5);
  o->add_option("--step", oe.step, "Initial step size")->default_val(0.05);
  o->add_option("--iters", oe.iters, "Iterations")->default_val(500);
  o->add_option("--tol", oe.tol, "Tangent-gradient tolerance")->default_val(1e-6);
  o->add_option("--decay", oe.decay, "Step multiplier applied every --decay-every iterations")->default_val(0.5);
  o->add_option("--decay-every", oe.decay_every, "Decay period (0 keeps the step fixed)")->default_val(100);
  o->add_option("--seed", oe.seed, "Mixture fitting seed")->default_val(0);
  o->add_option("--out", oe.out, "Result JSON")->required();
  o->add_option("--manifest", oe.manifest, "Manifest path");

  RectifyArgs rc;
  auto* r = app.add_subcommand("rectify", "Warp an image and its normals by R(g, e)");
  r->add_option("--image", rc.image, "Input image")->required();
  r->add_option("--normals", rc.normals, "Input normal map")->required();
  r->add_option("--g", rc.g, "Gravity \"x,y,z\"")->required();
  r->add_option("--e", rc.e, "Principle direction \"x,y,z\"")->required();
  r->add_option("--intrinsics", rc.intrinsics, "Intrinsics JSON")->required();
  r->add_option("--interp", rc.interp, "bilinear or nearest")->default_val("bilinear");
  r->add_option("--out", rc.out, "Output directory")->required();
  r->add_option("--manifest", rc.manifest, "Manifest path");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Evaluate predicted normal maps against ground truth");
  e->add_option("--pred", ev.pred, "Predicted normal maps")->required()->expected(1, -1);
  e->add_option("--gt", ev.gt, "Ground-truth normal maps")->required()->expected(1, -1);
  e->add_option("--loss", ev.loss, "l2, al, tal, slant-tilt or satd")->default_val("al");
  e->add_option("--lambda", ev.lambda, "Tilt-direction weight of satd")->default_val(1.0);
  e->add_option("--report", ev.report, "Report JSON")->required();
  e->add_option("--csv", ev.csv, "Per-image CSV");
  e->add_option("--manifest", ev.manifest, "Manifest path");

  RefineArgs rf;
  auto* p = app.add_subcommand("refine-planes", "Refine plane masks by RANSAC and region growing");
  p->add_option("--depth", rf.depth, "Depth PNG (mm)")->required();
  p->add_option("--normals", rf.normals, "Normal map")->required();
  p->add_option("--masks", rf.masks, "Mask files or patterns")->required()->expected(1, -1);
  p->add_option("--intrinsics", rf.intrinsics, "Intrinsics JSON")->required();
  p->add_option("--keep-ratio", rf.keep_ratio, "Keep masks with refined/original above this")->default_val(0.5);
  p->add_option("--inlier-thresh", rf.inlier_thresh, "RANSAC inlier distance, m")->default_val(0.02);
  p->add_option("--dist-thresh", rf.dist_thresh, "Growth distance, m")->default_val(0.20);
  p->add_option("--angle-deg", rf.angle_deg, "Growth normal angle, degrees")->default_val(30.0);
  p->add_option("--iters", rf.iters, "RANSAC iterations")->default_val(500);
  p->add_option("--seed", rf.seed, "RANSAC seed")->default_val(0);
  p->add_option("--out", rf.out, "Output directory")->required();
  p->add_option("--manifest", rf.manifest, "Manifest path");

  GradcheckArgs gc;
  auto* c = app.add_subcommand("gradcheck", "Finite-difference audit of every analytic gradient");
  c->add_option("--trials", gc.trials, "Instances per suite")->default_val(1000);
  c->add_option("--seed", gc.seed, "Seed")->default_val(0);
  c->add_option("--report", gc.report, "Report JSON");
  c->add_option("--manifest", gc.manifest, "Manifest path");
  c->add_flag("--inject-sign-flip", gc.flip, "Negate analytic gradients (audit self-test)")->group("");

  std::string replay_path;
  auto* rp = app.add_subcommand("replay", "Re-run a command from its manifest");
  rp->add_option("manifest", replay_path, "Manifest JSON")->required();

  try {
    app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    app.exit(ex);
    return kExitUsage;
  }

  Run run;
  run.argv = args;
  int code = kExitOk;
  try {
    if (*s) {
      run.command = "synth";
      code = cmd_synth(synth, run);
    } else if (*b) {
      run.command = "build-q";
      code = cmd_build_q(bq, run);
    } else if (*o) {
      run.command = "optimize-e";
      code = cmd_optimize_e(oe, run);
    } else if (*r) {
      run.command = "rectify";
      code = cmd_rectify(rc, run);
    } else if (*e) {
      run.command = "eval";
      code = cmd_eval(ev, run);
    } else if (*p) {
      run.command = "refine-planes";
      code = cmd_refine_planes(rf, run);
    } else if (*c) {
      run.command = "gradcheck";
      code = cmd_gradcheck(gc, run);
    } else {
      return cmd_replay(replay_path);
    }
    run.write();
    return code;
  } catch (const AntipodalDrift& ex) {
    std::cerr << "tilt-rectify: optimizer aborted: " << ex.what() << "\n";
    try {
      run.write();
    } catch (const Error&) {
    }
    return kExitOptimizerAbort;
  } catch (const std::exception& ex) {
    std::cerr << "tilt-rectify " << run.command << ": " << ex.what() << "\n";
    return kExitUsage;
  }
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args);
}

}  // namespace tilt
