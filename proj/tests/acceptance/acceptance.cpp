// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <numbers>
#include <set>
#include <string>

#include "oracles.hpp"
#include "plane_scene.hpp"
#include "tilt/cli.hpp"
#include "tilt/io.hpp"
#include "tilt/losses.hpp"
#include "tilt/metrics.hpp"
#include "tilt/plane_refine.hpp"
#include "tilt/rectifier.hpp"
#include "tilt/synthesis.hpp"
#include "tilt/warping.hpp"

using namespace tilt;

namespace {

constexpr double kDeg = std::numbers::pi / 180;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("FAILED ") + what;
    }
  }
  void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) out += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return out + "'";
}

int run_cli_process(const std::vector<std::string>& args, const std::string& env = "") {
  std::string cmd = env + (env.empty() ? "" : " ") + quote(TILT_CLI_PATH);
  for (const auto& a : args) cmd += " " + quote(a);
  cmd += " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("tilt_acceptance_" + std::to_string(::getpid()) + "_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[(v.size() - 1) / 2];
}

// --- criteria -------------------------------------------------------------

Outcome rotation_correctness() {
  Outcome o;
  Rng rng(101);
  double worst_map = 0, worst_orth = 0, worst_det = 0, worst_oracle = 0;
  long skipped = 0;
  for (int i = 0; i < 100000; ++i) {
    const UnitVec3 g(rng.unit_vector()), e(rng.unit_vector());
    if (g.dot(e) <= -1 + 1e-6) {
      ++skipped;
      continue;
    }
    const Matrix3d r = rotation_between(g, e).matrix();
    worst_map = std::max(worst_map, (r * g.vec() - e.vec()).norm());
    worst_orth = std::max(worst_orth, (r.transpose() * r - Matrix3d::Identity()).cwiseAbs().maxCoeff());
    worst_det = std::max(worst_det, std::abs(r.determinant() - 1));
    worst_oracle = std::max(worst_oracle, (r - oracle::shortest_arc(g.vec(), e.vec())).cwiseAbs().maxCoeff());
  }
  double worst_same = 0;
  for (int i = 0; i < 1000; ++i) {
    const UnitVec3 g(rng.unit_vector());
    worst_same = std::max(worst_same, (rotation_between(g, g).matrix() - Matrix3d::Identity()).cwiseAbs().maxCoeff());
  }
  o.require(worst_map < 1e-9, "|Rg - e| " + fmt("%.2e", worst_map));
  o.require(worst_orth < 1e-9, "|R^T R - I| " + fmt("%.2e", worst_orth));
  o.require(worst_det < 1e-9, "|det R - 1| " + fmt("%.2e", worst_det));
  o.require(worst_same < 1e-12, "R(g,g) - I " + fmt("%.2e", worst_same));
  o.require(worst_oracle < 1e-9, "quaternion oracle " + fmt("%.2e", worst_oracle));
  o.note("max |Rg-e| " + fmt("%.1e", worst_map) + ", |RtR-I| " + fmt("%.1e", worst_orth) + ", |det-1| " +
         fmt("%.1e", worst_det) + ", R(g,g) " + fmt("%.1e", worst_same) + ", near-antipodal skipped " +
         std::to_string(skipped));
  return o;
}

Outcome triangle_sweep() {
  Outcome o;
  Rng rng(102);
  long violations = 0, bound_violations = 0;
  double worst_gap = 0;
  for (int i = 0; i < 1000000; ++i) {
    const UnitVec3 a(oracle::hemisphere(rng.uniform(), rng.uniform()));
    const UnitVec3 b(oracle::hemisphere(rng.uniform(), rng.uniform()));
    const ErrorDecomposition d = slant_tilt_decompose(a, b);
    if (d.d_theta + d.d_phi < d.delta - 1e-9) ++violations;
    worst_gap = std::max(worst_gap, d.delta - (d.d_theta + d.d_phi));
    if (1 - std::cos(d.delta) > d.delta) ++bound_violations;
  }
  // Equal-slant pairs on the great circle of zero slant: the tilt arc is the geodesic.
  double worst_equality = 0, worst_dtheta = 0;
  for (int i = 0; i < 10000; ++i) {
    const double p1 = rng.uniform(-std::numbers::pi, std::numbers::pi);
    const double p2 = p1 + rng.uniform(-std::numbers::pi, std::numbers::pi);
    const UnitVec3 a(std::cos(p1), std::sin(p1), 0), b(std::cos(p2), std::sin(p2), 0);
    const ErrorDecomposition d = slant_tilt_decompose(a, b);
    worst_dtheta = std::max(worst_dtheta, d.d_theta);
    worst_equality = std::max(worst_equality, std::abs(d.d_theta + d.d_phi - d.delta));
  }
  o.require(violations == 0, std::to_string(violations) + " triangle violations");
  o.require(bound_violations == 0, std::to_string(bound_violations) + " 1-cos bound violations");
  o.require(worst_dtheta < 1e-9 && worst_equality < 1e-9, "equality " + fmt("%.2e", worst_equality));
  o.note("1e6 pairs, 0 violations needed (got " + std::to_string(violations) + "), max delta-(dt+dp) " +
         fmt("%.1e", worst_gap) + ", equality residual " + fmt("%.1e", worst_equality));
  return o;
}

Outcome gradient_audit() {
  Outcome o;
  const fs::path dir = scratch_dir("gradcheck");
  const int code = run_cli_process({"gradcheck", "--trials", "1000", "--report", (dir / "g.json").string()});
  o.require(code == 0, "exit code " + std::to_string(code));
  if (fs::exists(dir / "g.json")) {
    const Json r = read_json(dir / "g.json");
    for (const auto& s : r["suites"]) {
      o.require(s["instances"].get<int>() >= 1000, s["name"].get<std::string>() + " instances");
      o.note(s["name"].get<std::string>() + " " + fmt("%.1e", s["max_rel_error"].get<double>()) + "/" +
             fmt("%.0e", s["tolerance"].get<double>()));
    }
    o.require(r["suites"].size() == 6, "six suites");
  } else {
    o.require(false, "report missing");
  }
  fs::remove_all(dir);
  return o;
}

Outcome tal_branches() {
  Outcome o;
  const TalConfig cfg;
  const double v1 = truncated_angular_loss_from_cos(0.5, cfg);
  const double v2 = truncated_angular_loss_from_cos(-0.5, cfg);
  const double v3 = truncated_angular_loss_from_cos(1.0, cfg);
  const double jump0 = std::abs(truncated_angular_loss_from_cos(-1e-300, cfg) - truncated_angular_loss_from_cos(0.0, cfg));
  const double c = 1 - cfg.eps;
  const double jump1 = std::abs(truncated_angular_loss_from_cos(std::nextafter(c, 0.0), cfg) -
                                truncated_angular_loss_from_cos(c, cfg));
  o.require(std::abs(v1 - 1.047198) <= 1e-6, "c=0.5 -> " + fmt("%.7f", v1));
  o.require(std::abs(v2 - 2.070796) <= 1e-6, "c=-0.5 -> " + fmt("%.7f", v2));
  o.require(v3 == 0, "c=1 -> " + fmt("%.3g", v3));
  o.require(jump0 <= 1e-12, "continuity at 0, jump " + fmt("%.2e", jump0));
  o.require(jump1 <= 1e-12, "continuity at 1-eps, jump " + fmt("%.3e", jump1));
  o.note("c=0.5 " + fmt("%.7f", v1) + ", c=-0.5 " + fmt("%.7f", v2) + ", c=1 " + fmt("%g", v3) + ", jump at 0 " +
         fmt("%.1e", jump0) + ", jump at 1-eps " + fmt("%.3e", jump1));
  return o;
}

Outcome shoelace_area() {
  Outcome o;
  const std::array<Vector2d, 4> rect{Vector2d(0, 0), Vector2d(320, 0), Vector2d(320, 240), Vector2d(0, 240)};
  const double a = std::abs(quad_area(rect));
  o.require(a == 76800.0, "rectangle area " + fmt("%.17g", a));
  Rng rng(105);
  double worst = 0;
  for (int i = 0; i < 10000; ++i) {
    std::array<Vector2d, 4> q;
    for (auto& p : q) p = Vector2d(rng.uniform(-640, 640), rng.uniform(-480, 480));
    const double ref = oracle::triangulated_area(q);
    worst = std::max(worst, std::abs(quad_area(q) - ref) / std::abs(ref));
  }
  o.require(worst < 1e-9, "random quads rel err " + fmt("%.2e", worst));
  o.note("rectangle " + fmt("%.1f", a) + ", 1e4 quads max rel err " + fmt("%.1e", worst));
  return o;
}

Outcome warping_round_trip() {
  Outcome o;
  const SceneSpec spec;
  const Render up = render_upright(spec);
  Rng rng(106);
  std::vector<double> angles{45};
  for (int i = 0; i < 5; ++i) angles.push_back(rng.uniform(5, 45));
  for (double deg : angles) {
    const auto t0 = std::chrono::steady_clock::now();
    const Rotation3 r = axis_angle<double>(rng.unit_vector(), deg * kDeg);
    const NormalWarp there = warp_normal_map(up.normals, r, spec.k, Interpolation::bilinear);
    const NormalWarp back = warp_normal_map(there.normals, r.transpose(), spec.k, Interpolation::bilinear);
    std::vector<double> err;
    long under = 0;
    for (std::size_t i = 0; i < up.normals.normals.size(); ++i) {
      if (!back.normals.valid[i] || !up.normals.valid[i]) continue;
      err.push_back(oracle::angle_between(back.normals.normals[i], up.normals.normals[i]) / kDeg);
      under += err.back() < 2.0;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (err.empty()) {
      o.require(false, fmt("%.1f deg: no doubly-visible pixels", deg));
      continue;
    }
    const double med = median_of(err), frac = double(under) / double(err.size());
    o.require(med < 0.5, fmt("%.1f deg median", deg) + fmt(" %.3f", med));
    o.require(frac >= 0.99, fmt("%.1f deg under-2", deg) + fmt(" %.4f", frac));
    o.require(secs < 10, fmt("%.1f deg runtime", deg) + fmt(" %.1f s", secs));
    o.note(fmt("%.1f deg: median ", deg) + fmt("%.3f", med) + fmt(", <2deg %.4f", frac));
  }
  return o;
}

Outcome rectifier_case(const std::string& label, const Rotation3& tilt, const SphericalHistogram& q,
                       const SceneSpec& spec) {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const Render tilted = render(spec, tilt);
  const std::vector<UnitVec3> sample = tilted.normals.valid_normals();
  RectificationProblem pb;
  pb.g = UnitVec3(tilt * upright_gravity().vec());
  pb.q = q;
  pb.k = spec.k;
  pb.p = fit_gmm(sample, 5, 0);
  const RectifierResult res = optimize_e(pb, pb.g, RectifierConfig{});
  pb.lambda_e = RectifierConfig{}.lambda_e;
  const UnitVec3 e_gt = upright_gravity();
  const double kl_final = kl_term(pb, res.e_star), kl_gt = kl_term(pb, e_gt);
  std::vector<int> top_rect = top_bins(rectified_histogram(sample, pb.g, res.e_star, q.binning, q.floor), 5);
  std::vector<int> top_up = top_bins(q, 5);
  const std::set<int> a(top_rect.begin(), top_rect.end()), b(top_up.begin(), top_up.end());
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  o.require(kl_final <= 1.05 * kl_gt, label + " KL " + fmt("%.5g", kl_final) + " vs gt " + fmt("%.5g", kl_gt));
  o.require(a == b, label + " top-5 bins differ");
  o.require(secs < 120, label + " runtime " + fmt("%.1f s", secs));
  o.note(label + ": KL " + fmt("%.5g", kl_final) + " (gt " + fmt("%.5g", kl_gt) + "), e* off gt by " +
         fmt("%.3f deg", oracle::angle_between(res.e_star.vec(), e_gt.vec()) / kDeg) + ", " + fmt("%.1f s", secs));
  return o;
}

Outcome rectifier_recovery() {
  // Wide field of view so that all five room faces stay in view at 20 deg pitch.
  SceneSpec spec;
  spec.k = CameraIntrinsics{150, 150, 159.5, 119.5, 320, 240};
  const SphericalHistogram q = histogram_from_normals(render_upright(spec).normals.valid_normals());
  Outcome o;
  for (const auto& [label, r] :
       {std::pair{std::string("roll 30"), axis_angle<double>(Vector3d::UnitZ(), 30 * kDeg)},
        std::pair{std::string("pitch 20"), axis_angle<double>(Vector3d::UnitX(), 20 * kDeg)}}) {
    const Outcome c = rectifier_case(label, r, q, spec);
    o.pass = o.pass && c.pass;
    o.note(c.detail);
  }
  return o;
}

Outcome pipeline_oracle() {
  Outcome o;
  const SceneSpec spec;
  constexpr int kBorder = 2;
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const Rotation3 tilt = random_rotation(45 * kDeg, 45 * kDeg, seed);
    const Render tilted = render(spec, tilt);
    const UnitVec3 g(tilt * upright_gravity().vec());
    for (const UnitVec3& e : {upright_gravity(), UnitVec3(0.1, 1, 0.1)}) {
      const Rotation3 rect = rotation_between(g, e);
      const NormalEstimator oracle_estimator = [&](const ImageGrid&) { return render(spec, rect * tilt).normals; };
      const NormalMap out = rectify_estimate_unrectify(tilted.image, g, e, spec.k, oracle_estimator);
      std::vector<double> err;
      for (int v = kBorder; v < spec.k.height - kBorder; ++v) {
        for (int u = kBorder; u < spec.k.width - kBorder; ++u) {
          if (out.is_valid(u, v) && tilted.normals.is_valid(u, v)) {
            err.push_back(oracle::angle_between(out.at(u, v), tilted.normals.at(u, v)) / kDeg);
          }
        }
      }
      const std::string label = "seed " + std::to_string(seed) + (e.vec() == upright_gravity().vec() ? " e_gt" : " e_off");
      if (err.empty()) {
        o.require(false, label + " no valid pixels");
        continue;
      }
      const double med = median_of(err);
      o.require(med < 0.5, label + " median " + fmt("%.3f", med));
      o.note(label + " " + fmt("%.3f deg", med));
    }
  }
  return o;
}

Outcome metrics_oracle() {
  Outcome o;
  const EvalSummary s = summarize(std::vector<double>{0.0, 10 * kDeg, 20 * kDeg});
  o.require(std::abs(s.mean - 10) < 1e-12 && std::abs(s.median - 10) < 1e-12, "{0,10,20} mean/median");
  o.require(s.below[2] == 2.0 / 3.0, "{0,10,20} below(11.25)");
  Rng rng(109);
  long mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> deg(1 + rng.index(200)), rad;
    for (double& d : deg) d = double(rng.index(91));
    for (double d : deg) rad.push_back(d * kDeg);
    const EvalSummary e = summarize(rad);
    const oracle::NaiveSummary n = oracle::naive_summary(deg);
    bool same = std::abs(e.mean - n.mean) < 1e-9 && std::abs(e.median - n.median) < 1e-12 &&
                std::abs(e.rmse - n.rmse) < 1e-9;
    for (int t = 0; t < 5; ++t) same = same && e.below[t] == n.below[t];
    mismatches += !same;
  }
  long non_monotone = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> e(1 + rng.index(100));
    for (double& x : e) x = rng.uniform(0, 40 * kDeg);
    const EvalSummary r = summarize(e);
    for (int t = 1; t < 5; ++t) non_monotone += r.below[t - 1] > r.below[t];
  }
  o.require(mismatches == 0, std::to_string(mismatches) + " naive mismatches");
  o.require(non_monotone == 0, std::to_string(non_monotone) + " monotonicity violations");
  o.note("{0,10,20}: mean " + fmt("%.12g", s.mean) + ", median " + fmt("%.12g", s.median) + ", below(11.25) " +
         fmt("%.6f", s.below[2]) + "; 1e3 integer batches, " + std::to_string(mismatches) + " mismatches; 1e3 batches, " +
         std::to_string(non_monotone) + " monotonicity violations");
  return o;
}

Outcome plane_refinement() {
  Outcome o;
  const scene::PlaneScene s = scene::make_plane_scene(0.01, 2 * kDeg, 110);
  const Mask masks[] = {scene::bleeding_floor_mask(s, 0.3), s.clutter};
  RefineConfig cfg;
  cfg.inlier_thresh = 0.02;
  cfg.dist_thresh = 0.20;
  cfg.angle_thresh = 30 * kDeg;
  cfg.keep_ratio = 0.5;
  const RefineResult r = refine_masks(masks, s.depth, s.normals, s.k, cfg);
  o.require(r.outcomes.size() == 2, "two outcomes");
  if (r.outcomes.size() != 2) return o;
  o.require(r.outcomes[0].kept && !r.kept.empty(), "bleeding floor mask kept");
  const double iou = r.kept.empty() ? 0.0 : scene::iou(r.kept[0], s.floor);
  o.require(iou >= 0.95, "IoU " + fmt("%.4f", iou));
  o.require(!r.outcomes[1].kept, "misaligned mask discarded");
  o.note("IoU " + fmt("%.4f", iou) + ", misaligned mask refined/original " +
         fmt("%.3f", double(r.outcomes[1].refined_pixels) / double(std::max<long>(1, r.outcomes[1].original_pixels))) +
         (r.outcomes[1].kept ? " kept" : " discarded"));
  return o;
}

Outcome cli_determinism() {
  Outcome o;
  const fs::path dir = scratch_dir("determinism");
  const auto p = [&](const std::string& n) { return (dir / n).string(); };
  const auto step = [&](const std::string& what, const std::vector<std::string>& args) {
    const int code = run_cli_process(args);
    o.require(code == 0, what + " exit " + std::to_string(code));
  };

  step("synth", {"synth", "--count", "2", "--seed", "5", "--out", p("synth")});
  step("build-q", {"build-q", "--normals", p("synth/upright_normals.png"), "--out", p("q.json")});
  Json items;
  try {
    items = read_json(p("synth/manifest.json"))["items"];
  } catch (const Error& e) {
    o.require(false, e.what());
    fs::remove_all(dir);
    return o;
  }
  const auto vec_arg = [](const Json& v) {
    return fmt("%.17g", v[0].get<double>()) + "," + fmt("%.17g", v[1].get<double>()) + "," + fmt("%.17g", v[2].get<double>());
  };
  const std::string g = vec_arg(items[0]["g"]);
  step("optimize-e", {"optimize-e", "--image", p("synth/sample_0000_image.png"), "--normals",
                      p("synth/sample_0000_normals.png"), "--gravity", g, "--q", p("q.json"), "--k",
                      p("synth/intrinsics.json"), "--out", p("e.json")});
  std::string e = "0,1,0";
  if (fs::exists(p("e.json"))) e = vec_arg(read_json(p("e.json"))["e_star"]);
  step("rectify", {"rectify", "--image", p("synth/sample_0000_image.png"), "--normals",
                   p("synth/sample_0000_normals.png"), "--g", g, "--e", e, "--intrinsics", p("synth/intrinsics.json"),
                   "--out", p("rect")});
  step("eval", {"eval", "--pred", p("synth/sample_*_normals.png"), "--gt", p("synth/upright_normals.png"),
                p("synth/upright_normals.png"), "--loss", "satd", "--report", p("eval.json"), "--csv", p("eval.csv")});
  const scene::PlaneScene sc = scene::make_plane_scene(0.01, 2 * kDeg, 111);
  write_depth_map(sc.depth, p("depth.png"));
  write_normal_map(sc.normals, p("normals.png"));
  write_intrinsics(sc.k, p("k.json"));
  write_mask(scene::bleeding_floor_mask(sc, 0.3), p("mask_floor.png"));
  write_mask(sc.clutter, p("mask_clutter.png"));
  step("refine-planes", {"refine-planes", "--depth", p("depth.png"), "--normals", p("normals.png"), "--masks",
                         p("mask_*.png"), "--intrinsics", p("k.json"), "--out", p("planes")});
  step("gradcheck", {"gradcheck", "--trials", "200", "--report", p("gradcheck.json")});

  const std::vector<std::pair<std::string, std::string>> manifests{
      {"synth", p("synth/manifest.json")},          {"build-q", p("q.json.manifest.json")},
      {"optimize-e", p("e.json.manifest.json")},     {"rectify", p("rect/manifest.json")},
      {"eval", p("eval.json.manifest.json")},         {"refine-planes", p("planes/manifest.json")},
      {"gradcheck", p("gradcheck.json.manifest.json")}};
  long files = 0;
  for (const auto& [name, manifest] : manifests) {
    if (!fs::exists(manifest)) {
      o.require(false, name + " manifest missing");
      continue;
    }
    std::vector<std::pair<std::string, std::string>> first;
    const Json recorded = read_json(manifest);
    for (const auto& out : recorded["outputs"]) {
      const std::string path = out["path"].get<std::string>();
      first.emplace_back(path, file_sha256(path));
      o.require(first.back().second == out["sha256"].get<std::string>(), name + " manifest hash of " + path);
    }
    // Replay on a single worker thread; results must not depend on the thread count.
    const int code = run_cli_process({"replay", manifest}, "TILT_RECTIFY_THREADS=1");
    o.require(code == 0, name + " replay exit " + std::to_string(code));
    long differing = 0;
    for (const auto& [path, hash] : first) {
      differing += !fs::exists(path) || file_sha256(path) != hash;
      ++files;
    }
    o.require(differing == 0, name + ": " + std::to_string(differing) + " outputs differ");
    o.require(!first.empty(), name + " has no outputs");
  }
  o.note(std::to_string(manifests.size()) + " commands, " + std::to_string(files) +
         " output files re-hashed after single-thread replay");
  fs::remove_all(dir);
  return o;
}

struct Criterion {
  int id;
  const char* name;
  double limit_s;
  std::function<Outcome()> check;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "rotation correctness", 5, rotation_correctness},
      {2, "slant/tilt triangle sweep", 30, triangle_sweep},
      {3, "gradient audit", 60, gradient_audit},
      {4, "truncated angular loss branches", 0, tal_branches},
      {5, "shoelace area", 0, shoelace_area},
      {6, "warping round trip", 0, warping_round_trip},
      {7, "rectifier recovery", 240, rectifier_recovery},
      {8, "rectify-estimate-unrectify pipeline", 0, pipeline_oracle},
      {9, "metrics oracle", 0, metrics_oracle},
      {10, "plane refinement", 10, plane_refinement},
      {11, "CLI determinism", 0, cli_determinism},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& ex) {
      o.require(false, std::string("exception: ") + ex.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.limit_s > 0) o.require(secs < c.limit_s, "runtime limit " + fmt("%.0f s", c.limit_s));
    failures += !o.pass;
    std::printf("criterion %2d %s  %s (%.2f s): %s\n", c.id, o.pass ? "PASS" : "FAIL", c.name, secs, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("acceptance: %d of %zu criteria passed\n", int(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
