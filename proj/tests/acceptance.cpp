// One PASS/FAIL line per acceptance criterion. Exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>

#include "corona/lab.hpp"
#include "corona/tensor.hpp"
#include "oracles.hpp"

using namespace corona;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

Json load(const std::string& name) {
  std::ifstream in(fs::path(CORONA_CONFIG_DIR) / name);
  if (!in) throw InputError("missing config " + name);
  return Json::parse(in);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome oracle_equivalence() {
  const std::vector<double> scales{0.5, 2.0, 5.0};
  int spaces = 0, mismatches = 0;
  Index largest = 0;
  double library_time = 0;
  for (std::uint64_t seed = 100; seed < 124; ++seed) {
    const auto s = oracle::random_space(seed, 500);
    const auto f = oracle::random_function(s, seed * 7 + 3);
    largest = std::max(largest, s.size());
    ++spaces;
    const double r = 2 * s.mesh();
    for (double R : scales) {
      const auto t0 = std::chrono::steady_clock::now();
      const auto hig = sublinear_higson_constant(f, s, R);
      const auto bhl = b_hl_constant(f, s, R);
      const auto cm = classical_higson_modulus(f, s, r, R);
      library_time += seconds_since(t0);
      const auto o1 = oracle::pair_sup(f, s, R, false);
      const auto o2 = oracle::pair_sup(f, s, R, true);
      const auto o3 = oracle::classical(f, s, r, R);
      mismatches += hig.value != o1.value || hig.i != o1.i || hig.j != o1.j;
      mismatches += bhl.value != o2.value || bhl.i != o2.i || bhl.j != o2.j;
      mismatches += cm.value != o3.value || cm.center != o3.center || cm.i != o3.i || cm.j != o3.j;
    }
  }
  return {spaces >= 20 && largest <= 500 && mismatches == 0 && library_time < 10,
          std::to_string(spaces) + " spaces (max " + std::to_string(largest) + " points), " +
              std::to_string(mismatches) + " mismatches, library time " + fmt("%.2f s", library_time)};
}

Outcome witness_family() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto line = build_halfline(16383, 1);
  const auto fam = bump_family(line, 8);
  std::vector<SampledFunction> psis;
  for (int mask = 0; mask < 256; ++mask) {
    std::vector<int> sel(8);
    for (int n = 0; n < 8; ++n) sel[n] = (mask >> n) & 1;
    psis.push_back(psi_P(sel, fam));
  }
  Index off = 0;
  for (std::size_t a = 0; a < psis.size(); ++a)
    for (std::size_t b = a + 1; b < psis.size(); ++b) off += sup_distance(psis[a], psis[b]) != 1.0;
  const auto scales = dyadic_scales(1, 13);
  int sublinear = 0;
  for (const auto& psi : psis) sublinear += classify(psi, line, scales).classification == HigsonClass::sublinear_higson;
  const double t = seconds_since(t0);
  return {line.size() == 16384 && psis.size() == 256 && off == 0 && sublinear == 256 && t < 30,
          std::to_string(line.size()) + " points, " + std::to_string(off) + " pairs off distance 1, " +
              std::to_string(sublinear) + "/256 sublinear_higson, " + fmt("%.1f s", t)};
}

Outcome smoothing_bound() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto res = run_experiment("smooth-verify", load("smooth_noise.json"));
  const double t = seconds_since(t0);
  double worst = 0;
  for (const auto& row : res.tables.at("margins").rows) worst = std::max(worst, row[1].get<double>() / row[2].get<double>());
  const auto& s = res.summary;
  return {res.exit_code == 0 && s["bound_pass"] == true && s["decay_pass"] == true && t < 60,
          "N=" + s["N"].dump() + " D=" + fmt("%.4f", s["D"].get<double>()) + " d=" + s["d"].dump() +
              ", worst C_g/bound " + fmt("%.4f", worst) + ", decay slope " +
              fmt("%.3f", s["decay_slope"].get<double>()) + ", " + fmt("%.1f s", t)};
}

Outcome cone_metric() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto point = run_experiment("cone-distance", load("acceptance_cone_point.json"));
  const auto lower = run_experiment("cone-distance", load("acceptance_cone_lower.json"));
  const double t = seconds_since(t0);
  const auto& ref = point.summary["refinement"];
  const auto& lb = lower.summary["lower_bound"];
  const bool ok = point.exit_code == 0 && lower.exit_code == 0 && point.summary["factor_mismatches"] == 0 &&
                  ref["complete"] == true && ref["monotone"] == true && ref["final_change"].get<double>() < 0.05 &&
                  lb["passed"] == true && lower.summary["vertices"].get<Index>() <= 100'000 && t < 120;
  return {ok, "point factor mismatches " + point.summary["factor_mismatches"].dump() + ", refinement final change " +
                  fmt("%.3g", ref["final_change"].get<double>()) + ", lower bound worst margin " +
                  fmt("%.3g", lb["worst_margin"].get<double>()) + " over " + lb["pairs_checked"].dump() +
                  " pairs (tolerance " + lb["tolerance"].dump() + "), " + fmt("%.1f s", t)};
}

Outcome omega_lambda() {
  const auto res = run_experiment("tensor-check", load("acceptance_tensor.json"));
  const auto& s = res.summary;
  const bool ok = res.exit_code == 0 && res.tables.at("lambda").rows.size() == 25 &&
                  s["roundtrip_residual"].get<double>() <= 1e-12;
  return {ok, "25 products, omega failures " + s["omega_failures"].dump() + " (worst measured/bound " +
                  fmt("%.3f", s["omega_worst_ratio"].get<double>()) + "), lambda failures " +
                  s["lambda_failures"].dump() + ", roundtrip residual " +
                  fmt("%.2g", s["roundtrip_residual"].get<double>())};
}

Outcome psi_approximation() {
  const auto P = build_interval(1.0 / 256);
  const auto X = build_halfline(64, 1);
  const auto psi0 = SampledFunction::tabulate(X, [&](Index x) { return X.norm(x) / (1 + X.norm(x)); });
  auto family = [&](auto h) {
    std::vector<SampledFunction> slices;
    for (Index p = 0; p < P.vertex_count(); ++p) slices.push_back(Complex(h(P.coordinates()(p, 0))) * psi0);
    return make_family(P, std::move(slices));
  };
  const auto linear = family([](double t) { return t; });
  const auto smooth = family([](double t) { return std::sin(std::numbers::pi * t / 2); });
  bool ok = true;
  std::string ratios;
  double prev = kInf;
  for (int n : {4, 8, 16}) {
    const auto lin = psi_approx(linear, P, n);
    ok = ok && lin.error <= linear.modulus / n;
    const auto sm = psi_approx(smooth, P, n);
    if (std::isfinite(prev)) {
      const double ratio = sm.error / prev;
      ok = ok && std::abs(ratio - 0.5) <= 0.05;
      ratios += (ratios.empty() ? "" : ", ") + fmt("%.4f", ratio);
    }
    prev = sm.error;
  }
  return {ok, "halving ratios " + ratios + "; linear family error <= modulus/n at n = 4, 8, 16"};
}

Outcome equivalence() {
  const auto res = run_experiment("equivalence-rn", load("acceptance_equivalence.json"));
  const auto& s = res.summary;
  return {res.exit_code == 0,
          "A_f " + fmt("%.3f", s["f"]["A_lower"].get<double>()) + ", A_g " + fmt("%.3f", s["g"]["A_lower"].get<double>()) +
              ", sphere mesh " + fmt("%.4f", s["sphere_mesh"].get<double>()) + ", composites close " +
              s["f_after_g"]["sublinearly_close"].dump() + "/" + s["g_after_f"]["sublinearly_close"].dump() +
              ", excess over 1 + meshes " + fmt("%.3f", s["fg_excess"].get<double>()) + "/" +
              fmt("%.3f", s["gf_excess"].get<double>())};
}

Outcome discrimination() {
  const auto res = run_experiment("classify-function", load("acceptance_circle_sqrt.json"));
  const double slope = res.summary["slope"].get<double>();
  bool ok = res.exit_code == 0 && std::abs(slope - 0.5) <= 0.1;
  const auto line = build_halfline(8191, 1);
  std::string flags;
  for (const auto& [s, t] : {std::pair{1.0, 1.0}, std::pair{1.0, 4.0}, std::pair{1.0, 1.21}}) {
    const bool bounded = sqrt_difference_growth(s, t, line).bounded;
    ok = ok && bounded == (s == t);
    flags += (flags.empty() ? "" : " ") + std::string(bounded ? "bounded" : "unbounded");
  }
  return {ok, res.summary["classification"].get<std::string>() + " with slope " + fmt("%.4f", slope) +
                  "; growth (1,1) (1,4) (1,1.21): " + flags};
}

Outcome homotopy() {
  bool ok = true;
  std::string detail;
  for (const std::string name : {"scale2", "rotation", "stretch"}) {
    const auto res = run_experiment("homotopy", load("acceptance_homotopy_" + name + ".json"));
    const auto& s = res.summary;
    ok = ok && res.exit_code == 0;
    detail += (detail.empty() ? "" : ", ") + name + " A=" + fmt("%.3f", s["coarse"]["A_lower"].get<double>());
  }
  return {ok, detail + " (all det > 0, endpoints exact)"};
}

Outcome determinism() {
  const std::vector<std::pair<std::string, std::string>> runs{
      {"build-space", "build_grid.json"},       {"cone-distance", "acceptance_cone_point.json"},
      {"classify-function", "classify_constant.json"}, {"smooth-verify", "smooth_noise.json"},
      {"check-map", "map_constant.json"},       {"homotopy", "homotopy_rotation.json"},
      {"equivalence-rn", "equivalence_small.json"},   {"tensor-check", "tensor_small.json"}};
  const auto root = fs::temp_directory_path() / "corona_acceptance_determinism";
  const int before = thread_count();
  int files = 0, differing = 0;
  for (const auto& [sub, file] : runs) {
    const Json c = load(file);
    const auto a = root / (sub + "_a"), b = root / (sub + "_b");
    fs::remove_all(a);
    fs::remove_all(b);
    set_thread_count(1);
    write_outputs(run_experiment(sub, c), sub, c, a);
    set_thread_count(4);
    write_outputs(run_experiment(sub, c), sub, c, b);
    for (const auto& e : fs::directory_iterator(a)) {
      if (e.path().extension() != ".csv") continue;
      ++files;
      differing += slurp(e.path()) != slurp(b / e.path().filename());
    }
  }
  set_thread_count(before);
  fs::remove_all(root);
  return {files > 0 && differing == 0, std::to_string(files) + " CSVs from 8 subcommands at 1 and 4 threads, " +
                                           std::to_string(differing) + " differ"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"oracle equivalence", oracle_equivalence},
      {"witness family", witness_family},
      {"smoothing bound", smoothing_bound},
      {"cone metric", cone_metric},
      {"omega and lambda bounds", omega_lambda},
      {"psi approximation", psi_approximation},
      {"cone over the sphere vs R^2", equivalence},
      {"sqrt discrimination", discrimination},
      {"GL+ homotopy", homotopy},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome out;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      out = criteria[k].second();
    } catch (const std::exception& e) {
      out = {false, std::string("threw: ") + e.what()};
    }
    failed += !out.pass;
    std::printf("%s %2zu %s: %s [%.1f s]\n", out.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(),
                out.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
