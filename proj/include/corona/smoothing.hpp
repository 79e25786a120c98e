#pragma once

#include <vector>

#include "corona/functions.hpp"

namespace corona {

/// Cover by open balls U_a = B(x_a, 2r) around a maximal r-separated net.
struct CoverData {
  double r = 0;
  std::vector<Index> anchors;
  std::vector<std::vector<Index>> members;     // per member, ascending ids
  std::vector<std::vector<Index>> membership;  // per point, ascending member ids
  double lebesgue_L = 0;  // +inf when some member is the whole space
  double diameter_d = 0;
  int degree_N = 0;
};

/// Greedy net by ascending point id. Requires r >= 2 * mesh.
CoverData greedy_net_cover(const MetricSpace& space, double r);

/// pi_a = tau_a / sum tau with tau_a(x) = max(0, 1 - d(x, x_a) / (2r)),
/// stored sparsely per point.
struct PartitionOfUnity {
  struct Term {
    Index member;
    double value;
  };
  std::vector<std::vector<Term>> terms;  // per point, ascending member ids
  double lipschitz_D = 0;
  PairWitness lipschitz_witness;  // pair attaining D
  Index lipschitz_member = -1;
  double min_total = 0;           // min over points of sum tau
  double documented_bound = 0;    // (2N + 1) / (2r * min_total)
};

PartitionOfUnity hat_partition(const CoverData& cover, const MetricSpace& space);

/// g(x) = sum_a pi_a(x) f(x_a).
SampledFunction smooth(const SampledFunction& f, const PartitionOfUnity& pou,
                       const CoverData& cover);

struct AppendixRow {
  double R = 0;
  double C_g = 0;
  double bound = 0;
  double margin = 0;  // allowed - C_g
  bool pass = true;
};

struct AppendixReport {
  double C_f = 0;  // sup over all scales of the B_hL constant of f
  int N = 0;
  double D = 0;
  double d = 0;
  double C_X = 0;
  double bound = 0;  // 4 N D C_f (C_X + 2d)
  std::vector<AppendixRow> rows;
  std::vector<double> skipped_scales;  // R <= 2d
  std::vector<int> annuli;
  std::vector<double> annulus_sups;  // sup |f - g| per annulus above 2d
  double decay_slope = 0;
  bool bound_pass = true;
  bool decay_pass = true;
  bool passed() const { return bound_pass && decay_pass; }
};

struct AppendixOptions {
  double relative_tolerance = 0.1;
  double decay_slope = -0.8;
};

/// For each R > 2d: C_g(R) <= (1 + tol) * 4 N D C_f (C_X + 2d) + mesh. Then
/// the per-annulus sup of |f - g| over full annuli above 2d must vanish or
/// fit a log-log slope <= decay_slope.
AppendixReport verify_appendix_bound(const SampledFunction& f, const SampledFunction& g,
                                     const CoverData& cover, const PartitionOfUnity& pou,
                                     const SampledSpace& space, double C_X,
                                     std::span<const double> scales,
                                     const AppendixOptions& options = {});

/// phi + eta with eta(x) = +-min(1, amplitude / |x|), signs from the hash of
/// the point id.
SampledFunction hash_noise(const MetricSpace& space, std::uint64_t seed, double amplitude);

struct TruncationReport {
  double R = 0;        // smallest dyadic radius with sup_{|x| > R} |f| <= eps
  double error = 0;    // sup |f - f 1_B(R)|
  bool proper = false; // R leaves at least one full annulus outside
  SampledFunction truncated;
};

/// Compactly supported approximation f 1_B(R) of a function vanishing at
/// infinity on the sample.
TruncationReport c0_truncation(const SampledFunction& f, const SampledSpace& space, double eps);

Json to_json(const CoverData& cover);
Json to_json(const PartitionOfUnity& pou);

}  // namespace corona
