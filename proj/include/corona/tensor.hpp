#pragma once

#include <utility>
#include <vector>

#include "corona/cone.hpp"
#include "corona/functions.hpp"
#include "corona/smoothing.hpp"

namespace corona {

/// p -> phi_p: one function on X per vertex of P.
struct FunctionFamily {
  std::string p_ref;
  std::string x_ref;
  std::vector<SampledFunction> slices;
  /// max over vertex pairs of |phi_p - phi_p'|_sup / d_P(p, p').
  double modulus = 0;
  std::pair<Index, Index> modulus_pair{-1, -1};
};

/// Measures the modulus; all slices must share one X.
FunctionFamily make_family(const CompactGraph& P, std::vector<SampledFunction> slices);

/// Slice modulus over X-points with |x| > shell only.
double family_modulus(const FunctionFamily& family, const CompactGraph& P,
                      const SampledSpace& X, double shell);

struct LambdaReport {
  FunctionFamily family;
  double shell_modulus = 0;   // slices compared over |x| > 1
  double C_unit = 0;          // sublinear Higson constant of phi at R = 1
  double C_global = 0;        // sup over pairs of min-norm * ratio
  double margin = 0;          // C_global - shell_modulus
  bool pass = false;
  bool unit_scale_pass = false;  // against C_unit, recorded only
};

/// phi(p, x) sliced along P. The slice modulus outside the unit shell is
/// compared with the global Higson constant of phi on the cone.
LambdaReport lambda(const SampledFunction& phi, const ConeSpace& cone);

/// (p, x) -> phi(p) psi(x).
SampledFunction omega(const SampledFunction& phi, const SampledFunction& psi, const ConeSpace& cone);

struct OmegaRow {
  double R = 0;
  double measured = 0;  // C_Omega(R) over pairs with |x|, |x'| > R
  double bound = 0;     // C_phi |psi| + C_psi(R) |phi|
  double margin = 0;
  bool pass = true;
};

struct OmegaReport {
  double C_phi = 0;
  double psi_norm = 0;
  double phi_norm = 0;
  std::vector<OmegaRow> rows;
  bool pass = true;
};

/// `phi_space` is P as a sampled space (space_from_graph).
OmegaReport omega_bound_check(const SampledFunction& phi, const SampledFunction& psi,
                              const ConeSpace& cone, const SampledSpace& phi_space,
                              std::span<const double> scales, double relative_tolerance = 0.1);

struct RoundtripReport {
  double residual = 0;
  Index terms = 0;
  bool pass = false;
};

/// Lambda(Omega(sum phi_i (x) psi_i)) against sum phi_i(p) psi_i pointwise.
RoundtripReport roundtrip(std::span<const std::pair<SampledFunction, SampledFunction>> terms,
                          const ConeSpace& cone);

struct PsiApproxReport {
  int n = 0;
  double r = 0;
  std::vector<Index> anchors;
  FunctionFamily approximant;
  double error = 0;
  double bound = 0;  // modulus / n
  bool pass = false;
};

/// Psi(psi_n)(p) = sum_i h_i(p) psi(p_i) with h the hat partition of a
/// cover of P by members of diameter < 1/n (r = 1/(4n)).
PsiApproxReport psi_approx(const FunctionFamily& family, const CompactGraph& P, int n);

Json to_json(const OmegaReport& r);
Json to_json(const LambdaReport& r);

}  // namespace corona
