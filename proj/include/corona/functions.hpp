#pragma once

#include <complex>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "corona/spaces.hpp"

namespace corona {

using Complex = std::complex<double>;

/// Bounded complex-valued function on the points of a space.
class SampledFunction {
 public:
  SampledFunction() = default;
  SampledFunction(std::string space_ref, Eigen::VectorXcd values);

  template <class F>
  static SampledFunction tabulate(const MetricSpace& space, F&& f) {
    Eigen::VectorXcd v(space.size());
    for (Index i = 0; i < space.size(); ++i) v[i] = Complex(f(i));
    return SampledFunction(space.ref(), std::move(v));
  }
  static SampledFunction constant(const MetricSpace& space, Complex c);

  const std::string& space_ref() const { return space_ref_; }
  const Eigen::VectorXcd& values() const { return values_; }
  Index size() const { return values_.size(); }
  Complex operator()(Index i) const { return values_[i]; }
  double sup_norm() const { return sup_; }
  /// True when every value has zero imaginary part.
  bool is_real() const { return real_; }

 private:
  std::string space_ref_;
  Eigen::VectorXcd values_;
  double sup_ = 0;
  bool real_ = true;
};

SampledFunction operator+(const SampledFunction& a, const SampledFunction& b);
SampledFunction operator-(const SampledFunction& a, const SampledFunction& b);
SampledFunction operator*(const SampledFunction& a, const SampledFunction& b);
SampledFunction operator*(Complex c, const SampledFunction& a);
SampledFunction conj(const SampledFunction& a);
/// sup |a - b|.
double sup_distance(const SampledFunction& a, const SampledFunction& b);

Json to_json(const SampledFunction& f);
SampledFunction function_from_json(const Json& j);

// Pair sups --------------------------------------------------------------

/// A sup over point pairs and the pair attaining it. Pairs are reported with
/// i < j; among equal values the lexicographically smallest pair wins.
/// `coverage` is the fraction of candidate pairs examined (1 when exact).
struct PairWitness {
  double value = 0;
  Index i = -1;
  Index j = -1;
  double coverage = 1;
};

/// sup over distinct x, x' outside B(R) of R * (|phi(x) - phi(x')| / d(x, x')).
/// Throws EmptyScaleError when fewer than two points lie outside B(R).
PairWitness sublinear_higson_constant(const SampledFunction& phi, const MetricSpace& space,
                                      double R);
/// sup over the same pairs of R * (|phi(x) - phi(x')| / (d(x, x') + 1)).
PairWitness b_hl_constant(const SampledFunction& phi, const MetricSpace& space, double R);

/// The two constants above at many scales in one pass over the pairs.
std::vector<PairWitness> sublinear_higson_profile(const SampledFunction& phi,
                                                  const MetricSpace& space,
                                                  std::span<const double> scales);
std::vector<PairWitness> b_hl_profile(const SampledFunction& phi, const MetricSpace& space,
                                      std::span<const double> scales);

/// sup over R of the sublinear Higson (resp. B_hL) constant: each pair
/// contributes min(|x|, |x'|) times its ratio. A single constant valid at
/// every scale at once.
PairWitness global_higson_constant(const SampledFunction& phi, const MetricSpace& space);
PairWitness global_b_hl_constant(const SampledFunction& phi, const MetricSpace& space);

/// sup over all pairs of |phi(x) - phi(x')| / d(x, x').
PairWitness lipschitz_constant(const SampledFunction& phi, const MetricSpace& space);

// Classical Higson modulus --------------------------------------------------

struct ModulusWitness {
  double value = 0;
  Index center = -1;
  Index i = -1;  // attaining pair inside B(center, r), i <= j
  Index j = -1;
};

/// sup over centers x outside B(R) of diam phi(B(x, r)) with B(x, r) closed.
/// Ties go to the smallest center, then the smallest pair.
ModulusWitness classical_higson_modulus(const SampledFunction& phi, const MetricSpace& space,
                                        double r, double R);
std::vector<ModulusWitness> classical_higson_profile(const SampledFunction& phi,
                                                     const MetricSpace& space, double r,
                                                     std::span<const double> scales);

// Classification ------------------------------------------------------------

enum class HigsonClass { sublinear_higson, classical_higson_only, neither };
std::string to_string(HigsonClass c);

struct ClassifyOptions {
  double slope_threshold = 0.1;
  double modulus_decay = 0.1;
  /// The slope is fitted over this trailing fraction of the scales (at least
  /// three of them).
  double tail_fraction = 0.5;
  /// Ball radius for the classical modulus; <= 0 means twice the mesh.
  double classical_radius = 0;
};

struct HigsonReport {
  std::vector<double> scales;
  std::vector<PairWitness> constants;
  std::vector<ModulusWitness> classical;
  double classical_radius = 0;
  double slope = 0;
  std::size_t slope_from = 0;  // first scale used in the fit
  HigsonClass classification = HigsonClass::neither;
};

/// C(R) and the classical modulus per scale, the log-log slope of C over the
/// trailing scales where C > 0, and the verdict:
///  sublinear_higson      slope <= threshold, or C vanishes at the last scale;
///  classical_higson_only otherwise, if the modulus falls below decay * first;
///  neither               otherwise.
HigsonReport classify(const SampledFunction& phi, const MetricSpace& space,
                      std::span<const double> scales, const ClassifyOptions& options = {});

/// 2^lo, ..., 2^hi.
std::vector<double> dyadic_scales(int lo, int hi);

// Witness families --------------------------------------------------------

struct BumpFamily {
  std::vector<Index> anchors;
  std::vector<SampledFunction> bumps;
};

/// Anchors x_0 (first point with norm >= 4 * mesh) and x_n of least norm with
/// |x_n| > 2|x_{n-1}|; bumps max(0, 1 - 4 d(x, x_n) / |x_n|).
BumpFamily bump_family(const SampledSpace& space, int count);

/// sum_n P(n) phi_n.
SampledFunction psi_P(std::span<const int> selector, const BumpFamily& family);

/// sum_n psi(x_n) phi_n: extends values given on the anchors.
SampledFunction extend_from_anchors(std::span<const Complex> anchor_values,
                                    const BumpFamily& family);

struct GrowthReport {
  std::vector<int> annuli;
  std::vector<double> sups;  // sup of |phi_s - phi_t| per annulus
  double slope = 0;          // against the annulus lower edge 2^k
  bool bounded = false;
};

/// x -> sqrt(s x) on a half-line.
SampledFunction sqrt_function(const SampledSpace& space, double s);
/// x -> exp(i sqrt(s x)).
SampledFunction circle_sqrt_function(const SampledSpace& space, double s);

/// Per-annulus sup of |sqrt(s x) - sqrt(t x)|; bounded iff the final
/// annulus sup is at most 1.05 times the first.
GrowthReport sqrt_difference_growth(double s, double t, const SampledSpace& space);

}  // namespace corona
