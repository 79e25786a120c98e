#include "corona/functions.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace corona {

SampledFunction::SampledFunction(std::string space_ref, Eigen::VectorXcd values)
    : space_ref_(std::move(space_ref)), values_(std::move(values)) {
  for (Index i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i].real()) || !std::isfinite(values_[i].imag())) {
      throw InputError("function values must be finite");
    }
    sup_ = std::max(sup_, std::abs(values_[i]));
    if (values_[i].imag() != 0) real_ = false;
  }
}

SampledFunction SampledFunction::constant(const MetricSpace& space, Complex c) {
  return SampledFunction(space.ref(), Eigen::VectorXcd::Constant(space.size(), c));
}

namespace {

void require_same(const SampledFunction& a, const SampledFunction& b) {
  if (a.space_ref() != b.space_ref() || a.size() != b.size()) {
    throw InputError("functions live on different spaces");
  }
}

void require_on(const SampledFunction& f, const MetricSpace& space) {
  if (f.size() != space.size()) throw InputError("function does not match the space size");
}

}  // namespace

SampledFunction operator+(const SampledFunction& a, const SampledFunction& b) {
  require_same(a, b);
  return SampledFunction(a.space_ref(), a.values() + b.values());
}

SampledFunction operator-(const SampledFunction& a, const SampledFunction& b) {
  require_same(a, b);
  return SampledFunction(a.space_ref(), a.values() - b.values());
}

SampledFunction operator*(const SampledFunction& a, const SampledFunction& b) {
  require_same(a, b);
  return SampledFunction(a.space_ref(), a.values().cwiseProduct(b.values()));
}

SampledFunction operator*(Complex c, const SampledFunction& a) {
  return SampledFunction(a.space_ref(), c * a.values());
}

SampledFunction conj(const SampledFunction& a) {
  return SampledFunction(a.space_ref(), a.values().conjugate());
}

double sup_distance(const SampledFunction& a, const SampledFunction& b) {
  require_same(a, b);
  return (a.values() - b.values()).cwiseAbs().maxCoeff();
}

Json to_json(const SampledFunction& f) {
  Json values = Json::array();
  for (Index i = 0; i < f.size(); ++i) values.push_back({f(i).real(), f(i).imag()});
  return {{"space_ref", f.space_ref()}, {"values", std::move(values)}};
}

SampledFunction function_from_json(const Json& j) {
  const auto& values = j.at("values");
  Eigen::VectorXcd v(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = Complex(values[i].at(0).get<double>(), values[i].at(1).get<double>());
  }
  return SampledFunction(j.at("space_ref").get<std::string>(), std::move(v));
}

// Pair sups --------------------------------------------------------------

namespace {

enum class Ratio { higson, bounded };
enum class Weight { scales, min_norm, one };

struct Best {
  double v = -1;
  Index i = -1;
  Index j = -1;
  void offer(double value, Index a, Index b) {
    if (value > v || (value == v && (a < i || (a == i && b < j)))) {
      v = value;
      i = a;
      j = b;
    }
  }
};

class PairScan {
 public:
  PairScan(const SampledFunction& phi, const MetricSpace& space, Ratio ratio, Weight weight,
           std::span<const double> scales)
      : phi_(phi), space_(space), ratio_(ratio), weight_(weight), scales_(scales),
        norms_(space.norms()) {}

  std::vector<PairWitness> run() {
    require_on(phi_, space_);
    for (std::size_t s = 0; s < scales_.size(); ++s) {
      if (!(scales_[s] > 0)) throw InputError("scales must be positive");
      if (s > 0 && !(scales_[s] > scales_[s - 1])) throw InputError("scales must increase");
    }
    const double floor = weight_ == Weight::scales ? scales_.front() : -1.0;
    std::vector<Index> ids;
    for (Index x = 0; x < space_.size(); ++x)
      if (norms_[x] > floor) ids.push_back(x);
    if (weight_ == Weight::scales) {
      for (double R : scales_) {
        const auto outside = std::count_if(ids.begin(), ids.end(), [&](Index x) { return norms_[x] > R; });
        if (outside < 2) {
          throw EmptyScaleError("fewer than two points outside B(" + std::to_string(R) + ")");
        }
      }
    } else if (ids.size() < 2) {
      throw EmptyScaleError("fewer than two points");
    }
    const std::size_t slots = weight_ == Weight::scales ? scales_.size() : 1;
    std::vector<Best> best(slots);
    double coverage = 1;
    const Index m = static_cast<Index>(ids.size());
    if (m <= kDenseLimit) {
      scan_all(ids, best);
    } else if (space_.is_line() && ratio_ == Ratio::higson) {
      scan_adjacent(ids, best);
    } else {
      coverage = scan_stratified(ids, best);
    }
    std::vector<PairWitness> out;
    for (const auto& b : best) out.push_back({b.v, b.i, b.j, coverage});
    return out;
  }

 private:
  double diff(Index a, Index b) const {
    const Complex z = phi_(a) - phi_(b);
    return phi_.is_real() ? std::abs(z.real()) : std::abs(z);
  }

  void offer(std::vector<Best>& best, Index a, Index b, double d) const {
    if (!(d > 0)) return;
    const double q = ratio_ == Ratio::higson ? diff(a, b) / d : diff(a, b) / (d + 1.0);
    const double mn = std::min(norms_[a], norms_[b]);
    if (a > b) std::swap(a, b);
    switch (weight_) {
      case Weight::one:
        best[0].offer(q, a, b);
        break;
      case Weight::min_norm:
        best[0].offer(mn * q, a, b);
        break;
      case Weight::scales:
        for (std::size_t s = 0; s < scales_.size() && scales_[s] < mn; ++s)
          best[s].offer(scales_[s] * q, a, b);
        break;
    }
  }

  static void merge(std::vector<Best>& into, const std::vector<Best>& from) {
    for (std::size_t s = 0; s < into.size(); ++s)
      if (from[s].i >= 0) into[s].offer(from[s].v, from[s].i, from[s].j);
  }

  void scan_all(const std::vector<Index>& ids, std::vector<Best>& best) const {
    const Index m = static_cast<Index>(ids.size());
    std::vector<std::vector<Best>> local(static_cast<std::size_t>(std::max(1, chunk_count(m))),
                                         std::vector<Best>(best.size()));
    parallel_chunks(m, [&](Index begin, Index end, int chunk) {
      std::vector<double> row(static_cast<std::size_t>(m));
      auto& mine = local[chunk];
      for (Index k = begin; k < end; ++k) {
        const std::span<const Index> targets(ids.data() + k + 1, static_cast<std::size_t>(m - k - 1));
        space_.distances(ids[k], targets, std::span<double>(row.data(), targets.size()));
        for (std::size_t t = 0; t < targets.size(); ++t) offer(mine, ids[k], targets[t], row[t]);
      }
    });
    for (const auto& l : local) merge(best, l);
  }

  // On a line the sup of |df|/d over all pairs is attained by adjacent pairs,
  // and so is the lexicographically smallest maximizer.
  void scan_adjacent(const std::vector<Index>& ids, std::vector<Best>& best) const {
    for (std::size_t k = 0; k + 1 < ids.size(); ++k)
      offer(best, ids[k], ids[k + 1], space_.distance(ids[k], ids[k + 1]));
  }

  // Rows drawn per dyadic annulus in proportion to its size, each row paired
  // with every candidate. Returns the fraction of pairs examined.
  double scan_stratified(const std::vector<Index>& ids, std::vector<Best>& best) const {
    const Index m = static_cast<Index>(ids.size());
    std::map<int, std::vector<Index>> strata;
    for (Index x : ids) strata[annulus_index(norms_[x])].push_back(x);
    std::vector<Index> rows;
    for (auto& [k, members] : strata) {
      const auto quota = static_cast<std::size_t>(
          std::ceil(static_cast<double>(members.size()) * kDenseLimit / static_cast<double>(m)));
      std::sort(members.begin(), members.end(), [](Index a, Index b) {
        const auto ha = mix64(0x57a7, static_cast<std::uint64_t>(a));
        const auto hb = mix64(0x57a7, static_cast<std::uint64_t>(b));
        return ha != hb ? ha < hb : a < b;
      });
      rows.insert(rows.end(), members.begin(), members.begin() + std::min(quota, members.size()));
    }
    std::sort(rows.begin(), rows.end());
    const Index rc = static_cast<Index>(rows.size());
    std::vector<std::vector<Best>> local(static_cast<std::size_t>(std::max(1, chunk_count(rc))),
                                         std::vector<Best>(best.size()));
    parallel_chunks(rc, [&](Index begin, Index end, int chunk) {
      std::vector<double> row(static_cast<std::size_t>(m));
      for (Index k = begin; k < end; ++k) {
        space_.distances(rows[k], ids, row);
        for (Index t = 0; t < m; ++t)
          if (ids[t] != rows[k]) offer(local[chunk], rows[k], ids[t], row[t]);
      }
    });
    for (const auto& l : local) merge(best, l);
    const double total = 0.5 * static_cast<double>(m) * static_cast<double>(m - 1);
    const double rest = static_cast<double>(m - rc);
    return (total - 0.5 * rest * (rest - 1)) / total;
  }

  const SampledFunction& phi_;
  const MetricSpace& space_;
  Ratio ratio_;
  Weight weight_;
  std::span<const double> scales_;
  const std::vector<double>& norms_;
};

}  // namespace

PairWitness sublinear_higson_constant(const SampledFunction& phi, const MetricSpace& space,
                                      double R) {
  return sublinear_higson_profile(phi, space, std::span<const double>(&R, 1)).front();
}

PairWitness b_hl_constant(const SampledFunction& phi, const MetricSpace& space, double R) {
  return b_hl_profile(phi, space, std::span<const double>(&R, 1)).front();
}

std::vector<PairWitness> sublinear_higson_profile(const SampledFunction& phi,
                                                  const MetricSpace& space,
                                                  std::span<const double> scales) {
  if (scales.empty()) return {};
  return PairScan(phi, space, Ratio::higson, Weight::scales, scales).run();
}

std::vector<PairWitness> b_hl_profile(const SampledFunction& phi, const MetricSpace& space,
                                      std::span<const double> scales) {
  if (scales.empty()) return {};
  return PairScan(phi, space, Ratio::bounded, Weight::scales, scales).run();
}

PairWitness global_higson_constant(const SampledFunction& phi, const MetricSpace& space) {
  return PairScan(phi, space, Ratio::higson, Weight::min_norm, {}).run().front();
}

PairWitness global_b_hl_constant(const SampledFunction& phi, const MetricSpace& space) {
  return PairScan(phi, space, Ratio::bounded, Weight::min_norm, {}).run().front();
}

PairWitness lipschitz_constant(const SampledFunction& phi, const MetricSpace& space) {
  return PairScan(phi, space, Ratio::higson, Weight::one, {}).run().front();
}

// Classical modulus ------------------------------------------------------

std::vector<ModulusWitness> classical_higson_profile(const SampledFunction& phi,
                                                     const MetricSpace& space, double r,
                                                     std::span<const double> scales) {
  require_on(phi, space);
  if (r < space.mesh()) throw PreconditionError("classical radius must be at least the mesh");
  const Index n = space.size();
  const auto& norms = space.norms();
  const auto balls = radius_neighbors(space, r);
  std::vector<ModulusWitness> per_center(static_cast<std::size_t>(n));
  parallel_chunks(n, [&](Index begin, Index end, int) {
    for (Index x = begin; x < end; ++x) {
      const auto& ball = balls[x];
      ModulusWitness w{-1, x, -1, -1};
      for (std::size_t a = 0; a < ball.size(); ++a)
        for (std::size_t b = a; b < ball.size(); ++b) {
          const double v = std::abs(phi(ball[a]) - phi(ball[b]));
          if (v > w.value) {
            w.value = v;
            w.i = ball[a];
            w.j = ball[b];
          }
        }
      per_center[x] = w;
    }
  });
  std::vector<ModulusWitness> out;
  for (double R : scales) {
    ModulusWitness best{-1, -1, -1, -1};
    for (Index x = 0; x < n; ++x)
      if (norms[x] > R && per_center[x].value > best.value) best = per_center[x];
    if (best.center < 0) throw EmptyScaleError("no centers outside B(" + std::to_string(R) + ")");
    out.push_back(best);
  }
  return out;
}

ModulusWitness classical_higson_modulus(const SampledFunction& phi, const MetricSpace& space,
                                        double r, double R) {
  return classical_higson_profile(phi, space, r, std::span<const double>(&R, 1)).front();
}

// Classification ---------------------------------------------------------

std::string to_string(HigsonClass c) {
  switch (c) {
    case HigsonClass::sublinear_higson:
      return "sublinear_higson";
    case HigsonClass::classical_higson_only:
      return "classical_higson_only";
    case HigsonClass::neither:
      return "neither";
  }
  return "neither";
}

std::vector<double> dyadic_scales(int lo, int hi) {
  std::vector<double> s;
  for (int k = lo; k <= hi; ++k) s.push_back(std::ldexp(1.0, k));
  return s;
}

HigsonReport classify(const SampledFunction& phi, const MetricSpace& space,
                      std::span<const double> scales, const ClassifyOptions& options) {
  if (scales.size() < 3 || scales.back() < 4 * scales.front()) {
    throw InputError("classify needs at least 3 scales spanning 2 octaves");
  }
  HigsonReport rep;
  rep.scales.assign(scales.begin(), scales.end());
  rep.classical_radius = options.classical_radius > 0 ? options.classical_radius : 2 * space.mesh();
  rep.constants = sublinear_higson_profile(phi, space, scales);
  rep.classical = classical_higson_profile(phi, space, rep.classical_radius, scales);
  std::vector<double> c;
  for (const auto& w : rep.constants) c.push_back(w.value);
  const std::size_t m = rep.scales.size();
  const auto tail = std::max<std::size_t>(
      3, static_cast<std::size_t>(std::ceil(options.tail_fraction * static_cast<double>(m))));
  rep.slope_from = m - std::min(m, tail);
  rep.slope = loglog_slope(std::span<const double>(rep.scales).subspan(rep.slope_from),
                           std::span<const double>(c).subspan(rep.slope_from));
  const bool finite = std::isfinite(c.back());
  if (finite && (rep.slope <= options.slope_threshold || c.back() == 0)) {
    rep.classification = HigsonClass::sublinear_higson;
  } else if (rep.classical.back().value < options.modulus_decay * rep.classical.front().value) {
    rep.classification = HigsonClass::classical_higson_only;
  } else {
    rep.classification = HigsonClass::neither;
  }
  return rep;
}

// Witness families -------------------------------------------------------

BumpFamily bump_family(const SampledSpace& space, int count) {
  if (count < 1) throw InputError("bump family needs count >= 1");
  const auto& norms = space.norms();
  std::vector<Index> order(static_cast<std::size_t>(space.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return norms[a] < norms[b]; });
  BumpFamily fam;
  double threshold = 4 * space.mesh();
  bool strict = false;
  for (Index x : order) {
    if (static_cast<int>(fam.anchors.size()) == count) break;
    if (strict ? norms[x] > threshold : norms[x] >= threshold) {
      fam.anchors.push_back(x);
      threshold = 2 * norms[x];
      strict = true;
    }
  }
  if (static_cast<int>(fam.anchors.size()) < count) {
    throw ConstructionError("space has room for only " + std::to_string(fam.anchors.size()) +
                            " bumps");
  }
  std::vector<Index> all(static_cast<std::size_t>(space.size()));
  std::iota(all.begin(), all.end(), Index{0});
  std::vector<double> row(all.size());
  for (Index a : fam.anchors) {
    space.distances(a, all, row);
    Eigen::VectorXcd v(space.size());
    for (Index x = 0; x < space.size(); ++x) v[x] = std::max(0.0, 1.0 - 4.0 * row[x] / norms[a]);
    fam.bumps.emplace_back(space.ref(), std::move(v));
  }
  return fam;
}

SampledFunction psi_P(std::span<const int> selector, const BumpFamily& family) {
  if (selector.size() != family.bumps.size()) {
    throw InputError("selector length must equal the family size");
  }
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(family.bumps.front().size());
  for (std::size_t n = 0; n < selector.size(); ++n) {
    if (selector[n] != 0 && selector[n] != 1) throw InputError("selector entries must be 0 or 1");
    if (selector[n] == 1) v += family.bumps[n].values();
  }
  return SampledFunction(family.bumps.front().space_ref(), std::move(v));
}

SampledFunction extend_from_anchors(std::span<const Complex> anchor_values,
                                    const BumpFamily& family) {
  if (anchor_values.size() != family.bumps.size()) {
    throw InputError("one value per anchor is required");
  }
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(family.bumps.front().size());
  for (std::size_t n = 0; n < anchor_values.size(); ++n) v += anchor_values[n] * family.bumps[n].values();
  return SampledFunction(family.bumps.front().space_ref(), std::move(v));
}

SampledFunction sqrt_function(const SampledSpace& space, double s) {
  if (!(s > 0)) throw InputError("s must be positive");
  return SampledFunction::tabulate(space, [&](Index x) { return std::sqrt(s * space.norm(x)); });
}

SampledFunction circle_sqrt_function(const SampledSpace& space, double s) {
  if (!(s > 0)) throw InputError("s must be positive");
  return SampledFunction::tabulate(
      space, [&](Index x) { return std::polar(1.0, std::sqrt(s * space.norm(x))); });
}

GrowthReport sqrt_difference_growth(double s, double t, const SampledSpace& space) {
  if (!(s > 0) || !(t > 0)) throw InputError("s and t must be positive");
  GrowthReport rep;
  std::vector<double> edges;
  for (const auto& [k, members] : space.annuli()) {
    double sup = 0;
    for (Index x : members) {
      const double nx = space.norm(x);
      sup = std::max(sup, std::abs(std::sqrt(s * nx) - std::sqrt(t * nx)));
    }
    rep.annuli.push_back(k);
    rep.sups.push_back(sup);
    edges.push_back(std::ldexp(1.0, k));
  }
  if (rep.sups.empty()) throw EmptyScaleError("space has no annuli");
  rep.slope = loglog_slope(edges, rep.sups);
  rep.bounded = rep.sups.back() <= 1.05 * rep.sups.front();
  return rep;
}

}  // namespace corona
