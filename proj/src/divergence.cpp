#include "r2vpo/divergence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "r2vpo/errors.hpp"

namespace r2vpo::divergence {

namespace {

constexpr double kQuadratureHalfWidth = 12.0;
constexpr double kQuadratureAbsTol = 1e-10;
// Roundoff in f near u = 1 floors the attainable relative error near 1e-12.
constexpr double kQuadratureRelTol = 1e-10;
constexpr unsigned kQuadratureMaxDepth = 12;

// f'(1). Subtracting f'(1)(u - 1) leaves every divergence unchanged because
// E_q[u - 1] = 0, and removes the first-order cancellation from quadrature.
double first_derivative_at_one(Kind kind) {
  switch (kind) {
    case Kind::kReverseKL: return 1.0;
    case Kind::kForwardKL: return -1.0;
    case Kind::kAlphaHalf: return -2.0;
    case Kind::kJensenShannon:
    case Kind::kHellinger:
    case Kind::kChiSquared: return 0.0;
  }
  return 0.0;
}

void check_pair(const DiscreteDistribution& p, const DiscreteDistribution& q) {
  if (p.size() != q.size()) {
    throw std::invalid_argument("distributions differ in support size: " + std::to_string(p.size()) +
                                " vs " + std::to_string(q.size()));
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (q[i] == 0.0 && p[i] > 0.0) throw SupportError(i);
  }
}

}  // namespace

std::string_view DivergenceGenerator::description() const {
  switch (kind) {
    case Kind::kReverseKL: return "Reverse KL";
    case Kind::kForwardKL: return "Forward KL";
    case Kind::kJensenShannon: return "Jensen-Shannon";
    case Kind::kHellinger: return "Hellinger";
    case Kind::kChiSquared: return "Chi-squared";
    case Kind::kAlphaHalf: return "Alpha-divergence (alpha=0.5)";
  }
  return "unknown";
}

std::string_view DivergenceGenerator::name() const {
  switch (kind) {
    case Kind::kReverseKL: return "reverse_kl";
    case Kind::kForwardKL: return "forward_kl";
    case Kind::kJensenShannon: return "jensen_shannon";
    case Kind::kHellinger: return "hellinger";
    case Kind::kChiSquared: return "chi_squared";
    case Kind::kAlphaHalf: return "alpha_half";
  }
  return "unknown";
}

DiscreteDistribution::DiscreteDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw std::invalid_argument("empty distribution");
  double total = 0.0;
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    if (!(probs_[i] >= 0.0) || !std::isfinite(probs_[i])) {
      throw std::invalid_argument("negative or non-finite probability at index " + std::to_string(i));
    }
    total += probs_[i];
  }
  if (std::abs(total - 1.0) > 1e-12) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "probabilities sum to " << total << ", expected 1";
    throw std::invalid_argument(msg.str());
  }
}

double eval_generator(DivergenceGenerator gen, double u) {
  if (!(u > 0.0)) throw std::domain_error("generator argument must be positive");
  switch (gen.kind) {
    case Kind::kReverseKL: return u * std::log(u);
    case Kind::kForwardKL: return -std::log(u);
    case Kind::kJensenShannon:
      return 0.5 * u * std::log(u) - 0.5 * (u + 1.0) * std::log(0.5 * (u + 1.0));
    case Kind::kHellinger: {
      const double r = std::sqrt(u) - 1.0;
      return r * r;
    }
    case Kind::kChiSquared: return (u - 1.0) * (u - 1.0);
    case Kind::kAlphaHalf: return 4.0 * (1.0 - std::sqrt(u));
  }
  throw std::invalid_argument("unknown generator kind");
}

double limit_at_zero(DivergenceGenerator gen) {
  switch (gen.kind) {
    case Kind::kReverseKL: return 0.0;
    case Kind::kForwardKL: return std::numeric_limits<double>::infinity();
    case Kind::kJensenShannon: return 0.5 * std::log(2.0);
    case Kind::kHellinger: return 1.0;
    case Kind::kChiSquared: return 1.0;
    case Kind::kAlphaHalf: return 4.0;
  }
  throw std::invalid_argument("unknown generator kind");
}

double second_derivative_at_one(DivergenceGenerator gen) {
  switch (gen.kind) {
    case Kind::kReverseKL: return 1.0;
    case Kind::kForwardKL: return 1.0;
    case Kind::kJensenShannon: return 0.25;
    case Kind::kHellinger: return 0.5;
    case Kind::kChiSquared: return 2.0;
    case Kind::kAlphaHalf: return 1.0;
  }
  throw std::invalid_argument("unknown generator kind");
}

double exact_divergence_discrete(const DiscreteDistribution& p, const DiscreteDistribution& q,
                                 DivergenceGenerator gen) {
  check_pair(p, q);
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (q[i] == 0.0) continue;  // p[i] == 0 too
    const double u = p[i] / q[i];
    total += q[i] * (u > 0.0 ? eval_generator(gen, u) : limit_at_zero(gen));
  }
  return std::max(total, 0.0);
}

double ratio_variance_discrete(const DiscreteDistribution& p, const DiscreteDistribution& q) {
  check_pair(p, q);
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (q[i] == 0.0) continue;
    const double d = p[i] / q[i] - 1.0;
    total += q[i] * d * d;
  }
  return total;
}

double ratio_mean_discrete(const DiscreteDistribution& p, const DiscreteDistribution& q) {
  check_pair(p, q);
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (q[i] == 0.0) continue;
    total += q[i] * (p[i] / q[i]);
  }
  return total;
}

double quadratic_approx(DivergenceGenerator gen, double ratio_variance) {
  if (!(ratio_variance >= 0.0)) throw std::domain_error("ratio variance must be non-negative");
  return 0.5 * second_derivative_at_one(gen) * ratio_variance;
}

double relative_error(double exact, double approx) {
  if (exact == 0.0) return 0.0;
  return std::abs(exact - approx) / std::abs(exact);
}

double gaussian_ratio_variance(double mu) { return std::expm1(mu * mu); }

double gaussian_divergence(DivergenceGenerator gen, double mu) {
  if (!std::isfinite(mu)) throw std::invalid_argument("Gaussian family: non-finite mean shift");
  if (mu == 0.0) return 0.0;
  switch (gen.kind) {
    case Kind::kReverseKL:
    case Kind::kForwardKL: return 0.5 * mu * mu;
    case Kind::kChiSquared: return gaussian_ratio_variance(mu);
    default: break;
  }
  constexpr double kInvSqrt2Pi = 0.39894228040143267794;
  const double slope = first_derivative_at_one(gen.kind);
  auto integrand = [&](double x) {
    const double q = kInvSqrt2Pi * std::exp(-0.5 * x * x);
    const double u = std::exp(mu * x - 0.5 * mu * mu);
    return q * (eval_generator(gen, u) - slope * (u - 1.0));
  };
  double error = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      integrand, -kQuadratureHalfWidth, kQuadratureHalfWidth, kQuadratureMaxDepth, kQuadratureRelTol, &error);
  if (error > kQuadratureAbsTol) {
    throw std::runtime_error("quadrature did not reach tolerance for " + std::string(gen.name()));
  }
  return value;
}

DiscretePerturbation random_discrete_perturbation(Rng& rng, std::size_t support) {
  if (support < 2) throw std::invalid_argument("discrete family needs support >= 2");
  const double k = static_cast<double>(support);
  std::gamma_distribution<double> gamma(1.0, 1.0);
  std::vector<double> base(support);
  for (auto& b : base) b = gamma(rng);
  const double total = std::accumulate(base.begin(), base.end(), 0.0);
  for (auto& b : base) b = 0.5 * b / total + 0.5 / k;
  const double renorm = std::accumulate(base.begin(), base.end(), 0.0);
  for (auto& b : base) b /= renorm;

  std::vector<double> z(support);
  for (auto& v : z) v = standard_normal(rng);
  double mean = 0.0;
  for (std::size_t i = 0; i < support; ++i) mean += base[i] * z[i];
  double second = 0.0;
  for (std::size_t i = 0; i < support; ++i) {
    z[i] -= mean;
    second += base[i] * z[i] * z[i];
  }
  const double norm = std::sqrt(second);
  std::vector<double> direction(support);
  for (std::size_t i = 0; i < support; ++i) direction[i] = base[i] * z[i] / norm;
  // Exact zero sum up to rounding; fold the residue into the largest entry.
  const double residue = std::accumulate(direction.begin(), direction.end(), 0.0);
  auto largest = std::max_element(base.begin(), base.end()) - base.begin();
  direction[static_cast<std::size_t>(largest)] -= residue;
  return {std::move(base), std::move(direction)};
}

double scale_for_ratio_variance(const DiscretePerturbation& family, double target) {
  double second = 0.0;
  for (std::size_t i = 0; i < family.base.size(); ++i) {
    const double dev = family.direction[i] / family.base[i];
    second += family.base[i] * dev * dev;
  }
  return std::sqrt(target / second);
}

namespace {

SweepRow sweep_row(DivergenceGenerator gen, const GaussianMeanShift&, double mu) {
  SweepRow row;
  row.scale = mu;
  row.ratio_variance = gaussian_ratio_variance(mu);
  row.exact = gaussian_divergence(gen, mu);
  row.approx = quadratic_approx(gen, row.ratio_variance);
  row.relative_error = relative_error(row.exact, row.approx);
  return row;
}

SweepRow sweep_row(DivergenceGenerator gen, const DiscretePerturbation& family, double s) {
  if (family.base.size() != family.direction.size() || family.base.empty()) {
    throw std::invalid_argument("discrete family: base and direction sizes differ");
  }
  std::vector<double> p(family.base.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = family.base[i] + s * family.direction[i];
    if (p[i] < 0.0) {
      throw std::invalid_argument("discrete family: scale " + std::to_string(s) +
                                  " makes entry " + std::to_string(i) + " negative");
    }
  }
  const DiscreteDistribution pd(std::move(p));
  const DiscreteDistribution qd(family.base);
  SweepRow row;
  row.scale = s;
  row.ratio_variance = ratio_variance_discrete(pd, qd);
  row.exact = exact_divergence_discrete(pd, qd, gen);
  row.approx = quadratic_approx(gen, row.ratio_variance);
  row.relative_error = relative_error(row.exact, row.approx);
  return row;
}

}  // namespace

std::vector<SweepRow> approximation_error_sweep(DivergenceGenerator gen, const PairFamily& family,
                                                std::span<const double> scales) {
  std::vector<SweepRow> rows;
  rows.reserve(scales.size());
  for (double s : scales) {
    rows.push_back(std::visit([&](const auto& fam) { return sweep_row(gen, fam, s); }, family));
  }
  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    return a.ratio_variance < b.ratio_variance;
  });
  return rows;
}

std::string sweep_csv(DivergenceGenerator gen, std::span<const SweepRow> rows) {
  std::ostringstream out;
  out.precision(17);
  out << kSweepCsvHeader << '\n';
  for (const auto& r : rows) {
    out << gen.name() << ',' << r.scale << ',' << r.ratio_variance << ',' << r.exact << ','
        << r.approx << ',' << r.relative_error << '\n';
  }
  return out.str();
}

}  // namespace r2vpo::divergence
