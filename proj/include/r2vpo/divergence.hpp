#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "r2vpo/rng.hpp"

namespace r2vpo::divergence {

// The six convex generators f with f(1) = 0 whose f-divergences are compared
// against the ratio-variance surrogate.
//
// Orientation: D_f(p || q) = E_q[f(p/q)]. With this convention
// "ReverseKL" (f = u log u) evaluates to KL(p || q) and "ForwardKL"
// (f = -log u) evaluates to KL(q || p).
enum class Kind { kReverseKL, kForwardKL, kJensenShannon, kHellinger, kChiSquared, kAlphaHalf };

inline constexpr std::array<Kind, 6> kAllKinds = {Kind::kReverseKL,     Kind::kForwardKL,
                                                  Kind::kJensenShannon, Kind::kHellinger,
                                                  Kind::kChiSquared,    Kind::kAlphaHalf};

struct DivergenceGenerator {
  Kind kind = Kind::kReverseKL;

  std::string_view description() const;
  // Short machine name used for file names and CSV rows, e.g. "reverse_kl".
  std::string_view name() const;
};

// Probability vector validated on construction: entries >= 0, sum 1 within 1e-12.
class DiscreteDistribution {
 public:
  explicit DiscreteDistribution(std::vector<double> probs);

  std::span<const double> probs() const { return probs_; }
  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }

 private:
  std::vector<double> probs_;
};

// f(u) for u > 0; throws std::domain_error otherwise.
double eval_generator(DivergenceGenerator gen, double u);

// lim_{u -> 0+} f(u). +infinity for ForwardKL.
double limit_at_zero(DivergenceGenerator gen);

double second_derivative_at_one(DivergenceGenerator gen);

// sum_x q(x) f(p(x)/q(x)). Entries with p = 0 use the continuous limit of f;
// q(x) = 0 with p(x) > 0 throws SupportError naming the index.
double exact_divergence_discrete(const DiscreteDistribution& p, const DiscreteDistribution& q,
                                 DivergenceGenerator gen);

// E_q[(p/q - 1)^2].
double ratio_variance_discrete(const DiscreteDistribution& p, const DiscreteDistribution& q);

// E_q[p/q]; identically 1 under support containment.
double ratio_mean_discrete(const DiscreteDistribution& p, const DiscreteDistribution& q);

double quadratic_approx(DivergenceGenerator gen, double ratio_variance);

// |exact - approx| / exact, defined as 0 when exact == 0.
double relative_error(double exact, double approx);

// q = N(0, 1), p = N(mu, 1).
double gaussian_ratio_variance(double mu);
// Closed forms for the KL pair and chi-squared, adaptive Gauss-Kronrod
// quadrature over [-12, 12] for the rest.
double gaussian_divergence(DivergenceGenerator gen, double mu);

// Pair families for the approximation sweep. `scale` is mu for the Gaussian
// family and s in p = base + s * direction for the discrete one.
struct GaussianMeanShift {};
struct DiscretePerturbation {
  std::vector<double> base;
  std::vector<double> direction;  // sums to zero
};
using PairFamily = std::variant<GaussianMeanShift, DiscretePerturbation>;

// Random base q (half Dirichlet(1), half uniform) and a direction whose
// induced ratio deviation (p/q - 1) = s * z has z ~ N(0, 1) centred under q.
DiscretePerturbation random_discrete_perturbation(Rng& rng, std::size_t support);

// Scale at which a discrete perturbation reaches the given ratio variance.
double scale_for_ratio_variance(const DiscretePerturbation& family, double target);

struct SweepRow {
  double scale = 0.0;
  double ratio_variance = 0.0;
  double exact = 0.0;
  double approx = 0.0;
  double relative_error = 0.0;
};

// Rows sorted by ratio_variance.
std::vector<SweepRow> approximation_error_sweep(DivergenceGenerator gen, const PairFamily& family,
                                                std::span<const double> scales);

inline constexpr std::string_view kSweepCsvHeader =
    "generator,scale,ratio_variance,exact,approx,relative_error";

std::string sweep_csv(DivergenceGenerator gen, std::span<const SweepRow> rows);

}  // namespace r2vpo::divergence
