#include <doctest.h>

#include <cmath>
#include <numbers>

#include "r2vpo/checks.hpp"
#include "r2vpo/errors.hpp"
#include "r2vpo/mlp.hpp"
#include "r2vpo/policy.hpp"

using namespace r2vpo;

namespace {

Eigen::MatrixXd random_matrix(Rng& rng, int rows, int cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = standard_normal(rng);
  return m;
}

const OutputLoss kSumOutputs = [](const Eigen::MatrixXd& out, Eigen::MatrixXd* d) {
  if (d) d->setOnes(out.rows(), out.cols());
  return out.sum();
};

const OutputLoss kMeanSquare = [](const Eigen::MatrixXd& out, Eigen::MatrixXd* d) {
  const double n = static_cast<double>(out.size());
  if (d) *d = 2.0 * out / n;
  return out.squaredNorm() / n;
};

}  // namespace

TEST_SUITE("policy_net") {
  TEST_CASE("forward value examples") {
    Mlp zero({3, 4, 1});
    CHECK(forward_value(zero, Eigen::MatrixXd::Random(3, 5)).isZero(0.0));
    Mlp linear({1, 1});
    linear.weight(0)(0, 0) = 2.0;
    CHECK(forward_value(linear, Eigen::MatrixXd::Constant(1, 1, 3.0))[0] == 6.0);
    Rng rng = make_rng(1, Stream::kTest);
    const Mlp net = Mlp::scaled_uniform({2, 8, 1}, rng);
    Eigen::MatrixXd states(2, 2);
    states << 0.3, 0.3, -1.2, -1.2;
    const auto v = forward_value(net, states);
    CHECK(v[0] == v[1]);
    CHECK_THROWS_AS(forward_value(net, Eigen::MatrixXd::Zero(3, 2)), std::invalid_argument);
  }

  TEST_CASE("parameter layout is layer-major, weights row-major before biases") {
    Mlp net({2, 3, 1});
    CHECK(net.parameter_count() == 2u * 3u + 3u + 3u * 1u + 1u);
    Eigen::VectorXd flat = Eigen::VectorXd::LinSpaced(static_cast<Eigen::Index>(net.parameter_count()), 0, 12);
    net.assign(flat);
    CHECK(net.weight(0)(0, 1) == 1.0);
    CHECK(net.weight(0)(1, 0) == 2.0);
    CHECK(net.bias(0)(0) == 6.0);
    CHECK(net.weight(1)(0, 2) == 11.0);
    CHECK(net.bias(1)(0) == 12.0);
  }

  TEST_CASE("scaled uniform initialization bounds") {
    Rng rng = make_rng(2, Stream::kTest);
    const Mlp net = Mlp::scaled_uniform({5, 7, 3}, rng);
    const double b0 = std::sqrt(6.0 / 12.0), b1 = std::sqrt(6.0 / 10.0);
    CHECK(net.weight(0).cwiseAbs().maxCoeff() <= b0);
    CHECK(net.weight(1).cwiseAbs().maxCoeff() <= b1);
    CHECK(net.bias(0).isZero(0.0));
    Rng again = make_rng(2, Stream::kTest);
    CHECK(Mlp::scaled_uniform({5, 7, 3}, again).params() == net.params());
  }

  TEST_CASE("backward trivial cases") {
    Mlp zero({3, 4, 1});
    const auto g = backward(zero, kSumOutputs, Eigen::MatrixXd::Zero(3, 4));
    CHECK(g.gradient.head(12).isZero(0.0));
    Mlp linear({1, 1});
    linear.weight(0)(0, 0) = 0.7;
    const auto lg = backward(linear, kSumOutputs, Eigen::MatrixXd::Ones(1, 1));
    CHECK(lg.gradient[0] == 1.0);
  }

  TEST_CASE("backward matches finite differences on random nets") {
    Rng rng = make_rng(3, Stream::kTest);
    for (int trial = 0; trial < 20; ++trial) {
      const Mlp net = Mlp::scaled_uniform({4, 8, 6, 2}, rng);
      const Eigen::MatrixXd x = random_matrix(rng, 4, 5);
      const auto analytic = backward(net, kMeanSquare, x).gradient;
      const auto numeric = finite_diff_gradient(net, kMeanSquare, x, 1e-5);
      for (Eigen::Index i = 0; i < analytic.size(); ++i) {
        if (std::abs(analytic[i]) < 1e-8) {
          CHECK(std::abs(numeric[i]) < 1e-8);
        } else {
          CHECK(std::abs(analytic[i] - numeric[i]) / std::abs(analytic[i]) < 1e-4);
        }
      }
    }
  }

  TEST_CASE("finite differences on known functions") {
    Mlp w({1, 1});
    w.weight(0)(0, 0) = 3.0;
    const OutputLoss square = [](const Eigen::MatrixXd& out, Eigen::MatrixXd*) { return out(0, 0) * out(0, 0); };
    CHECK(std::abs(finite_diff_gradient(w, square, Eigen::MatrixXd::Ones(1, 1), 1e-5)[0] - 6.0) < 1e-8);
    const OutputLoss constant = [](const Eigen::MatrixXd&, Eigen::MatrixXd*) { return 4.0; };
    CHECK(finite_diff_gradient(w, constant, Eigen::MatrixXd::Ones(1, 1), 1e-5).isZero(0.0));
    CHECK_THROWS(finite_diff_gradient(w, constant, Eigen::MatrixXd::Ones(1, 1), 0.0));
  }

  TEST_CASE("non-finite activation names the layer") {
    Mlp net({1, 2, 1});
    net.weight(0)(0, 0) = std::numeric_limits<double>::quiet_NaN();
    try {
      backward(net, kSumOutputs, Eigen::MatrixXd::Ones(1, 1));
      FAIL("expected NumericError");
    } catch (const NumericError& e) {
      CHECK(std::string(e.what()).find("layer") != std::string::npos);
    }
  }

  TEST_CASE("log_prob closed forms") {
    Mlp mean_net({2, 1});
    GaussianPolicy p1(mean_net, Eigen::VectorXd::Zero(1));
    const Eigen::MatrixXd s = Eigen::MatrixXd::Zero(2, 1);
    CHECK(p1.log_prob(s, Eigen::MatrixXd::Zero(1, 1))[0] == doctest::Approx(-0.9189385332).epsilon(1e-10));
    GaussianPolicy p3(Mlp({2, 3}), Eigen::VectorXd::Zero(3));
    CHECK(p3.log_prob(s, Eigen::MatrixXd::Zero(3, 1))[0] == doctest::Approx(-2.7568155996).epsilon(1e-10));
    GaussianPolicy p(Mlp({2, 1}), Eigen::VectorXd::Constant(1, 0.4));
    const double sigma = std::exp(0.4);
    CHECK(p.log_prob(s, Eigen::MatrixXd::Constant(1, 1, sigma))[0] ==
          p.log_prob(s, Eigen::MatrixXd::Constant(1, 1, -sigma))[0]);
    CHECK_THROWS(p.log_prob(s, Eigen::MatrixXd::Constant(1, 1, std::nan(""))));
  }

  TEST_CASE("log density integrates to one") {
    GaussianPolicy p(Mlp({1, 1}), Eigen::VectorXd::Constant(1, -0.3));
    const double sigma = std::exp(-0.3);
    const int n = 20000;
    const double lo = -10.0 * sigma, hi = 10.0 * sigma, h = (hi - lo) / n;
    Eigen::MatrixXd actions(1, n + 1);
    for (int i = 0; i <= n; ++i) actions(0, i) = lo + i * h;
    const Eigen::VectorXd lp = p.log_prob(Eigen::MatrixXd::Zero(1, n + 1), actions);
    double s = std::exp(lp[0]) + std::exp(lp[n]);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * std::exp(lp[i]);
    const double integral = s * h / 3.0;
    CHECK(integral > 1.0 - 1e-6);
    CHECK(integral < 1.0 + 1e-6);
  }

  TEST_CASE("sampling") {
    Rng init = make_rng(4, Stream::kTest);
    GaussianPolicy p = GaussianPolicy::initialized(3, {8}, 2, init, -5.0);
    const Eigen::VectorXd state = Eigen::Vector3d(0.1, -0.2, 0.3);
    const Eigen::VectorXd mu = p.mean(state);
    Rng rng = make_rng(5, Stream::kTest);
    int close = 0;
    for (int i = 0; i < 1000; ++i) close += (p.sample_action(state, rng).action - mu).cwiseAbs().maxCoeff() < 0.03;
    CHECK(close > 990);
    Rng a = make_rng(6, Stream::kTest), b = make_rng(6, Stream::kTest);
    const auto sa = p.sample_action(state, a), sb = p.sample_action(state, b);
    CHECK(sa.action == sb.action);
    CHECK(sa.log_prob == sb.log_prob);
    CHECK(std::abs(sa.log_prob - p.log_prob(state, sa.action)[0]) < 1e-12);
  }

  TEST_CASE("log_std clamp and flat layout") {
    Rng init = make_rng(7, Stream::kTest);
    GaussianPolicy p = GaussianPolicy::initialized(2, {4}, 2, init, 0.0);
    Eigen::VectorXd theta = p.flat();
    CHECK(theta.size() == static_cast<Eigen::Index>(p.mean_net().parameter_count() + 2));
    theta.tail(2) << 9.0, -9.0;
    p.assign(theta);
    p.clamp_log_std();
    CHECK(p.log_std()[0] == kLogStdMax);
    CHECK(p.log_std()[1] == kLogStdMin);
    CHECK(p.entropy() == doctest::Approx(kLogStdMax + kLogStdMin + 2 * (0.5 + 0.5 * std::log(2 * std::numbers::pi))));
  }

  TEST_CASE("policy gradient matches finite differences") {
    Rng rng = make_rng(8, Stream::kTest);
    GaussianPolicy p = GaussianPolicy::initialized(3, {6, 5}, 2, rng, -0.2);
    const Eigen::MatrixXd s = random_matrix(rng, 3, 7), a = random_matrix(rng, 2, 7);
    const Eigen::VectorXd w = random_matrix(rng, 7, 1);
    const LogProbLoss loss = [&](const Eigen::VectorXd& lp, Eigen::VectorXd* d) {
      if (d) *d = w.cwiseProduct(lp.array().exp().matrix());
      return w.dot(lp.array().exp().matrix());
    };
    const auto analytic = backward(p, loss, s, a).gradient;
    const auto numeric = finite_diff_gradient(p, loss, s, a, 1e-5);
    CHECK((analytic - numeric).cwiseAbs().maxCoeff() < 1e-7 * std::max(1.0, analytic.cwiseAbs().maxCoeff()));
  }

  TEST_CASE("sharded gradient equals the serial reference") {
    Rng rng = make_rng(9, Stream::kTest);
    GaussianPolicy p = GaussianPolicy::initialized(4, {16, 16}, 2, rng, 0.0);
    const Eigen::MatrixXd s = random_matrix(rng, 4, 103), a = random_matrix(rng, 2, 103);
    const LogProbLoss loss = [](const Eigen::VectorXd& lp, Eigen::VectorXd* d) {
      if (d) d->setConstant(1.0 / static_cast<double>(lp.size()));
      return lp.mean();
    };
    const auto serial = backward(p, loss, s, a);
    for (int shards : {1, 2, 3, 8, 200}) {
      const auto sharded = backward_sharded(p, loss, s, a, shards);
      CHECK(sharded.loss == doctest::Approx(serial.loss).epsilon(1e-14));
      CHECK((sharded.gradient - serial.gradient).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + serial.gradient.cwiseAbs().maxCoeff()));
      CHECK(backward_sharded(p, loss, s, a, shards).gradient == sharded.gradient);
    }
  }

  TEST_CASE("gradcheck suite on random small policies") {
    const auto r = checks::gradcheck_suite(1, 25);
    CHECK(r.nets == 25);
    CHECK(r.passed(1e-4));
  }
}
