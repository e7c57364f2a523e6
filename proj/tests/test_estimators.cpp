#include <cmath>
#include <initializer_list>
#include <stdexcept>
#include <vector>

#include <doctest.h>

#include "ivsign/estimators.hpp"
#include "ivsign/normal_special.hpp"
#include "ivsign/rng.hpp"

using namespace ivsign;

namespace {

InstrumentBlock block(double xi1, double xi2, double s1sq, double s12, double s2sq) {
  Eigen::Vector2d xi(xi1, xi2);
  Eigen::Matrix2d sigma;
  sigma << s1sq, s12, s12, s2sq;
  return InstrumentBlock(xi, sigma);
}

struct MeanAccum {
  double sum = 0.0, sumsq = 0.0;
  std::int64_t n = 0;
  void add(double v) {
    sum += v;
    sumsq += v * v;
    ++n;
  }
  double mean() const { return sum / static_cast<double>(n); }
  double se() const {
    const double m = mean();
    return std::sqrt(std::max(0.0, (sumsq - n * m * m) / static_cast<double>(n - 1)) /
                     static_cast<double>(n));
  }
};

// Chunk-deterministic Monte Carlo mean of fn(rng).
template <typename F>
MeanAccum mc_mean(std::int64_t draws, std::uint64_t seed, F fn) {
  const std::int64_t n_chunks = n_chunks_for(draws);
  std::vector<MeanAccum> acc(n_chunks);
  for_each_chunk(n_chunks, [&](std::int64_t chunk) {
    RandomStream rng(substream_seed(seed, static_cast<std::uint64_t>(chunk)));
    const std::int64_t lo = chunk * kMcChunk;
    const std::int64_t hi = std::min(lo + kMcChunk, draws);
    for (std::int64_t s = lo; s < hi; ++s) acc[chunk].add(fn(rng));
  });
  MeanAccum total;
  for (const MeanAccum& a : acc) {
    total.sum += a.sum;
    total.sumsq += a.sumsq;
    total.n += a.n;
  }
  return total;
}

}  // namespace

TEST_CASE("tau_hat: pinned values and scale rule") {
  CHECK(tau_hat(0.0, 1.0) == doctest::Approx(1.2533141373155003).epsilon(1e-13));
  CHECK(tau_hat(2.0, 4.0) == doctest::Approx(0.3278397712093992).epsilon(1e-13));
  CHECK_THROWS_AS(tau_hat(1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(tau_hat(1.0, -2.0), std::invalid_argument);

  RandomStream rng(7);
  for (int i = 0; i < 1000; ++i) {
    const double xi2 = 3.0 * rng.normal();
    const double s2sq = 0.1 + std::fabs(rng.normal());
    const double a = 0.05 + std::fabs(rng.normal());
    const double lhs = tau_hat(a * xi2, a * a * s2sq);
    const double rhs = tau_hat(xi2, s2sq) / a;
    CHECK(std::fabs(lhs - rhs) <= 1e-12 * std::fabs(rhs));
  }
}

TEST_CASE("tau_hat: Monte Carlo mean is 1/pi" * doctest::timeout(120)) {
  const double pi = 2.0;
  const MeanAccum acc = mc_mean(10000000, 11, [&](RandomStream& rng) {
    return tau_hat(pi + rng.normal(), 1.0);
  });
  CHECK(std::fabs(acc.mean() - 0.5) <= 4.0 * acc.se());
}

TEST_CASE("delta_hat: closed form") {
  CHECK(delta_hat(block(3, 2, 1, 0.5, 1)) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(delta_hat(block(1.7, -0.3, 1, 0.0, 2)) == doctest::Approx(1.7).epsilon(1e-14));
  for (double c : {1.0, -3.0}) {
    CHECK(delta_hat(block(c * 0.5, c, 1, 0.5, 1)) == doctest::Approx(0.0).epsilon(1e-14));
  }
}

TEST_CASE("beta_u: pinned values") {
  CHECK(beta_u(block(0, 2, 1, 0, 1)) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(beta_u(block(3, 2, 1, 0.5, 1)) == doctest::Approx(1.3427384585761089).epsilon(1e-13));
}

TEST_CASE("beta_u: Monte Carlo unbiasedness at pi = 4, beta = 1" * doctest::timeout(120)) {
  const double pi = 4.0, beta = 1.0;
  const MeanAccum acc = mc_mean(10000000, 13, [&](RandomStream& rng) {
    const double xi1 = beta * pi + rng.normal();
    const double xi2 = pi + rng.normal();
    return beta_u_scalar(xi1, xi2, 0.0, 1.0);
  });
  CHECK(std::fabs(acc.mean() - beta) <= 4.0 * acc.se());
}

TEST_CASE("beta_u: shrinkage and opposite-side behavior") {
  RandomStream rng(17);
  int shrink_violations = 0;
  int side_violations = 0;
  for (int i = 0; i < 100000; ++i) {
    const double s2sq = 0.2 + std::fabs(rng.normal());
    const double s1sq = 0.2 + std::fabs(rng.normal());
    const double s12 = 0.9 * std::sqrt(s1sq * s2sq) * (2.0 * rng.uniform() - 1.0);
    const double ratio = s12 / s2sq;
    const double xi1 = 2.0 * rng.normal();
    double xi2 = 0.05 + std::fabs(rng.normal());
    const double delta = xi1 - ratio * xi2;
    if (std::fabs(delta) < 1e-8) continue;

    // xi2 > 0: strictly between the ratio and 2SLS.
    const double bu = beta_u_scalar(xi1, xi2, s12, s2sq);
    const double b2 = xi1 / xi2;
    if (!((bu - ratio) * (b2 - ratio) > 0.0 && std::fabs(bu - ratio) < std::fabs(b2 - ratio))) {
      ++shrink_violations;
    }
    // xi2 < 0: opposite side of the ratio from 2SLS.
    xi2 = -xi2;
    const double bu_neg = beta_u_scalar(xi1, xi2, s12, s2sq);
    const double b2_neg = xi1 / xi2;
    const double delta_neg = xi1 - ratio * xi2;
    if (std::fabs(delta_neg) < 1e-8) continue;
    if (!((bu_neg - ratio) * (b2_neg - ratio) < 0.0)) ++side_violations;
  }
  CHECK(shrink_violations == 0);
  CHECK(side_violations == 0);
}

TEST_CASE("beta_u, beta_2sls, beta_fuller: equivariance under triangular transforms") {
  RandomStream rng(23);
  int violations = 0;
  for (int i = 0; i < 10000; ++i) {
    const double s2sq = 0.2 + std::fabs(rng.normal());
    const double s1sq = 0.2 + std::fabs(rng.normal());
    const double s12 = 0.9 * std::sqrt(s1sq * s2sq) * (2.0 * rng.uniform() - 1.0);
    const double xi1 = 2.0 * rng.normal();
    const double xi2 = 2.0 * rng.normal();
    if (std::fabs(xi2) < 1e-6) continue;
    const InstrumentBlock b = block(xi1, xi2, s1sq, s12, s2sq);

    double a1 = 2.0 * rng.normal();
    if (std::fabs(a1) < 0.1) a1 = a1 < 0 ? -0.1 : 0.1;
    const double a2 = 2.0 * rng.normal();
    const double a3 = 0.1 + 2.0 * rng.uniform();
    Eigen::Matrix2d a;
    a << a1, a2, 0.0, a3;
    const InstrumentBlock tb(a * b.xi, a * b.sigma * a.transpose());

    const auto check = [&](double orig, double transformed) {
      const double want = (a1 * orig + a2) / a3;
      if (std::fabs(transformed - want) > 1e-10 * std::max(1.0, std::fabs(want))) ++violations;
    };
    check(beta_u(b), beta_u(tb));
    check(beta_2sls_single(b), beta_2sls_single(tb));
    check(beta_fuller(b), beta_fuller(tb));
  }
  CHECK(violations == 0);
}

TEST_CASE("beta_u: scale invariance") {
  RandomStream rng(29);
  for (int i = 0; i < 2000; ++i) {
    const double s2sq = 0.2 + std::fabs(rng.normal());
    const double s1sq = 0.2 + std::fabs(rng.normal());
    const double s12 = 0.9 * std::sqrt(s1sq * s2sq) * (2.0 * rng.uniform() - 1.0);
    const double xi1 = 2.0 * rng.normal();
    const double xi2 = 2.0 * rng.normal();
    const InstrumentBlock b = block(xi1, xi2, s1sq, s12, s2sq);
    const double base = beta_u(b);
    for (double a : {1e-6, 1.0, 1e6}) {
      const double ra = std::sqrt(a);
      const InstrumentBlock sb(ra * b.xi, a * b.sigma);
      CHECK(std::fabs(beta_u(sb) - base) <= 1e-12 * std::max(1.0, std::fabs(base)));
    }
  }
}

TEST_CASE("beta_2sls_single: values and zero-denominator error") {
  CHECK(beta_2sls_single(block(3, 2, 1, 0, 1)) == doctest::Approx(1.5));
  CHECK(beta_2sls_single(block(0, -2.5, 1, 0, 1)) == doctest::Approx(0.0));
  CHECK(beta_2sls_single(block(0.7, 0.7, 1, 0, 1)) == doctest::Approx(1.0));
  CHECK_THROWS_AS(beta_2sls_single(block(1, 0, 1, 0, 1)), std::invalid_argument);
}

TEST_CASE("beta_fuller: values and strong-instrument limit") {
  CHECK(beta_fuller(block(3, 2, 1, 0.5, 1)) == doctest::Approx(1.3).epsilon(1e-14));
  CHECK(beta_fuller(block(0, 0, 1, 0, 1)) == doctest::Approx(0.0));
  const double val = beta_fuller(block(2000, 1000, 1, 0, 1));
  CHECK(std::fabs(val - 2.0) <= 10.0 / (1000.0 * 1000.0));
}

TEST_CASE("strong-instrument agreement bound (deterministic, 1e5 draws)") {
  RandomStream rng(31);
  int violations = 0;
  for (int i = 0; i < 100000; ++i) {
    const double s2sq = 0.2 + std::fabs(rng.normal());
    const double s1sq = 0.2 + std::fabs(rng.normal());
    const double s12 = 0.9 * std::sqrt(s1sq * s2sq) * (2.0 * rng.uniform() - 1.0);
    const double s2 = std::sqrt(s2sq);
    const double xi1 = 2.0 * rng.normal();
    const double xi2 = 0.01 + std::fabs(2.0 * rng.normal());
    const double ratio = s12 / s2sq;

    // tau-level bound: s2 |tau - 1/xi2| <= |s2^3 / xi2^3|.
    const double tau = tau_hat(xi2, s2sq);
    if (s2 * std::fabs(tau - 1.0 / xi2) >
        s2 * s2 * s2 / (xi2 * xi2 * xi2) * (1.0 + 1e-16)) {
      ++violations;
    }
    // Estimator-level consequence: |bu - b2sls| <= (s2/xi2)^2 |b2sls - ratio|.
    const double bu = beta_u_scalar(xi1, xi2, s12, s2sq);
    const double b2 = xi1 / xi2;
    const double lhs = std::fabs(bu - b2);
    const double rhs = (s2sq / (xi2 * xi2)) * std::fabs(b2 - ratio);
    if (lhs > rhs * (1.0 + 1e-12)) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("heavy tails: |beta_u|^1.5 running average grows with n" * doctest::timeout(600)) {
  // Monotone-growth proxy for the missing 1.5th moment at a weak design:
  // pi = 0.5, beta = 0, unit variances, s12 = 0.5. Checkpoints share their
  // leading draws, so growth reflects deeper tail exploration.
  const double pi = 0.5, s12 = 0.5;
  const double rho_c = std::sqrt(1.0 - s12 * s12);
  int increasing = 0;
  for (std::uint64_t seed : {101u, 202u, 303u}) {
    double prev = -1.0;
    bool monotone = true;
    for (std::int64_t n : {10000LL, 1000000LL, 100000000LL}) {
      const MeanAccum acc = mc_mean(n, seed, [&](RandomStream& rng) {
        const double n1 = rng.normal();
        const double n2 = rng.normal();
        const double xi2 = pi + n1;
        const double xi1 = s12 * n1 + rho_c * n2;
        return std::pow(std::fabs(beta_u_scalar(xi1, xi2, s12, 1.0)), 1.5);
      });
      if (acc.mean() <= prev) monotone = false;
      prev = acc.mean();
    }
    if (monotone) ++increasing;
  }
  CHECK(increasing >= 2);
}
