#include <cmath>
#include <random>

#include "doctest.h"
#include "json.hpp"

#include "cascade/errors.hpp"
#include "cascade/theory.hpp"

using namespace cascade;

namespace {

GaussianSimParams reference_params(double p12 = 0.5) {
  GaussianSimParams p;
  p.p11 = 1.0;
  p.p12 = p12;
  p.p22 = 1.0;
  return p;
}

std::vector<double> random_distribution(std::mt19937_64& rng, std::size_t n, bool with_zeros) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> p(n);
  double total = 0.0;
  for (auto& x : p) {
    x = (with_zeros && u(rng) < 0.2) ? 0.0 : u(rng);
    total += x;
  }
  if (total == 0.0) {
    p[0] = 1.0;
    total = 1.0;
  }
  for (auto& x : p) x /= total;
  return p;
}

}  // namespace

TEST_CASE("closed-form conditional examples") {
  auto p = reference_params(0.0);
  p.m_h = 2.0;
  p.p11 = 3.0;
  auto c = conditional_gaussian_closed_form(p, 7.0);
  CHECK(c.mean == 2.0);
  CHECK(c.variance == 3.0);

  p = reference_params();
  p.m_h = -1.0;
  p.m_r = 4.0;
  CHECK(conditional_gaussian_closed_form(p, 4.0).mean == -1.0);

  c = conditional_gaussian_closed_form(reference_params(), 1.0);
  CHECK(c.mean == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(c.variance == doctest::Approx(0.75).epsilon(1e-15));

  // strict reduction iff p12 != 0, and the mean shift is nonzero off the mean
  for (double p12 : {-0.9, -0.2, 0.3, 0.99}) {
    const auto g = reference_params(p12);
    CHECK(conditional_gaussian_closed_form(g, 0.0).variance < g.p11);
    CHECK(conditional_gaussian_closed_form(g, 1.5).mean != g.m_h);
  }
}

TEST_CASE("parameter validation") {
  auto p = reference_params();
  p.p22 = 0.0;
  CHECK_THROWS_AS(conditional_gaussian_closed_form(p, 1.0), ParameterError);
  p.p22 = -1.0;
  CHECK_THROWS_AS(p.validate(), ParameterError);
  p = reference_params(1.5);
  CHECK_THROWS_AS(p.validate(), ParameterError);
  p = reference_params();
  p.p11 = -0.1;
  CHECK_THROWS_AS(p.validate(), ParameterError);
  p = reference_params();
  p.m_h = std::nan("");
  CHECK_THROWS_AS(p.validate(), ParameterError);
  CHECK_NOTHROW(reference_params(1.0).validate());
}

TEST_CASE("band-conditioned Monte Carlo agrees with the closed form") {
  const auto r = monte_carlo_conditional(reference_params(), 1.0, 0.05, 400000, 3);
  CHECK(r.samples == 400000);
  CHECK(r.accepted > 1000);
  CHECK(r.mc_stderr > 0.0);
  CHECK(std::abs(r.mc_mean - r.closed_form_mean) < 3 * r.mc_stderr);
  CHECK(r.closed_form_var == doctest::Approx(0.75));
  CHECK(r.mc_var == doctest::Approx(0.75).epsilon(0.05));
  CHECK(r.mse_conditional < r.mse_unconditional);

  const auto z = monte_carlo_conditional(reference_params(0.0), 1.0, 0.05, 400000, 4);
  CHECK(std::abs(z.mc_mean) < 3 * z.mc_stderr);

  const auto again = monte_carlo_conditional(reference_params(), 1.0, 0.05, 400000, 3);
  CHECK(again.to_json() == r.to_json());
  const auto j = nlohmann::json::parse(r.to_json());
  CHECK(j.contains("mc_mean"));
  CHECK(j.contains("closed_form_mean"));
}

TEST_CASE("Monte Carlo argument errors") {
  CHECK_THROWS_AS(monte_carlo_conditional(reference_params(), 1.0, 0.01, 999, 1), ParameterError);
  CHECK_THROWS_AS(monte_carlo_conditional(reference_params(), 1.0, 0.0, 10000, 1), ParameterError);
  CHECK_THROWS_AS(monte_carlo_conditional(reference_params(), 40.0, 1e-6, 1000, 1), BandTooNarrowError);
}

TEST_CASE("plug-in conditioning lowers the mean square error") {
  const auto m = mse_comparison(reference_params(), 200000, 8);
  CHECK(m.mse_conditional == doctest::Approx(0.75).epsilon(0.02));
  CHECK(m.mse_unconditional == doctest::Approx(1.0).epsilon(0.02));
  CHECK(m.mse_unconditional - m.mse_conditional > 5 * m.stderr_difference);
  CHECK(std::abs(m.residual_mean) < 3 * m.residual_stderr);

  const auto none = mse_comparison(reference_params(0.0), 200000, 9);
  CHECK(none.mse_conditional == none.mse_unconditional);
  CHECK(std::abs(none.mse_unconditional - none.mse_conditional) <= 3 * none.stderr_difference);
  CHECK_THROWS_AS(mse_comparison(reference_params(), 10, 1), ParameterError);
}

TEST_CASE("entropy identity examples") {
  const std::vector<double> u4(4, 0.25);
  auto t = entropy_terms(u4, u4);
  CHECK(t.kl == 0.0);
  CHECK(t.cross_entropy == doctest::Approx(std::log(4.0)).epsilon(1e-15));
  CHECK(t.entropy == doctest::Approx(std::log(4.0)).epsilon(1e-15));
  CHECK(std::abs(t.residual) < 1e-15);

  t = entropy_terms({1.0, 0.0}, {0.5, 0.5});
  CHECK(t.kl == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(t.cross_entropy == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(t.entropy == 0.0);
  CHECK(crossentropy_kl_identity({1.0, 0.0}, {0.5, 0.5}) == doctest::Approx(0.0));

  CHECK_THROWS_AS(entropy_terms({0.5, 0.5}, {1.0, 0.0}), SupportError);
  CHECK_NOTHROW(entropy_terms({1.0, 0.0}, {1.0, 0.0}));
  CHECK_THROWS_AS(entropy_terms({0.5, 0.6}, {0.5, 0.5}), ParameterError);
  CHECK_THROWS_AS(entropy_terms({0.5, 0.5}, {0.5, 0.5, 0.0}), ParameterError);
  CHECK_THROWS_AS(entropy_terms({1.5, -0.5}, {0.5, 0.5}), ParameterError);
}

TEST_CASE("entropy terms match direct summation") {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = 1 + static_cast<std::size_t>(i % 16);
    const auto p = random_distribution(rng, n, true);
    const auto q = random_distribution(rng, n, false);
    double ce = 0.0, kl = 0.0, h = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (p[k] == 0.0) continue;
      ce -= p[k] * std::log(q[k]);
      kl += p[k] * std::log(p[k] / q[k]);
      h -= p[k] * std::log(p[k]);
    }
    const auto t = entropy_terms(p, q);
    CHECK(t.cross_entropy == doctest::Approx(ce).epsilon(1e-12));
    CHECK(t.kl == doctest::Approx(kl).epsilon(1e-10));
    CHECK(t.entropy == doctest::Approx(h).epsilon(1e-12));
    CHECK(std::abs(crossentropy_kl_identity(p, q)) < 1e-12);
  }
}

TEST_CASE("KL and cross-entropy share their grid minimizer") {
  const std::vector<double> p = {0.1, 0.2, 0.3, 0.4};
  auto family = [](double theta) {
    std::vector<double> q(4);
    double total = 0.0;
    for (std::size_t k = 0; k < 4; ++k) total += q[k] = std::exp(theta * static_cast<double>(k));
    for (auto& x : q) x /= total;
    return q;
  };
  std::vector<double> grid;
  for (int i = 0; i <= 200; ++i) grid.push_back(-2.0 + 0.02 * i);
  const auto g = grid_argmin(p, family, grid);
  CHECK(g.agree());
  CHECK(g.kl > 0);
  CHECK(g.kl < grid.size() - 1);
}
