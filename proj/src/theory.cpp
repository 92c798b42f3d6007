#include "cascade/theory.hpp"

#include <cmath>
#include <random>

#include "json.hpp"

#include "cascade/errors.hpp"

namespace cascade {

void GaussianSimParams::validate() const {
  if (!(p22 > 0.0)) throw ParameterError("P22 must be > 0 (got " + std::to_string(p22) + ")");
  if (!(p11 >= 0.0)) throw ParameterError("P11 must be >= 0 (got " + std::to_string(p11) + ")");
  if (!std::isfinite(m_h) || !std::isfinite(m_r) || !std::isfinite(p12) || !std::isfinite(p11) ||
      !std::isfinite(p22))
    throw ParameterError("Gaussian parameters must be finite");
  const double det = p11 * p22 - p12 * p12;
  if (det < -1e-12 * std::max(1.0, p11 * p22))
    throw ParameterError("covariance [[P11,P12],[P12,P22]] is not positive semidefinite");
  if (sigma2 && !(*sigma2 >= 0.0)) throw ParameterError("sigma2 must be >= 0");
}

ConditionalGaussian conditional_gaussian_closed_form(const GaussianSimParams& params, double r_obs) {
  params.validate();
  const double gain = params.p12 / params.p22;
  return {params.m_h + gain * (r_obs - params.m_r), params.p11 - gain * params.p12};
}

namespace {

/// Draws (h, r) by conditioning h on r.
class JointSampler {
 public:
  JointSampler(const GaussianSimParams& p, std::uint64_t seed)
      : p_(p), rng_(seed), sd_r_(std::sqrt(p.p22)), gain_(p.p12 / p.p22),
        sd_h_(std::sqrt(std::max(0.0, p.p11 - p.p12 * p.p12 / p.p22))) {}

  std::pair<double, double> next() {
    const double r = p_.m_r + sd_r_ * normal_(rng_);
    const double h = p_.m_h + gain_ * (r - p_.m_r) + sd_h_ * normal_(rng_);
    return {h, r};
  }

 private:
  GaussianSimParams p_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_;
  double sd_r_, gain_, sd_h_;
};

void check_samples(long n) {
  if (n < 1000) throw ParameterError("at least 1000 samples are required (got " + std::to_string(n) + ")");
}

}  // namespace

SimResult monte_carlo_conditional(const GaussianSimParams& params, double r_obs, double band, long n,
                                  std::uint64_t seed) {
  params.validate();
  check_samples(n);
  if (!(band > 0.0)) throw ParameterError("band half-width must be > 0");
  const auto cf = conditional_gaussian_closed_form(params, r_obs);
  JointSampler sampler(params, seed);
  double sum = 0.0, sum_sq = 0.0, se_cond = 0.0, se_uncond = 0.0;
  long accepted = 0;
  const double gain = params.p12 / params.p22;
  for (long i = 0; i < n; ++i) {
    const auto [h, r] = sampler.next();
    const double est = params.m_h + gain * (r - params.m_r);
    se_cond += (h - est) * (h - est);
    se_uncond += (h - params.m_h) * (h - params.m_h);
    if (std::abs(r - r_obs) <= band) {
      ++accepted;
      sum += h;
      sum_sq += h * h;
    }
  }
  if (accepted < 2)
    throw BandTooNarrowError("only " + std::to_string(accepted) + " of " + std::to_string(n) +
                             " samples fell within r_obs +/- band; widen --band or raise --samples");
  SimResult out;
  out.closed_form_mean = cf.mean;
  out.closed_form_var = cf.variance;
  out.accepted = accepted;
  out.samples = n;
  const double k = static_cast<double>(accepted);
  out.mc_mean = sum / k;
  out.mc_var = std::max(0.0, (sum_sq - k * out.mc_mean * out.mc_mean) / (k - 1.0));
  out.mc_stderr = std::sqrt(out.mc_var / k);
  out.mse_conditional = se_cond / static_cast<double>(n);
  out.mse_unconditional = se_uncond / static_cast<double>(n);
  return out;
}

std::string SimResult::to_json() const {
  nlohmann::ordered_json j;
  j["closed_form_mean"] = closed_form_mean;
  j["closed_form_var"] = closed_form_var;
  j["mc_mean"] = mc_mean;
  j["mc_var"] = mc_var;
  j["mc_stderr"] = mc_stderr;
  j["accepted"] = accepted;
  j["samples"] = samples;
  j["mse_conditional"] = mse_conditional;
  j["mse_unconditional"] = mse_unconditional;
  return j.dump(2);
}

MseComparison mse_comparison(const GaussianSimParams& params, long n, std::uint64_t seed) {
  params.validate();
  check_samples(n);
  JointSampler sampler(params, seed);
  const double gain = params.p12 / params.p22;
  // running sums of the conditional / unconditional squared errors, their
  // squares, their paired difference and the residual
  double c = 0, c2 = 0, u = 0, u2 = 0, d = 0, d2 = 0, e = 0, e2 = 0;
  for (long i = 0; i < n; ++i) {
    const auto [h, r] = sampler.next();
    const double res = h - (params.m_h + gain * (r - params.m_r));
    const double sc = res * res;
    const double su = (h - params.m_h) * (h - params.m_h);
    c += sc;
    c2 += sc * sc;
    u += su;
    u2 += su * su;
    d += su - sc;
    d2 += (su - sc) * (su - sc);
    e += res;
    e2 += res * res;
  }
  const double nn = static_cast<double>(n);
  auto stderr_of = [nn](double s, double s2) {
    const double mean = s / nn;
    return std::sqrt(std::max(0.0, (s2 - nn * mean * mean) / (nn - 1.0)) / nn);
  };
  MseComparison out;
  out.mse_conditional = c / nn;
  out.mse_unconditional = u / nn;
  out.stderr_conditional = stderr_of(c, c2);
  out.stderr_unconditional = stderr_of(u, u2);
  out.stderr_difference = stderr_of(d, d2);
  out.residual_mean = e / nn;
  out.residual_stderr = stderr_of(e, e2);
  return out;
}

namespace {

void check_distribution(const std::vector<double>& p, const char* name) {
  if (p.empty()) throw ParameterError(std::string(name) + " is empty");
  double total = 0.0;
  for (double x : p) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw ParameterError(std::string(name) + " has a negative or non-finite entry");
    total += x;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ParameterError(std::string(name) + " does not sum to 1");
}

}  // namespace

EntropyTerms entropy_terms(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw ParameterError("p and q have different supports");
  check_distribution(p, "p");
  check_distribution(q, "q");
  EntropyTerms t;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) throw SupportError("q is zero at outcome " + std::to_string(i) + " where p is positive");
    const double lp = std::log(p[i]);
    const double lq = std::log(q[i]);
    t.cross_entropy -= p[i] * lq;
    t.entropy -= p[i] * lp;
    t.kl += p[i] * (lp - lq);
  }
  t.residual = t.cross_entropy - t.kl - t.entropy;
  return t;
}

double crossentropy_kl_identity(const std::vector<double>& p, const std::vector<double>& q) {
  return entropy_terms(p, q).residual;
}

GridArgmin grid_argmin(const std::vector<double>& p,
                       const std::function<std::vector<double>(double)>& family,
                       const std::vector<double>& grid) {
  if (grid.empty()) throw ParameterError("empty grid");
  GridArgmin out;
  double best_kl = INFINITY, best_ce = INFINITY;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto t = entropy_terms(p, family(grid[i]));
    if (t.kl < best_kl) {
      best_kl = t.kl;
      out.kl = i;
    }
    if (t.cross_entropy < best_ce) {
      best_ce = t.cross_entropy;
      out.ce = i;
    }
  }
  return out;
}

}  // namespace cascade
