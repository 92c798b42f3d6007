#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace cascade {

/// Joint Gaussian over (h, r): means m_h, m_r and covariance
/// [[p11, p12], [p12, p22]].
struct GaussianSimParams {
  double m_h = 0.0;
  double m_r = 0.0;
  double p11 = 1.0;
  double p12 = 0.0;
  double p22 = 1.0;
  std::optional<double> sigma2;   ///< noise variance; informational only

  /// Throws ParameterError unless p22 > 0 and the covariance is PSD.
  void validate() const;
};

struct ConditionalGaussian {
  double mean = 0.0;
  double variance = 0.0;
};

/// E[h | r = r_obs] and Var[h | r].
ConditionalGaussian conditional_gaussian_closed_form(const GaussianSimParams& params, double r_obs);

struct SimResult {
  double closed_form_mean = 0.0;
  double closed_form_var = 0.0;
  double mc_mean = 0.0;          ///< mean of h over samples with r in the band
  double mc_var = 0.0;
  double mc_stderr = 0.0;
  long accepted = 0;
  long samples = 0;
  double mse_conditional = 0.0;  ///< over all samples, plug-in estimate
  double mse_unconditional = 0.0;

  std::string to_json() const;
};

/// Draws n joint samples and conditions on |r - r_obs| <= band. Throws
/// BandTooNarrowError when fewer than two samples land in the band.
SimResult monte_carlo_conditional(const GaussianSimParams& params, double r_obs, double band, long n,
                                  std::uint64_t seed);

struct MseComparison {
  double mse_conditional = 0.0;
  double mse_unconditional = 0.0;
  double stderr_conditional = 0.0;
  double stderr_unconditional = 0.0;
  /// standard error of the paired difference unconditional - conditional
  double stderr_difference = 0.0;
  double residual_mean = 0.0;    ///< mean of h - E[h | r]
  double residual_stderr = 0.0;
};

MseComparison mse_comparison(const GaussianSimParams& params, long n, std::uint64_t seed);

struct EntropyTerms {
  double cross_entropy = 0.0;
  double kl = 0.0;
  double entropy = 0.0;
  double residual = 0.0;   ///< cross_entropy - kl - entropy
};

/// Natural-log entropy terms of p against q, summed directly. Throws
/// SupportError when q vanishes where p does not, ParameterError for
/// malformed distributions.
EntropyTerms entropy_terms(const std::vector<double>& p, const std::vector<double>& q);
double crossentropy_kl_identity(const std::vector<double>& p, const std::vector<double>& q);

struct GridArgmin {
  std::size_t kl = 0;
  std::size_t ce = 0;
  bool agree() const { return kl == ce; }
};

/// Index of the grid value minimizing KL(p || q(theta)) and CE(p, q(theta)).
GridArgmin grid_argmin(const std::vector<double>& p,
                       const std::function<std::vector<double>(double)>& family,
                       const std::vector<double>& grid);

}  // namespace cascade
