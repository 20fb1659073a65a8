#pragma once

#include <cstddef>
#include <vector>

#include "qlscm/rng.hpp"

namespace qlscm {

/// Generalized extreme-value parameters: location, scale, shape.
/// Shape xi > 0 gives a heavy (Frechet-type) upper tail; xi = 0 is Gumbel.
struct GevParams {
  double mu = 0.0;
  double sigma = 1.0;
  double xi = 0.0;

  GevParams() = default;
  GevParams(double mu_, double sigma_, double xi_);
};

/// Gamma parameters in shape/rate form.
struct GammaParams {
  double alpha = 1.0;   // shape
  double lambda = 1.0;  // rate

  GammaParams() = default;
  GammaParams(double alpha_, double lambda_);
};

// --- quantile / CDF functions -------------------------------------------

/// Inverse GEV distribution function at probability p in (0,1).
double gev_quantile(double p, const GevParams& params);

/// GEV distribution function. Returns 0/1 outside the support.
double gev_cdf(double x, const GevParams& params);

/// Standard normal CDF.
double normal_cdf(double z);

/// Standard normal quantile (Wichura's AS 241, ~1e-15 accurate).
double normal_quantile(double p);

/// Maps a standard-normal value to (a, b) via a + (b-a)*Phi(z).
/// Monotone in z, so spatial dependence ordering is preserved.
double uniform_from_gaussian(double z, double a, double b);

// --- single-draw samplers on an existing stream --------------------------

double gev_sample_one(const GevParams& params, Rng& rng);
double gamma_sample_one(const GammaParams& params, Rng& rng);
double student_t_sample_one(double df, Rng& rng);

// --- bulk samplers, deterministic in (n, params, seed) --------------------

std::vector<double> gev_sample(std::size_t n, const GevParams& params, RngSeed seed);
std::vector<double> gamma_sample(std::size_t n, const GammaParams& params, RngSeed seed);
std::vector<double> student_t_sample(std::size_t n, double df, RngSeed seed);

}  // namespace qlscm
