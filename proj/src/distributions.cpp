#include "qlscm/distributions.hpp"

#include <cmath>
#include <numbers>

#include "qlscm/errors.hpp"

namespace qlscm {

GevParams::GevParams(double mu_, double sigma_, double xi_)
    : mu(mu_), sigma(sigma_), xi(xi_) {
  if (!(sigma > 0.0)) throw DomainError("GevParams: sigma must be > 0");
}

GammaParams::GammaParams(double alpha_, double lambda_)
    : alpha(alpha_), lambda(lambda_) {
  if (!(alpha > 0.0)) throw DomainError("GammaParams: alpha must be > 0");
  if (!(lambda > 0.0)) throw DomainError("GammaParams: lambda must be > 0");
}

double gev_quantile(double p, const GevParams& params) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("gev_quantile: p must be in (0,1)");
  const double t = -std::log(p);
  if (params.xi == 0.0) return params.mu - params.sigma * std::log(t);
  return params.mu + params.sigma * (std::pow(t, -params.xi) - 1.0) / params.xi;
}

double gev_cdf(double x, const GevParams& params) {
  const double z = (x - params.mu) / params.sigma;
  if (params.xi == 0.0) return std::exp(-std::exp(-z));
  const double arg = 1.0 + params.xi * z;
  if (arg <= 0.0) return params.xi > 0.0 ? 0.0 : 1.0;
  return std::exp(-std::pow(arg, -1.0 / params.xi));
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// AS 241 algorithm PPND16 (Wichura, 1988).
double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("normal_quantile: p must be in (0,1)");
  const double q = p - 0.5;
  double r;
  if (std::abs(q) <= 0.425) {
    r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                 6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
               1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
             1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
           (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                 3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
               5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
             4.2313330701600911252e1) * r + 1.0);
  }
  r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
              3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
            4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
          (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
              6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
            2.05319162663775882187e0) * r + 1.0);
  } else {
    r -= 5.0;
    val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
              2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
            5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
          (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
              1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
            5.99832206555887937690e-1) * r + 1.0);
  }
  return q < 0.0 ? -val : val;
}

double uniform_from_gaussian(double z, double a, double b) {
  if (!(a < b)) throw DomainError("uniform_from_gaussian: requires a < b");
  return a + (b - a) * normal_cdf(z);
}

double gev_sample_one(const GevParams& params, Rng& rng) {
  return gev_quantile(rng.next_double(), params);
}

// Marsaglia-Tsang squeeze method; alpha < 1 handled by the boost
// G(a) = G(a+1) * U^(1/a).
double gamma_sample_one(const GammaParams& params, Rng& rng) {
  if (!(params.alpha > 0.0) || !(params.lambda > 0.0))
    throw DomainError("gamma_sample: invalid parameters");
  double alpha = params.alpha;
  double boost = 1.0;
  if (alpha < 1.0) {
    boost = std::pow(rng.next_double(), 1.0 / alpha);
    alpha += 1.0;
  }
  const double d = alpha - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x;
    double v;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.next_double();
    if (u < 1.0 - 0.0331 * x * x * x * x ||
        std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
      return boost * d * v / params.lambda;
    }
  }
}

double student_t_sample_one(double df, Rng& rng) {
  if (!(df > 0.0)) throw DomainError("student_t_sample: df must be > 0");
  const double z = rng.normal();
  const double chi2 = gamma_sample_one(GammaParams(df / 2.0, 0.5), rng);
  return z / std::sqrt(chi2 / df);
}

std::vector<double> gev_sample(std::size_t n, const GevParams& params, RngSeed seed) {
  Rng rng(seed);
  std::vector<double> out(n);
  for (auto& v : out) v = gev_sample_one(params, rng);
  return out;
}

std::vector<double> gamma_sample(std::size_t n, const GammaParams& params, RngSeed seed) {
  Rng rng(seed);
  std::vector<double> out(n);
  for (auto& v : out) v = gamma_sample_one(params, rng);
  return out;
}

std::vector<double> student_t_sample(std::size_t n, double df, RngSeed seed) {
  Rng rng(seed);
  std::vector<double> out(n);
  for (auto& v : out) v = student_t_sample_one(df, rng);
  return out;
}

}  // namespace qlscm
