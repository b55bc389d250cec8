#pragma once

#include "gth/types.hpp"

namespace gth {

enum class Variant { g, h };

/// Parameters of the sigmoid weight function. `mu` controls the decrease
/// rate, `delta` marks where the weight crosses 0.5. `degenerate` is set
/// when the error matrix used for selection was essentially zero; the
/// weight matrix is then all ones.
struct WeightParams {
    double mu = 1.0;
    double delta = 0.0;
    double c = 8.0;
    double q = 0.8;
    bool degenerate = false;
};

/// Sigmoid weight exp(mu*delta - mu*x^2) / (1 + exp(mu*delta - mu*x^2)),
/// evaluated without overflow for any finite x. Even in x, strictly
/// decreasing in |x|, range (0,1), equals 0.5 at x^2 = delta.
double omega(double x, const WeightParams& p);

/// Matching penalty (-1/(2mu)) (ln(1+exp(mu*delta - mu*x^2)) - ln(1+exp(mu*delta))).
/// Nonnegative, even, nondecreasing in |x|, rho(0) = 0, bounded by
/// ln(1+exp(mu*delta)) / (2mu). Satisfies rho'(x) = x * omega(x).
double rho(double x, const WeightParams& p);

/// delta = nearest-rank q-quantile of the squared entries of e, mu = c/delta.
/// An essentially-zero error matrix (delta < 1e-12) yields a degenerate
/// result so weight_matrix falls back to all-ones weights.
WeightParams select_params(const Matrix& e, double q, double c);

/// Per-entry loss weights for E = w_t - w_s. Variant g is the constant 2
/// (Gaussian error assumption); variant h evaluates the sigmoid weight at
/// each entry with parameters selected from E itself.
Matrix weight_matrix(const Projection& w_t, const Projection& w_s,
                     Variant variant, double q, double c);

} // namespace gth
