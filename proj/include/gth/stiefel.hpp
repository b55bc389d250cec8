#pragma once

#include "gth/types.hpp"

#include <random>

namespace gth {

/// Step-size state for Barzilai-Borwein sizing of curvilinear steps.
/// `tau` always stays inside [tau_min, tau_max].
struct StepState {
    double tau = 0.1;
    Matrix prev_w;
    Matrix prev_g;
    double tau_min = 1e-5;
    double tau_max = 1.0;
};

/// Top-r eigenvectors of x*x' for column-centered x, sorted by descending
/// eigenvalue. Columns are sign-fixed so the entry of largest magnitude in
/// each column is positive. Uses a thin SVD of x when N < d instead of
/// forming the d x d covariance.
Projection pca_init(const FeatureMatrix& x, int r);

/// Q = W'G - G'W, symmetrized to (A - A')/2 so the result is exactly skew.
Matrix skew_from_gradient(const Matrix& w, const Matrix& g);

/// Cayley transform R = (I + (tau/2)Q)^-1 (I - (tau/2)Q) of a skew Q.
/// R is orthogonal with determinant +1.
Matrix cayley_rotation(const Matrix& q, double tau);

/// One curvilinear step W -> W * cayley_rotation(skew_from_gradient(W,G), tau).
/// Right-multiplication keeps the columns orthonormal and the column space
/// of W unchanged.
Projection stiefel_step(const Projection& w, const Matrix& g, double tau);

/// Left Cayley variant: A = GW' - WG' (d x d), W -> (I + (tau/2)A)^-1 (I - (tau/2)A) W.
/// Can leave the initial column space; exposed for experimentation.
Projection stiefel_step_full(const Projection& w, const Matrix& g, double tau);

/// BB1 update: tau = |<dW,dW> / <dW,dG>| clamped to [tau_min, tau_max],
/// with dW = w_new - prev_w, dG = g_new - prev_g. Keeps the previous tau
/// when the denominator is below 1e-12 or the ratio is non-finite.
/// prev_w / prev_g are replaced by the new pair.
StepState bb_step(StepState state, const Matrix& w_new, const Matrix& g_new);

/// Re-orthonormalizes w via thin QR with positive diagonal when the
/// orthonormality defect exceeds 1e-6; otherwise returns w unchanged.
/// Throws NumericError on rank deficiency.
Projection polish(const Projection& w);

/// rows x cols matrix with orthonormal columns: QR of a seeded Gaussian
/// draw, sign-fixed so the R factor has a positive diagonal.
Matrix random_orthonormal(int rows, int cols, std::mt19937_64& rng);

} // namespace gth
