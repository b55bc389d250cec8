#include "gth/stiefel.hpp"

#include "gth/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <cmath>

namespace gth {

namespace {

// Flip each column so its largest-magnitude entry is positive. Ties go to
// the lowest row index.
void fix_column_signs(Matrix& w) {
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
        Eigen::Index imax = 0;
        double best = 0.0;
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
            const double a = std::abs(w(i, j));
            if (a > best) {
                best = a;
                imax = i;
            }
        }
        if (w(imax, j) < 0.0) w.col(j) = -w.col(j);
    }
}

} // namespace

Projection pca_init(const FeatureMatrix& x, int r) {
    const Eigen::Index d = x.rows();
    const Eigen::Index n = x.cols();
    if (r < 1 || r > std::min(d, n)) {
        throw DimensionError("pca_init: r must satisfy 1 <= r <= min(d, N)");
    }
    if (!x.allFinite()) {
        throw InputError("pca_init: input has non-finite entries");
    }

    Matrix w(d, r);
    if (n < d) {
        Eigen::BDCSVD<Matrix> svd(x, Eigen::ComputeThinU);
        w = svd.matrixU().leftCols(r);
    } else {
        const Matrix cov = x * x.transpose();
        Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
        // eigenvalues come out ascending; take the top r in descending order
        for (int j = 0; j < r; ++j) {
            w.col(j) = eig.eigenvectors().col(d - 1 - j);
        }
    }
    fix_column_signs(w);
    return w;
}

Matrix skew_from_gradient(const Matrix& w, const Matrix& g) {
    if (w.rows() != g.rows() || w.cols() != g.cols()) {
        throw DimensionError("skew_from_gradient: shape mismatch");
    }
    const Matrix a = w.transpose() * g - g.transpose() * w;
    return 0.5 * (a - a.transpose());
}

Matrix cayley_rotation(const Matrix& q, double tau) {
    if (!q.allFinite()) {
        throw InputError("cayley_rotation: non-finite entries");
    }
    const Eigen::Index r = q.rows();
    const Matrix half = (tau / 2.0) * q;
    const Matrix lhs = Matrix::Identity(r, r) + half;
    const Matrix rhs = Matrix::Identity(r, r) - half;
    return Eigen::PartialPivLU<Matrix>(lhs).solve(rhs);
}

Projection stiefel_step(const Projection& w, const Matrix& g, double tau) {
    return w * cayley_rotation(skew_from_gradient(w, g), tau);
}

Projection stiefel_step_full(const Projection& w, const Matrix& g, double tau) {
    if (w.rows() != g.rows() || w.cols() != g.cols()) {
        throw DimensionError("stiefel_step_full: shape mismatch");
    }
    if (!g.allFinite()) {
        throw InputError("stiefel_step_full: non-finite gradient");
    }
    const Eigen::Index d = w.rows();
    Matrix a = g * w.transpose() - w * g.transpose();
    a = 0.5 * (a - a.transpose());
    const Matrix half = (tau / 2.0) * a;
    const Matrix lhs = Matrix::Identity(d, d) + half;
    const Matrix rhs = (Matrix::Identity(d, d) - half) * w;
    return Eigen::PartialPivLU<Matrix>(lhs).solve(rhs);
}

StepState bb_step(StepState state, const Matrix& w_new, const Matrix& g_new) {
    const Matrix dw = w_new - state.prev_w;
    const Matrix dg = g_new - state.prev_g;
    const double num = dw.cwiseProduct(dw).sum();
    const double den = dw.cwiseProduct(dg).sum();
    if (std::abs(den) >= 1e-12) {
        const double tau = std::abs(num / den);
        if (std::isfinite(tau)) {
            state.tau = std::clamp(tau, state.tau_min, state.tau_max);
        }
    }
    state.prev_w = w_new;
    state.prev_g = g_new;
    return state;
}

Matrix random_orthonormal(int rows, int cols, std::mt19937_64& rng) {
    if (rows < 1 || cols < 1 || cols > rows) {
        throw DimensionError("random_orthonormal: need 1 <= cols <= rows");
    }
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix g(rows, cols);
    for (int j = 0; j < cols; ++j) {
        for (int i = 0; i < rows; ++i) g(i, j) = normal(rng);
    }
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ() * Matrix::Identity(rows, cols);
    const Vector diag = qr.matrixQR().topLeftCorner(cols, cols).diagonal();
    for (int j = 0; j < cols; ++j) {
        if (diag(j) < 0.0) q.col(j) = -q.col(j);
    }
    return q;
}

Projection polish(const Projection& w) {
    if (orthonormality_defect(w) <= 1e-6) return w;

    Eigen::HouseholderQR<Matrix> qr(w);
    const Eigen::Index r = w.cols();
    Matrix q = qr.householderQ() * Matrix::Identity(w.rows(), r);
    const Vector diag = qr.matrixQR().topLeftCorner(r, r).diagonal();

    const double dmax = diag.cwiseAbs().maxCoeff();
    for (Eigen::Index j = 0; j < r; ++j) {
        if (std::abs(diag(j)) < 1e-10 * dmax || dmax == 0.0) {
            throw NumericError("polish: rank-deficient projection");
        }
        if (diag(j) < 0.0) q.col(j) = -q.col(j);
    }
    return q;
}

} // namespace gth
