#include "gth/weights.hpp"

#include "gth/errors.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace gth {

namespace {

double sigmoid(double a) {
    if (a >= 0.0) return 1.0 / (1.0 + std::exp(-a));
    const double e = std::exp(a);
    return e / (1.0 + e);
}

// ln(1 + exp(a)) without overflow.
double softplus(double a) {
    if (a > 0.0) return a + std::log1p(std::exp(-a));
    return std::log1p(std::exp(a));
}

} // namespace

double omega(double x, const WeightParams& p) {
    return sigmoid(p.mu * p.delta - p.mu * x * x);
}

double rho(double x, const WeightParams& p) {
    const double a = p.mu * p.delta;
    return (softplus(a) - softplus(a - p.mu * x * x)) / (2.0 * p.mu);
}

WeightParams select_params(const Matrix& e, double q, double c) {
    if (e.size() == 0) throw InputError("select_params: empty error matrix");
    if (!(q > 0.0 && q < 1.0)) throw InputError("select_params: q must be in (0,1)");
    if (!(c > 0.0)) throw InputError("select_params: c must be positive");
    if (!e.allFinite()) throw InputError("select_params: non-finite error matrix");

    std::vector<double> sq(static_cast<size_t>(e.size()));
    for (Eigen::Index i = 0; i < e.size(); ++i) {
        const double v = e(i);
        sq[static_cast<size_t>(i)] = v * v;
    }
    std::sort(sq.begin(), sq.end());

    // nearest-rank quantile: ceil(q*n)-th smallest (1-based); the small
    // slack guards against q*n landing a hair above an integer
    const size_t n = sq.size();
    size_t rank = static_cast<size_t>(std::ceil(q * static_cast<double>(n) - 1e-9));
    rank = std::clamp<size_t>(rank, 1, n);

    WeightParams p;
    p.q = q;
    p.c = c;
    p.delta = sq[rank - 1];
    if (p.delta < 1e-12) {
        p.degenerate = true;
        p.mu = 1.0;
        return p;
    }
    p.mu = c / p.delta;
    return p;
}

Matrix weight_matrix(const Projection& w_t, const Projection& w_s,
                     Variant variant, double q, double c) {
    if (w_t.rows() != w_s.rows() || w_t.cols() != w_s.cols()) {
        throw DimensionError("weight_matrix: shape mismatch");
    }
    if (variant == Variant::g) {
        return Matrix::Constant(w_t.rows(), w_t.cols(), 2.0);
    }
    const Matrix e = w_t - w_s;
    const WeightParams p = select_params(e, q, c);
    if (p.degenerate) {
        return Matrix::Ones(e.rows(), e.cols());
    }
    Matrix m(e.rows(), e.cols());
    for (Eigen::Index i = 0; i < e.size(); ++i) m(i) = omega(e(i), p);
    return m;
}

} // namespace gth
