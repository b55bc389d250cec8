#include "gth/gth.hpp"

#include "gth/errors.hpp"
#include "gth/stiefel.hpp"

#include <cmath>
#include <random>

namespace gth {

double objective(const Projection& w_t, const Projection& w_s,
                 const CodeMatrix& b_t, const CodeMatrix& b_s,
                 const Matrix& m, const FeatureMatrix& x_t,
                 const FeatureMatrix& x_s, double lambda1, double lambda2) {
    if (w_t.rows() != w_s.rows() || w_t.cols() != w_s.cols() ||
        m.rows() != w_t.rows() || m.cols() != w_t.cols()) {
        throw DimensionError("objective: projection/weight shape mismatch");
    }
    if ((m.array() < 0.0).any()) {
        throw InputError("objective: negative weight entries");
    }
    const Matrix e = w_t - w_s;
    const double align = 0.5 * (m.array() * e.array() * e.array()).sum();
    const double qt = 0.5 * lambda1 * (b_t - w_t.transpose() * x_t).squaredNorm();
    const double qs = 0.5 * lambda2 * (b_s - w_s.transpose() * x_s).squaredNorm();
    return align + qt + qs;
}

Matrix grad_wt(const Projection& w_t, const Projection& w_s,
               const CodeMatrix& b_t, const Matrix& m,
               const FeatureMatrix& x_t, double lambda1) {
    if (w_t.rows() != w_s.rows() || w_t.cols() != w_s.cols() ||
        m.rows() != w_t.rows() || m.cols() != w_t.cols() ||
        x_t.rows() != w_t.rows() || b_t.rows() != w_t.cols() ||
        b_t.cols() != x_t.cols()) {
        throw DimensionError("grad_wt: shape mismatch");
    }
    // X (X'W - B') avoids forming the d x d scatter matrix
    return m.cwiseProduct(w_t - w_s) +
           lambda1 * (x_t * (x_t.transpose() * w_t - b_t.transpose()));
}

Matrix grad_ws(const Projection& w_s, const Projection& w_t,
               const CodeMatrix& b_s, const Matrix& m,
               const FeatureMatrix& x_s, double lambda2) {
    if (w_t.rows() != w_s.rows() || w_t.cols() != w_s.cols() ||
        m.rows() != w_s.rows() || m.cols() != w_s.cols() ||
        x_s.rows() != w_s.rows() || b_s.rows() != w_s.cols() ||
        b_s.cols() != x_s.cols()) {
        throw DimensionError("grad_ws: shape mismatch");
    }
    return m.cwiseProduct(w_s - w_t) +
           lambda2 * (x_s * (x_s.transpose() * w_s - b_s.transpose()));
}

CodeMatrix sign_codes(const Projection& w, const FeatureMatrix& x) {
    if (w.rows() != x.rows()) {
        throw DimensionError("sign_codes: dimension mismatch");
    }
    const Matrix v = w.transpose() * x;
    CodeMatrix b(v.rows(), v.cols());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        b(i) = v(i) >= 0.0 ? 1.0 : -1.0;
    }
    return b;
}

namespace {

void validate_config(const TrainConfig& cfg) {
    if (cfg.lambda1 < 0.0 || cfg.lambda2 < 0.0) {
        throw InputError("train: lambda1/lambda2 must be nonnegative");
    }
    if (cfg.outer_iters < 1 || cfg.inner_iters < 1) {
        throw InputError("train: iteration counts must be >= 1");
    }
    if (!(cfg.tau0 > 0.0)) throw InputError("train: tau0 must be positive");
    if (!(cfg.q > 0.0 && cfg.q < 1.0)) throw InputError("train: q must be in (0,1)");
    if (!(cfg.c > 0.0)) throw InputError("train: c must be positive");
    if (cfg.tol_w < 0.0) throw InputError("train: tol_w must be nonnegative");
}

// Seeded uniform +/-1 matrix; the low engine bit decides the sign, which
// keeps the draw independent of distribution implementations.
CodeMatrix random_codes(Eigen::Index r, Eigen::Index n, std::mt19937_64& rng) {
    CodeMatrix b(r, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < r; ++i) {
            b(i, j) = (rng() & 1u) ? 1.0 : -1.0;
        }
    }
    return b;
}

Projection take_step(const Projection& w, const Matrix& g, double tau,
                     StiefelMode mode) {
    return mode == StiefelMode::right_cayley ? stiefel_step(w, g, tau)
                                             : stiefel_step_full(w, g, tau);
}

} // namespace

GthModel train(const FeatureMatrix& x_t_raw, const FeatureMatrix& x_s_raw,
               int r, const TrainConfig& cfg, const IterationObserver& observer) {
    validate_config(cfg);
    const Eigen::Index d = x_t_raw.rows();
    if (x_s_raw.rows() != d) {
        throw DimensionError("train: target and source dimensions differ");
    }
    const Eigen::Index n_t = x_t_raw.cols();
    const Eigen::Index n_s = x_s_raw.cols();
    if (r < 1 || r > std::min({d, n_t, n_s})) {
        throw DimensionError("train: r must satisfy 1 <= r <= min(d, N_t, N_s)");
    }
    if (!x_t_raw.allFinite() || !x_s_raw.allFinite()) {
        throw InputError("train: non-finite feature entries");
    }

    GthModel model;
    model.r = r;
    model.config = cfg;
    model.mean_t = x_t_raw.rowwise().mean();
    model.mean_s = x_s_raw.rowwise().mean();

    FeatureMatrix xt = x_t_raw.colwise() - model.mean_t;
    FeatureMatrix xs = x_s_raw.colwise() - model.mean_s;
    if (cfg.normalize) {
        for (Eigen::Index j = 0; j < xt.cols(); ++j) {
            const double n = xt.col(j).norm();
            if (n > 0.0) xt.col(j) /= n;
        }
        for (Eigen::Index j = 0; j < xs.cols(); ++j) {
            const double n = xs.col(j).norm();
            if (n > 0.0) xs.col(j) /= n;
        }
    }

    Projection w_t = pca_init(xt, r);
    Projection w_s = pca_init(xs, r);

    std::mt19937_64 rng(cfg.seed);
    CodeMatrix b_t = random_codes(r, n_t, rng);
    CodeMatrix b_s = random_codes(r, n_s, rng);

    StepState st_t{cfg.tau0, w_t, Matrix::Zero(d, r)};
    StepState st_s{cfg.tau0, w_s, Matrix::Zero(d, r)};

    for (int k = 1; k <= cfg.outer_iters; ++k) {
        const Matrix m = weight_matrix(w_t, w_s, cfg.variant, cfg.q, cfg.c);
        const Projection w_t_before = w_t;
        const Projection w_s_before = w_s;

        for (int j = 0; j < cfg.inner_iters; ++j) {
            const Matrix g = grad_wt(w_t, w_s, b_t, m, xt, cfg.lambda1);
            st_t = bb_step(std::move(st_t), w_t, g);
            w_t = take_step(w_t, g, st_t.tau, cfg.stiefel_mode);
        }
        w_t = polish(w_t);

        for (int j = 0; j < cfg.inner_iters; ++j) {
            const Matrix g = grad_ws(w_s, w_t, b_s, m, xs, cfg.lambda2);
            st_s = bb_step(std::move(st_s), w_s, g);
            w_s = take_step(w_s, g, st_s.tau, cfg.stiefel_mode);
        }
        w_s = polish(w_s);

        b_t = sign_codes(w_t, xt);
        b_s = sign_codes(w_s, xs);

        IterationRecord rec;
        rec.objective = objective(w_t, w_s, b_t, b_s, m, xt, xs,
                                  cfg.lambda1, cfg.lambda2);
        rec.max_dw = std::max(max_abs(w_t - w_t_before),
                              max_abs(w_s - w_s_before));
        model.history.push_back(rec);
        if (observer) observer(k, w_t, w_s, m);
        if (rec.max_dw < cfg.tol_w) break;
    }

    model.w_t = std::move(w_t);
    model.w_s = std::move(w_s);
    return model;
}

CodeMatrix encode(const GthModel& model, const FeatureMatrix& x, Domain domain) {
    if (x.rows() != model.w_t.rows()) {
        throw DimensionError("encode: feature dimension differs from model");
    }
    const Vector& mean = domain == Domain::target ? model.mean_t : model.mean_s;
    const Projection& w = domain == Domain::target ? model.w_t : model.w_s;
    FeatureMatrix centered = x.colwise() - mean;
    if (model.config.normalize) {
        for (Eigen::Index j = 0; j < centered.cols(); ++j) {
            const double n = centered.col(j).norm();
            if (n > 0.0) centered.col(j) /= n;
        }
    }
    return sign_codes(w, centered);
}

} // namespace gth
