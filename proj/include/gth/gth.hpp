#pragma once

#include "gth/types.hpp"
#include "gth/weights.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace gth {

enum class StiefelMode { right_cayley, full_cayley };
enum class Domain { target, source };

struct TrainConfig {
    double lambda1 = 0.1;
    double lambda2 = 1.0;
    Variant variant = Variant::h;
    int outer_iters = 30;
    int inner_iters = 5;
    double tau0 = 0.1;
    double q = 0.8;
    double c = 8.0;
    StiefelMode stiefel_mode = StiefelMode::right_cayley;
    std::uint64_t seed = 0;
    double tol_w = 1e-5;
    bool normalize = false; // unit-length columns after centering
};

struct IterationRecord {
    double objective = 0.0;
    double max_dw = 0.0;
};

struct GthModel {
    Projection w_t;
    Projection w_s;
    Vector mean_t;
    Vector mean_s;
    int r = 0;
    TrainConfig config;
    std::vector<IterationRecord> history;
};

/// Relaxed transfer-hashing objective:
///   1/2 ||M^(1/2) .* (W_t - W_s)||^2
/// + lambda1/2 ||B_t - W_t'X_t||^2 + lambda2/2 ||B_s - W_s'X_s||^2.
double objective(const Projection& w_t, const Projection& w_s,
                 const CodeMatrix& b_t, const CodeMatrix& b_s,
                 const Matrix& m, const FeatureMatrix& x_t,
                 const FeatureMatrix& x_s, double lambda1, double lambda2);

/// d objective / d W_t = M .* (W_t - W_s) + lambda1 (X_t X_t' W_t - X_t B_t').
Matrix grad_wt(const Projection& w_t, const Projection& w_s,
               const CodeMatrix& b_t, const Matrix& m,
               const FeatureMatrix& x_t, double lambda1);

/// d objective / d W_s = M .* (W_s - W_t) + lambda2 (X_s X_s' W_s - X_s B_s').
Matrix grad_ws(const Projection& w_s, const Projection& w_t,
               const CodeMatrix& b_s, const Matrix& m,
               const FeatureMatrix& x_s, double lambda2);

/// B = sgn(W'X) with sgn(0) = +1.
CodeMatrix sign_codes(const Projection& w, const FeatureMatrix& x);

/// Per-outer-iteration observer: (iteration, W_t, W_s, M). For invariant
/// checks and instrumentation; pass nullptr to skip.
using IterationObserver =
    std::function<void(int, const Projection&, const Projection&, const Matrix&)>;

/// Alternating optimization of both projections: per outer iteration the
/// weight matrix is recomputed from the previous projections, each
/// projection takes `inner_iters` BB-sized curvilinear steps, then both
/// code matrices are refreshed by sign quantization. Stops after
/// `outer_iters` iterations or when max(|dW_t|, |dW_s|) < tol_w.
GthModel train(const FeatureMatrix& x_t, const FeatureMatrix& x_s, int r,
               const TrainConfig& cfg,
               const IterationObserver& observer = nullptr);

/// Centers x with the stored domain mean, projects, and sign-quantizes.
CodeMatrix encode(const GthModel& model, const FeatureMatrix& x, Domain domain);

} // namespace gth
