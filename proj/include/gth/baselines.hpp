#pragma once

#include "gth/types.hpp"

#include <cstdint>
#include <vector>

namespace gth {

enum class BaselineKind { lsh, pca, itq };

struct BaselineModel {
    BaselineKind kind = BaselineKind::lsh;
    Projection w; // d x r; orthonormal for pca/itq, Gaussian for lsh
    Vector mean;  // training mean (zero for lsh)
    int r = 0;
    std::uint64_t seed = 0;
};

BaselineModel lsh_train(int d, int r, std::uint64_t seed);

BaselineModel pca_hash_train(const FeatureMatrix& x, int r);

/// Alternating rotation fit on projected data v (r x N), starting from r0:
/// codes b = sgn(r'v), then the orthogonal Procrustes update of r against b.
/// The quantization loss |b - r'v|^2 after each round is appended to
/// loss_trace when given; it is non-increasing.
Matrix itq_rotation(const Matrix& v, int iters, const Matrix& r0,
                    std::vector<double>* loss_trace = nullptr);

BaselineModel itq_train(const FeatureMatrix& x, int r, int iters = 50,
                        std::uint64_t seed = 0);

enum class NodaMethod { pca, itq };

/// Target-only training control: delegates to the chosen hasher. Takes no
/// source data by construction.
BaselineModel noda_train(const FeatureMatrix& x_target_only, int r, NodaMethod method,
                         int itq_iters = 50, std::uint64_t seed = 0);

/// Shared encode path: codes = sgn(w' (x - mean)).
CodeMatrix baseline_encode(const BaselineModel& model, const FeatureMatrix& x);

} // namespace gth
