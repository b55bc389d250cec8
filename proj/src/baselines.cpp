#include "gth/baselines.hpp"

#include "gth/errors.hpp"
#include "gth/gth.hpp"
#include "gth/stiefel.hpp"

#include <Eigen/SVD>

#include <random>

namespace gth {

BaselineModel lsh_train(int d, int r, std::uint64_t seed) {
    if (d < 1 || r < 1) throw DimensionError("lsh_train: need d >= 1 and r >= 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    BaselineModel model;
    model.kind = BaselineKind::lsh;
    model.r = r;
    model.seed = seed;
    model.mean = Vector::Zero(d);
    model.w.resize(d, r);
    for (int j = 0; j < r; ++j) {
        for (int i = 0; i < d; ++i) model.w(i, j) = normal(rng);
    }
    return model;
}

BaselineModel pca_hash_train(const FeatureMatrix& x, int r) {
    BaselineModel model;
    model.kind = BaselineKind::pca;
    model.r = r;
    model.mean = x.rowwise().mean();
    model.w = pca_init(x.colwise() - model.mean, r);
    return model;
}

Matrix itq_rotation(const Matrix& v, int iters, const Matrix& r0,
                    std::vector<double>* loss_trace) {
    const Eigen::Index r = v.rows();
    if (r0.rows() != r || r0.cols() != r) {
        throw DimensionError("itq_rotation: rotation shape must match code length");
    }
    if (iters < 1) throw InputError("itq_rotation: need iters >= 1");
    Matrix rot = r0;
    for (int it = 0; it < iters; ++it) {
        const CodeMatrix b = sign_codes(rot, v);
        Eigen::JacobiSVD<Matrix> svd(b * v.transpose(),
                                     Eigen::ComputeFullU | Eigen::ComputeFullV);
        rot = svd.matrixV() * svd.matrixU().transpose();
        if (loss_trace) {
            loss_trace->push_back((b - rot.transpose() * v).squaredNorm());
        }
    }
    return rot;
}

BaselineModel itq_train(const FeatureMatrix& x, int r, int iters, std::uint64_t seed) {
    if (iters < 1) throw InputError("itq_train: need iters >= 1");
    BaselineModel model;
    model.kind = BaselineKind::itq;
    model.r = r;
    model.seed = seed;
    model.mean = x.rowwise().mean();
    const FeatureMatrix centered = x.colwise() - model.mean;
    const Projection p = pca_init(centered, r);
    const Matrix v = p.transpose() * centered;
    std::mt19937_64 rng(seed);
    const Matrix r0 = random_orthonormal(r, r, rng);
    model.w = p * itq_rotation(v, iters, r0);
    return model;
}

BaselineModel noda_train(const FeatureMatrix& x_target_only, int r, NodaMethod method,
                         int itq_iters, std::uint64_t seed) {
    return method == NodaMethod::pca ? pca_hash_train(x_target_only, r)
                                     : itq_train(x_target_only, r, itq_iters, seed);
}

CodeMatrix baseline_encode(const BaselineModel& model, const FeatureMatrix& x) {
    if (x.rows() != model.w.rows()) {
        throw DimensionError("baseline_encode: feature dimension mismatch");
    }
    return sign_codes(model.w, x.colwise() - model.mean);
}

} // namespace gth
