#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gth {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// d x N, one sample per column.
using FeatureMatrix = Matrix;

// d x r, column-orthonormal hashing projection.
using Projection = Matrix;

// r x N over {-1,+1}, stored as doubles so it composes with the relaxed loss.
using CodeMatrix = Matrix;

struct Dataset {
    FeatureMatrix features;                       // d x N
    std::optional<std::vector<std::int32_t>> labels; // size N when present
    std::string name;

    Eigen::Index dim() const { return features.rows(); }
    Eigen::Index size() const { return features.cols(); }
};

inline double max_abs(const Matrix& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

// max-norm of W'W - I, the orthonormality defect.
inline double orthonormality_defect(const Matrix& w) {
    Matrix g = w.transpose() * w;
    g.diagonal().array() -= 1.0;
    return max_abs(g);
}

} // namespace gth
