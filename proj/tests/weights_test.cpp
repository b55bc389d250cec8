#include "gth/weights.hpp"

#include "gth/errors.hpp"
#include "test_util.hpp"

#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

using namespace gth;

TEST_CASE("omega crosses one half at the demarcation point") {
    // delta values whose square roots square back exactly
    for (const double delta : {1.0, 0.25, 4.0}) {
        WeightParams p{3.0, delta};
        CHECK(omega(std::sqrt(delta), p) == 0.5);
        CHECK(omega(-std::sqrt(delta), p) == 0.5);
    }
}

TEST_CASE("omega is even") {
    WeightParams p{2.5, 0.7};
    for (const double x : {0.1, 0.9, 2.3, 17.0}) {
        CHECK(omega(x, p) == omega(-x, p));
    }
}

TEST_CASE("omega high-precision spot value") {
    WeightParams p{8.0, 1.0};
    // e^8 / (1 + e^8) to 17 significant digits
    CHECK(omega(0.0, p) == doctest::Approx(0.99966464986953352).epsilon(1e-15));
}

TEST_CASE("omega has range (0,1) and decreases in |x|") {
    WeightParams p{4.0, 0.5};
    double prev = 1.0;
    for (double x = 0.0; x <= 5.0; x += 0.25) {
        const double w = omega(x, p);
        CHECK(w > 0.0);
        CHECK(w < 1.0);
        CHECK(w < prev);
        prev = w;
    }
}

TEST_CASE("omega survives extreme arguments") {
    WeightParams p{100.0, 10.0};
    CHECK(std::isfinite(omega(1e8, p)));
    CHECK(std::isfinite(omega(0.0, p)));
    CHECK(omega(1e8, p) >= 0.0);
    CHECK(omega(0.0, p) <= 1.0);
}

TEST_CASE("rho vanishes at zero") {
    WeightParams p{2.0, 0.5};
    CHECK(rho(0.0, p) == 0.0);
}

TEST_CASE("rho approaches its ceiling for large x") {
    // ln(1+exp(mu*delta)) / (2*mu), precomputed to full precision
    WeightParams a{2.0, 0.5};
    CHECK(rho(1e6, a) == doctest::Approx(0.3283154218795557).epsilon(1e-14));
    WeightParams b{8.0, 1.0};
    CHECK(rho(1e6, b) == doctest::Approx(0.500020962898306).epsilon(1e-14));
}

TEST_CASE("rho is even, nonnegative, nondecreasing, bounded") {
    WeightParams p{3.0, 0.8};
    const double ceiling = std::log1p(std::exp(p.mu * p.delta)) / (2.0 * p.mu);
    double prev = -1.0;
    for (double x = 0.0; x <= 6.0; x += 0.2) {
        const double v = rho(x, p);
        CHECK(v >= 0.0);
        CHECK(v >= prev);
        CHECK(v <= ceiling + 1e-15);
        CHECK(rho(-x, p) == v);
        prev = v;
    }
}

TEST_CASE("rho derivative matches x times omega") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> xs(0.1, 3.0);
    std::uniform_real_distribution<double> mus(0.5, 10.0);
    std::uniform_real_distribution<double> deltas(0.1, 4.0);
    for (int k = 0; k < 100; ++k) {
        WeightParams p{mus(rng), deltas(rng)};
        const double x = xs(rng);
        const double h = 1e-6;
        const double fd = (rho(x + h, p) - rho(x - h, p)) / (2.0 * h);
        const double analytic = x * omega(x, p);
        CHECK(std::abs(fd - analytic) <= 1e-6 * std::max(1.0, std::abs(analytic)));
    }
}

TEST_CASE("select_params takes the nearest-rank quantile") {
    Matrix e(2, 2);
    e << 0.1, 0.2,
         0.3, 0.4;
    const WeightParams p = select_params(e, 0.75, 8.0);
    CHECK_FALSE(p.degenerate);
    CHECK(p.delta == 0.3 * 0.3); // 3rd of the 4 sorted squared entries
    CHECK(p.mu == doctest::Approx(88.888888888888886).epsilon(1e-12));
}

TEST_CASE("select_params flags an all-zero error matrix") {
    const WeightParams p = select_params(Matrix::Zero(3, 4), 0.8, 8.0);
    CHECK(p.degenerate);
}

TEST_CASE("select_params on a constant matrix") {
    const Matrix e = Matrix::Constant(2, 3, 0.5);
    const WeightParams p = select_params(e, 0.8, 8.0);
    CHECK(p.delta == 0.25);
    CHECK(p.mu == doctest::Approx(32.0).epsilon(1e-15));
}

TEST_CASE("select_params input validation") {
    CHECK_THROWS_AS((void)select_params(Matrix(), 0.8, 8.0), InputError);
    const Matrix e = Matrix::Constant(2, 2, 0.5);
    CHECK_THROWS_AS((void)select_params(e, 0.0, 8.0), InputError);
    CHECK_THROWS_AS((void)select_params(e, 1.0, 8.0), InputError);
    CHECK_THROWS_AS((void)select_params(e, 0.8, 0.0), InputError);
    Matrix bad = e;
    bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS((void)select_params(bad, 0.8, 8.0), InputError);
}

TEST_CASE("weight_matrix variant g is the constant 2") {
    const Matrix w_t = testutil::random_matrix(6, 4, 2);
    const Matrix w_s = testutil::random_matrix(6, 4, 3);
    const Matrix m = weight_matrix(w_t, w_s, Variant::g, 0.8, 8.0);
    CHECK((m.array() == 2.0).all());
}

TEST_CASE("weight_matrix variant h degenerates to ones on equal inputs") {
    const Matrix w = testutil::random_matrix(5, 3, 4);
    const Matrix m = weight_matrix(w, w, Variant::h, 0.8, 8.0);
    CHECK((m.array() == 1.0).all());
}

TEST_CASE("weight_matrix variant h is monotone in the error magnitude") {
    const Matrix w_t = testutil::random_matrix(8, 5, 5);
    const Matrix w_s = testutil::random_matrix(8, 5, 6);
    const Matrix m = weight_matrix(w_t, w_s, Variant::h, 0.8, 8.0);
    CHECK((m.array() > 0.0).all());
    CHECK((m.array() < 1.0).all());

    const Matrix e = w_t - w_s;
    std::vector<std::pair<double, double>> pairs;
    for (Eigen::Index j = 0; j < e.cols(); ++j) {
        for (Eigen::Index i = 0; i < e.rows(); ++i) {
            pairs.emplace_back(std::abs(e(i, j)), m(i, j));
        }
    }
    std::sort(pairs.begin(), pairs.end());
    for (size_t k = 1; k < pairs.size(); ++k) {
        CHECK(pairs[k].second <= pairs[k - 1].second + 1e-15);
    }
}

TEST_CASE("weight_matrix rejects shape mismatch") {
    const Matrix w_t = testutil::random_matrix(4, 3, 7);
    const Matrix w_s = testutil::random_matrix(4, 2, 8);
    CHECK_THROWS_AS((void)weight_matrix(w_t, w_s, Variant::h, 0.8, 8.0), DimensionError);
}
