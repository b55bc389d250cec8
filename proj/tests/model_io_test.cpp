#include "gth/model_io.hpp"

#include "gth/errors.hpp"
#include "test_util.hpp"

#include "doctest.h"

#include <fstream>

using namespace gth;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

GthModel tiny_model(std::uint64_t seed) {
    const Matrix x_t = testutil::random_matrix(7, 15, seed);
    const Matrix x_s = testutil::random_matrix(7, 18, seed + 1);
    TrainConfig cfg;
    cfg.outer_iters = 4;
    cfg.seed = seed;
    cfg.lambda1 = 0.37;
    cfg.q = 0.65;
    return train(x_t, x_s, 3, cfg);
}

} // namespace

TEST_CASE("gth model round-trips bit-exactly") {
    testutil::TempDir dir("modelio");
    const GthModel model = tiny_model(21);
    const std::string path = dir.file("m.gthm");
    save_model(path, model);
    const GthModel back = load_model(path);

    CHECK(max_abs(back.w_t - model.w_t) == 0.0);
    CHECK(max_abs(back.w_s - model.w_s) == 0.0);
    CHECK(max_abs(Matrix(back.mean_t - model.mean_t)) == 0.0);
    CHECK(max_abs(Matrix(back.mean_s - model.mean_s)) == 0.0);
    CHECK(back.r == model.r);
    CHECK(back.config.lambda1 == model.config.lambda1);
    CHECK(back.config.lambda2 == model.config.lambda2);
    CHECK(back.config.variant == model.config.variant);
    CHECK(back.config.outer_iters == model.config.outer_iters);
    CHECK(back.config.inner_iters == model.config.inner_iters);
    CHECK(back.config.tau0 == model.config.tau0);
    CHECK(back.config.q == model.config.q);
    CHECK(back.config.c == model.config.c);
    CHECK(back.config.stiefel_mode == model.config.stiefel_mode);
    CHECK(back.config.seed == model.config.seed);
    CHECK(back.config.tol_w == model.config.tol_w);
    CHECK(back.config.normalize == model.config.normalize);
    REQUIRE(back.history.size() == model.history.size());
    for (size_t k = 0; k < model.history.size(); ++k) {
        CHECK(back.history[k].objective == model.history[k].objective);
        CHECK(back.history[k].max_dw == model.history[k].max_dw);
    }

    const std::string again = dir.file("m2.gthm");
    save_model(again, back);
    CHECK(slurp(path) == slurp(again));
}

TEST_CASE("baseline models round-trip for every kind") {
    testutil::TempDir dir("baseio");
    const Matrix x = testutil::random_matrix(8, 20, 22);

    const BaselineModel models[] = {
        lsh_train(8, 3, 77),
        pca_hash_train(x, 3),
        itq_train(x, 3, 20, 78),
    };
    for (const BaselineModel& model : models) {
        const std::string path = dir.file("b.base");
        save_baseline(path, model);
        const BaselineModel back = load_baseline(path);
        CHECK(back.kind == model.kind);
        CHECK(back.r == model.r);
        CHECK(back.seed == model.seed);
        CHECK(max_abs(back.w - model.w) == 0.0);
        CHECK(max_abs(Matrix(back.mean - model.mean)) == 0.0);

        const std::string again = dir.file("b2.base");
        save_baseline(again, back);
        CHECK(slurp(path) == slurp(again));
    }
}

TEST_CASE("peek_model_kind distinguishes the two containers") {
    testutil::TempDir dir("peek");
    const GthModel model = tiny_model(23);
    const std::string gpath = dir.file("m.gthm");
    save_model(gpath, model);
    CHECK(peek_model_kind(gpath) == ModelFileKind::gth);

    const std::string bpath = dir.file("b.base");
    save_baseline(bpath, lsh_train(4, 2, 1));
    CHECK(peek_model_kind(bpath) == ModelFileKind::baseline);

    const std::string junk = dir.file("junk.bin");
    std::ofstream(junk) << "not a model at all";
    CHECK_THROWS_AS((void)peek_model_kind(junk), IoError);
}

TEST_CASE("model loaders reject the wrong container and damage") {
    testutil::TempDir dir("badmodel");
    const GthModel model = tiny_model(24);
    const std::string gpath = dir.file("m.gthm");
    save_model(gpath, model);
    const std::string bpath = dir.file("b.base");
    save_baseline(bpath, pca_hash_train(testutil::random_matrix(6, 12, 25), 2));

    CHECK_THROWS_AS((void)load_model(bpath), IoError);
    CHECK_THROWS_AS((void)load_baseline(gpath), IoError);
    CHECK_THROWS_AS((void)load_model(dir.file("missing.gthm")), IoError);

    const std::string bytes = slurp(gpath);
    const std::string cut = dir.file("cut.gthm");
    std::ofstream(cut, std::ios::binary) << bytes.substr(0, bytes.size() - 9);
    CHECK_THROWS_AS((void)load_model(cut), IoError);

    std::string wrong_version = bytes;
    wrong_version[4] = 9; // version word follows the magic
    const std::string vq = dir.file("v9.gthm");
    std::ofstream(vq, std::ios::binary) << wrong_version;
    CHECK_THROWS_AS((void)load_model(vq), IoError);
}

TEST_CASE("save_model rejects inconsistent shapes") {
    GthModel model = tiny_model(26);
    model.mean_t = Vector::Zero(3);
    testutil::TempDir dir("shapes");
    CHECK_THROWS_AS(save_model(dir.file("x.gthm"), model), InputError);
}
