#include "gth/data_io.hpp"

#include "gth/errors.hpp"
#include "test_util.hpp"

#include "doctest.h"

#include <fstream>
#include <set>

using namespace gth;

namespace {

void write_text(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::trunc);
    out << body;
}

} // namespace

TEST_CASE("load_csv reads samples row-wise with a trailing label column") {
    testutil::TempDir dir("csv");
    const std::string path = dir.file("small.csv");
    write_text(path, "1,2,3,7\n4,5,6,9\n");
    const Dataset ds = load_csv(path, true, false);
    CHECK(ds.dim() == 3);
    CHECK(ds.size() == 2);
    REQUIRE(ds.labels.has_value());
    CHECK((*ds.labels)[0] == 7);
    CHECK((*ds.labels)[1] == 9);
    CHECK(ds.features(0, 0) == 1.0);
    CHECK(ds.features(2, 1) == 6.0);
}

TEST_CASE("load_csv header and label flags") {
    testutil::TempDir dir("csvflags");
    const std::string path = dir.file("data.csv");
    write_text(path, "a,b\r\n1.5,2.5\r\n3.5,4.5\r\n");
    const Dataset ds = load_csv(path, false, true);
    CHECK(ds.dim() == 2);
    CHECK(ds.size() == 2);
    CHECK_FALSE(ds.labels.has_value());
    CHECK(ds.features(1, 1) == 4.5);
}

TEST_CASE("load_csv rejects malformed input") {
    testutil::TempDir dir("csvbad");
    const std::string ragged = dir.file("ragged.csv");
    write_text(ragged, "1,2,3\n4,5\n");
    CHECK_THROWS_AS((void)load_csv(ragged, false, false), InputError);

    const std::string junk = dir.file("junk.csv");
    write_text(junk, "1,alpha,3\n");
    CHECK_THROWS_AS((void)load_csv(junk, false, false), InputError);

    const std::string nan = dir.file("nan.csv");
    write_text(nan, "1,nan,3\n");
    CHECK_THROWS_AS((void)load_csv(nan, false, false), InputError);

    const std::string fraclabel = dir.file("fraclabel.csv");
    write_text(fraclabel, "1,2,3.5\n");
    CHECK_THROWS_AS((void)load_csv(fraclabel, true, false), InputError);

    const std::string empty = dir.file("empty.csv");
    write_text(empty, "");
    CHECK_THROWS_AS((void)load_csv(empty, false, false), InputError);

    CHECK_THROWS_AS((void)load_csv(dir.file("missing.csv"), false, false), IoError);
}

TEST_CASE("fbin round-trips float-representable features exactly") {
    testutil::TempDir dir("fbin");
    Dataset ds;
    ds.features = testutil::random_matrix(5, 7, 1).unaryExpr(
        [](double v) { return static_cast<double>(static_cast<float>(v)); });
    ds.labels = std::vector<std::int32_t>{0, 1, 2, 0, 1, 2, 0};
    const std::string path = dir.file("data.fbin");
    save_fbin(path, ds);
    const Dataset back = load_fbin(path);
    CHECK(back.dim() == 5);
    CHECK(back.size() == 7);
    CHECK(max_abs(back.features - ds.features) == 0.0);
    REQUIRE(back.labels.has_value());
    CHECK(*back.labels == *ds.labels);
}

TEST_CASE("fbin save-load-save is a byte fixed point") {
    testutil::TempDir dir("fbin2");
    Dataset ds;
    ds.features = testutil::random_matrix(4, 9, 2);
    const std::string a = dir.file("a.fbin");
    const std::string b = dir.file("b.fbin");
    save_fbin(a, ds);
    save_fbin(b, load_fbin(a));

    std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
    const std::string ba((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
    const std::string bb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
    CHECK(ba == bb);
    CHECK(!ba.empty());
}

TEST_CASE("fbin rejects truncated and foreign files") {
    testutil::TempDir dir("fbinbad");
    Dataset ds;
    ds.features = testutil::random_matrix(3, 4, 3);
    const std::string path = dir.file("data.fbin");
    save_fbin(path, ds);

    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    const std::string cut = dir.file("cut.fbin");
    write_text(cut, bytes.substr(0, bytes.size() / 2));
    CHECK_THROWS_AS((void)load_fbin(cut), IoError);

    const std::string alien = dir.file("alien.fbin");
    write_text(alien, "NOPE" + bytes.substr(4));
    CHECK_THROWS_AS((void)load_fbin(alien), IoError);
}

TEST_CASE("load dispatches on format") {
    testutil::TempDir dir("dispatch");
    const std::string csv = dir.file("x.csv");
    write_text(csv, "1,2\n3,4\n");
    CHECK(load(csv, FileFormat::csv).size() == 2);

    Dataset ds;
    ds.features = testutil::random_matrix(2, 3, 4);
    const std::string fbin = dir.file("x.fbin");
    save_fbin(fbin, ds);
    CHECK(load(fbin, FileFormat::fbin).size() == 3);
}

TEST_CASE("synth is deterministic per seed") {
    SynthConfig cfg;
    cfg.d = 16;
    cfg.p = 4;
    cfg.n_s = 30;
    cfg.n_t = 20;
    cfg.seed = 5;
    const SynthResult a = synth(cfg);
    const SynthResult b = synth(cfg);
    CHECK(max_abs(a.source.features - b.source.features) == 0.0);
    CHECK(max_abs(a.target.features - b.target.features) == 0.0);
    CHECK(*a.source.labels == *b.source.labels);
    CHECK(*a.target.labels == *b.target.labels);

    cfg.seed = 6;
    const SynthResult c = synth(cfg);
    CHECK(max_abs(a.source.features - c.source.features) > 0.0);
}

TEST_CASE("synth with zero angle shares the class means across domains") {
    SynthConfig cfg;
    cfg.d = 12;
    cfg.p = 3;
    cfg.angle = 0.0;
    cfg.noise_sigma = 0.0;
    cfg.n_s = 15;
    cfg.n_t = 15;
    cfg.seed = 7;
    const SynthResult result = synth(cfg);
    CHECK(max_abs(result.source_class_means - result.target_class_means) <= 1e-12);
}

TEST_CASE("synth rotates the class means when the angle is positive") {
    SynthConfig cfg;
    cfg.d = 12;
    cfg.p = 3;
    cfg.angle = 0.4;
    cfg.noise_sigma = 0.0;
    cfg.n_s = 15;
    cfg.n_t = 15;
    cfg.seed = 7;
    const SynthResult result = synth(cfg);
    CHECK(max_abs(result.source_class_means - result.target_class_means) > 1e-3);
    // the rotation is orthogonal, so norms survive
    for (int k = 0; k < cfg.classes; ++k) {
        CHECK(result.source_class_means.col(k).norm() ==
              doctest::Approx(result.target_class_means.col(k).norm()).epsilon(1e-10));
    }
}

TEST_CASE("synth assigns balanced round-robin labels") {
    SynthConfig cfg;
    cfg.d = 8;
    cfg.p = 2;
    cfg.classes = 4;
    cfg.n_s = 12;
    cfg.n_t = 8;
    const SynthResult result = synth(cfg);
    std::vector<int> counts(4, 0);
    for (const auto l : *result.source.labels) ++counts[static_cast<size_t>(l)];
    for (const int c : counts) CHECK(c == 3);
}

TEST_CASE("synth separates class means even in low latent dimensions") {
    SynthConfig cfg;
    cfg.d = 8;
    cfg.p = 2;
    cfg.classes = 5;
    cfg.n_s = 10;
    cfg.n_t = 5;
    for (const std::uint64_t seed : {0, 1, 2, 3, 4, 5, 6, 7}) {
        cfg.seed = seed;
        CHECK_NOTHROW((void)synth(cfg));
    }
}

TEST_CASE("synth validates its configuration") {
    SynthConfig cfg;
    cfg.p = 20;
    cfg.d = 10;
    CHECK_THROWS_AS((void)synth(cfg), InputError);
    cfg = SynthConfig{};
    cfg.angle = 2.0;
    CHECK_THROWS_AS((void)synth(cfg), InputError);
    cfg = SynthConfig{};
    cfg.noise_sigma = -0.1;
    CHECK_THROWS_AS((void)synth(cfg), InputError);
    cfg = SynthConfig{};
    cfg.classes = 0;
    CHECK_THROWS_AS((void)synth(cfg), InputError);
    cfg = SynthConfig{};
    cfg.n_t = 0;
    CHECK_THROWS_AS((void)synth(cfg), InputError);
}

TEST_CASE("split partitions the dataset deterministically") {
    Dataset ds;
    const int n = 20;
    ds.features.resize(3, n);
    ds.labels.emplace(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        ds.features.col(i) = Vector::Constant(3, static_cast<double>(i));
        (*ds.labels)[static_cast<size_t>(i)] = i % 4;
    }

    const auto [train, query] = split(ds, 6, 11);
    CHECK(train.size() == 14);
    CHECK(query.size() == 6);

    const auto [train2, query2] = split(ds, 6, 11);
    CHECK(max_abs(train.features - train2.features) == 0.0);
    CHECK(max_abs(query.features - query2.features) == 0.0);

    // disjoint cover: the first feature row marks the original index
    std::set<int> seen;
    for (int i = 0; i < train.size(); ++i) seen.insert(static_cast<int>(train.features(0, i)));
    for (int i = 0; i < query.size(); ++i) {
        const int idx = static_cast<int>(query.features(0, i));
        CHECK(seen.count(idx) == 0);
        seen.insert(idx);
    }
    CHECK(seen.size() == static_cast<size_t>(n));

    // labels follow their samples
    for (int i = 0; i < query.size(); ++i) {
        const int idx = static_cast<int>(query.features(0, i));
        CHECK((*query.labels)[static_cast<size_t>(i)] == idx % 4);
    }
}

TEST_CASE("split edge cases") {
    Dataset ds;
    ds.features = testutil::random_matrix(2, 5, 12);
    const auto [train, query] = split(ds, 0, 1);
    CHECK(query.size() == 0);
    CHECK(max_abs(train.features - ds.features) == 0.0);

    CHECK_THROWS_AS((void)split(ds, 5, 1), InputError);
    CHECK_THROWS_AS((void)split(ds, -1, 1), InputError);
}

TEST_CASE("center removes the sample mean") {
    Dataset ds;
    ds.features = testutil::random_matrix(6, 25, 13);
    const auto [centered, mean] = center(ds);
    CHECK(max_abs(Matrix(centered.features.rowwise().mean())) <= 1e-10);
    CHECK(max_abs(Matrix((ds.features.colwise() - mean) - centered.features)) == 0.0);

    const auto [centered2, mean2] = center(centered);
    CHECK(max_abs(Matrix(mean2)) <= 1e-12);
    CHECK(max_abs(centered2.features - centered.features) <= 1e-12);

    Dataset one;
    one.features = testutil::random_matrix(4, 1, 14);
    const auto [conly, monly] = center(one);
    CHECK(max_abs(conly.features) == 0.0);
    CHECK(max_abs(Matrix(monly - one.features.col(0))) == 0.0);
}
