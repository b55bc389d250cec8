#include "gth/data_io.hpp"

#include "gth/errors.hpp"
#include "gth/stiefel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>
#include <vector>

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts unsupported");

namespace gth {

namespace {

void validate_dataset(const Dataset& ds, const std::string& origin) {
    if (!ds.features.allFinite()) {
        throw InputError(origin + ": non-finite feature value");
    }
    if (ds.labels && static_cast<int>(ds.labels->size()) != ds.size()) {
        throw InputError(origin + ": label count does not match sample count");
    }
}

template <typename T>
void read_raw(std::ifstream& in, T* dst, size_t count, const std::string& path) {
    in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(count * sizeof(T)));
    if (static_cast<size_t>(in.gcount()) != count * sizeof(T)) {
        throw IoError(path + ": truncated file");
    }
}

template <typename T>
void write_raw(std::ofstream& out, const T* src, size_t count) {
    out.write(reinterpret_cast<const char*>(src), static_cast<std::streamsize>(count * sizeof(T)));
}

} // namespace

Dataset load(const std::string& path, FileFormat format,
             bool csv_has_labels, bool csv_has_header) {
    return format == FileFormat::csv ? load_csv(path, csv_has_labels, csv_has_header)
                                     : load_fbin(path);
}

Dataset load_csv(const std::string& path, bool has_labels, bool has_header) {
    std::ifstream in(path);
    if (!in) throw IoError(path + ": cannot open");

    std::vector<std::vector<double>> rows;
    std::vector<std::int32_t> labels;
    std::string line;
    size_t lineno = 0;
    bool skipped_header = !has_header;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!skipped_header) {
            skipped_header = true;
            continue;
        }
        std::vector<double> fields;
        const char* p = line.c_str();
        while (true) {
            char* end = nullptr;
            const double v = std::strtod(p, &end);
            if (end == p) {
                throw InputError(path + ":" + std::to_string(lineno) + ": unparseable field");
            }
            fields.push_back(v);
            p = end;
            while (*p == ' ' || *p == '\t') ++p;
            if (*p == ',') {
                ++p;
            } else if (*p == '\0') {
                break;
            } else {
                throw InputError(path + ":" + std::to_string(lineno) + ": unparseable field");
            }
        }
        if (has_labels) {
            if (fields.size() < 2) {
                throw InputError(path + ":" + std::to_string(lineno) + ": missing label column");
            }
            const double lv = fields.back();
            fields.pop_back();
            if (lv != std::floor(lv) || !std::isfinite(lv)) {
                throw InputError(path + ":" + std::to_string(lineno) + ": non-integer label");
            }
            labels.push_back(static_cast<std::int32_t>(lv));
        }
        if (!rows.empty() && fields.size() != rows.front().size()) {
            throw InputError(path + ":" + std::to_string(lineno) + ": ragged row");
        }
        rows.push_back(std::move(fields));
    }
    if (rows.empty()) throw InputError(path + ": no data rows");

    Dataset ds;
    ds.name = path;
    const int n = static_cast<int>(rows.size());
    const int d = static_cast<int>(rows.front().size());
    ds.features.resize(d, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) ds.features(j, i) = rows[static_cast<size_t>(i)][static_cast<size_t>(j)];
    }
    if (has_labels) ds.labels = std::move(labels);
    validate_dataset(ds, path);
    return ds;
}

Dataset load_fbin(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path + ": cannot open");

    char magic[4];
    read_raw(in, magic, 4, path);
    if (std::memcmp(magic, "GTHF", 4) != 0) {
        throw IoError(path + ": bad magic (expected GTHF)");
    }
    std::uint32_t n = 0, d = 0;
    std::uint8_t has_labels = 0;
    read_raw(in, &n, 1, path);
    read_raw(in, &d, 1, path);
    read_raw(in, &has_labels, 1, path);
    if (n == 0 || d == 0 || has_labels > 1) {
        throw IoError(path + ": bad header");
    }

    std::vector<float> buf(static_cast<size_t>(n) * d);
    read_raw(in, buf.data(), buf.size(), path);

    Dataset ds;
    ds.name = path;
    ds.features.resize(d, n);
    for (std::uint32_t i = 0; i < n; ++i) {
        for (std::uint32_t j = 0; j < d; ++j) {
            ds.features(j, i) = buf[static_cast<size_t>(i) * d + j];
        }
    }
    if (has_labels) {
        std::vector<std::int32_t> labels(n);
        read_raw(in, labels.data(), labels.size(), path);
        ds.labels = std::move(labels);
    }
    validate_dataset(ds, path);
    return ds;
}

void save_fbin(const std::string& path, const Dataset& ds) {
    if (ds.size() == 0 || ds.dim() == 0) throw InputError("save_fbin: empty dataset");
    validate_dataset(ds, "save_fbin");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path + ": cannot open for writing");

    const std::uint32_t n = static_cast<std::uint32_t>(ds.size());
    const std::uint32_t d = static_cast<std::uint32_t>(ds.dim());
    const std::uint8_t has_labels = ds.labels ? 1 : 0;
    write_raw(out, "GTHF", 4);
    write_raw(out, &n, 1);
    write_raw(out, &d, 1);
    write_raw(out, &has_labels, 1);

    std::vector<float> buf(static_cast<size_t>(n) * d);
    for (std::uint32_t i = 0; i < n; ++i) {
        for (std::uint32_t j = 0; j < d; ++j) {
            buf[static_cast<size_t>(i) * d + j] = static_cast<float>(ds.features(j, i));
        }
    }
    write_raw(out, buf.data(), buf.size());
    if (has_labels) write_raw(out, ds.labels->data(), ds.labels->size());
    if (!out) throw IoError(path + ": write failed");
}

namespace {

// generator shape constants; the heavy within-class spread over a near-flat
// spectrum makes a 100-sample quantizer fit noisy enough that source
// guidance helps, while wide mean separation keeps classes retrievable
constexpr double kMeanSeparation = 3.0; // min pairwise class-mean distance at p = 10
constexpr double kRefLatentDim = 10.0;  // separation scales with sqrt(p / ref)
constexpr double kWithinStd = 2.0;      // within-class spread, raw units
constexpr double kSpectrumTop = 0.9;    // std of strongest latent dimension
constexpr double kSpectrumDecay = 0.95; // per-dimension std decay
constexpr int kMaxRejects = 1000;

Matrix draw_class_means(int p, int classes, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    const double min_dist = kMeanSeparation * std::sqrt(p / kRefLatentDim);
    Matrix means(p, classes);
    int attempts = 0;
    for (int k = 0; k < classes; ++k) {
        while (true) {
            if (++attempts > kMaxRejects) {
                throw InputError("synth: could not separate class means; try another seed");
            }
            Vector cand(p);
            for (int j = 0; j < p; ++j) cand(j) = normal(rng);
            bool ok = true;
            for (int prev = 0; prev < k; ++prev) {
                if ((means.col(prev) - cand).norm() < min_dist) {
                    ok = false;
                    break;
                }
            }
            if (ok) {
                means.col(k) = cand;
                break;
            }
        }
    }
    return means;
}

// rotate by `angle` in floor(d/2) disjoint random coordinate planes
Matrix rotate_planes(const Matrix& a, double angle, std::mt19937_64& rng) {
    const int d = static_cast<int>(a.rows());
    std::vector<int> perm(static_cast<size_t>(d));
    for (int i = 0; i < d; ++i) perm[static_cast<size_t>(i)] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    Matrix out = a;
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    for (int t = 0; t + 1 < d; t += 2) {
        const int i = perm[static_cast<size_t>(t)];
        const int j = perm[static_cast<size_t>(t) + 1];
        const Eigen::RowVectorXd ri = out.row(i);
        const Eigen::RowVectorXd rj = out.row(j);
        out.row(i) = c * ri - s * rj;
        out.row(j) = s * ri + c * rj;
    }
    return out;
}

Dataset draw_domain(const Matrix& embed, const Matrix& raw_means, const Vector& scale,
                    int n, int classes, double sigma, std::mt19937_64& rng,
                    const std::string& name) {
    std::normal_distribution<double> normal(0.0, 1.0);
    const int d = static_cast<int>(embed.rows());
    const int p = static_cast<int>(embed.cols());
    Dataset ds;
    ds.name = name;
    ds.features.resize(d, n);
    std::vector<std::int32_t> labels(static_cast<size_t>(n));
    Vector latent(p);
    for (int i = 0; i < n; ++i) {
        const int k = i % classes;
        labels[static_cast<size_t>(i)] = k;
        for (int j = 0; j < p; ++j) {
            latent(j) = scale(j) * (raw_means(j, k) + kWithinStd * normal(rng));
        }
        ds.features.col(i) = embed * latent;
        if (sigma > 0.0) {
            for (int j = 0; j < d; ++j) ds.features(j, i) += sigma * normal(rng);
        }
    }
    ds.labels = std::move(labels);
    return ds;
}

} // namespace

SynthResult synth(const SynthConfig& cfg) {
    if (cfg.p < 1 || cfg.d < 1 || cfg.p > cfg.d) {
        throw InputError("synth: need 1 <= p <= d");
    }
    if (cfg.classes < 1) throw InputError("synth: need at least one class");
    if (cfg.n_s < 1 || cfg.n_t < 1) throw InputError("synth: need at least one sample per domain");
    if (!(cfg.angle >= 0.0 && cfg.angle <= std::numbers::pi / 2.0)) {
        throw InputError("synth: angle must lie in [0, pi/2]");
    }
    if (!(cfg.noise_sigma >= 0.0) || !std::isfinite(cfg.noise_sigma)) {
        throw InputError("synth: noise_sigma must be >= 0");
    }

    std::mt19937_64 rng(cfg.seed);
    const Matrix raw_means = draw_class_means(cfg.p, cfg.classes, rng);
    Vector scale(cfg.p);
    for (int j = 0; j < cfg.p; ++j) {
        scale(j) = kSpectrumTop * std::pow(kSpectrumDecay, j);
    }
    const Matrix embed_s = random_orthonormal(cfg.d, cfg.p, rng);
    const Matrix embed_t = rotate_planes(embed_s, cfg.angle, rng);

    SynthResult out;
    out.source = draw_domain(embed_s, raw_means, scale, cfg.n_s, cfg.classes,
                             cfg.noise_sigma, rng, "synth-source");
    out.target = draw_domain(embed_t, raw_means, scale, cfg.n_t, cfg.classes,
                             cfg.noise_sigma, rng, "synth-target");
    out.source_class_means = embed_s * scale.asDiagonal() * raw_means;
    out.target_class_means = embed_t * scale.asDiagonal() * raw_means;
    return out;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, int n_query, std::uint64_t seed) {
    const int n = ds.size();
    if (n_query < 0 || n_query >= n) {
        throw InputError("split: n_query must lie in [0, N)");
    }
    std::vector<int> idx(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = i;
    std::mt19937_64 rng(seed);
    // partial Fisher-Yates: first n_query entries are the query sample
    for (int i = 0; i < n_query; ++i) {
        std::uniform_int_distribution<int> pick(i, n - 1);
        std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(pick(rng))]);
    }
    std::vector<int> query_idx(idx.begin(), idx.begin() + n_query);
    std::vector<int> train_idx(idx.begin() + n_query, idx.end());
    std::sort(query_idx.begin(), query_idx.end());
    std::sort(train_idx.begin(), train_idx.end());

    auto take = [&ds](const std::vector<int>& sel, const std::string& suffix) {
        Dataset out;
        out.name = ds.name.empty() ? suffix : ds.name + "-" + suffix;
        out.features.resize(ds.dim(), static_cast<int>(sel.size()));
        if (ds.labels) out.labels.emplace(sel.size());
        for (size_t i = 0; i < sel.size(); ++i) {
            out.features.col(static_cast<int>(i)) = ds.features.col(sel[i]);
            if (ds.labels) (*out.labels)[i] = (*ds.labels)[static_cast<size_t>(sel[i])];
        }
        return out;
    };
    return {take(train_idx, "train"), take(query_idx, "query")};
}

std::pair<Dataset, Vector> center(const Dataset& ds) {
    if (ds.size() < 1) throw InputError("center: empty dataset");
    Vector mean = ds.features.rowwise().mean();
    Dataset out = ds;
    out.features.colwise() -= mean;
    return {std::move(out), std::move(mean)};
}

} // namespace gth
