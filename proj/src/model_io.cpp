#include "gth/model_io.hpp"

#include "gth/errors.hpp"

#include <array>
#include <bit>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts unsupported");

namespace gth {

namespace {

constexpr std::uint16_t kVersion = 1;

template <typename T>
void read_raw(std::ifstream& in, T* dst, size_t count, const std::string& path) {
    in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(count * sizeof(T)));
    if (static_cast<size_t>(in.gcount()) != count * sizeof(T)) {
        throw IoError(path + ": truncated model file");
    }
}

template <typename T>
void write_raw(std::ofstream& out, const T* src, size_t count) {
    out.write(reinterpret_cast<const char*>(src), static_cast<std::streamsize>(count * sizeof(T)));
}

void write_matrix(std::ofstream& out, const Matrix& m) {
    std::vector<double> buf(static_cast<size_t>(m.rows()) * static_cast<size_t>(m.cols()));
    size_t k = 0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) buf[k++] = m(i, j);
    }
    write_raw(out, buf.data(), buf.size());
}

Matrix read_matrix(std::ifstream& in, Eigen::Index rows, Eigen::Index cols,
                   const std::string& path) {
    std::vector<double> buf(static_cast<size_t>(rows) * static_cast<size_t>(cols));
    read_raw(in, buf.data(), buf.size(), path);
    Matrix m(rows, cols);
    size_t k = 0;
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = buf[k++];
    }
    return m;
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double(const std::string& s, const std::string& path) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') {
        throw IoError(path + ": bad numeric value in config block");
    }
    return v;
}

long long parse_int(const std::string& s, const std::string& path) {
    char* end = nullptr;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0') {
        throw IoError(path + ": bad integer value in config block");
    }
    return v;
}

void write_config_block(std::ofstream& out, const std::string& block) {
    const std::uint32_t len = static_cast<std::uint32_t>(block.size());
    write_raw(out, &len, 1);
    write_raw(out, block.data(), block.size());
}

std::string read_config_block(std::ifstream& in, const std::string& path) {
    std::uint32_t len = 0;
    read_raw(in, &len, 1, path);
    std::string block(len, '\0');
    if (len > 0) read_raw(in, block.data(), len, path);
    return block;
}

void for_each_config_line(const std::string& block, const std::string& path,
                          const std::function<void(const std::string&, const std::string&)>& fn) {
    std::istringstream ss(block);
    std::string line;
    while (std::getline(ss, line)) {
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw IoError(path + ": malformed config block line");
        }
        fn(line.substr(0, eq), line.substr(eq + 1));
    }
}

std::array<char, 4> read_magic(std::ifstream& in, const std::string& path) {
    std::array<char, 4> magic{};
    read_raw(in, magic.data(), 4, path);
    return magic;
}

} // namespace

ModelFileKind peek_model_kind(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path + ": cannot open");
    const auto magic = read_magic(in, path);
    if (std::memcmp(magic.data(), "GTHM", 4) == 0) return ModelFileKind::gth;
    if (std::memcmp(magic.data(), "BASE", 4) == 0) return ModelFileKind::baseline;
    throw IoError(path + ": not a model file");
}

void save_model(const std::string& path, const GthModel& model) {
    const Eigen::Index d = model.w_t.rows();
    const Eigen::Index r = model.w_t.cols();
    if (model.w_s.rows() != d || model.w_s.cols() != r ||
        model.mean_t.size() != d || model.mean_s.size() != d ||
        model.r != static_cast<int>(r) || d < 1 || r < 1) {
        throw InputError("save_model: inconsistent model shapes");
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path + ": cannot open for writing");

    write_raw(out, "GTHM", 4);
    write_raw(out, &kVersion, 1);
    const std::uint32_t ud = static_cast<std::uint32_t>(d);
    const std::uint32_t ur = static_cast<std::uint32_t>(r);
    write_raw(out, &ud, 1);
    write_raw(out, &ur, 1);
    const std::uint8_t variant = model.config.variant == Variant::g ? 0 : 1;
    write_raw(out, &variant, 1);

    write_matrix(out, model.w_t);
    write_matrix(out, model.w_s);
    write_raw(out, model.mean_t.data(), static_cast<size_t>(d));
    write_raw(out, model.mean_s.data(), static_cast<size_t>(d));

    const TrainConfig& c = model.config;
    std::string block;
    block += "lambda1=" + fmt_double(c.lambda1) + "\n";
    block += "lambda2=" + fmt_double(c.lambda2) + "\n";
    block += "outer_iters=" + std::to_string(c.outer_iters) + "\n";
    block += "inner_iters=" + std::to_string(c.inner_iters) + "\n";
    block += "tau0=" + fmt_double(c.tau0) + "\n";
    block += "q=" + fmt_double(c.q) + "\n";
    block += "c=" + fmt_double(c.c) + "\n";
    block += std::string("stiefel_mode=") +
             (c.stiefel_mode == StiefelMode::right_cayley ? "right_cayley" : "full_cayley") + "\n";
    block += "seed=" + std::to_string(c.seed) + "\n";
    block += "tol_w=" + fmt_double(c.tol_w) + "\n";
    block += std::string("normalize=") + (c.normalize ? "1" : "0") + "\n";
    write_config_block(out, block);

    const std::uint32_t count = static_cast<std::uint32_t>(model.history.size());
    write_raw(out, &count, 1);
    for (const auto& rec : model.history) {
        write_raw(out, &rec.objective, 1);
        write_raw(out, &rec.max_dw, 1);
    }
    if (!out) throw IoError(path + ": write failed");
}

GthModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path + ": cannot open");
    const auto magic = read_magic(in, path);
    if (std::memcmp(magic.data(), "GTHM", 4) != 0) {
        throw IoError(path + ": bad magic (expected GTHM)");
    }
    std::uint16_t version = 0;
    read_raw(in, &version, 1, path);
    if (version != kVersion) throw IoError(path + ": unsupported model version");
    std::uint32_t d = 0, r = 0;
    read_raw(in, &d, 1, path);
    read_raw(in, &r, 1, path);
    std::uint8_t variant = 0;
    read_raw(in, &variant, 1, path);
    if (d < 1 || r < 1 || r > d || variant > 1) {
        throw IoError(path + ": bad header");
    }

    GthModel model;
    model.r = static_cast<int>(r);
    model.w_t = read_matrix(in, d, r, path);
    model.w_s = read_matrix(in, d, r, path);
    model.mean_t.resize(d);
    model.mean_s.resize(d);
    read_raw(in, model.mean_t.data(), d, path);
    read_raw(in, model.mean_s.data(), d, path);

    model.config.variant = variant == 0 ? Variant::g : Variant::h;
    const std::string block = read_config_block(in, path);
    for_each_config_line(block, path, [&](const std::string& key, const std::string& value) {
        TrainConfig& c = model.config;
        if (key == "lambda1") c.lambda1 = parse_double(value, path);
        else if (key == "lambda2") c.lambda2 = parse_double(value, path);
        else if (key == "outer_iters") c.outer_iters = static_cast<int>(parse_int(value, path));
        else if (key == "inner_iters") c.inner_iters = static_cast<int>(parse_int(value, path));
        else if (key == "tau0") c.tau0 = parse_double(value, path);
        else if (key == "q") c.q = parse_double(value, path);
        else if (key == "c") c.c = parse_double(value, path);
        else if (key == "stiefel_mode") {
            if (value == "right_cayley") c.stiefel_mode = StiefelMode::right_cayley;
            else if (value == "full_cayley") c.stiefel_mode = StiefelMode::full_cayley;
            else throw IoError(path + ": unknown stiefel_mode");
        }
        else if (key == "seed") c.seed = std::strtoull(value.c_str(), nullptr, 10);
        else if (key == "tol_w") c.tol_w = parse_double(value, path);
        else if (key == "normalize") c.normalize = parse_int(value, path) != 0;
        else throw IoError(path + ": unknown config key " + key);
    });

    std::uint32_t count = 0;
    read_raw(in, &count, 1, path);
    model.history.resize(count);
    for (auto& rec : model.history) {
        read_raw(in, &rec.objective, 1, path);
        read_raw(in, &rec.max_dw, 1, path);
    }
    return model;
}

void save_baseline(const std::string& path, const BaselineModel& model) {
    const Eigen::Index d = model.w.rows();
    const Eigen::Index r = model.w.cols();
    if (model.mean.size() != d || model.r != static_cast<int>(r) || d < 1 || r < 1) {
        throw InputError("save_baseline: inconsistent model shapes");
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path + ": cannot open for writing");

    write_raw(out, "BASE", 4);
    write_raw(out, &kVersion, 1);
    const std::uint32_t ud = static_cast<std::uint32_t>(d);
    const std::uint32_t ur = static_cast<std::uint32_t>(r);
    write_raw(out, &ud, 1);
    write_raw(out, &ur, 1);
    const std::uint8_t kind = model.kind == BaselineKind::lsh   ? 0
                              : model.kind == BaselineKind::pca ? 1
                                                                : 2;
    write_raw(out, &kind, 1);

    write_matrix(out, model.w);
    write_raw(out, model.mean.data(), static_cast<size_t>(d));

    const std::string block = "seed=" + std::to_string(model.seed) + "\n";
    write_config_block(out, block);

    const std::uint32_t count = 0;
    write_raw(out, &count, 1);
    if (!out) throw IoError(path + ": write failed");
}

BaselineModel load_baseline(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path + ": cannot open");
    const auto magic = read_magic(in, path);
    if (std::memcmp(magic.data(), "BASE", 4) != 0) {
        throw IoError(path + ": bad magic (expected BASE)");
    }
    std::uint16_t version = 0;
    read_raw(in, &version, 1, path);
    if (version != kVersion) throw IoError(path + ": unsupported model version");
    std::uint32_t d = 0, r = 0;
    read_raw(in, &d, 1, path);
    read_raw(in, &r, 1, path);
    std::uint8_t kind = 0;
    read_raw(in, &kind, 1, path);
    if (d < 1 || r < 1 || kind > 2) throw IoError(path + ": bad header");

    BaselineModel model;
    model.kind = kind == 0 ? BaselineKind::lsh : kind == 1 ? BaselineKind::pca : BaselineKind::itq;
    model.r = static_cast<int>(r);
    model.w = read_matrix(in, d, r, path);
    model.mean.resize(d);
    read_raw(in, model.mean.data(), d, path);

    const std::string block = read_config_block(in, path);
    for_each_config_line(block, path, [&](const std::string& key, const std::string& value) {
        if (key == "seed") model.seed = std::strtoull(value.c_str(), nullptr, 10);
        else throw IoError(path + ": unknown config key " + key);
    });

    std::uint32_t count = 0;
    read_raw(in, &count, 1, path);
    if (count != 0) throw IoError(path + ": unexpected history in baseline model");
    return model;
}

} // namespace gth
