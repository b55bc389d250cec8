// Command-line driver: synth, train, encode, eval, bench.
//
// Config precedence is CLI flag > config-file key > built-in default.
// Config files are UTF-8 key=value lines with # comments; unknown keys
// are rejected. Every text artifact starts with the effective config as
// comment lines so a result can always be traced back to its run; the
// timestamp comment is suppressed by --no-timestamp so reruns are
// byte-identical.

#include "gth/baselines.hpp"
#include "gth/data_io.hpp"
#include "gth/errors.hpp"
#include "gth/gth.hpp"
#include "gth/hamming.hpp"
#include "gth/model_io.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace fs = std::filesystem;
using namespace gth;

namespace {

static_assert(std::endian::native == std::endian::little,
              "on-disk formats are little-endian");

std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// short form for grid coordinates (lambda values, fractions)
std::string fmt_short(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

std::string now_stamp() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

std::string single_line(std::string s) {
    for (char& ch : s) {
        if (ch == '\n' || ch == '\r') ch = ' ';
    }
    return s;
}

std::string trim(const std::string& s) {
    const size_t a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return "";
    const size_t b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

// ---- strict scalar parsing for config-file values ----

double parse_double_v(const std::string& key, const std::string& s) {
    try {
        size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw InputError("config: key '" + key + "' has non-numeric value '" + s + "'");
    }
}

long long parse_ll_v(const std::string& key, const std::string& s) {
    try {
        size_t pos = 0;
        const long long v = std::stoll(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw InputError("config: key '" + key + "' has non-integer value '" + s + "'");
    }
}

int parse_int_v(const std::string& key, const std::string& s) {
    const long long v = parse_ll_v(key, s);
    if (v < INT32_MIN || v > INT32_MAX) {
        throw InputError("config: key '" + key + "' out of range: " + s);
    }
    return static_cast<int>(v);
}

std::uint64_t parse_u64_v(const std::string& key, const std::string& s) {
    try {
        size_t pos = 0;
        const unsigned long long v = std::stoull(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw InputError("config: key '" + key + "' has non-integer value '" + s + "'");
    }
}

bool parse_bool_v(const std::string& key, const std::string& s) {
    if (s == "1" || s == "true") return true;
    if (s == "0" || s == "false") return false;
    throw InputError("config: key '" + key + "' must be true/false/1/0, got '" + s + "'");
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, ',')) {
        cur = trim(cur);
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

// ---- config file support ----

std::vector<std::pair<std::string, std::string>> read_kv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    std::vector<std::pair<std::string, std::string>> entries;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const size_t eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw InputError("config: line " + std::to_string(lineno) + " is not key=value");
        }
        const std::string key = trim(stripped.substr(0, eq));
        if (key.empty()) {
            throw InputError("config: line " + std::to_string(lineno) + " has an empty key");
        }
        entries.emplace_back(key, trim(stripped.substr(eq + 1)));
    }
    return entries;
}

// Maps a config key to the flag that overrides it and a setter applying the
// file value; file values are skipped when the flag was given on the
// command line.
class ConfigBinder {
public:
    explicit ConfigBinder(CLI::App* cmd) : cmd_(cmd) {}

    void bind(const std::string& key, const std::string& flag,
              std::function<void(const std::string&)> set) {
        entries_[key] = {flag, std::move(set)};
    }

    void apply(const std::string& path) const {
        for (const auto& [key, value] : read_kv_file(path)) {
            const auto it = entries_.find(key);
            if (it == entries_.end()) {
                throw InputError("config: unknown key '" + key + "'");
            }
            if (cmd_->count(it->second.flag) > 0) continue;
            it->second.set(value);
        }
    }

private:
    struct Entry {
        std::string flag;
        std::function<void(const std::string&)> set;
    };
    CLI::App* cmd_;
    std::map<std::string, Entry> entries_;
};

using Echo = std::vector<std::pair<std::string, std::string>>;

void write_echo_comments(std::ostream& os, const Echo& echo, bool no_timestamp) {
    if (!no_timestamp) os << "# generated " << now_stamp() << "\n";
    for (const auto& [k, v] : echo) os << "# config " << k << "=" << v << "\n";
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

// ---- dataset plumbing ----

FileFormat resolve_format(const std::string& path, const std::string& override_format) {
    if (override_format == "csv") return FileFormat::csv;
    if (override_format == "fbin") return FileFormat::fbin;
    if (!override_format.empty()) {
        throw InputError("unknown format '" + override_format + "' (expected csv or fbin)");
    }
    const std::string ext = fs::path(path).extension().string();
    if (ext == ".csv") return FileFormat::csv;
    if (ext == ".fbin") return FileFormat::fbin;
    throw InputError("cannot infer format of '" + path + "'; pass --format csv|fbin");
}

struct IoFlags {
    std::string format;
    bool csv_labels = false;
    bool csv_header = false;
};

Dataset load_dataset(const std::string& path, const IoFlags& io) {
    return load(path, resolve_format(path, io.format), io.csv_labels, io.csv_header);
}

// ---- common parameter blocks ----

struct CommonParams {
    std::string config;
    std::string out = ".";
    bool no_timestamp = false;
};

void add_common(CLI::App* cmd, CommonParams& p) {
    cmd->add_option("--config", p.config, "key=value config file (# comments allowed)");
    cmd->add_option("--out", p.out, "output directory");
    cmd->add_flag("--no-timestamp", p.no_timestamp, "omit timestamps so reruns are byte-identical");
}

struct TrainKnobs {
    double lambda1 = 0.1;
    double lambda2 = 1.0;
    int outer_iters = 30;
    int inner_iters = 5;
    double tau0 = 0.1;
    double q = 0.8;
    double c = 8.0;
    std::string stiefel_mode = "right_cayley";
    double tol_w = 1e-5;
    bool normalize = false;
    bool outer_given = false;
};

void add_train_knobs(CLI::App* cmd, ConfigBinder& bind, TrainKnobs& k) {
    cmd->add_option("--lambda1", k.lambda1, "target quantization weight");
    cmd->add_option("--lambda2", k.lambda2, "source quantization weight");
    cmd->add_option("--outer-iters", k.outer_iters, "outer iterations");
    cmd->add_option("--inner-iters", k.inner_iters, "projection steps per outer iteration");
    cmd->add_option("--tau0", k.tau0, "initial step size");
    cmd->add_option("--q", k.q, "residual quantile for the demarcation point");
    cmd->add_option("--c", k.c, "sharpness constant");
    cmd->add_option("--stiefel-mode", k.stiefel_mode, "right_cayley|full_cayley");
    cmd->add_option("--tol-w", k.tol_w, "early-stop threshold on max |dW|");
    cmd->add_flag("--normalize", k.normalize, "scale samples to unit length after centering");
    bind.bind("lambda1", "--lambda1", [&k](const std::string& v) { k.lambda1 = parse_double_v("lambda1", v); });
    bind.bind("lambda2", "--lambda2", [&k](const std::string& v) { k.lambda2 = parse_double_v("lambda2", v); });
    bind.bind("outer_iters", "--outer-iters", [&k](const std::string& v) {
        k.outer_iters = parse_int_v("outer_iters", v);
        k.outer_given = true;
    });
    bind.bind("inner_iters", "--inner-iters", [&k](const std::string& v) { k.inner_iters = parse_int_v("inner_iters", v); });
    bind.bind("tau0", "--tau0", [&k](const std::string& v) { k.tau0 = parse_double_v("tau0", v); });
    bind.bind("q", "--q", [&k](const std::string& v) { k.q = parse_double_v("q", v); });
    bind.bind("c", "--c", [&k](const std::string& v) { k.c = parse_double_v("c", v); });
    bind.bind("stiefel_mode", "--stiefel-mode", [&k](const std::string& v) { k.stiefel_mode = v; });
    bind.bind("tol_w", "--tol-w", [&k](const std::string& v) { k.tol_w = parse_double_v("tol_w", v); });
    bind.bind("normalize", "--normalize", [&k](const std::string& v) { k.normalize = parse_bool_v("normalize", v); });
}

StiefelMode parse_stiefel(const std::string& s) {
    if (s == "right_cayley") return StiefelMode::right_cayley;
    if (s == "full_cayley") return StiefelMode::full_cayley;
    throw InputError("unknown stiefel mode '" + s + "' (expected right_cayley or full_cayley)");
}

Variant variant_for(const std::string& method, const std::string& variant_flag) {
    Variant v = method == "gth-g" ? Variant::g : Variant::h;
    if (!variant_flag.empty()) {
        if (variant_flag != "g" && variant_flag != "h") {
            throw InputError("unknown variant '" + variant_flag + "' (expected g or h)");
        }
        const Variant asked = variant_flag == "g" ? Variant::g : Variant::h;
        if (asked != v) {
            throw InputError("method " + method + " conflicts with --variant " + variant_flag);
        }
    }
    return v;
}

TrainConfig make_train_config(const TrainKnobs& k, Variant variant, std::uint64_t seed) {
    TrainConfig cfg;
    cfg.lambda1 = k.lambda1;
    cfg.lambda2 = k.lambda2;
    cfg.variant = variant;
    cfg.outer_iters = k.outer_iters;
    cfg.inner_iters = k.inner_iters;
    cfg.tau0 = k.tau0;
    cfg.q = k.q;
    cfg.c = k.c;
    cfg.stiefel_mode = parse_stiefel(k.stiefel_mode);
    cfg.seed = seed;
    cfg.tol_w = k.tol_w;
    cfg.normalize = k.normalize;
    return cfg;
}

void echo_train_knobs(Echo& echo, const TrainKnobs& k) {
    echo.emplace_back("lambda1", fmt_g(k.lambda1));
    echo.emplace_back("lambda2", fmt_g(k.lambda2));
    echo.emplace_back("outer_iters", std::to_string(k.outer_iters));
    echo.emplace_back("inner_iters", std::to_string(k.inner_iters));
    echo.emplace_back("tau0", fmt_g(k.tau0));
    echo.emplace_back("q", fmt_g(k.q));
    echo.emplace_back("c", fmt_g(k.c));
    echo.emplace_back("stiefel_mode", k.stiefel_mode);
    echo.emplace_back("tol_w", fmt_g(k.tol_w));
    echo.emplace_back("normalize", k.normalize ? "1" : "0");
}

const std::vector<std::string> kMethods{"gth-g", "gth-h", "lsh", "pca", "itq", "noda"};

void check_method(const std::string& m) {
    if (std::find(kMethods.begin(), kMethods.end(), m) == kMethods.end()) {
        throw InputError("unknown method '" + m + "'");
    }
}

bool is_gth_method(const std::string& m) { return m == "gth-g" || m == "gth-h"; }

// ---- synth ----

struct SynthParams : CommonParams {
    SynthConfig cfg;
};

void add_synth_options(CLI::App* cmd, ConfigBinder& bind, SynthConfig& c, bool with_seed) {
    cmd->add_option("--d", c.d, "ambient feature dimension");
    cmd->add_option("--p", c.p, "latent dimension");
    cmd->add_option("--classes", c.classes, "number of classes");
    cmd->add_option("--n-s", c.n_s, "source sample count");
    cmd->add_option("--n-t", c.n_t, "target sample count");
    cmd->add_option("--angle", c.angle, "domain rotation magnitude in radians");
    cmd->add_option("--noise-sigma", c.noise_sigma, "ambient noise level");
    bind.bind("d", "--d", [&c](const std::string& v) { c.d = parse_int_v("d", v); });
    bind.bind("p", "--p", [&c](const std::string& v) { c.p = parse_int_v("p", v); });
    bind.bind("classes", "--classes", [&c](const std::string& v) { c.classes = parse_int_v("classes", v); });
    bind.bind("n_s", "--n-s", [&c](const std::string& v) { c.n_s = parse_int_v("n_s", v); });
    bind.bind("n_t", "--n-t", [&c](const std::string& v) { c.n_t = parse_int_v("n_t", v); });
    bind.bind("angle", "--angle", [&c](const std::string& v) { c.angle = parse_double_v("angle", v); });
    bind.bind("noise_sigma", "--noise-sigma", [&c](const std::string& v) { c.noise_sigma = parse_double_v("noise_sigma", v); });
    if (with_seed) {
        cmd->add_option("--seed", c.seed, "generator seed");
        bind.bind("seed", "--seed", [&c](const std::string& v) { c.seed = parse_u64_v("seed", v); });
    }
}

Echo synth_echo(const SynthConfig& c) {
    return {
        {"d", std::to_string(c.d)},
        {"p", std::to_string(c.p)},
        {"classes", std::to_string(c.classes)},
        {"n_s", std::to_string(c.n_s)},
        {"n_t", std::to_string(c.n_t)},
        {"angle", fmt_g(c.angle)},
        {"noise_sigma", fmt_g(c.noise_sigma)},
        {"seed", std::to_string(c.seed)},
    };
}

void run_synth(const SynthParams& p) {
    const SynthResult res = synth(p.cfg);
    fs::create_directories(p.out);
    const fs::path out(p.out);
    save_fbin((out / "source.fbin").string(), res.source);
    save_fbin((out / "target.fbin").string(), res.target);

    auto mf = open_out(out / "synth_manifest.txt");
    mf << "# synthetic dataset manifest; replay with: gth synth --config <this file>\n";
    if (!p.no_timestamp) mf << "# generated " << now_stamp() << "\n";
    for (const auto& [k, v] : synth_echo(p.cfg)) mf << k << "=" << v << "\n";

    std::cout << "wrote " << (out / "source.fbin").string() << "\n";
    std::cout << "wrote " << (out / "target.fbin").string() << "\n";
    std::cout << "wrote " << (out / "synth_manifest.txt").string() << "\n";
}

// ---- train ----

struct TrainParams : CommonParams {
    std::string method = "gth-h";
    std::string target;
    std::string source;
    IoFlags io;
    int bits = 32;
    std::uint64_t seed = 0;
    std::string variant;
    TrainKnobs knobs;
};

void add_io_flags(CLI::App* cmd, ConfigBinder& bind, IoFlags& io) {
    cmd->add_option("--format", io.format, "input format csv|fbin (default: by extension)");
    cmd->add_flag("--csv-labels", io.csv_labels, "csv rows end with an integer label column");
    cmd->add_flag("--csv-header", io.csv_header, "skip the first csv row");
    bind.bind("format", "--format", [&io](const std::string& v) { io.format = v; });
    bind.bind("csv_labels", "--csv-labels", [&io](const std::string& v) { io.csv_labels = parse_bool_v("csv_labels", v); });
    bind.bind("csv_header", "--csv-header", [&io](const std::string& v) { io.csv_header = parse_bool_v("csv_header", v); });
}

void run_train(const TrainParams& p) {
    check_method(p.method);
    if (p.target.empty()) throw InputError("train: --target is required");
    const Dataset target = load_dataset(p.target, p.io);

    fs::create_directories(p.out);
    const fs::path out(p.out);
    const fs::path model_path = out / "model.bin";

    Echo echo;
    echo.emplace_back("method", p.method);
    echo.emplace_back("bits", std::to_string(p.bits));
    echo.emplace_back("seed", std::to_string(p.seed));
    echo_train_knobs(echo, p.knobs);

    std::vector<IterationRecord> history;
    if (is_gth_method(p.method)) {
        if (p.source.empty()) throw InputError("train: method " + p.method + " requires --source");
        const Dataset source = load_dataset(p.source, p.io);
        const TrainConfig cfg = make_train_config(p.knobs, variant_for(p.method, p.variant), p.seed);
        const GthModel model = train(target.features, source.features, p.bits, cfg);
        save_model(model_path.string(), model);
        history = model.history;
    } else {
        if (!p.variant.empty()) {
            throw InputError("train: --variant only applies to gth-g / gth-h");
        }
        if (!p.source.empty()) {
            std::cout << "note: method " << p.method << " ignores the source dataset ("
                      << p.source << "); training on target only\n";
        }
        const int iters = p.knobs.outer_given ? p.knobs.outer_iters : 50;
        BaselineModel model;
        if (p.method == "lsh") {
            model = lsh_train(static_cast<int>(target.dim()), p.bits, p.seed);
        } else if (p.method == "pca") {
            model = pca_hash_train(target.features, p.bits);
        } else if (p.method == "itq") {
            model = itq_train(target.features, p.bits, iters, p.seed);
        } else {
            model = noda_train(target.features, p.bits, NodaMethod::itq, iters, p.seed);
        }
        save_baseline(model_path.string(), model);
    }

    auto hist = open_out(out / "history.csv");
    write_echo_comments(hist, echo, p.no_timestamp);
    hist << "iteration,objective,max_dw\n";
    for (size_t k = 0; k < history.size(); ++k) {
        hist << (k + 1) << "," << fmt_g(history[k].objective) << ","
             << fmt_g(history[k].max_dw) << "\n";
    }

    std::cout << "wrote " << model_path.string() << "\n";
    std::cout << "wrote " << (out / "history.csv").string() << "\n";
}

// ---- encode ----

struct EncodeParams : CommonParams {
    std::string model;
    std::string input;
    std::string domain = "target";
    IoFlags io;
};

Domain parse_domain(const std::string& s) {
    if (s == "target") return Domain::target;
    if (s == "source") return Domain::source;
    throw InputError("unknown domain '" + s + "' (expected target or source)");
}

void write_raw_u16(std::ostream& os, std::uint16_t v) { os.write(reinterpret_cast<const char*>(&v), 2); }
void write_raw_u32(std::ostream& os, std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }

// codes container: magic "GTHC", u16 version, u32 n, u32 r, u8 domain,
// length-prefixed key=value provenance block, then the packed code words
// (words_per_item u64 per item, little-endian)
void write_codes(const fs::path& path, const PackedCodes& codes, Domain domain,
                 const std::string& model_kind) {
    auto out = open_out(path);
    out.write("GTHC", 4);
    write_raw_u16(out, 1);
    write_raw_u32(out, static_cast<std::uint32_t>(codes.n));
    write_raw_u32(out, static_cast<std::uint32_t>(codes.r));
    const char dom = domain == Domain::target ? 0 : 1;
    out.write(&dom, 1);
    std::string block = "model_kind=" + model_kind + "\n";
    block += std::string("domain=") + (domain == Domain::target ? "target" : "source") + "\n";
    write_raw_u32(out, static_cast<std::uint32_t>(block.size()));
    out.write(block.data(), static_cast<std::streamsize>(block.size()));
    out.write(reinterpret_cast<const char*>(codes.words.data()),
              static_cast<std::streamsize>(codes.words.size() * sizeof(std::uint64_t)));
    if (!out) throw IoError("failed writing " + path.string());
}

CodeMatrix model_codes(const std::string& model_path, const FeatureMatrix& x,
                       Domain domain, std::string* kind_out) {
    const ModelFileKind kind = peek_model_kind(model_path);
    if (kind == ModelFileKind::gth) {
        if (kind_out) *kind_out = "gth";
        return encode(load_model(model_path), x, domain);
    }
    if (domain == Domain::source) {
        throw InputError("baseline models have no source branch");
    }
    if (kind_out) *kind_out = "baseline";
    return baseline_encode(load_baseline(model_path), x);
}

void run_encode(const EncodeParams& p) {
    if (p.model.empty()) throw InputError("encode: --model is required");
    if (p.input.empty()) throw InputError("encode: --input is required");
    const Domain domain = parse_domain(p.domain);
    const Dataset ds = load_dataset(p.input, p.io);
    std::string kind;
    const CodeMatrix codes = model_codes(p.model, ds.features, domain, &kind);
    fs::create_directories(p.out);
    const fs::path path = fs::path(p.out) / "codes.bin";
    write_codes(path, pack(codes), domain, kind);
    std::cout << "wrote " << path.string() << "\n";
}

// ---- eval ----

struct EvalParams : CommonParams {
    std::string model;
    std::string db;
    std::string queries;
    std::string domain = "target";
    std::string ks = "1,5,10,20,50,100";
    IoFlags io;
};

std::vector<int> parse_ks(const std::string& s) {
    std::vector<int> out;
    for (const std::string& item : split_list(s)) {
        out.push_back(parse_int_v("ks", item));
    }
    return out;
}

void run_eval(const EvalParams& p) {
    if (p.model.empty()) throw InputError("eval: --model is required");
    if (p.db.empty() || p.queries.empty()) {
        throw InputError("eval: --db and --queries are required");
    }
    const Domain domain = parse_domain(p.domain);
    const Dataset db = load_dataset(p.db, p.io);
    const Dataset queries = load_dataset(p.queries, p.io);
    if (!db.labels || !queries.labels) {
        throw InputError("eval: both datasets need labels for retrieval metrics");
    }
    const std::vector<int> ks = parse_ks(p.ks);

    std::string kind;
    const PackedCodes db_codes = pack(model_codes(p.model, db.features, domain, &kind));
    const PackedCodes query_codes = pack(model_codes(p.model, queries.features, domain, nullptr));
    const RetrievalReport report =
        evaluate(query_codes, *queries.labels, db_codes, *db.labels, ks);

    Echo echo;
    echo.emplace_back("model_kind", kind);
    echo.emplace_back("domain", p.domain);
    std::string ks_echo;
    for (size_t i = 0; i < ks.size(); ++i) {
        if (i) ks_echo += ",";
        ks_echo += std::to_string(ks[i]);
    }
    echo.emplace_back("ks", ks_echo);

    fs::create_directories(p.out);
    const fs::path out(p.out);
    {
        auto os = open_out(out / "report.txt");
        write_echo_comments(os, echo, p.no_timestamp);
        write_report(os, report);
    }
    {
        auto os = open_out(out / "pr.csv");
        write_echo_comments(os, echo, p.no_timestamp);
        write_pr_csv(os, report);
    }
    {
        auto os = open_out(out / "at_k.csv");
        write_echo_comments(os, echo, p.no_timestamp);
        write_at_k_csv(os, report);
    }
    std::cout << "wrote " << (out / "report.txt").string() << "\n";
    std::cout << "wrote " << (out / "pr.csv").string() << "\n";
    std::cout << "wrote " << (out / "at_k.csv").string() << "\n";
}

// ---- bench ----

struct BenchParams : CommonParams {
    std::string methods = "gth-h,noda";
    std::string bits = "32";
    std::string seeds = "0";
    std::string fractions; // empty: no fraction axis
    bool lambda_grid = false;
    int jobs = 1;
    int n_queries = 100;
    SynthConfig synth_cfg;
    TrainKnobs knobs;
};

struct BenchCell {
    std::string method;
    int bits = 0;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    std::optional<double> fraction;
    std::uint64_t seed = 0;
};

struct CellResult {
    bool ok = false;
    double map = 0.0;
    std::string reason;
};

std::string csv_safe(std::string s) {
    for (char& ch : s) {
        if (ch == ',' || ch == '\n' || ch == '\r') ch = ';';
    }
    return s;
}

CellResult run_bench_cell(const BenchParams& p, const BenchCell& cell) {
    CellResult out;
    try {
        SynthConfig sc = p.synth_cfg;
        sc.seed = cell.seed;
        const SynthResult data = synth(sc);
        auto [db_ds, query_ds] = split(data.target, p.n_queries, cell.seed + 1);

        Dataset train_ds = db_ds;
        if (cell.fraction) {
            const int n_train = static_cast<int>(db_ds.size());
            int n_used = static_cast<int>(std::lround(*cell.fraction * n_train));
            n_used = std::clamp(n_used, 1, n_train - 1);
            train_ds = split(db_ds, n_used, cell.seed + 2).second;
        }

        TrainKnobs knobs = p.knobs;
        knobs.lambda1 = cell.lambda1;
        knobs.lambda2 = cell.lambda2;

        CodeMatrix db_codes, query_codes;
        if (is_gth_method(cell.method)) {
            const TrainConfig cfg =
                make_train_config(knobs, cell.method == "gth-g" ? Variant::g : Variant::h, cell.seed);
            const GthModel model = train(train_ds.features, data.source.features, cell.bits, cfg);
            db_codes = encode(model, db_ds.features, Domain::target);
            query_codes = encode(model, query_ds.features, Domain::target);
        } else {
            const int iters = p.knobs.outer_given ? p.knobs.outer_iters : 50;
            BaselineModel model;
            if (cell.method == "lsh") {
                model = lsh_train(static_cast<int>(train_ds.dim()), cell.bits, cell.seed);
            } else if (cell.method == "pca") {
                model = pca_hash_train(train_ds.features, cell.bits);
            } else if (cell.method == "itq") {
                model = itq_train(train_ds.features, cell.bits, iters, cell.seed);
            } else {
                model = noda_train(train_ds.features, cell.bits, NodaMethod::itq, iters, cell.seed);
            }
            db_codes = baseline_encode(model, db_ds.features);
            query_codes = baseline_encode(model, query_ds.features);
        }

        const RetrievalReport report = evaluate(pack(query_codes), *query_ds.labels,
                                                pack(db_codes), *db_ds.labels, {});
        out.ok = true;
        out.map = report.map;
    } catch (const std::exception& e) {
        out.reason = single_line(e.what());
    }
    return out;
}

void run_bench(const BenchParams& p) {
    const std::vector<std::string> methods = split_list(p.methods);
    if (methods.empty()) throw InputError("bench: --methods is empty");
    for (const std::string& m : methods) check_method(m);

    std::vector<int> bits_list;
    for (const std::string& b : split_list(p.bits)) bits_list.push_back(parse_int_v("bits", b));
    if (bits_list.empty()) throw InputError("bench: --bits is empty");

    std::vector<std::uint64_t> seeds;
    for (const std::string& s : split_list(p.seeds)) seeds.push_back(parse_u64_v("seeds", s));
    if (seeds.empty()) throw InputError("bench: --seeds is empty");

    std::vector<std::optional<double>> fractions;
    if (p.fractions.empty()) {
        fractions.push_back(std::nullopt);
    } else {
        for (const std::string& f : split_list(p.fractions)) {
            const double v = parse_double_v("target_fractions", f);
            if (!(v > 0.0 && v <= 1.0)) {
                throw InputError("bench: target fraction " + f + " outside (0, 1]");
            }
            fractions.emplace_back(v);
        }
    }

    std::vector<std::pair<double, double>> lambdas;
    if (p.lambda_grid) {
        const double grid[] = {1e-4, 1e-3, 1e-2, 0.1, 1.0, 10.0};
        for (const double l1 : grid) {
            for (const double l2 : grid) lambdas.emplace_back(l1, l2);
        }
    } else {
        lambdas.emplace_back(p.knobs.lambda1, p.knobs.lambda2);
    }

    if (p.jobs < 1) throw InputError("bench: --jobs must be >= 1");
    if (p.n_queries < 1 || p.n_queries >= p.synth_cfg.n_t) {
        throw InputError("bench: need 1 <= n_queries < n_t");
    }

    // fixed grid order: method, bits, lambda, fraction, seed
    std::vector<BenchCell> cells;
    for (const std::string& m : methods) {
        for (const int b : bits_list) {
            for (const auto& [l1, l2] : lambdas) {
                for (const auto& f : fractions) {
                    for (const std::uint64_t s : seeds) {
                        cells.push_back({m, b, l1, l2, f, s});
                    }
                }
            }
        }
    }

    std::vector<CellResult> results(cells.size());
    std::atomic<size_t> next{0};
    auto worker = [&] {
        while (true) {
            const size_t i = next.fetch_add(1);
            if (i >= cells.size()) break;
            results[i] = run_bench_cell(p, cells[i]);
        }
    };
    const size_t n_threads = std::min<size_t>(static_cast<size_t>(p.jobs), cells.size());
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    Echo echo;
    echo.emplace_back("methods", p.methods);
    echo.emplace_back("bits", p.bits);
    echo.emplace_back("seeds", p.seeds);
    if (!p.fractions.empty()) echo.emplace_back("target_fractions", p.fractions);
    echo.emplace_back("lambda_grid", p.lambda_grid ? "1" : "0");
    echo.emplace_back("n_queries", std::to_string(p.n_queries));
    for (const auto& [k, v] : synth_echo(p.synth_cfg)) {
        if (k != "seed") echo.emplace_back(k, v); // seeds come from the grid
    }
    echo_train_knobs(echo, p.knobs);

    fs::create_directories(p.out);
    const fs::path out(p.out);

    {
        auto os = open_out(out / "cells.csv");
        write_echo_comments(os, echo, p.no_timestamp);
        os << "method,bits,lambda1,lambda2,fraction,seed,map,status,reason\n";
        for (size_t i = 0; i < cells.size(); ++i) {
            const BenchCell& c = cells[i];
            const CellResult& r = results[i];
            os << c.method << "," << c.bits << "," << fmt_short(c.lambda1) << ","
               << fmt_short(c.lambda2) << ","
               << (c.fraction ? fmt_short(*c.fraction) : std::string()) << "," << c.seed << ","
               << (r.ok ? fmt_g(r.map) : std::string()) << "," << (r.ok ? "ok" : "failed") << ","
               << csv_safe(r.reason) << "\n";
        }
    }

    // aggregate over seeds in fixed grid order
    struct Aggregate {
        const BenchCell* cell = nullptr; // representative (first seed)
        std::vector<double> maps;
        int n_failed = 0;
    };
    std::vector<Aggregate> aggregates;
    const size_t n_seeds = seeds.size();
    for (size_t base = 0; base < cells.size(); base += n_seeds) {
        Aggregate agg;
        agg.cell = &cells[base];
        for (size_t j = 0; j < n_seeds; ++j) {
            if (results[base + j].ok) {
                agg.maps.push_back(results[base + j].map);
            } else {
                ++agg.n_failed;
            }
        }
        aggregates.push_back(std::move(agg));
    }

    auto mean_of = [](const std::vector<double>& v) {
        double s = 0.0;
        for (const double x : v) s += x;
        return s / static_cast<double>(v.size());
    };
    auto std_of = [&](const std::vector<double>& v) {
        if (v.size() < 2) return 0.0;
        const double mu = mean_of(v);
        double s = 0.0;
        for (const double x : v) s += (x - mu) * (x - mu);
        return std::sqrt(s / static_cast<double>(v.size() - 1));
    };

    {
        auto os = open_out(out / "wide.csv");
        write_echo_comments(os, echo, p.no_timestamp);
        if (p.fractions.empty()) {
            os << "method,bits,lambda1,lambda2,map_mean,map_std,n_ok,n_failed\n";
            for (const Aggregate& agg : aggregates) {
                const BenchCell& c = *agg.cell;
                os << c.method << "," << c.bits << "," << fmt_short(c.lambda1) << ","
                   << fmt_short(c.lambda2) << ",";
                if (!agg.maps.empty()) {
                    os << fmt_g(mean_of(agg.maps)) << "," << fmt_g(std_of(agg.maps));
                } else {
                    os << ",";
                }
                os << "," << agg.maps.size() << "," << agg.n_failed << "\n";
            }
        } else {
            // one MAP column per fraction; aggregates for one (method, bits,
            // lambda) row are consecutive, one per fraction
            os << "method,bits,lambda1,lambda2";
            for (const auto& f : fractions) os << ",map_frac_" << fmt_short(*f);
            os << "\n";
            const size_t n_frac = fractions.size();
            for (size_t base = 0; base < aggregates.size(); base += n_frac) {
                const BenchCell& c = *aggregates[base].cell;
                os << c.method << "," << c.bits << "," << fmt_short(c.lambda1) << ","
                   << fmt_short(c.lambda2);
                for (size_t j = 0; j < n_frac; ++j) {
                    const Aggregate& agg = aggregates[base + j];
                    os << ",";
                    if (!agg.maps.empty()) os << fmt_g(mean_of(agg.maps));
                }
                os << "\n";
            }
        }
    }

    {
        auto os = open_out(out / "summary.txt");
        write_echo_comments(os, echo, p.no_timestamp);
        os << "cells=" << cells.size() << "\n";
        int failed = 0;
        for (const CellResult& r : results) {
            if (!r.ok) ++failed;
        }
        os << "failed_cells=" << failed << "\n";
        for (const Aggregate& agg : aggregates) {
            const BenchCell& c = *agg.cell;
            os << "method=" << c.method << " bits=" << c.bits << " lambda1="
               << fmt_short(c.lambda1) << " lambda2=" << fmt_short(c.lambda2);
            if (c.fraction) os << " fraction=" << fmt_short(*c.fraction);
            if (!agg.maps.empty()) {
                os << " map_mean=" << fmt_g(mean_of(agg.maps)) << " map_std="
                   << fmt_g(std_of(agg.maps));
            } else {
                os << " map_mean= map_std=";
            }
            os << " n_ok=" << agg.maps.size() << " n_failed=" << agg.n_failed << "\n";
        }
    }

    std::cout << "wrote " << (out / "cells.csv").string() << "\n";
    std::cout << "wrote " << (out / "wide.csv").string() << "\n";
    std::cout << "wrote " << (out / "summary.txt").string() << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"transfer hashing experiments"};
    app.require_subcommand(1);

    SynthParams synth_p;
    CLI::App* synth_cmd = app.add_subcommand("synth", "generate a cross-domain synthetic dataset pair");
    ConfigBinder synth_bind(synth_cmd);
    add_common(synth_cmd, synth_p);
    add_synth_options(synth_cmd, synth_bind, synth_p.cfg, true);

    TrainParams train_p;
    CLI::App* train_cmd = app.add_subcommand("train", "train a hashing model");
    ConfigBinder train_bind(train_cmd);
    add_common(train_cmd, train_p);
    train_cmd->add_option("--method", train_p.method, "gth-g|gth-h|lsh|pca|itq|noda");
    train_cmd->add_option("--target", train_p.target, "target-domain dataset path");
    train_cmd->add_option("--source", train_p.source, "source-domain dataset path");
    train_cmd->add_option("--bits", train_p.bits, "code length");
    train_cmd->add_option("--seed", train_p.seed, "training seed");
    train_cmd->add_option("--variant", train_p.variant, "weighting variant g|h (must agree with --method)");
    add_io_flags(train_cmd, train_bind, train_p.io);
    add_train_knobs(train_cmd, train_bind, train_p.knobs);
    train_bind.bind("method", "--method", [&](const std::string& v) { train_p.method = v; });
    train_bind.bind("target", "--target", [&](const std::string& v) { train_p.target = v; });
    train_bind.bind("source", "--source", [&](const std::string& v) { train_p.source = v; });
    train_bind.bind("bits", "--bits", [&](const std::string& v) { train_p.bits = parse_int_v("bits", v); });
    train_bind.bind("seed", "--seed", [&](const std::string& v) { train_p.seed = parse_u64_v("seed", v); });
    train_bind.bind("variant", "--variant", [&](const std::string& v) { train_p.variant = v; });

    EncodeParams encode_p;
    CLI::App* encode_cmd = app.add_subcommand("encode", "encode a dataset into packed binary codes");
    ConfigBinder encode_bind(encode_cmd);
    add_common(encode_cmd, encode_p);
    encode_cmd->add_option("--model", encode_p.model, "model file");
    encode_cmd->add_option("--input", encode_p.input, "dataset to encode");
    encode_cmd->add_option("--domain", encode_p.domain, "projection branch: target|source");
    add_io_flags(encode_cmd, encode_bind, encode_p.io);
    encode_bind.bind("model", "--model", [&](const std::string& v) { encode_p.model = v; });
    encode_bind.bind("input", "--input", [&](const std::string& v) { encode_p.input = v; });
    encode_bind.bind("domain", "--domain", [&](const std::string& v) { encode_p.domain = v; });

    EvalParams eval_p;
    CLI::App* eval_cmd = app.add_subcommand("eval", "retrieval metrics for a model on a labeled db/query pair");
    ConfigBinder eval_bind(eval_cmd);
    add_common(eval_cmd, eval_p);
    eval_cmd->add_option("--model", eval_p.model, "model file");
    eval_cmd->add_option("--db", eval_p.db, "database dataset path");
    eval_cmd->add_option("--queries", eval_p.queries, "query dataset path");
    eval_cmd->add_option("--domain", eval_p.domain, "projection branch: target|source");
    eval_cmd->add_option("--ks", eval_p.ks, "comma list of cutoffs for precision/recall@k");
    add_io_flags(eval_cmd, eval_bind, eval_p.io);
    eval_bind.bind("model", "--model", [&](const std::string& v) { eval_p.model = v; });
    eval_bind.bind("db", "--db", [&](const std::string& v) { eval_p.db = v; });
    eval_bind.bind("queries", "--queries", [&](const std::string& v) { eval_p.queries = v; });
    eval_bind.bind("domain", "--domain", [&](const std::string& v) { eval_p.domain = v; });
    eval_bind.bind("ks", "--ks", [&](const std::string& v) { eval_p.ks = v; });

    BenchParams bench_p;
    CLI::App* bench_cmd = app.add_subcommand("bench", "seeded benchmark sweep over methods, bits, and grids");
    ConfigBinder bench_bind(bench_cmd);
    add_common(bench_cmd, bench_p);
    bench_cmd->add_option("--methods", bench_p.methods, "comma list of methods");
    bench_cmd->add_option("--bits", bench_p.bits, "comma list of code lengths");
    bench_cmd->add_option("--seeds", bench_p.seeds, "comma list of seeds");
    bench_cmd->add_option("--target-fractions", bench_p.fractions,
                          "comma list of target training fractions");
    bench_cmd->add_flag("--lambda-grid", bench_p.lambda_grid,
                        "sweep lambda1 x lambda2 over {1e-4,1e-3,0.01,0.1,1,10}");
    bench_cmd->add_option("--jobs", bench_p.jobs, "parallel cells");
    bench_cmd->add_option("--n-queries", bench_p.n_queries, "held-out queries per seed");
    add_synth_options(bench_cmd, bench_bind, bench_p.synth_cfg, false); // grid supplies seeds
    add_train_knobs(bench_cmd, bench_bind, bench_p.knobs);
    bench_bind.bind("methods", "--methods", [&](const std::string& v) { bench_p.methods = v; });
    bench_bind.bind("bits", "--bits", [&](const std::string& v) { bench_p.bits = v; });
    bench_bind.bind("seeds", "--seeds", [&](const std::string& v) { bench_p.seeds = v; });
    bench_bind.bind("target_fractions", "--target-fractions",
                    [&](const std::string& v) { bench_p.fractions = v; });
    bench_bind.bind("lambda_grid", "--lambda-grid",
                    [&](const std::string& v) { bench_p.lambda_grid = parse_bool_v("lambda_grid", v); });
    bench_bind.bind("jobs", "--jobs", [&](const std::string& v) { bench_p.jobs = parse_int_v("jobs", v); });
    bench_bind.bind("n_queries", "--n-queries",
                    [&](const std::string& v) { bench_p.n_queries = parse_int_v("n_queries", v); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << single_line(e.what()) << "\n";
        const int code = e.get_exit_code();
        return code == 0 ? 2 : code;
    }

    try {
        if (app.got_subcommand(synth_cmd)) {
            if (!synth_p.config.empty()) synth_bind.apply(synth_p.config);
            run_synth(synth_p);
        } else if (app.got_subcommand(train_cmd)) {
            if (!train_p.config.empty()) {
                if (train_cmd->count("--outer-iters") > 0) train_p.knobs.outer_given = true;
                train_bind.apply(train_p.config);
            }
            if (train_cmd->count("--outer-iters") > 0) train_p.knobs.outer_given = true;
            run_train(train_p);
        } else if (app.got_subcommand(encode_cmd)) {
            if (!encode_p.config.empty()) encode_bind.apply(encode_p.config);
            run_encode(encode_p);
        } else if (app.got_subcommand(eval_cmd)) {
            if (!eval_p.config.empty()) eval_bind.apply(eval_p.config);
            run_eval(eval_p);
        } else if (app.got_subcommand(bench_cmd)) {
            if (!bench_p.config.empty()) {
                if (bench_cmd->count("--outer-iters") > 0) bench_p.knobs.outer_given = true;
                bench_bind.apply(bench_p.config);
            }
            if (bench_cmd->count("--outer-iters") > 0) bench_p.knobs.outer_given = true;
            run_bench(bench_p);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << single_line(e.what()) << "\n";
        return 1;
    }
    return 0;
}
