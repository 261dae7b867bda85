#include "flaf/experiment.hpp"

#include "flaf/analysis.hpp"
#include "flaf/error.hpp"
#include "flaf/fd_flaf.hpp"
#include "flaf/pbfd_flaf.hpp"
#include "flaf/split_flaf.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <variant>

namespace flaf {

std::string_view to_string(Algorithm a)
{
    switch (a) {
    case Algorithm::LinearPbfdaf: return "linear-pbfdaf";
    case Algorithm::FdFlaf: return "fd-flaf";
    case Algorithm::PbfdFlaf: return "pbfd-flaf";
    case Algorithm::FlafTd: return "flaf-td";
    }
    return "?";
}

std::optional<Algorithm> parse_algorithm(std::string_view name)
{
    for (const auto a : {Algorithm::LinearPbfdaf, Algorithm::FdFlaf, Algorithm::PbfdFlaf, Algorithm::FlafTd})
        if (to_string(a) == name) return a;
    return std::nullopt;
}

namespace {

FreqParams freq_params(const AlgorithmSpec& s, double mu)
{
    FreqParams p;
    p.mu = mu;
    p.lambda = s.lambda;
    p.reg = s.reg;
    p.power_init = s.power_init;
    p.constrained = s.constrained;
    return p;
}

std::optional<ExpansionConfig> resolved_expansion(const AlgorithmSpec& s)
{
    if (s.algorithm == Algorithm::LinearPbfdaf || !s.expansion) return std::nullopt;
    ExpansionConfig ex = *s.expansion;
    ex.input_len = s.M_i;
    return ex;
}

PbfdFlafConfig pbfd_config(const AlgorithmSpec& s)
{
    PbfdFlafConfig c;
    c.filter_len = s.M;
    c.partitions = s.M_P;
    c.hop = s.L;
    c.expansion = resolved_expansion(s);
    c.linear = freq_params(s, s.mu_lin);
    c.nonlinear = freq_params(s, s.mu_nl);
    return c;
}

FdFlafConfig fd_config(const AlgorithmSpec& s)
{
    FdFlafConfig c;
    c.filter_len = s.M;
    c.hop = s.L == 0 ? s.M : s.L;
    c.expansion = resolved_expansion(s);
    c.linear = freq_params(s, s.mu_lin);
    c.nonlinear = freq_params(s, s.mu_nl);
    return c;
}

using Filter = std::variant<PbfdFlaf, FdFlaf, TimeDomainFlaf>;

Filter make_filter(const AlgorithmSpec& s)
{
    switch (s.algorithm) {
    case Algorithm::LinearPbfdaf:
    case Algorithm::PbfdFlaf: return Filter(std::in_place_type<PbfdFlaf>, pbfd_config(s));
    case Algorithm::FdFlaf: return Filter(std::in_place_type<FdFlaf>, fd_config(s));
    case Algorithm::FlafTd:
        if (s.M < 1) throw ConfigError("filter length M must be >= 1");
        return Filter(std::in_place_type<TimeDomainFlaf>, s.M, resolved_expansion(s), s.mu_lin, s.mu_nl, s.reg);
    }
    throw ConfigError("unknown algorithm");
}

} // namespace

std::string AlgorithmSpec::display_label() const
{
    if (!label.empty()) return label;
    std::string out(to_string(algorithm));
    if (algorithm != Algorithm::LinearPbfdaf && expansion) {
        out += '-';
        out += to_string(expansion->kind);
    }
    return out;
}

void AlgorithmSpec::validate() const
{
    if (algorithm != Algorithm::LinearPbfdaf && algorithm != Algorithm::FlafTd && !expansion)
        throw ConfigError(std::string(to_string(algorithm)) + " needs an expansion section");
    (void)make_filter(*this);
}

// ---------------------------------------------------------------------------
// Configuration parsing

namespace {

class Parser {
public:
    explicit Parser(std::string_view source) : source_(source) {}

    [[noreturn]] void fail(const YAML::Node& at, const std::string& msg) const
    {
        const int line = at.Mark().line;
        throw ConfigError(source_ + ":" + (line >= 0 ? std::to_string(line + 1) : std::string("?")) + ": " + msg);
    }

    void require_map(const YAML::Node& n, std::string_view where) const
    {
        if (!n.IsMap()) fail(n, std::string(where) + " must be a mapping");
    }

    void check_keys(const YAML::Node& map, std::initializer_list<std::string_view> allowed,
                    std::string_view where) const
    {
        require_map(map, where);
        std::set<std::string> seen;
        for (const auto& kv : map) {
            const auto key = kv.first.as<std::string>();
            if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
                fail(kv.first, "unknown key '" + key + "' in " + std::string(where));
            if (!seen.insert(key).second) fail(kv.first, "duplicate key '" + key + "' in " + std::string(where));
        }
    }

    double real(const YAML::Node& n, std::string_view what) const
    {
        if (!n.IsScalar()) fail(n, std::string(what) + " must be a number");
        const auto& s = n.Scalar();
        if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        try {
            return n.as<double>();
        } catch (const YAML::Exception&) {
            fail(n, std::string(what) + ": '" + s + "' is not a number");
        }
    }

    std::size_t count(const YAML::Node& n, std::string_view what) const
    {
        if (!n.IsScalar()) fail(n, std::string(what) + " must be a non-negative integer");
        const auto& s = n.Scalar();
        std::uint64_t v = 0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size())
            fail(n, std::string(what) + ": '" + s + "' is not a non-negative integer");
        return static_cast<std::size_t>(v);
    }

    std::uint64_t seed(const YAML::Node& n, std::string_view what) const { return count(n, what); }

    bool boolean(const YAML::Node& n, std::string_view what) const
    {
        try {
            return n.as<bool>();
        } catch (const YAML::Exception&) {
            fail(n, std::string(what) + " must be true or false");
        }
    }

    std::string text(const YAML::Node& n, std::string_view what) const
    {
        if (!n.IsScalar()) fail(n, std::string(what) + " must be a string");
        return n.Scalar();
    }

    Source source(const YAML::Node& n) const
    {
        if (n.IsScalar()) {
            const auto t = n.Scalar();
            if (t == "white") return WhiteGaussian{};
            if (t == "colored") return ColoredAr1{};
            fail(n, "source must be white, colored or a mapping with a type");
        }
        check_keys(n, {"type", "alpha", "path"}, "scenario.source");
        if (!n["type"]) fail(n, "scenario.source needs a type");
        const auto t = text(n["type"], "source type");
        if (t == "white") {
            if (n["alpha"] || n["path"]) fail(n, "white source takes no parameters");
            return WhiteGaussian{};
        }
        if (t == "colored") {
            if (n["path"]) fail(n["path"], "colored source takes no path");
            ColoredAr1 c;
            if (n["alpha"]) c.alpha = real(n["alpha"], "alpha");
            return c;
        }
        if (t == "wav") {
            if (n["alpha"]) fail(n["alpha"], "wav source takes no alpha");
            if (!n["path"]) fail(n, "wav source needs a path");
            return WavFile{text(n["path"], "path")};
        }
        fail(n["type"], "unknown source type '" + t + "' (white, colored, wav)");
    }

    Nonlinearity nonlinearity(const YAML::Node& n) const
    {
        if (n.IsScalar()) {
            const auto t = n.Scalar();
            if (t == "none") return NoDistortion{};
            if (t == "soft-clip") return SoftClip{};
            if (t == "composite") return Composite{};
            fail(n, "unknown nonlinearity '" + t + "' (none, soft-clip, composite)");
        }
        check_keys(n, {"type", "zeta"}, "scenario.nonlinearity");
        if (!n["type"]) fail(n, "scenario.nonlinearity needs a type");
        const auto t = text(n["type"], "nonlinearity type");
        if (t == "soft-clip") {
            SoftClip c;
            if (n["zeta"]) c.zeta = real(n["zeta"], "zeta");
            return c;
        }
        if (n["zeta"]) fail(n["zeta"], "zeta only applies to soft-clip");
        if (t == "none") return NoDistortion{};
        if (t == "composite") return Composite{};
        fail(n["type"], "unknown nonlinearity '" + t + "' (none, soft-clip, composite)");
    }

    ScenarioConfig scenario(const YAML::Node& n) const
    {
        check_keys(n,
                   {"source", "nonlinearity", "rir", "snr_db", "duration_samples", "seed", "volume_schedule"},
                   "scenario");
        ScenarioConfig c;
        if (n["source"]) c.source = source(n["source"]);
        if (n["nonlinearity"]) c.nonlinearity = nonlinearity(n["nonlinearity"]);
        if (const auto r = n["rir"]) {
            check_keys(r, {"t60_ms", "length", "fs", "seed"}, "scenario.rir");
            if (r["t60_ms"]) c.rir.t60_ms = real(r["t60_ms"], "t60_ms");
            if (r["length"]) c.rir.length = count(r["length"], "length");
            if (r["fs"]) c.rir.fs = real(r["fs"], "fs");
            if (r["seed"]) c.rir.seed = seed(r["seed"], "rir seed");
        }
        if (n["snr_db"]) c.snr_db = real(n["snr_db"], "snr_db");
        if (n["duration_samples"]) c.duration_samples = count(n["duration_samples"], "duration_samples");
        if (n["seed"]) c.seed = seed(n["seed"], "seed");
        if (const auto vs = n["volume_schedule"]) {
            if (!vs.IsSequence()) fail(vs, "volume_schedule must be a list");
            for (const auto& step : vs) {
                check_keys(step, {"start", "gain"}, "volume_schedule entry");
                if (!step["start"] || !step["gain"]) fail(step, "volume_schedule entries need start and gain");
                c.volume_schedule.push_back({count(step["start"], "start"), real(step["gain"], "gain")});
            }
        }
        try {
            c.validate();
        } catch (const ConfigError& e) {
            fail(n, e.what());
        }
        return c;
    }

    ExpansionConfig expansion(const YAML::Node& n) const
    {
        check_keys(n, {"kind", "order", "expanded_len", "seed", "ae_step", "ae_init"}, "expansion");
        if (!n["kind"]) fail(n, "expansion needs a kind");
        ExpansionConfig c;
        const auto k = text(n["kind"], "expansion kind");
        const auto kind = parse_expansion_kind(k);
        if (!kind)
            fail(n["kind"], "unknown expansion '" + k +
                                "' (chebyshev, legendre, trigonometric, random-vector, adaptive-exponential)");
        c.kind = *kind;
        if (n["order"]) c.order = count(n["order"], "order");
        if (n["expanded_len"]) c.expanded_len = count(n["expanded_len"], "expanded_len");
        if (n["seed"]) c.seed = seed(n["seed"], "expansion seed");
        if (n["ae_step"]) c.ae_step = real(n["ae_step"], "ae_step");
        if (n["ae_init"]) c.ae_init = real(n["ae_init"], "ae_init");
        return c;
    }

    void algorithm_fields(const YAML::Node& n, AlgorithmSpec& s, bool allow_label) const
    {
        static constexpr std::array keys{"label", "algorithm", "expansion", "mu_lin", "mu_nl",
                                         "lambda", "reg", "power_init", "M", "M_i",
                                         "L", "M_P", "constrained"};
        require_map(n, "algorithm entry");
        for (const auto& kv : n) {
            const auto key = kv.first.as<std::string>();
            if (std::find(keys.begin(), keys.end(), key) == keys.end())
                fail(kv.first, "unknown key '" + key + "' in algorithm entry");
        }
        if (n["label"]) {
            if (!allow_label) fail(n["label"], "label cannot be set in defaults");
            s.label = text(n["label"], "label");
        }
        if (n["algorithm"]) {
            const auto a = text(n["algorithm"], "algorithm");
            const auto parsed = parse_algorithm(a);
            if (!parsed) fail(n["algorithm"], "unknown algorithm '" + a + "' (linear-pbfdaf, fd-flaf, pbfd-flaf, flaf-td)");
            s.algorithm = *parsed;
        }
        if (const auto e = n["expansion"]) {
            if (e.IsNull() || (e.IsScalar() && e.Scalar() == "none"))
                s.expansion.reset();
            else
                s.expansion = expansion(e);
        }
        if (n["mu_lin"]) s.mu_lin = real(n["mu_lin"], "mu_lin");
        if (n["mu_nl"]) s.mu_nl = real(n["mu_nl"], "mu_nl");
        if (n["lambda"]) s.lambda = real(n["lambda"], "lambda");
        if (n["reg"]) s.reg = real(n["reg"], "reg");
        if (n["power_init"]) s.power_init = real(n["power_init"], "power_init");
        if (n["M"]) s.M = count(n["M"], "M");
        if (n["M_i"]) s.M_i = count(n["M_i"], "M_i");
        if (n["L"]) s.L = count(n["L"], "L");
        if (n["M_P"]) s.M_P = count(n["M_P"], "M_P");
        if (n["constrained"]) s.constrained = boolean(n["constrained"], "constrained");
    }

    ExperimentConfig experiment(const YAML::Node& root) const
    {
        check_keys(root, {"name", "scenario", "defaults", "algorithms", "output_dir", "report_ops", "erle"},
                   "experiment");
        ExperimentConfig c;
        if (root["name"]) c.name = text(root["name"], "name");
        if (!root["scenario"]) fail(root, "missing scenario section");
        c.scenario = scenario(root["scenario"]);
        if (root["output_dir"]) c.output_dir = text(root["output_dir"], "output_dir");
        if (root["report_ops"]) c.report_ops = boolean(root["report_ops"], "report_ops");
        if (const auto e = root["erle"]) {
            check_keys(e, {"window", "warmup"}, "erle");
            if (e["window"]) c.erle.window = count(e["window"], "window");
            if (e["warmup"]) c.erle.warmup = count(e["warmup"], "warmup");
            if (c.erle.window < 1) fail(e, "erle window must be >= 1");
        }

        AlgorithmSpec base;
        if (const auto d = root["defaults"]) algorithm_fields(d, base, false);

        const auto algs = root["algorithms"];
        if (!algs || !algs.IsSequence() || algs.size() == 0) fail(root, "algorithms must be a non-empty list");
        std::set<std::string> labels;
        for (const auto& entry : algs) {
            AlgorithmSpec s = base;
            algorithm_fields(entry, s, true);
            if (!entry["algorithm"] && !(root["defaults"] && root["defaults"]["algorithm"]))
                fail(entry, "algorithm entry needs an algorithm");
            try {
                s.validate();
            } catch (const ConfigError& e) {
                fail(entry, e.what());
            }
            const auto label = s.display_label();
            if (!labels.insert(trace_file_name(label)).second)
                fail(entry, "duplicate algorithm label '" + label + "'");
            c.algorithms.push_back(std::move(s));
        }
        return c;
    }

private:
    std::string source_;
};

} // namespace

ExperimentConfig parse_experiment(std::string_view yaml_text, std::string_view source_name)
{
    const Parser p(source_name);
    YAML::Node root;
    try {
        root = YAML::Load(std::string(yaml_text));
    } catch (const YAML::ParserException& e) {
        throw ConfigError(std::string(source_name) + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
    }
    if (!root || root.IsNull()) throw ConfigError(std::string(source_name) + ": empty configuration");
    return p.experiment(root);
}

ExperimentConfig load_experiment(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config file: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    ExperimentConfig c = parse_experiment(ss.str(), path.string());
    if (auto* wav = std::get_if<WavFile>(&c.scenario.source); wav && wav->path.is_relative())
        wav->path = path.parent_path() / wav->path;
    return c;
}

// ---------------------------------------------------------------------------
// Presets

namespace {

struct Preset {
    std::string_view name;
    std::string_view description;
    std::string_view yaml;
};

constexpr std::string_view kTable2 = R"(name: table2
output_dir: out/table2
scenario:
  source: {type: colored, alpha: 0.8}
  nonlinearity: {type: soft-clip, zeta: 0.2}
  rir: {t60_ms: 150, length: 300, fs: 8000, seed: 11}
  snr_db: 20
  duration_samples: 40000
  seed: 1
defaults:
  M: 300
  M_i: 128
  M_P: 4
  mu_lin: 0.01
  mu_nl: 0.001
  reg: 0.001
  lambda: 0.9
  power_init: 0.001
algorithms:
  - algorithm: linear-pbfdaf
  - algorithm: pbfd-flaf
    expansion: {kind: chebyshev, order: 10}
  - algorithm: pbfd-flaf
    expansion: {kind: legendre, order: 10}
  - algorithm: pbfd-flaf
    expansion: {kind: trigonometric, order: 10}
  - algorithm: pbfd-flaf
    expansion: {kind: random-vector, order: 10, expanded_len: 256, seed: 5}
  - algorithm: pbfd-flaf
    expansion: {kind: adaptive-exponential, order: 10, ae_step: 0.001, ae_init: 0.5}
)";

constexpr std::string_view kLinearWhite = R"(name: linear-white
output_dir: out/linear-white
scenario:
  source: white
  nonlinearity: none
  rir: {t60_ms: 100, length: 128, fs: 8000, seed: 3}
  snr_db: 40
  duration_samples: 8000
  seed: 2
algorithms:
  - algorithm: linear-pbfdaf
    M: 128
    M_P: 2
    mu_lin: 0.5
)";

constexpr std::string_view kTable3Speech = R"(name: table3-speech
output_dir: out/table3-speech
scenario:
  source: {type: wav, path: speech.wav}
  nonlinearity: {type: soft-clip, zeta: 0.2}
  rir: {t60_ms: 150, length: 300, fs: 8000, seed: 11}
  snr_db: 20
  seed: 1
defaults:
  M: 300
  M_i: 128
  M_P: 4
  mu_lin: 0.01
  mu_nl: 0.001
  reg: 0.001
algorithms:
  - algorithm: linear-pbfdaf
  - algorithm: pbfd-flaf
    expansion: {kind: trigonometric, order: 10}
  - algorithm: pbfd-flaf
    expansion: {kind: adaptive-exponential, order: 10, ae_step: 0.001, ae_init: 0.5}
)";

constexpr std::string_view kCompositeWhite = R"(name: composite
output_dir: out/composite
scenario:
  source: white
  nonlinearity: composite
  rir: {t60_ms: 150, length: 300, fs: 8000, seed: 11}
  snr_db: 30
  duration_samples: 40000
  seed: 4
defaults:
  M: 300
  M_i: 128
  M_P: 4
  mu_lin: 0.01
  mu_nl: 0.001
algorithms:
  - algorithm: linear-pbfdaf
  - algorithm: pbfd-flaf
    expansion: {kind: trigonometric, order: 5}
  - algorithm: fd-flaf
    expansion: {kind: trigonometric, order: 5}
    L: 100
)";

constexpr std::array kPresets{
    Preset{"table2", "colored noise through soft clipping and a 150 ms room, five expansions vs. linear",
           kTable2},
    Preset{"linear-white", "white noise through a linear room; one linear partitioned filter", kLinearWhite},
    Preset{"table3-speech", "speech through soft clipping; expects speech.wav (PCM16 mono, 8 kHz)", kTable3Speech},
    Preset{"composite", "white noise through the composite sine/cosine distortion", kCompositeWhite},
};

const Preset& find_preset(std::string_view name)
{
    for (const auto& p : kPresets)
        if (p.name == name) return p;
    std::string known;
    for (const auto& p : kPresets) known += (known.empty() ? "" : ", ") + std::string(p.name);
    throw ConfigError("unknown preset '" + std::string(name) + "' (available: " + known + ")");
}

} // namespace

std::vector<std::string> preset_names()
{
    std::vector<std::string> out;
    for (const auto& p : kPresets) out.emplace_back(p.name);
    return out;
}

std::string preset_yaml(std::string_view name)
{
    return std::string(find_preset(name).yaml);
}

std::string_view preset_description(std::string_view name)
{
    return find_preset(name).description;
}

// ---------------------------------------------------------------------------
// Running

double AlgorithmResult::mults_per_sample() const
{
    return processed ? static_cast<double>(multiplications) / static_cast<double>(processed) : 0.0;
}

double AlgorithmResult::expansion_mults_per_sample() const
{
    return processed ? static_cast<double>(expansion_multiplications) / static_cast<double>(processed) : 0.0;
}

AlgorithmResult run_algorithm(const AlgorithmSpec& spec, const ScenarioStream& stream, const ErleOptions& erle_opt)
{
    AlgorithmResult r;
    r.label = spec.display_label();
    r.spec = spec;
    const std::size_t n = stream.x.size();
    r.e.assign(n, 0.0);
    Filter filter = make_filter(spec);
    const auto t0 = std::chrono::steady_clock::now();

    const auto run_blocks = [&](auto& f, std::size_t hop) {
        std::vector<double> xb(hop), db(hop);
        for (std::size_t pos = 0; pos < n; pos += hop) {
            const std::size_t len = std::min(hop, n - pos);
            // the final partial block is zero-padded; the filter is causal
            std::fill(xb.begin(), xb.end(), 0.0);
            std::fill(db.begin(), db.end(), 0.0);
            std::copy_n(stream.x.begin() + static_cast<std::ptrdiff_t>(pos), len, xb.begin());
            std::copy_n(stream.d.begin() + static_cast<std::ptrdiff_t>(pos), len, db.begin());
            const BlockOutput out = f.process_block(xb, db);
            if (out.skipped) {
                std::copy_n(db.begin(), len, r.e.begin() + static_cast<std::ptrdiff_t>(pos));
            } else {
                std::copy_n(out.e.begin(), len, r.e.begin() + static_cast<std::ptrdiff_t>(pos));
            }
            r.samples = pos + len;
            r.processed = pos + hop;
        }
    };

    try {
        std::visit(
            [&](auto& f) {
                using F = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<F, TimeDomainFlaf>) {
                    for (std::size_t i = 0; i < n; ++i) {
                        r.e[i] = f.step(stream.x[i], stream.d[i]).e;
                        r.samples = i + 1;
                        r.processed = i + 1;
                    }
                } else if constexpr (std::is_same_v<F, PbfdFlaf>) {
                    run_blocks(f, f.hop());
                } else {
                    run_blocks(f, f.config().hop);
                }
            },
            filter);
    } catch (const DivergenceError&) {
        r.diverged = true;
        // the remainder of the trace is the unprocessed microphone signal
        std::copy(stream.d.begin() + static_cast<std::ptrdiff_t>(r.samples), stream.d.end(),
                  r.e.begin() + static_cast<std::ptrdiff_t>(r.samples));
    }
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::visit(
        [&](const auto& f) {
            using F = std::decay_t<decltype(f)>;
            r.multiplications = f.multiplications();
            if (const Expander* ex = f.expander()) r.expansion_multiplications = ex->ops().multiplications;
            if constexpr (!std::is_same_v<F, TimeDomainFlaf>) r.skipped_blocks = f.skipped_blocks();
        },
        filter);
    r.erle = erle(stream.d, r.e, erle_opt);
    return r;
}

std::vector<AlgorithmResult> run_experiment(const ExperimentConfig& config)
{
    const ScenarioStream stream = run_scenario(config.scenario);
    std::vector<AlgorithmResult> out;
    out.reserve(config.algorithms.size());
    for (const auto& spec : config.algorithms) out.push_back(run_algorithm(spec, stream, config.erle));
    return out;
}

std::vector<const AlgorithmResult*> ranked(const std::vector<AlgorithmResult>& results)
{
    std::vector<const AlgorithmResult*> out;
    for (const auto& r : results) out.push_back(&r);
    std::stable_sort(out.begin(), out.end(), [](const AlgorithmResult* a, const AlgorithmResult* b) {
        if (a->diverged != b->diverged) return !a->diverged;
        return a->erle.mean_db > b->erle.mean_db;
    });
    return out;
}

// ---------------------------------------------------------------------------
// CSV output

std::string format_number(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::array<char, 32> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    (void)ec;
    return std::string(buf.data(), ptr);
}

std::string csv_field(std::string_view s)
{
    if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (const char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string trace_csv(const AlgorithmResult& r)
{
    std::string out = "sample_index,e,erle_db\n";
    out.reserve(r.e.size() * 40);
    for (std::size_t i = 0; i < r.e.size(); ++i) {
        out += std::to_string(i);
        out += ',';
        out += format_number(r.e[i]);
        out += ',';
        out += format_number(r.erle.values[i]);
        out += '\n';
    }
    return out;
}

std::string summary_csv(const std::vector<AlgorithmResult>& results, bool report_ops)
{
    std::string out = "rank,label,algorithm,expansion,mean_erle_db,mean_erle_db_all,status";
    if (report_ops) out += ",mults_per_sample,expansion_mults_per_sample";
    out += '\n';
    std::size_t rank = 1;
    for (const AlgorithmResult* r : ranked(results)) {
        const auto& ex = r->spec.expansion;
        const bool has_ex = ex && r->spec.algorithm != Algorithm::LinearPbfdaf;
        out += std::to_string(rank++) + ',' + csv_field(r->label) + ',' + std::string(to_string(r->spec.algorithm)) +
               ',' + (has_ex ? std::string(to_string(ex->kind)) : std::string("none")) + ',' +
               format_number(r->erle.mean_db) + ',' + format_number(r->erle.mean_db_all) + ',' +
               (r->diverged ? "diverged" : "ok");
        if (report_ops)
            out += ',' + format_number(r->mults_per_sample()) + ',' + format_number(r->expansion_mults_per_sample());
        out += '\n';
    }
    return out;
}

std::string trace_file_name(std::string_view label)
{
    std::string out;
    for (const char c : label) {
        const bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                          c == '_' || c == '.';
        out += keep ? c : '_';
    }
    return out + ".csv";
}

std::vector<std::filesystem::path> write_results(const std::vector<AlgorithmResult>& results,
                                                 const std::filesystem::path& dir, bool report_ops)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
    std::vector<std::filesystem::path> written;
    const auto put = [&](const std::filesystem::path& p, const std::string& body) {
        std::ofstream os(p, std::ios::binary);
        os << body;
        if (!os) throw IoError("failed writing " + p.string());
        written.push_back(p);
    };
    for (const auto& r : results) put(dir / trace_file_name(r.label), trace_csv(r));
    put(dir / "summary.csv", summary_csv(results, report_ops));
    return written;
}

// ---------------------------------------------------------------------------

std::string analyze_corr_csv(const AnalyzeCorrOptions& o)
{
    CorrelationSetup setup;
    setup.part_len = o.M;
    setup.hop = o.L;
    setup.partitions = o.M_P;
    if (o.M < 1 || o.L < 1 || o.M_P < 1) throw InvalidInput("M, L and M_P must be >= 1");

    std::mt19937_64 rng(o.seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    std::vector<double> x(required_stream_length(setup, o.n_blocks));
    for (auto& v : x) v = dist(rng);

    std::vector<std::size_t> bins = o.bins;
    if (bins.empty())
        for (std::size_t m = 0; m <= (o.M + o.L) / 2; ++m) bins.push_back(m);

    std::string out = "bin,alpha_re,alpha_im,alpha_abs,cond_est,cond_model\n";
    for (const std::size_t m : bins) {
        const AnalysisReport rep = estimate_bin_correlation(x, setup, m, o.n_blocks);
        const double a = std::abs(rep.alpha_est);
        // the model is only defined up to |alpha| = 1/2; estimates may overshoot slightly
        const double model = tridiag_condition(o.M_P, std::min(a, 0.5 - 1e-12));
        out += std::to_string(m) + ',' + format_number(rep.alpha_est.real()) + ',' +
               format_number(rep.alpha_est.imag()) + ',' + format_number(a) + ',' + format_number(rep.cond) + ',' +
               format_number(model) + '\n';
    }
    return out;
}

} // namespace flaf
