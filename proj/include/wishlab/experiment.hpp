#ifndef WISHLAB_EXPERIMENT_HPP
#define WISHLAB_EXPERIMENT_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "wishlab/wishlab.hpp"

namespace wishlab {

using Json = nlohmann::json;

/// Everything that determines an experiment's artifacts. Thread count and
/// output directory are execution details and are kept out of it.
struct ExperimentConfig {
    ProcessKind kind = ProcessKind::FBM;
    double hurst = 0.5;
    double bifractional = 1.0;

    long n = 2;
    long d = 1024;
    std::vector<long> d_list;
    double x = 1.0;
    std::vector<double> xgrid;
    double a = 1.0;
    double b = 1.0;

    std::uint64_t seed = 0;
    long replications = 1;

    Regime regime = Regime::Central;
    bool fine_grid = false;
    long delta_size = 8;
    long series_terms = 1000000;
    int kmax = 8;
    int bins = 101;
    int bootstrap = 1000;
    double level = 0.95;
    long w1_replications = 0;
    std::string reference = "limit"; ///< "limit" or "finite": variance used by esd

    ProcessSpec spec() const { return ProcessSpec::make(kind, hurst, bifractional); }

    bool operator==(const ExperimentConfig&) const = default;
};

/// A parsed config plus execution settings found in its run block.
struct LoadedConfig {
    ExperimentConfig config;
    std::optional<unsigned> threads;
    std::optional<std::string> out;
};

namespace detail {

inline Json parse_scalar(const std::string& text) {
    if (text == "true") return true;
    if (text == "false") return false;
    if (text.size() >= 2 && text.front() == '"' && text.back() == '"') return text.substr(1, text.size() - 2);
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (!text.empty() && text.front() != '-') {
        std::uint64_t u = 0;
        auto [p, ec] = std::from_chars(first, last, u);
        if (ec == std::errc() && p == last) return u;
    } else {
        std::int64_t i = 0;
        auto [p, ec] = std::from_chars(first, last, i);
        if (ec == std::errc() && p == last) return i;
    }
    double v = 0.0;
    auto [p, ec] = std::from_chars(first, last, v);
    if (ec == std::errc() && p == last) return v;
    return text;
}

inline std::string trim(const std::string& s) {
    const auto lo = s.find_first_not_of(" \t\r");
    if (lo == std::string::npos) return {};
    const auto hi = s.find_last_not_of(" \t\r");
    return s.substr(lo, hi - lo + 1);
}

} // namespace detail

/// Dotted key=value text ("process.H = 0.6", lists comma separated,
/// '#' starts a comment) converted to the equivalent JSON object.
inline Json parse_key_value(std::istream& in) {
    Json root = Json::object();
    std::string line;
    int lineno = 0;
    std::vector<std::string> errors;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            errors.push_back("line " + std::to_string(lineno) + ": expected key=value");
            continue;
        }
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty()) {
            errors.push_back("line " + std::to_string(lineno) + ": empty key");
            continue;
        }
        Json parsed;
        if (value.find(',') != std::string::npos) {
            parsed = Json::array();
            for (const auto& item : csv::split(value)) parsed.push_back(detail::parse_scalar(detail::trim(item)));
        } else {
            parsed = detail::parse_scalar(value);
        }
        Json* node = &root;
        for (const auto& part : csv::split(key, '.')) {
            if (!node->is_object() && !node->is_null()) {
                errors.push_back("line " + std::to_string(lineno) + ": key '" + key + "' conflicts with a value");
                node = nullptr;
                break;
            }
            node = &(*node)[part];
        }
        if (node) *node = parsed;
    }
    if (!errors.empty()) {
        std::string msg = "config syntax:";
        for (const auto& e : errors) msg += "\n  " + e;
        throw ConfigError(msg);
    }
    return root;
}

namespace detail {

/// Pulls typed fields out of the raw JSON and records every problem.
class ConfigReader {
public:
    explicit ConfigReader(const Json& root) : root_(root) {
        if (!root_.is_object()) errors_.push_back("config must be an object");
    }

    const Json* find(const std::string& section, const std::string& key) {
        if (!root_.is_object() || !root_.contains(section)) return nullptr;
        const Json& s = root_.at(section);
        if (!s.is_object()) return nullptr;
        const auto it = s.find(key);
        return it == s.end() ? nullptr : &*it;
    }

    template <class T>
    std::optional<T> get(const std::string& section, const std::string& key) {
        const Json* v = find(section, key);
        if (!v) return std::nullopt;
        if constexpr (std::is_same_v<T, bool>) {
            if (v->is_boolean()) return v->get<bool>();
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (v->is_string()) return v->get<std::string>();
        } else if constexpr (std::is_same_v<T, std::uint64_t>) {
            if (v->is_number_unsigned()) return v->get<std::uint64_t>();
            if (v->is_number_integer() && v->get<std::int64_t>() >= 0)
                return static_cast<std::uint64_t>(v->get<std::int64_t>());
        } else if constexpr (std::is_integral_v<T>) {
            if (v->is_number_integer()) return v->get<T>();
        } else if constexpr (std::is_floating_point_v<T>) {
            if (v->is_number()) return v->get<T>();
        } else {
            if (v->is_array()) {
                T out;
                bool ok = true;
                for (const auto& e : *v) {
                    using E = typename T::value_type;
                    if constexpr (std::is_integral_v<E>) ok = ok && e.is_number_integer();
                    else ok = ok && e.is_number();
                    if (ok) out.push_back(e.get<typename T::value_type>());
                }
                if (ok) return out;
            } else if (v->is_number()) {
                return T{v->get<typename T::value_type>()};
            }
        }
        errors_.push_back(section + "." + key + ": wrong type");
        return std::nullopt;
    }

    void require(bool ok, const std::string& message) {
        if (!ok) errors_.push_back(message);
    }

    void check_unknown(const std::vector<std::pair<std::string, std::vector<std::string>>>& schema) {
        if (!root_.is_object()) return;
        for (const auto& [section, value] : root_.items()) {
            const auto it = std::find_if(schema.begin(), schema.end(), [&](const auto& s) { return s.first == section; });
            if (it == schema.end()) {
                errors_.push_back("unknown section '" + section + "'");
                continue;
            }
            if (!value.is_object()) {
                errors_.push_back("section '" + section + "' must be an object");
                continue;
            }
            for (const auto& [key, unused] : value.items())
                if (std::find(it->second.begin(), it->second.end(), key) == it->second.end())
                    errors_.push_back("unknown key '" + section + "." + key + "'");
        }
    }

    const std::vector<std::string>& errors() const { return errors_; }

private:
    const Json& root_;
    std::vector<std::string> errors_;
};

} // namespace detail

/// Applies defaults, validates every field and reports all failures in a
/// single ConfigError. A seed is mandatory unless `seed_override` is set.
inline LoadedConfig resolve_config(const Json& raw, std::optional<std::uint64_t> seed_override = std::nullopt) {
    detail::ConfigReader r(raw);
    r.check_unknown({
        {"process", {"kind", "H", "K"}},
        {"geometry", {"n", "d", "d_list", "x", "xgrid", "a", "b"}},
        {"run", {"seed", "replications", "threads", "out"}},
        {"task",
         {"regime", "fine_grid", "delta_size", "series_terms", "kmax", "bins", "bootstrap", "level",
          "w1_replications", "reference"}},
    });
    LoadedConfig out;
    ExperimentConfig& c = out.config;

    if (auto kind = r.get<std::string>("process", "kind")) {
        try {
            c.kind = parse_process_kind(*kind);
        } catch (const DomainError& e) {
            r.require(false, std::string("process.kind: ") + e.what());
        }
    } else {
        r.require(r.find("process", "kind") != nullptr, "process.kind: missing");
    }
    if (auto h = r.get<double>("process", "H")) c.hurst = *h;
    else r.require(r.find("process", "H") != nullptr, "process.H: missing");
    if (auto k = r.get<double>("process", "K")) c.bifractional = *k;
    std::optional<ProcessSpec> spec;
    try {
        spec = c.spec();
    } catch (const std::exception& e) {
        r.require(false, std::string("process: ") + e.what());
    }

    if (auto v = r.get<long>("geometry", "n")) c.n = *v;
    if (auto v = r.get<long>("geometry", "d")) c.d = *v;
    if (auto v = r.get<std::vector<long>>("geometry", "d_list")) c.d_list = *v;
    if (auto v = r.get<double>("geometry", "x")) c.x = *v;
    if (auto v = r.get<std::vector<double>>("geometry", "xgrid")) c.xgrid = *v;
    double lo = c.x, hi = c.x;
    if (!c.xgrid.empty()) {
        lo = std::min(lo, *std::min_element(c.xgrid.begin(), c.xgrid.end()));
        hi = std::max(hi, *std::max_element(c.xgrid.begin(), c.xgrid.end()));
    }
    c.a = r.get<double>("geometry", "a").value_or(lo);
    c.b = r.get<double>("geometry", "b").value_or(hi);

    if (seed_override) c.seed = *seed_override;
    else if (auto s = r.get<std::uint64_t>("run", "seed")) c.seed = *s;
    else r.require(r.find("run", "seed") != nullptr, "run.seed: missing (seeds are mandatory)");
    if (auto v = r.get<long>("run", "replications")) c.replications = *v;
    if (auto v = r.get<long>("run", "threads")) {
        r.require(*v >= 1, "run.threads: must be >= 1");
        out.threads = static_cast<unsigned>(std::max(1L, *v));
    }
    if (auto v = r.get<std::string>("run", "out")) out.out = *v;

    if (spec) c.regime = regime_for_alpha(spec->alpha());
    if (auto v = r.get<std::string>("task", "regime")) {
        try {
            c.regime = parse_regime(*v);
        } catch (const DomainError& e) {
            r.require(false, std::string("task.regime: ") + e.what());
        }
    }
    if (auto v = r.get<bool>("task", "fine_grid")) c.fine_grid = *v;
    if (auto v = r.get<long>("task", "delta_size")) c.delta_size = *v;
    if (auto v = r.get<long>("task", "series_terms")) c.series_terms = *v;
    if (auto v = r.get<int>("task", "kmax")) c.kmax = *v;
    if (auto v = r.get<int>("task", "bins")) c.bins = *v;
    if (auto v = r.get<int>("task", "bootstrap")) c.bootstrap = *v;
    if (auto v = r.get<double>("task", "level")) c.level = *v;
    if (auto v = r.get<long>("task", "w1_replications")) c.w1_replications = *v;
    if (auto v = r.get<std::string>("task", "reference")) c.reference = *v;

    r.require(c.n >= 1, "geometry.n: must be >= 1");
    r.require(c.d >= 2, "geometry.d: must be >= 2");
    r.require(c.x > 0.0, "geometry.x: must be positive");
    r.require(c.a > 0.0 && c.a <= c.b, "geometry.a/b: need 0 < a <= b");
    r.require(c.x >= c.a && c.x <= c.b, "geometry.x: outside [a,b]");
    r.require(std::floor(static_cast<double>(c.d) * c.x) >= 2.0, "geometry: floor(d x) must be >= 2");
    for (std::size_t i = 1; i < c.d_list.size(); ++i)
        r.require(c.d_list[i] > c.d_list[i - 1], "geometry.d_list: must increase strictly");
    for (long v : c.d_list) r.require(v >= 2, "geometry.d_list: entries must be >= 2");
    for (std::size_t i = 0; i < c.xgrid.size(); ++i) {
        r.require(c.xgrid[i] >= c.a && c.xgrid[i] <= c.b, "geometry.xgrid: point outside [a,b]");
        if (i) r.require(c.xgrid[i] > c.xgrid[i - 1], "geometry.xgrid: must increase strictly");
    }
    r.require(c.replications >= 1, "run.replications: must be >= 1");
    r.require(c.delta_size >= 2, "task.delta_size: must be >= 2");
    r.require(c.series_terms >= 1, "task.series_terms: must be >= 1");
    r.require(c.kmax >= 4 && c.kmax % 2 == 0, "task.kmax: must be even and >= 4");
    r.require(c.bins >= 1, "task.bins: must be >= 1");
    r.require(c.bootstrap >= 10, "task.bootstrap: must be >= 10");
    r.require(c.level > 0.0 && c.level < 1.0, "task.level: must lie in (0,1)");
    r.require(c.w1_replications >= 0, "task.w1_replications: must be >= 0");
    r.require(c.reference == "limit" || c.reference == "finite", "task.reference: must be 'limit' or 'finite'");
    if (spec && regime_for_alpha(spec->alpha()) != c.regime)
        r.require(false, "task.regime: " + std::string(to_string(c.regime)) + " does not match alpha = " +
                             csv::format(spec->alpha()));

    if (!r.errors().empty()) {
        std::string msg = "invalid config:";
        for (const auto& e : r.errors()) msg += "\n  " + e;
        throw ConfigError(msg);
    }
    return out;
}

/// Reads JSON (by extension or a leading '{') or key=value text.
inline LoadedConfig load_config(const std::filesystem::path& path,
                                std::optional<std::uint64_t> seed_override = std::nullopt) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    const auto first = text.find_first_not_of(" \t\r\n");
    Json raw;
    if (path.extension() == ".json" || (first != std::string::npos && text[first] == '{')) {
        try {
            raw = Json::parse(text);
        } catch (const Json::parse_error& e) {
            throw ConfigError(std::string("config JSON: ") + e.what());
        }
    } else {
        std::istringstream kv(text);
        raw = parse_key_value(kv);
    }
    return resolve_config(raw, seed_override);
}

/// Fully explicit form of a config; resolve_config(to_json(c)) == c.
inline Json to_json(const ExperimentConfig& c) {
    Json j;
    j["process"] = {{"kind", std::string(to_string(c.kind))}, {"H", c.hurst}, {"K", c.bifractional}};
    j["geometry"] = {{"n", c.n}, {"d", c.d}, {"d_list", c.d_list}, {"x", c.x},
                     {"xgrid", c.xgrid}, {"a", c.a}, {"b", c.b}};
    j["run"] = {{"seed", c.seed}, {"replications", c.replications}};
    j["task"] = {{"regime", std::string(to_string(c.regime))},
                 {"fine_grid", c.fine_grid},
                 {"delta_size", c.delta_size},
                 {"series_terms", c.series_terms},
                 {"kmax", c.kmax},
                 {"bins", c.bins},
                 {"bootstrap", c.bootstrap},
                 {"level", c.level},
                 {"w1_replications", c.w1_replications},
                 {"reference", c.reference}};
    return j;
}

/// FNV-1a over the canonical resolved JSON.
inline std::string config_hash(const ExperimentConfig& c) {
    const std::string text = to_json(c).dump();
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string csv_preamble(const ExperimentConfig& c) {
    return "# config_hash=" + config_hash(c) + " seed=" + std::to_string(c.seed) + "\n";
}

inline Json json_preamble(const ExperimentConfig& c) {
    return {{"config_hash", config_hash(c)}, {"seed", c.seed}};
}

inline EnsembleConfig ensemble_config(const ExperimentConfig& c, unsigned threads) {
    EnsembleConfig e;
    e.spec = c.spec();
    e.n = c.n;
    e.d = c.d;
    e.x = c.x;
    e.a = c.a;
    e.b = c.b;
    e.regime = c.regime;
    e.seed = c.seed;
    e.replications = c.replications;
    e.fine_grid = c.fine_grid;
    e.threads = threads;
    return e;
}

/// d values used for extrapolation: the config's list when it reaches
/// 4096, otherwise {1024, 2048, 4096}.
inline std::vector<long> extrapolation_d_list(const ExperimentConfig& c) {
    if (c.d_list.size() >= 3 && c.d_list.back() >= 4096) return c.d_list;
    return {1024, 2048, 4096};
}

/// d -> infinity entry variance: extrapolated for CENTRAL/LOG, the
/// Rosenblatt quadrature for NONCENTRAL. NaN when extrapolation fails.
inline double limit_variance(const ExperimentConfig& c, unsigned threads) {
    const ProcessSpec spec = c.spec();
    if (c.regime == Regime::NonCentral) return rosenblatt_variance(spec, c.x);
    const Extrapolation ex = sigma2_extrapolated(spec, c.x, extrapolation_d_list(c), threads);
    return ex.fit_ok ? ex.limit : std::numeric_limits<double>::quiet_NaN();
}

inline double finite_variance(const ExperimentConfig& c, unsigned threads) {
    return regime_variance(c.spec(), c.d, c.x, c.regime, threads);
}

namespace detail {

inline std::vector<double> entry_series(const std::vector<WishartSample>& ens, long i, long j) {
    std::vector<double> v;
    v.reserve(ens.size());
    for (const auto& w : ens) v.push_back(w.matrix(i, j));
    return v;
}

inline double sample_variance(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

inline Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

} // namespace detail

// ---- theory ---------------------------------------------------------------

inline Json theory_report(const ExperimentConfig& c, unsigned threads) {
    const ProcessSpec spec = c.spec();
    const RegimeParams params = derive_regime_params(spec);
    Json j = Json::object();
    j["process"] = {{"kind", std::string(to_string(spec.kind()))}, {"H", spec.hurst()}, {"K", spec.bifractional()}};
    j["regime_params"] = {{"alpha", params.alpha},   {"beta", params.beta},
                          {"nu", params.nu},         {"lambda", params.lambda},
                          {"regime", std::string(to_string(params.regime))}};

    std::vector<double> hgrid;
    for (int i = 0; i < 16; ++i) hgrid.push_back(2.0 * std::pow(32.0, i / 15.0));
    const HypothesisReport h = hypothesis_diagnostics(spec, hgrid);
    j["hypothesis"] = {{"phi1_exponent", h.phi1_exponent}, {"phi1_target", h.phi1_target},
                       {"phi1_r2", h.phi1_r2},             {"phi2_exponent", h.phi2_exponent},
                       {"phi2_target", h.phi2_target},     {"phi2_r2", h.phi2_r2},
                       {"lambda_fitted", detail::number_or_null(h.lambda_fitted)},
                       {"lambda_expected", h.lambda_expected}};

    Json table = Json::array();
    for (long m = 0; m <= c.delta_size; ++m) table.push_back({{"m", m}, {"a", a_alpha(params.alpha, m)}});
    j["a_alpha"] = table;

    const DeltaMatrix delta = delta_matrix(spec, c.delta_size);
    Json rows = Json::array();
    for (long k = 1; k <= c.delta_size; ++k) {
        Json row = Json::array();
        for (long l = 1; l <= c.delta_size; ++l) row.push_back(delta(k, l));
        rows.push_back(row);
    }
    j["delta_matrix"] = rows;
    j["quartic_contraction"] = quartic_contraction(delta);

    j["regime_variance"] = regime_variance(spec, c.d, c.x, c.regime, threads);
    try {
        const SeriesValue s = sigma2_series(params.alpha, c.x, c.series_terms);
        j["sigma2_series"] = {{"value", s.value}, {"tail_bound", s.tail_bound}, {"terms", c.series_terms}};
    } catch (const DomainError&) {
        j["sigma2_series"] = nullptr;
    }
    const Extrapolation ex = sigma2_extrapolated(spec, c.x, extrapolation_d_list(c), threads);
    j["sigma2_extrapolated"] = {{"limit", detail::number_or_null(ex.limit)},
                                {"coefficient", detail::number_or_null(ex.coefficient)},
                                {"exponent", ex.exponent},
                                {"log_model", ex.log_model},
                                {"residual", ex.residual},
                                {"fit_ok", ex.fit_ok},
                                {"d_list", ex.d_list},
                                {"raw", ex.raw}};
    j["rho2_limit"] = c.regime == Regime::Log ? Json(rho2_limit(c.x)) : Json(nullptr);
    try {
        const RateBound rb = rate_bound(params.alpha, params.nu, c.n, static_cast<double>(c.d));
        j["rate_bound"] = {{"r_value", rb.r_value},
                           {"total_bound", rb.total_bound},
                           {"branch", std::string(to_string(rb.branch))}};
    } catch (const DomainError& e) {
        j["rate_bound"] = {{"unavailable", e.what()}};
    }
    j["rosenblatt_variance"] = c.regime == Regime::NonCentral ? Json(rosenblatt_variance(spec, c.x)) : Json(nullptr);
    return j;
}

// ---- clt-check --------------------------------------------------------------

struct EntryCheck {
    long i;
    long j;
    double reference_variance;
    double sample_variance;
    double w1;
    Cumulants cumulants;
};

struct CrossMoment {
    long i1, j1, i2, j2;
    double correlation;
};

struct CltReport {
    double variance; ///< exact finite-d off-diagonal variance
    std::vector<EntryCheck> entries;
    std::vector<CrossMoment> cross;
};

inline CltReport clt_check(const ExperimentConfig& c, unsigned threads) {
    if (c.replications < 100) throw ConfigError("clt-check: run.replications must be >= 100");
    const auto ens = sample_ensemble(ensemble_config(c, threads));
    CltReport rep;
    rep.variance = finite_variance(c, threads);
    std::vector<std::pair<long, long>> idx;
    std::vector<std::vector<double>> series;
    for (long i = 0; i < c.n; ++i) {
        for (long j = i; j < c.n; ++j) {
            auto s = detail::entry_series(ens, i, j);
            const double ref = (i == j ? 2.0 : 1.0) * rep.variance;
            rep.entries.push_back({i, j, ref, detail::sample_variance(s), w1_to_gaussian(s, 0.0, ref), cumulants(s)});
            idx.push_back({i, j});
            series.push_back(std::move(s));
        }
    }
    for (std::size_t p = 0; p < series.size(); ++p)
        for (std::size_t q = p + 1; q < series.size(); ++q)
            rep.cross.push_back({idx[p].first, idx[p].second, idx[q].first, idx[q].second,
                                 correlation(series[p], series[q])});
    return rep;
}

// ---- esd --------------------------------------------------------------------

struct EsdReport {
    double t;
    SpectralSummary pooled;
    std::vector<HistogramBin> histogram;
    double m2_ratio; ///< m2 / t
    double m4_ratio; ///< m4 / (2 t^2)
    double moment_distance;
};

inline EsdReport esd_experiment(const ExperimentConfig& c, unsigned threads) {
    const auto ens = sample_ensemble(ensemble_config(c, threads));
    std::vector<SpectralSummary> parts;
    for (const auto& w : ens) parts.push_back(esd_moments(w.matrix, c.kmax));
    EsdReport rep;
    rep.t = c.reference == "limit" ? limit_variance(c, threads) : finite_variance(c, threads);
    if (!std::isfinite(rep.t) || !(rep.t > 0.0)) throw NumericError("esd: reference variance unavailable", rep.t);
    rep.pooled = pool(parts);
    rep.histogram = esd_histogram(rep.pooled, rep.t, c.bins);
    rep.m2_ratio = rep.pooled.moment(2) / rep.t;
    rep.m4_ratio = rep.pooled.moment(4) / (2.0 * rep.t * rep.t);
    rep.moment_distance = moment_distance(rep.pooled, rep.t, c.kmax);
    return rep;
}

// ---- rates ------------------------------------------------------------------

struct RatesReport {
    Extrapolation extrapolation;
    RateFit variance_gap;        ///< |regime_variance(d) - limit| against d
    std::optional<RateFit> w1;   ///< entrywise W1 of W_12 against d
};

inline RatesReport rates_experiment(const ExperimentConfig& c, unsigned threads) {
    if (c.d_list.size() < 3) throw ConfigError("rates: geometry.d_list needs at least 3 values");
    const ProcessSpec spec = c.spec();
    RatesReport rep;
    rep.extrapolation = sigma2_extrapolated(spec, c.x, c.d_list, threads);
    if (!rep.extrapolation.fit_ok)
        throw NumericError("rates: variance sequence is not monotone, extrapolation undefined");
    std::vector<std::pair<double, double>> gaps;
    for (std::size_t i = 0; i < c.d_list.size(); ++i)
        gaps.push_back({static_cast<double>(c.d_list[i]), std::fabs(rep.extrapolation.raw[i] - rep.extrapolation.limit)});
    rep.variance_gap = fit_power_law(gaps);
    if (c.w1_replications > 0) {
        std::vector<std::pair<double, double>> w1;
        for (std::size_t i = 0; i < c.d_list.size(); ++i) {
            ExperimentConfig sub = c;
            sub.n = 2;
            sub.d = c.d_list[i];
            sub.replications = c.w1_replications;
            const auto ens = sample_ensemble(ensemble_config(sub, threads));
            const auto s = detail::entry_series(ens, 0, 1);
            w1.push_back({static_cast<double>(sub.d), w1_to_gaussian(s, 0.0, rep.extrapolation.raw[i])});
        }
        rep.w1 = fit_power_law(w1);
    }
    return rep;
}

// ---- rosenblatt -------------------------------------------------------------

struct RosenblattEntry {
    long i;
    long j;
    double sample_variance;
    Cumulants cumulants;
    ConfidenceInterval kurtosis_ci;
};

struct RosenblattReport {
    double limit_variance;  ///< rosenblatt_variance(spec, x), off-diagonal
    double finite_variance; ///< exact variance at this d, off-diagonal
    double pooled_offdiag_variance;
    double pooled_diag_variance;
    std::vector<RosenblattEntry> entries;
};

inline RosenblattReport rosenblatt_experiment(const ExperimentConfig& c, unsigned threads) {
    if (c.regime != Regime::NonCentral) throw ConfigError("rosenblatt: requires the NONCENTRAL regime");
    if (c.replications < 8) throw ConfigError("rosenblatt: run.replications must be >= 8");
    const auto ens = sample_ensemble(ensemble_config(c, threads));
    RosenblattReport rep;
    rep.limit_variance = rosenblatt_variance(c.spec(), c.x);
    rep.finite_variance = finite_variance(c, threads);
    std::vector<double> off, diag;
    for (long i = 0; i < c.n; ++i) {
        for (long j = i; j < c.n; ++j) {
            const auto s = detail::entry_series(ens, i, j);
            (i == j ? diag : off).insert((i == j ? diag : off).end(), s.begin(), s.end());
            const auto ci = bootstrap_kurtosis_ci(s, c.bootstrap, c.level,
                                                  c.seed + static_cast<std::uint64_t>(i * c.n + j));
            rep.entries.push_back({i, j, detail::sample_variance(s), cumulants(s), ci});
        }
    }
    rep.pooled_diag_variance = detail::sample_variance(diag);
    rep.pooled_offdiag_variance = off.size() >= 2 ? detail::sample_variance(off) : std::numeric_limits<double>::quiet_NaN();
    return rep;
}

// ---- functional -------------------------------------------------------------

struct FunctionalReport {
    std::vector<Trajectory> trajectories;
    std::vector<ModulusRow> modulus;
    std::vector<IncrementMoments> increments; ///< entry (0,1), empty unless n >= 2 and replications >= 2
};

inline FunctionalReport functional_experiment(const ExperimentConfig& c, unsigned threads) {
    if (c.xgrid.size() < 2) throw ConfigError("functional: geometry.xgrid needs at least 2 points");
    const ProcessSpec spec = c.spec();
    const long D = static_cast<long>(std::floor(static_cast<double>(c.d) * c.xgrid.back()));
    const PathFactor factor = path_factor(spec, D);
    FunctionalReport rep;
    rep.trajectories.resize(static_cast<std::size_t>(c.replications));
    parallel_for(rep.trajectories.size(), threads, [&](std::size_t r) {
        Rng rng = make_stream(c.seed, r);
        rep.trajectories[r] = sample_trajectory(factor, c.n, c.d, c.xgrid, c.regime, rng, c.a, c.b);
    });
    rep.modulus = l2_modulus_table(spec, c.d, c.xgrid, c.regime, threads);
    if (c.n >= 2 && c.replications >= 2) rep.increments = empirical_increment_moments(rep.trajectories, 0, 1);
    return rep;
}

// ---- dispatch ---------------------------------------------------------------

inline const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> names{"theory", "sample", "clt-check", "esd", "rates", "rosenblatt",
                                                "functional"};
    return names;
}

namespace detail {

class ArtifactWriter {
public:
    ArtifactWriter(std::filesystem::path dir, const ExperimentConfig& c) : dir_(std::move(dir)), config_(c) {
        std::filesystem::create_directories(dir_);
    }

    void csv(const std::string& name, const std::string& body) const { write(name, csv_preamble(config_) + body); }

    void json(const std::string& name, Json body) const {
        Json full = json_preamble(config_);
        full.update(body);
        write(name, full.dump(2) + "\n");
    }

    void binary(const std::string& name, const std::string& bytes) const { write(name, bytes); }

private:
    void write(const std::string& name, const std::string& bytes) const {
        std::ofstream out(dir_ / name, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot write '" + (dir_ / name).string() + "'");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    }

    std::filesystem::path dir_;
    const ExperimentConfig& config_;
};

inline Json cumulants_json(const Cumulants& k) {
    return {{"mean", k.mean}, {"variance", k.variance}, {"skewness", k.skewness}, {"excess_kurtosis", k.excess_kurtosis}};
}

} // namespace detail

/// Runs one subcommand and writes its artifacts under `out_dir`, always
/// including resolved_config.json. Library exceptions propagate.
inline void run_experiment(const std::string& subcommand, const ExperimentConfig& c, const std::filesystem::path& out_dir,
                           unsigned threads) {
    if (std::find(subcommands().begin(), subcommands().end(), subcommand) == subcommands().end())
        throw ConfigError("unknown subcommand '" + subcommand + "'");
    const detail::ArtifactWriter w(out_dir, c);
    w.json("resolved_config.json", {{"config", to_json(c)}});

    if (subcommand == "theory") {
        w.json("theory.json", theory_report(c, threads));
    } else if (subcommand == "sample") {
        const auto ens = sample_ensemble(ensemble_config(c, threads));
        std::ostringstream text, bin;
        text << "replication,i,j,value\n";
        for (const auto& s : ens) {
            write_csv(text, s, false);
            write_binary(bin, s);
        }
        w.csv("samples.csv", text.str());
        w.binary("samples.bin", bin.str());
    } else if (subcommand == "clt-check") {
        const CltReport rep = clt_check(c, threads);
        std::ostringstream e, x;
        e << "i,j,reference_variance,sample_variance,w1,skewness,excess_kurtosis\n";
        for (const auto& r : rep.entries)
            e << r.i << ',' << r.j << ',' << csv::format(r.reference_variance) << ',' << csv::format(r.sample_variance)
              << ',' << csv::format(r.w1) << ',' << csv::format(r.cumulants.skewness) << ','
              << csv::format(r.cumulants.excess_kurtosis) << '\n';
        x << "i1,j1,i2,j2,correlation\n";
        for (const auto& r : rep.cross)
            x << r.i1 << ',' << r.j1 << ',' << r.i2 << ',' << r.j2 << ',' << csv::format(r.correlation) << '\n';
        w.csv("clt_entries.csv", e.str());
        w.csv("clt_cross.csv", x.str());
    } else if (subcommand == "esd") {
        const EsdReport rep = esd_experiment(c, threads);
        std::ostringstream m, h;
        write_moments_csv(m, rep.pooled);
        write_histogram_csv(h, rep.histogram);
        w.csv("esd_moments.csv", m.str());
        w.csv("esd_histogram.csv", h.str());
        w.json("esd_summary.json", {{"t", rep.t},
                                    {"reference", c.reference},
                                    {"m2_ratio", rep.m2_ratio},
                                    {"m4_ratio", rep.m4_ratio},
                                    {"moment_distance", rep.moment_distance}});
    } else if (subcommand == "rates") {
        const RatesReport rep = rates_experiment(c, threads);
        std::ostringstream v;
        write_rate_csv(v, rep.variance_gap);
        w.csv("rates_variance.csv", v.str());
        if (rep.w1) {
            std::ostringstream s;
            write_rate_csv(s, *rep.w1);
            w.csv("rates_w1.csv", s.str());
        }
        w.json("rates_summary.json", {{"limit", rep.extrapolation.limit},
                                      {"raw", rep.extrapolation.raw},
                                      {"d_list", rep.extrapolation.d_list},
                                      {"variance_gap_slope", rep.variance_gap.slope},
                                      {"variance_gap_r2", rep.variance_gap.r2},
                                      {"w1_slope", rep.w1 ? Json(rep.w1->slope) : Json(nullptr)}});
    } else if (subcommand == "rosenblatt") {
        const RosenblattReport rep = rosenblatt_experiment(c, threads);
        std::ostringstream e;
        e << "i,j,sample_variance,skewness,excess_kurtosis,kurtosis_ci_lower,kurtosis_ci_upper\n";
        for (const auto& r : rep.entries)
            e << r.i << ',' << r.j << ',' << csv::format(r.sample_variance) << ',' << csv::format(r.cumulants.skewness)
              << ',' << csv::format(r.cumulants.excess_kurtosis) << ',' << csv::format(r.kurtosis_ci.lower) << ','
              << csv::format(r.kurtosis_ci.upper) << '\n';
        w.csv("rosenblatt_entries.csv", e.str());
        w.json("rosenblatt_summary.json", {{"limit_variance", rep.limit_variance},
                                           {"finite_variance", rep.finite_variance},
                                           {"pooled_offdiag_variance", detail::number_or_null(rep.pooled_offdiag_variance)},
                                           {"pooled_diag_variance", rep.pooled_diag_variance}});
    } else if (subcommand == "functional") {
        const FunctionalReport rep = functional_experiment(c, threads);
        std::ostringstream t, m;
        write_trajectory_csv(t, rep.trajectories.front());
        write_modulus_csv(m, rep.modulus);
        w.csv("trajectory.csv", t.str());
        w.csv("modulus.csv", m.str());
        if (!rep.increments.empty()) {
            std::ostringstream inc;
            inc << "y,x,second,fourth,second_stderr,exact_gap\n";
            for (const auto& r : rep.increments)
                inc << csv::format(r.y) << ',' << csv::format(r.x) << ',' << csv::format(r.second) << ','
                    << csv::format(r.fourth) << ',' << csv::format(r.second_stderr) << ','
                    << csv::format(increment_l2_gap(c.spec(), c.d, r.x, r.y, c.regime, threads)) << '\n';
            w.csv("increment_moments.csv", inc.str());
        }
    }
}

/// Exit status for an exception escaping run_experiment.
inline int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const NumericError*>(&e)) return 3;
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const DomainError*>(&e) ||
        dynamic_cast<const ContractError*>(&e))
        return 2;
    return 1;
}

inline std::string error_kind(const std::exception& e) {
    if (dynamic_cast<const NumericError*>(&e)) return "numeric";
    if (dynamic_cast<const ConfigError*>(&e)) return "config";
    if (dynamic_cast<const UnsupportedRegime*>(&e)) return "unsupported_regime";
    if (dynamic_cast<const DomainError*>(&e)) return "domain";
    if (dynamic_cast<const ContractError*>(&e)) return "contract";
    return "internal";
}

} // namespace wishlab

#endif // WISHLAB_EXPERIMENT_HPP
