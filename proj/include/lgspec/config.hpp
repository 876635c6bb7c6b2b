#pragma once

#include "lgspec/io.hpp"
#include "lgspec/models.hpp"
#include "lgspec/resampling.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace lgspec {

inline constexpr int config_schema_version = 1;

struct ModelSource {
    std::string model; // gaussian-wn, gaussian-ar1, cosine, local-trig, aparch
    std::size_t n = 1974;
    double phi = 0.5;
    CosineModel cosine;
    LocalTrigModel trig = LocalTrigModel::standard();
    ApArchModel aparch = ApArchModel::example();
    std::size_t burn_in = 1000;

    Series simulate(Rng& rng) const
    {
        if (model == "gaussian-wn")
            return simulate_gaussian_wn(n, rng);
        if (model == "gaussian-ar1")
            return simulate_gaussian_ar1(phi, n, rng);
        if (model == "cosine")
            return simulate_cosine(cosine, n, rng);
        if (model == "local-trig")
            return simulate_local_trig(trig, n, rng);
        if (model == "aparch")
            return simulate_aparch(aparch, n, rng, burn_in);
        throw UsageError("unknown model '" + model + "'");
    }
};

struct CsvSource {
    std::string path; // as written in the config
    std::filesystem::path resolved;
    ColumnRef column = std::size_t{0};
};

/// Diagonal point at the standard normal q-quantile, written "10%".
struct QuantilePoint {
    double q = 0.5;
    std::string text;
};

using PointSpec = std::variant<LocalPoint, QuantilePoint>;

enum class BandMethod { simulation, bootstrap };

struct RunConfig {
    std::variant<ModelSource, CsvSource> source;
    std::vector<PointSpec> points;
    std::optional<Bandwidth> bandwidth; // empty: 1.75 n^(-1/6)
    std::vector<std::size_t> m_list{10};
    WindowKind window = WindowKind::tukey_hanning;
    FrequencyGrid grid = FrequencyGrid::uniform();
    std::optional<std::size_t> grid_points = 257; // empty when omegas were listed
    BandSpec band;
    BandMethod band_method = BandMethod::simulation;
    std::uint64_t seed = 1;
    std::string output = "bundle"; // relative to the working directory
    std::vector<std::size_t> diagnose_lags{1};
    unsigned threads = 0;
    bool fatal_nonconvergence = false;
    json snapshot; // normalised form, hashed into the bundle id

    bool is_model() const { return std::holds_alternative<ModelSource>(source); }

    std::size_t max_lag() const { return *std::max_element(m_list.begin(), m_list.end()); }

    std::vector<LocalPoint> resolved_points() const
    {
        std::vector<LocalPoint> out;
        for (const auto& p : points) {
            if (const auto* v = std::get_if<LocalPoint>(&p))
                out.push_back(*v);
            else {
                const double z = normal_quantile(std::get<QuantilePoint>(p).q);
                out.push_back({z, z});
            }
        }
        return out;
    }

    Bandwidth resolved_bandwidth(std::size_t n) const
    {
        return bandwidth ? *bandwidth : rule_of_thumb_bandwidth(n);
    }

    std::string hash() const { return digest_hex(text_digest(snapshot.dump())); }

    static std::uint64_t text_digest(std::string_view s)
    {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
        return h;
    }
};

namespace detail {

inline void reject_unknown(const json& j, std::string_view where,
                           std::initializer_list<std::string_view> allowed)
{
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (auto a : allowed)
            ok |= key == a;
        if (!ok)
            throw UsageError("unknown key '" + key + "' in " + std::string(where));
    }
}

template <typename T>
T get_or(const json& j, std::string_view key, T fallback)
{
    const auto it = j.find(key);
    if (it == j.end())
        return fallback;
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw UsageError("config key '" + std::string(key) + "' has the wrong type");
    }
}

inline PointSpec parse_point(const json& j)
{
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        double pct = 0.0;
        if (s.size() < 2 || s.back() != '%' ||
            !parse_double(std::string_view(s).substr(0, s.size() - 1), pct) ||
            !(pct > 0.0 && pct < 100.0))
            throw UsageError("point shorthand '" + s + "' is not a percentage in (0, 100)");
        return QuantilePoint{pct / 100.0, s};
    }
    try {
        return point_from_json(j);
    } catch (const DataError& e) {
        throw UsageError(e.what());
    }
}

inline json point_spec_json(const PointSpec& p)
{
    if (const auto* v = std::get_if<LocalPoint>(&p))
        return to_json(*v);
    return std::get<QuantilePoint>(p).text;
}

inline ModelSource parse_model(const json& j)
{
    ModelSource m;
    m.model = j.at("model").get<std::string>();
    m.n = get_or<std::size_t>(j, "n", m.n);
    if (m.model == "gaussian-wn") {
        reject_unknown(j, "source", {"model", "n"});
    } else if (m.model == "gaussian-ar1") {
        reject_unknown(j, "source", {"model", "n", "phi"});
        m.phi = get_or(j, "phi", m.phi);
        if (!(std::abs(m.phi) < 1.0))
            throw UsageError("AR(1) coefficient must satisfy |phi| < 1");
    } else if (m.model == "cosine") {
        reject_unknown(j, "source", {"model", "n", "alpha", "sigma"});
        m.cosine.alpha = get_or(j, "alpha", m.cosine.alpha);
        m.cosine.sigma = get_or(j, "sigma", m.cosine.sigma);
        m.cosine.validate();
    } else if (m.model == "local-trig") {
        reject_unknown(j, "source", {"model", "n", "levels", "amplitudes", "amplitudes_alt",
                                     "frequencies", "probabilities"});
        auto& t = m.trig;
        t.levels = get_or(j, "levels", t.levels);
        t.amplitudes = get_or(j, "amplitudes", t.amplitudes);
        t.amplitudes_alt = get_or(j, "amplitudes_alt", t.amplitudes_alt);
        t.frequencies = get_or(j, "frequencies", t.frequencies);
        t.probabilities = get_or(j, "probabilities", t.probabilities);
        t.validate();
    } else if (m.model == "aparch") {
        reject_unknown(j, "source",
                       {"model", "n", "alpha0", "alpha", "gamma", "beta", "delta", "burn_in"});
        auto& a = m.aparch;
        a.alpha0 = get_or(j, "alpha0", a.alpha0);
        a.alpha = get_or(j, "alpha", a.alpha);
        a.gamma = get_or(j, "gamma", a.gamma);
        a.beta = get_or(j, "beta", a.beta);
        a.delta = get_or(j, "delta", a.delta);
        m.burn_in = get_or(j, "burn_in", m.burn_in);
        a.validate();
    } else {
        throw UsageError("unknown model '" + m.model + "'");
    }
    if (m.n < 3)
        throw UsageError("model series length must be at least 3");
    return m;
}

inline json model_json(const ModelSource& m)
{
    json j{{"model", m.model}, {"n", m.n}};
    if (m.model == "gaussian-ar1")
        j["phi"] = m.phi;
    else if (m.model == "cosine")
        j.update({{"alpha", m.cosine.alpha}, {"sigma", m.cosine.sigma}});
    else if (m.model == "local-trig")
        j.update({{"levels", m.trig.levels},
                  {"amplitudes", m.trig.amplitudes},
                  {"amplitudes_alt", m.trig.amplitudes_alt},
                  {"frequencies", m.trig.frequencies},
                  {"probabilities", m.trig.probabilities}});
    else if (m.model == "aparch")
        j.update({{"alpha0", m.aparch.alpha0},
                  {"alpha", m.aparch.alpha},
                  {"gamma", m.aparch.gamma},
                  {"beta", m.aparch.beta},
                  {"delta", m.aparch.delta},
                  {"burn_in", m.burn_in}});
    return j;
}

} // namespace detail

/// Parses and validates a config document. Relative CSV paths resolve
/// against base_dir.
inline RunConfig parse_config(const json& j, const std::filesystem::path& base_dir = {})
{
    using namespace detail;
    if (!j.is_object())
        throw UsageError("config must be a JSON object");
    reject_unknown(j, "config",
                   {"schema_version", "source", "points", "bandwidth", "m_list", "window", "grid",
                    "band", "seed", "output", "diagnose", "threads", "fatal_nonconvergence"});
    const int version = get_or(j, "schema_version", 0);
    if (version != config_schema_version)
        throw UsageError("unsupported config schema_version " + std::to_string(version) +
                         " (expected " + std::to_string(config_schema_version) + ")");

    RunConfig c;
    try {
        const json& src = j.at("source");
        if (!src.is_object())
            throw UsageError("source must be an object");
        if (src.contains("csv")) {
            reject_unknown(src, "source", {"csv", "column"});
            CsvSource csv;
            csv.path = src.at("csv").get<std::string>();
            csv.resolved = std::filesystem::path(csv.path).is_absolute()
                               ? std::filesystem::path(csv.path)
                               : base_dir / csv.path;
            if (src.contains("column")) {
                const auto& col = src.at("column");
                if (col.is_string())
                    csv.column = col.get<std::string>();
                else if (col.is_number_unsigned())
                    csv.column = col.get<std::size_t>();
                else
                    throw UsageError("source column must be a name or a 0-based index");
            }
            c.source = std::move(csv);
            c.band_method = BandMethod::bootstrap;
        } else if (src.contains("model")) {
            c.source = parse_model(src);
        } else {
            throw UsageError("source needs either 'model' or 'csv'");
        }
    } catch (const json::exception& e) {
        throw UsageError(std::string("bad source: ") + e.what());
    }

    if (!j.contains("points") || !j["points"].is_array() || j["points"].empty())
        throw UsageError("config needs a nonempty 'points' list");
    for (const auto& p : j["points"])
        c.points.push_back(parse_point(p));

    if (j.contains("bandwidth")) {
        const auto& b = j["bandwidth"];
        if (b.is_string()) {
            if (b.get<std::string>() != "auto")
                throw UsageError("bandwidth must be a number, a pair, or \"auto\"");
        } else {
            c.bandwidth = bandwidth_from_json(b);
        }
    }

    c.m_list = get_or(j, "m_list", c.m_list);
    if (c.m_list.empty())
        throw UsageError("m_list must not be empty");
    std::sort(c.m_list.begin(), c.m_list.end());
    c.m_list.erase(std::unique(c.m_list.begin(), c.m_list.end()), c.m_list.end());
    if (c.m_list.front() < 1)
        throw UsageError("truncation levels must be >= 1");

    c.window = window_kind_from_string(get_or<std::string>(j, "window", "tukey-hanning"));

    if (j.contains("grid")) {
        const auto& g = j["grid"];
        reject_unknown(g, "grid", {"points", "omega"});
        if (g.contains("omega")) {
            c.grid = FrequencyGrid(get_or<std::vector<double>>(g, "omega", {}));
            c.grid_points.reset();
        } else {
            c.grid_points = get_or<std::size_t>(g, "points", 257);
            c.grid = FrequencyGrid::uniform(*c.grid_points);
        }
    }

    if (j.contains("band")) {
        const auto& b = j["band"];
        reject_unknown(b, "band",
                       {"replicates", "lower", "upper", "block_length", "method"});
        c.band.replicates = get_or(b, "replicates", c.band.replicates);
        c.band.lower_q = get_or(b, "lower", c.band.lower_q);
        c.band.upper_q = get_or(b, "upper", c.band.upper_q);
        c.band.block_length = get_or(b, "block_length", c.band.block_length);
        if (b.contains("method")) {
            const auto m = get_or<std::string>(b, "method", "");
            if (m == "simulation")
                c.band_method = BandMethod::simulation;
            else if (m == "bootstrap")
                c.band_method = BandMethod::bootstrap;
            else
                throw UsageError("band method must be 'simulation' or 'bootstrap'");
        }
    }
    c.band.validate();
    if (c.band_method == BandMethod::simulation && !c.is_model())
        throw UsageError("simulation bands need a model source");

    c.seed = get_or(j, "seed", c.seed);
    c.output = get_or(j, "output", c.output);
    if (j.contains("diagnose")) {
        reject_unknown(j["diagnose"], "diagnose", {"lags"});
        c.diagnose_lags = get_or(j["diagnose"], "lags", c.diagnose_lags);
    }
    c.threads = get_or(j, "threads", c.threads);
    c.fatal_nonconvergence = get_or(j, "fatal_nonconvergence", c.fatal_nonconvergence);

    if (const auto* m = std::get_if<ModelSource>(&c.source); m && c.max_lag() + 2 > m->n)
        throw UsageError("max truncation " + std::to_string(c.max_lag()) +
                         " exceeds n - 2 = " + std::to_string(m->n - 2));

    // normalised snapshot: every field explicit, so equal runs hash equally
    json snap;
    snap["schema_version"] = config_schema_version;
    if (const auto* m = std::get_if<ModelSource>(&c.source)) {
        snap["source"] = model_json(*m);
    } else {
        const auto& csv = std::get<CsvSource>(c.source);
        snap["source"] = {{"csv", csv.path}};
        if (const auto* name = std::get_if<std::string>(&csv.column))
            snap["source"]["column"] = *name;
        else
            snap["source"]["column"] = std::get<std::size_t>(csv.column);
    }
    snap["points"] = json::array();
    for (const auto& p : c.points)
        snap["points"].push_back(point_spec_json(p));
    snap["bandwidth"] = c.bandwidth ? to_json(*c.bandwidth) : json("auto");
    snap["m_list"] = c.m_list;
    snap["window"] = std::string(to_string(c.window));
    if (c.grid_points)
        snap["grid"] = {{"points", *c.grid_points}};
    else
        snap["grid"] = {{"omega", std::vector<double>(c.grid.omegas().begin(),
                                                      c.grid.omegas().end())}};
    snap["band"] = {{"replicates", c.band.replicates},
                    {"lower", c.band.lower_q},
                    {"upper", c.band.upper_q},
                    {"block_length", c.band.block_length},
                    {"method", c.band_method == BandMethod::simulation ? "simulation" : "bootstrap"}};
    snap["seed"] = c.seed;
    snap["diagnose"] = {{"lags", c.diagnose_lags}};
    // output and threads do not change results and stay out of the hash
    snap["fatal_nonconvergence"] = c.fatal_nonconvergence;
    c.snapshot = std::move(snap);
    return c;
}

inline json read_json_file(const std::filesystem::path& path)
{
    if (!std::filesystem::is_regular_file(path))
        throw UsageError("config file " + path.string() + " not found");
    const std::string text = read_text_file(path.string());
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw UsageError(path.string() + ": " + e.what());
    }
}

/// Command-line values that replace entries of the config file.
struct ConfigOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> n;
    std::optional<std::string> bandwidth; // number or "auto"
    std::vector<std::size_t> m_list;
    std::optional<std::string> output;
    std::optional<std::size_t> replicates;
    std::optional<unsigned> threads;
    std::optional<bool> fatal_nonconvergence;

    void apply(json& j) const
    {
        if (seed)
            j["seed"] = *seed;
        if (n) {
            if (!j.contains("source") || !j["source"].contains("model"))
                throw UsageError("--n applies to model sources only");
            j["source"]["n"] = *n;
        }
        if (bandwidth) {
            double b = 0.0;
            if (*bandwidth == "auto")
                j["bandwidth"] = "auto";
            else if (detail::parse_double(*bandwidth, b))
                j["bandwidth"] = b;
            else
                throw UsageError("--bandwidth must be a number or 'auto'");
        }
        if (!m_list.empty())
            j["m_list"] = m_list;
        if (output)
            j["output"] = *output;
        if (replicates)
            j["band"]["replicates"] = *replicates;
        if (threads)
            j["threads"] = *threads;
        if (fatal_nonconvergence)
            j["fatal_nonconvergence"] = *fatal_nonconvergence;
    }
};

inline RunConfig load_config(const std::filesystem::path& path, const ConfigOverrides& o = {})
{
    json j = read_json_file(path);
    if (!j.is_object())
        throw UsageError("config must be a JSON object");
    o.apply(j);
    return parse_config(j, path.parent_path());
}

} // namespace lgspec
