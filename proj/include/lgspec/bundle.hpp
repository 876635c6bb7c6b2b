#pragma once

#include "lgspec/config.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace lgspec {

inline constexpr std::string_view bundle_format = "lgspec-bundle";
inline constexpr int bundle_version = 1;
inline constexpr std::string_view tool_version = "0.1.0";

struct BundleBands {
    std::string method; // "simulation" or "bootstrap"
    BandSpec spec;
    // indexed [point][position in m_list]
    std::vector<std::vector<ConfidenceBand>> local_re;
    std::vector<std::vector<std::optional<ConfidenceBand>>> local_im;
    std::vector<ConfidenceBand> global; // [position in m_list]
    std::vector<std::size_t> failures;  // non-converged fits per point, all replicates
};

struct ResultBundle {
    json config;
    std::string config_hash;
    std::size_t n = 0;
    std::string source_digest;
    std::string normalized_digest;
    NormalizedSeries z;
    std::vector<LocalPoint> points;
    std::vector<std::string> point_labels;
    Bandwidth bandwidth;
    WindowKind window = WindowKind::tukey_hanning;
    std::vector<std::size_t> m_list;
    FrequencyGrid grid;
    std::vector<LocalAutocorrSet> autocorr;          // one per point, to max(m_list)
    std::vector<std::vector<SpectrumEstimate>> local; // [point][position in m_list]
    std::vector<double> global_acf;
    std::vector<SpectrumEstimate> global; // [position in m_list]
    std::optional<BundleBands> bands;

    std::size_t max_lag() const { return m_list.empty() ? 0 : m_list.back(); }

    std::optional<std::size_t> m_index(std::size_t m) const
    {
        const auto it = std::find(m_list.begin(), m_list.end(), m);
        if (it == m_list.end())
            return std::nullopt;
        return static_cast<std::size_t>(it - m_list.begin());
    }

    std::size_t failures(std::size_t point) const { return autocorr[point].failures(); }

    std::size_t total_failures() const
    {
        std::size_t total = 0;
        for (const auto& s : autocorr)
            total += s.failures();
        return total;
    }
};

inline Series load_source_series(const RunConfig& c)
{
    if (const auto* m = std::get_if<ModelSource>(&c.source)) {
        Rng rng = replicate_rng(c.seed, 0);
        return m->simulate(rng);
    }
    const auto& csv = std::get<CsvSource>(c.source);
    return load_csv(csv.resolved.string(), csv.column);
}

inline std::vector<std::string> point_labels(const RunConfig& c)
{
    std::vector<std::string> out;
    for (const auto& p : c.points)
        out.push_back(std::holds_alternative<QuantilePoint>(p)
                          ? std::get<QuantilePoint>(p).text
                          : format_point(std::get<LocalPoint>(p)));
    return out;
}

/// Spectra for every m in m_list from the stored autocorrelations.
inline void synthesize_spectra(ResultBundle& b)
{
    b.local.assign(b.points.size(), {});
    for (std::size_t p = 0; p < b.points.size(); ++p)
        for (std::size_t m : b.m_list)
            b.local[p].push_back(local_spectrum(b.autocorr[p], {b.window, m}, b.grid));
    b.global.clear();
    for (std::size_t m : b.m_list)
        b.global.push_back(global_spectrum_from_acf(b.global_acf, {b.window, m}, b.grid));
}

/// Fits every point once to max(m_list) and derives all spectra from those fits.
inline ResultBundle estimate_bundle(const RunConfig& c, const Series& series)
{
    ResultBundle b;
    b.config = c.snapshot;
    b.config_hash = c.hash();
    b.n = series.size();
    b.source_digest = digest_hex(content_digest(series.values()));
    b.z = normalize(series);
    b.normalized_digest = digest_hex(content_digest(b.z.values()));
    b.points = c.resolved_points();
    b.point_labels = point_labels(c);
    b.bandwidth = c.resolved_bandwidth(b.n);
    b.window = c.window;
    b.m_list = c.m_list;
    b.grid = c.grid;

    const std::size_t m = c.max_lag();
    if (m + 2 > b.n)
        throw DataError("max truncation " + std::to_string(m) + " exceeds n - 2 = " +
                        std::to_string(b.n - 2));
    b.autocorr.resize(b.points.size());
    parallel_for(
        b.points.size(),
        [&](std::size_t p) { b.autocorr[p] = estimate_autocorrs(b.z, b.points[p], b.bandwidth, m); },
        c.threads);
    b.global_acf = sample_autocorrelation(b.z.values(), m);
    synthesize_spectra(b);
    return b;
}

inline ResultBundle estimate_bundle(const RunConfig& c)
{
    return estimate_bundle(c, load_source_series(c));
}

inline ReplicateSource replicate_source(const RunConfig& c)
{
    if (c.band_method == BandMethod::simulation) {
        const auto model = std::get<ModelSource>(c.source);
        return SimulationSource{[model](Rng& rng) { return model.simulate(rng); }, model.model};
    }
    return BootstrapSource{load_source_series(c), "bootstrap"};
}

/// Replicate bands for every point and every m in m_list.
inline void attach_bands(ResultBundle& b, const RunConfig& c)
{
    PipelineParams params;
    params.points = b.points;
    params.bandwidth = b.bandwidth;
    params.max_lag = b.max_lag();
    params.window = b.window;
    params.grid = b.grid;
    const Ensemble e = run_ensemble(replicate_source(c), params, c.band, c.threads);

    BundleBands bands;
    bands.method = c.band_method == BandMethod::simulation ? "simulation" : "bootstrap";
    bands.spec = c.band;
    bands.local_re.resize(b.points.size());
    bands.local_im.resize(b.points.size());
    for (std::size_t p = 0; p < b.points.size(); ++p) {
        for (std::size_t m : b.m_list) {
            bands.local_re[p].push_back(e.local_band(p, m, SpectrumPart::re));
            if (b.points[p].is_diagonal())
                bands.local_im[p].emplace_back(std::nullopt);
            else
                bands.local_im[p].emplace_back(e.local_band(p, m, SpectrumPart::im));
        }
    }
    for (std::size_t m : b.m_list)
        bands.global.push_back(e.global_band(m));
    bands.failures = e.failure_counts();
    b.bands = std::move(bands);
}

// Files ----------------------------------------------------------------------

inline std::string spectrum_file(std::size_t point, std::size_t m)
{
    return "spectrum_p" + std::to_string(point) + "_m" + std::to_string(m) + ".csv";
}

/// Every CSV export of the bundle keyed by file name.
inline std::map<std::string, std::string> bundle_csv_files(const ResultBundle& b)
{
    std::map<std::string, std::string> files;
    files["series.csv"] = to_csv_string(write_normalized_csv, b.z);
    for (std::size_t p = 0; p < b.points.size(); ++p) {
        const std::string tag = "p" + std::to_string(p);
        files["autocorr_" + tag + ".csv"] = to_csv_string(write_autocorr_csv, b.autocorr[p]);
        for (std::size_t k = 0; k < b.m_list.size(); ++k) {
            const std::string mt = "_m" + std::to_string(b.m_list[k]);
            files[spectrum_file(p, b.m_list[k])] = to_csv_string(write_spectrum_csv, b.local[p][k]);
            if (b.bands) {
                files["band_" + tag + mt + "_re.csv"] =
                    to_csv_string(write_band_csv, b.bands->local_re[p][k]);
                if (b.bands->local_im[p][k])
                    files["band_" + tag + mt + "_im.csv"] =
                        to_csv_string(write_band_csv, *b.bands->local_im[p][k]);
            }
        }
    }
    for (std::size_t k = 0; k < b.m_list.size(); ++k) {
        const std::string mt = "_m" + std::to_string(b.m_list[k]);
        files["spectrum_global" + mt + ".csv"] = to_csv_string(write_spectrum_csv, b.global[k]);
        if (b.bands)
            files["band_global" + mt + ".csv"] = to_csv_string(write_band_csv, b.bands->global[k]);
    }
    return files;
}

namespace detail {

inline std::vector<double> column(const std::vector<std::complex<double>>& v, bool imag)
{
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& c : v)
        out.push_back(imag ? c.imag() : c.real());
    return out;
}

inline json band_json(const ConfidenceBand& band)
{
    return {{"lower", band.lower}, {"median", band.median}, {"upper", band.upper}};
}

inline ConfidenceBand band_from_json(const json& j, const FrequencyGrid& grid, SpectrumPart part,
                                     const LocalPoint& point, std::size_t m, std::string source)
{
    ConfidenceBand band;
    band.grid = grid;
    band.lower = j.at("lower").get<std::vector<double>>();
    band.median = j.at("median").get<std::vector<double>>();
    band.upper = j.at("upper").get<std::vector<double>>();
    if (band.lower.size() != grid.size() || band.median.size() != grid.size() ||
        band.upper.size() != grid.size())
        throw DataError("band length does not match the frequency grid");
    band.part = part;
    band.point = point;
    band.m = m;
    band.source = std::move(source);
    return band;
}

} // namespace detail

inline json bundle_to_json(const ResultBundle& b)
{
    json j;
    j["format"] = bundle_format;
    j["version"] = bundle_version;
    j["tool_version"] = tool_version;
    j["config"] = b.config;
    j["config_hash"] = b.config_hash;
    j["series"] = {{"n", b.n},
                   {"source_digest", b.source_digest},
                   {"normalized_digest", b.normalized_digest}};
    j["points"] = json::array();
    for (std::size_t p = 0; p < b.points.size(); ++p)
        j["points"].push_back({{"v", to_json(b.points[p])}, {"label", b.point_labels[p]}});
    j["bandwidth"] = to_json(b.bandwidth);
    j["window"] = std::string(to_string(b.window));
    j["m_list"] = b.m_list;
    j["omega"] = std::vector<double>(b.grid.omegas().begin(), b.grid.omegas().end());
    j["autocorr"] = json::array();
    for (const auto& s : b.autocorr)
        j["autocorr"].push_back(to_json(s));
    j["spectra"] = json::array();
    for (std::size_t p = 0; p < b.points.size(); ++p)
        for (std::size_t k = 0; k < b.m_list.size(); ++k)
            j["spectra"].push_back({{"point", p},
                                    {"m", b.m_list[k]},
                                    {"re", detail::column(b.local[p][k].values, false)},
                                    {"im", detail::column(b.local[p][k].values, true)}});
    j["global"] = {{"acf", b.global_acf}, {"spectra", json::array()}};
    for (std::size_t k = 0; k < b.m_list.size(); ++k)
        j["global"]["spectra"].push_back(
            {{"m", b.m_list[k]}, {"re", detail::column(b.global[k].values, false)}});
    j["nc"] = json::array();
    for (std::size_t p = 0; p < b.points.size(); ++p)
        j["nc"].push_back({{"point", p},
                           {"failures", b.failures(p)},
                           {"status", b.failures(p) == 0 ? "OK" : "FAIL"}});
    if (b.bands) {
        const auto& bb = *b.bands;
        json bands{{"method", bb.method},
                   {"replicates", bb.spec.replicates},
                   {"lower_q", bb.spec.lower_q},
                   {"upper_q", bb.spec.upper_q},
                   {"seed", bb.spec.seed},
                   {"block_length", bb.spec.block_length},
                   {"failures", bb.failures},
                   {"local", json::array()},
                   {"global", json::array()}};
        for (std::size_t p = 0; p < b.points.size(); ++p)
            for (std::size_t k = 0; k < b.m_list.size(); ++k) {
                json entry{{"point", p}, {"m", b.m_list[k]}, {"re", detail::band_json(bb.local_re[p][k])}};
                if (bb.local_im[p][k])
                    entry["im"] = detail::band_json(*bb.local_im[p][k]);
                bands["local"].push_back(std::move(entry));
            }
        for (std::size_t k = 0; k < b.m_list.size(); ++k) {
            json entry = detail::band_json(bb.global[k]);
            entry["m"] = b.m_list[k];
            bands["global"].push_back(std::move(entry));
        }
        j["bands"] = std::move(bands);
    } else {
        j["bands"] = nullptr;
    }
    return j;
}

/// Rebuilds a bundle from its JSON record and normalized series, checking
/// the series digest and that every stored spectrum is what the stored
/// autocorrelations synthesize.
inline ResultBundle bundle_from_json(const json& j, const NormalizedSeries& z)
{
    try {
        if (j.at("format").get<std::string>() != bundle_format)
            throw DataError("not an lgspec bundle");
        if (j.at("version").get<int>() != bundle_version)
            throw DataError("unsupported bundle version " + j.at("version").dump());
        ResultBundle b;
        b.config = j.at("config");
        b.config_hash = j.at("config_hash").get<std::string>();
        if (b.config_hash != digest_hex(RunConfig::text_digest(b.config.dump())))
            throw DataError("config snapshot does not match its hash");
        const auto& s = j.at("series");
        b.n = s.at("n").get<std::size_t>();
        b.source_digest = s.at("source_digest").get<std::string>();
        b.normalized_digest = s.at("normalized_digest").get<std::string>();
        if (z.size() != b.n || digest_hex(content_digest(z.values())) != b.normalized_digest)
            throw DataError("normalized series does not match the bundle digest");
        b.z = z;
        for (const auto& p : j.at("points")) {
            b.points.push_back(point_from_json(p.at("v")));
            b.point_labels.push_back(p.at("label").get<std::string>());
        }
        b.bandwidth = bandwidth_from_json(j.at("bandwidth"));
        b.window = window_kind_from_string(j.at("window").get<std::string>());
        b.m_list = j.at("m_list").get<std::vector<std::size_t>>();
        if (b.m_list.empty() || !std::is_sorted(b.m_list.begin(), b.m_list.end()))
            throw DataError("bundle m_list must be nonempty and sorted");
        b.grid = FrequencyGrid(j.at("omega").get<std::vector<double>>());
        for (const auto& a : j.at("autocorr"))
            b.autocorr.push_back(autocorr_set_from_json(a));
        if (b.autocorr.size() != b.points.size())
            throw DataError("bundle has " + std::to_string(b.autocorr.size()) +
                            " autocorrelation sets for " + std::to_string(b.points.size()) +
                            " points");
        for (std::size_t p = 0; p < b.points.size(); ++p)
            if (b.autocorr[p].max_lag != b.max_lag() || !(b.autocorr[p].point == b.points[p]))
                throw DataError("autocorrelation set " + std::to_string(p) +
                                " does not match the bundle points");
        b.global_acf = j.at("global").at("acf").get<std::vector<double>>();
        synthesize_spectra(b);

        // stored spectra must be exactly the synthesized ones
        const auto& spectra = j.at("spectra");
        if (spectra.size() != b.points.size() * b.m_list.size())
            throw DataError("bundle is missing spectra");
        for (const auto& e : spectra) {
            const auto p = e.at("point").get<std::size_t>();
            const auto k = b.m_index(e.at("m").get<std::size_t>());
            if (p >= b.points.size() || !k)
                throw DataError("spectrum entry refers to an unknown point or m");
            if (e.at("re").get<std::vector<double>>() != detail::column(b.local[p][*k].values, false) ||
                e.at("im").get<std::vector<double>>() != detail::column(b.local[p][*k].values, true))
                throw DataError("stored spectrum for point " + std::to_string(p) +
                                " differs from its autocorrelations");
        }
        const auto& gs = j.at("global").at("spectra");
        if (gs.size() != b.m_list.size())
            throw DataError("bundle is missing global spectra");
        for (const auto& e : gs) {
            const auto k = b.m_index(e.at("m").get<std::size_t>());
            if (!k || e.at("re").get<std::vector<double>>() != detail::column(b.global[*k].values, false))
                throw DataError("stored global spectrum differs from its autocorrelations");
        }

        const auto& bj = j.at("bands");
        if (!bj.is_null()) {
            BundleBands bb;
            bb.method = bj.at("method").get<std::string>();
            bb.spec.replicates = bj.at("replicates").get<std::size_t>();
            bb.spec.lower_q = bj.at("lower_q").get<double>();
            bb.spec.upper_q = bj.at("upper_q").get<double>();
            bb.spec.seed = bj.at("seed").get<std::uint64_t>();
            bb.spec.block_length = bj.at("block_length").get<std::size_t>();
            bb.failures = bj.at("failures").get<std::vector<std::size_t>>();
            bb.local_re.assign(b.points.size(), std::vector<ConfidenceBand>(b.m_list.size()));
            bb.local_im.assign(b.points.size(),
                               std::vector<std::optional<ConfidenceBand>>(b.m_list.size()));
            std::vector<std::vector<bool>> seen(b.points.size(), std::vector<bool>(b.m_list.size()));
            for (const auto& e : bj.at("local")) {
                const auto p = e.at("point").get<std::size_t>();
                const auto m = e.at("m").get<std::size_t>();
                const auto k = b.m_index(m);
                if (p >= b.points.size() || !k)
                    throw DataError("band entry refers to an unknown point or m");
                bb.local_re[p][*k] = detail::band_from_json(e.at("re"), b.grid, SpectrumPart::re,
                                                            b.points[p], m, "local");
                if (e.contains("im"))
                    bb.local_im[p][*k] = detail::band_from_json(
                        e.at("im"), b.grid, SpectrumPart::im, b.points[p], m, "local");
                seen[p][*k] = true;
            }
            for (const auto& row : seen)
                if (std::find(row.begin(), row.end(), false) != row.end())
                    throw DataError("bundle bands do not cover every (point, m)");
            if (bj.at("global").size() != b.m_list.size())
                throw DataError("bundle is missing global bands");
            bb.global.resize(b.m_list.size());
            for (const auto& e : bj.at("global")) {
                const auto m = e.at("m").get<std::size_t>();
                const auto k = b.m_index(m);
                if (!k)
                    throw DataError("global band refers to an unknown m");
                bb.global[*k] = detail::band_from_json(e, b.grid, SpectrumPart::re, {}, m, "global");
            }
            b.bands = std::move(bb);
        }
        return b;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed bundle: ") + e.what());
    } catch (const UsageError& e) {
        throw DataError(std::string("malformed bundle: ") + e.what());
    }
}

inline void write_bundle(const ResultBundle& b, const std::filesystem::path& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw DataError("cannot create " + dir.string() + ": " + ec.message());
    for (const auto& [name, text] : bundle_csv_files(b))
        write_text_file((dir / name).string(), text);
    // the JSON goes last: a directory with bundle.json is complete
    write_text_file((dir / "bundle.json").string(), bundle_to_json(b).dump(1) + "\n");
}

inline bool is_bundle_dir(const std::filesystem::path& dir)
{
    return std::filesystem::is_regular_file(dir / "bundle.json");
}

inline ResultBundle read_bundle(const std::filesystem::path& dir)
{
    const auto path = dir / "bundle.json";
    json j;
    try {
        j = json::parse(read_text_file(path.string()));
    } catch (const json::parse_error& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    const Series zs = load_csv((dir / "series.csv").string(), std::string("z"));
    std::vector<double> values(zs.values().begin(), zs.values().end());
    std::uint64_t source_hash = 0;
    const std::string hex = j.value("/series/source_digest"_json_pointer, std::string{});
    std::from_chars(hex.data(), hex.data() + hex.size(), source_hash, 16);
    return bundle_from_json(j, NormalizedSeries(std::move(values), source_hash));
}

/// Names of exported files whose bytes differ from a fresh export of b.
inline std::vector<std::string> changed_files(const ResultBundle& b, const std::filesystem::path& dir)
{
    std::vector<std::string> out;
    for (const auto& [name, text] : bundle_csv_files(b)) {
        const auto path = dir / name;
        if (!std::filesystem::is_regular_file(path) || read_text_file(path.string()) != text)
            out.push_back(name);
    }
    return out;
}

} // namespace lgspec
