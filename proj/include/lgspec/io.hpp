#pragma once

#include "lgspec/lag_structure.hpp"
#include "lgspec/resampling.hpp"
#include "lgspec/spectral.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>

namespace lgspec {

using json = nlohmann::json;

/// Shortest text that parses back to the same double.
inline std::string format_double(double x)
{
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, ptr);
}

inline std::string format_point(const LocalPoint& v)
{
    return format_double(v.v1) + ";" + format_double(v.v2);
}

inline void write_normalized_csv(std::ostream& out, const NormalizedSeries& z)
{
    write_series_csv(out, z.values(), "z");
}

/// h, rho_v, rho_v_reflected, nc_v, nc_v_reflected (nc = 1 marks a failed fit).
inline void write_autocorr_csv(std::ostream& out, const LocalAutocorrSet& set)
{
    out << "h,rho_v,rho_v_reflected,nc_v,nc_v_reflected\n";
    for (std::size_t i = 0; i < set.max_lag; ++i)
        out << i + 1 << ',' << format_double(set.rho_at_v[i]) << ','
            << format_double(set.rho_at_v_reflected[i]) << ',' << !set.converged_v[i] << ','
            << !set.converged_reflected[i] << '\n';
}

/// Global spectra leave the point and bandwidth columns empty.
inline void write_spectrum_csv(std::ostream& out, const SpectrumEstimate& s)
{
    const bool local = s.meta.source == "local";
    const std::string v1 = local ? format_double(s.meta.point.v1) : "";
    const std::string v2 = local ? format_double(s.meta.point.v2) : "";
    const std::string b1 = local ? format_double(s.meta.bandwidth.b1()) : "";
    const std::string b2 = local ? format_double(s.meta.bandwidth.b2()) : "";
    out << "omega,re,im,point_v1,point_v2,m,b1,b2,window\n";
    for (std::size_t i = 0; i < s.values.size(); ++i)
        out << format_double(s.grid[i]) << ',' << format_double(s.values[i].real()) << ','
            << format_double(s.values[i].imag()) << ',' << v1 << ',' << v2 << ',' << s.meta.m
            << ',' << b1 << ',' << b2 << ',' << to_string(s.meta.window) << '\n';
}

/// The point column is "v1;v2", empty for the global band.
inline void write_band_csv(std::ostream& out, const ConfidenceBand& b)
{
    const std::string point = b.source == "global" ? "" : format_point(b.point);
    out << "omega,lower,median,upper,part,point,source\n";
    for (std::size_t i = 0; i < b.grid.size(); ++i)
        out << format_double(b.grid[i]) << ',' << format_double(b.lower[i]) << ','
            << format_double(b.median[i]) << ',' << format_double(b.upper[i]) << ','
            << to_string(b.part) << ',' << point << ',' << b.source << '\n';
}

template <typename Writer, typename T>
std::string to_csv_string(Writer&& write, const T& value)
{
    std::ostringstream os;
    write(os, value);
    return os.str();
}

inline void write_text_file(const std::string& path, const std::string& text)
{
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw DataError("cannot write " + path);
    f << text;
    if (!f)
        throw DataError("failed writing " + path);
}

inline std::string read_text_file(const std::string& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw DataError("cannot open " + path);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

// JSON ----------------------------------------------------------------------

inline json to_json(const LocalPoint& v) { return json::array({v.v1, v.v2}); }

inline LocalPoint point_from_json(const json& j)
{
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw DataError("point must be a [v1, v2] pair");
    return {j[0].get<double>(), j[1].get<double>()};
}

inline json to_json(const Bandwidth& b) { return json::array({b.b1(), b.b2()}); }

inline Bandwidth bandwidth_from_json(const json& j)
{
    if (j.is_number())
        return Bandwidth(j.get<double>());
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw UsageError("bandwidth must be a number or a [b1, b2] pair");
    return {j[0].get<double>(), j[1].get<double>()};
}

inline json to_json(const LocalParams& th)
{
    return {{"mu1", th.mu1}, {"mu2", th.mu2}, {"sigma1", th.sigma1}, {"sigma2", th.sigma2},
            {"rho", th.rho}};
}

inline json to_json(const LocalFit& f)
{
    return {{"point", to_json(f.point)}, {"lag", f.lag},           {"b", to_json(f.bandwidth)},
            {"theta", to_json(f.theta)}, {"converged", f.converged}, {"iterations", f.iterations}};
}

inline json to_json(const LocalAutocorrSet& s)
{
    return {{"point", to_json(s.point)},
            {"b", to_json(s.bandwidth)},
            {"max_lag", s.max_lag},
            {"rho_v", s.rho_at_v},
            {"rho_v_reflected", s.rho_at_v_reflected},
            {"converged_v", s.converged_v},
            {"converged_reflected", s.converged_reflected},
            {"iterations_v", s.iterations_v},
            {"iterations_reflected", s.iterations_reflected}};
}

inline LocalAutocorrSet autocorr_set_from_json(const json& j)
{
    LocalAutocorrSet s;
    s.point = point_from_json(j.at("point"));
    s.bandwidth = bandwidth_from_json(j.at("b"));
    s.max_lag = j.at("max_lag").get<std::size_t>();
    s.rho_at_v = j.at("rho_v").get<std::vector<double>>();
    s.rho_at_v_reflected = j.at("rho_v_reflected").get<std::vector<double>>();
    s.converged_v = j.at("converged_v").get<std::vector<bool>>();
    s.converged_reflected = j.at("converged_reflected").get<std::vector<bool>>();
    s.iterations_v = j.at("iterations_v").get<std::vector<int>>();
    s.iterations_reflected = j.at("iterations_reflected").get<std::vector<int>>();
    for (std::size_t len : {s.rho_at_v.size(), s.rho_at_v_reflected.size(), s.converged_v.size(),
                            s.converged_reflected.size(), s.iterations_v.size(),
                            s.iterations_reflected.size()})
        if (len != s.max_lag)
            throw DataError("autocorrelation record has inconsistent lengths");
    return s;
}

inline json band_curves_json(const ConfidenceBand& b)
{
    return {{"lower", b.lower}, {"median", b.median}, {"upper", b.upper}};
}

} // namespace lgspec
