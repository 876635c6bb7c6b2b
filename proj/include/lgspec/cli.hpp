#pragma once

#include "lgspec/bundle.hpp"

#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>

namespace lgspec {

inline void cmd_simulate(const RunConfig& c, std::ostream& out)
{
    if (!c.is_model())
        throw UsageError("simulate needs a model source");
    const Series y = load_source_series(c);
    write_series_csv(out, y.values(), "y");
}

struct DiagnoseRow {
    LocalPoint point;
    std::size_t h = 0;
    StripSquareCounts counts;
};

inline std::vector<DiagnoseRow> cmd_diagnose(const RunConfig& c, const Series& series)
{
    const auto points = c.resolved_points();
    if (points.empty())
        throw UsageError("no points to diagnose");
    if (c.diagnose_lags.empty())
        throw UsageError("no lags to diagnose");
    for (const auto& v : points)
        if (!v.is_diagonal())
            throw UsageError("diagnose takes diagonal points only, got (" +
                             format_double(v.v1) + ", " + format_double(v.v2) + ")");
    const NormalizedSeries z = normalize(series);
    const Bandwidth b = c.resolved_bandwidth(series.size());
    std::vector<DiagnoseRow> rows;
    for (const auto& v : points)
        for (std::size_t h : c.diagnose_lags)
            rows.push_back({v, h, strip_and_square_counts(z, v, b, h)});
    return rows;
}

inline void write_diagnose_table(std::ostream& out, const std::vector<DiagnoseRow>& rows,
                                 const Bandwidth& b)
{
    out << "b = (" << format_double(b.b1()) << ", " << format_double(b.b2()) << ")\n";
    out << std::left << std::setw(22) << "point" << std::setw(8) << "h" << std::setw(10)
        << "strip" << "square\n";
    for (const auto& r : rows) {
        const std::string p = "(" + format_double(r.point.v1) + ", " + format_double(r.point.v2) + ")";
        out << std::setw(22) << p << std::setw(8) << r.h << std::setw(10) << r.counts.strip
            << r.counts.square << '\n';
    }
}

inline void write_diagnose_csv(std::ostream& out, const std::vector<DiagnoseRow>& rows,
                               const Bandwidth& b)
{
    out << "point_v1,point_v2,b1,b2,h,strip,square\n";
    for (const auto& r : rows)
        out << format_double(r.point.v1) << ',' << format_double(r.point.v2) << ','
            << format_double(b.b1()) << ',' << format_double(b.b2()) << ',' << r.h << ','
            << r.counts.strip << ',' << r.counts.square << '\n';
}

inline void report_nonconvergence(const ResultBundle& b, const RunConfig& c, std::ostream& log)
{
    for (std::size_t p = 0; p < b.points.size(); ++p)
        log << "point " << p << " [" << b.point_labels[p] << "]: NC = "
            << (b.failures(p) == 0 ? "OK" : "FAIL (" + std::to_string(b.failures(p)) + " fits)")
            << '\n';
    if (c.fatal_nonconvergence && b.total_failures() > 0)
        throw NumericalError(std::to_string(b.total_failures()) +
                             " local fits did not converge (bundle written)");
}

inline ResultBundle cmd_estimate(const RunConfig& c, std::ostream& log)
{
    ResultBundle b = estimate_bundle(c);
    write_bundle(b, c.output);
    log << "wrote bundle " << c.output << " (config " << b.config_hash << ", n = " << b.n
        << ", b = (" << format_double(b.bandwidth.b1()) << ", " << format_double(b.bandwidth.b2())
        << "))\n";
    report_nonconvergence(b, c, log);
    return b;
}

/// Adds bands to the bundle at c.output, re-estimating first when the
/// bundle is missing or was made from a different config.
inline ResultBundle cmd_band(const RunConfig& c, std::ostream& log)
{
    std::optional<ResultBundle> b;
    if (is_bundle_dir(c.output)) {
        ResultBundle existing = read_bundle(c.output);
        if (existing.config_hash == c.hash())
            b = std::move(existing);
        else
            log << "bundle " << c.output << " has config " << existing.config_hash
                << ", re-estimating\n";
    }
    if (!b)
        b = estimate_bundle(c);
    attach_bands(*b, c);
    write_bundle(*b, c.output);
    log << "wrote bands to " << c.output << " (" << c.band.replicates << " "
        << b->bands->method << " replicates)\n";
    for (std::size_t p = 0; p < b->points.size(); ++p)
        if (b->bands->failures[p] > 0)
            log << "point " << p << ": " << b->bands->failures[p]
                << " replicate fits did not converge\n";
    report_nonconvergence(*b, c, log);
    return std::move(*b);
}

} // namespace lgspec
