#pragma once

#include "lgspec/bundle.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>

namespace lgspec {

/// Read-only view over the bundle directories below a root. Bundles are
/// immutable once written, so each is loaded at most once.
class BundleStore {
public:
    explicit BundleStore(std::filesystem::path root) : root_(std::move(root))
    {
        if (!std::filesystem::is_directory(root_))
            throw DataError("bundle root " + root_.string() + " is not a directory");
    }

    const std::filesystem::path& root() const { return root_; }

    std::vector<std::string> ids() const
    {
        std::vector<std::string> out;
        for (const auto& entry : std::filesystem::directory_iterator(root_))
            if (entry.is_directory() && is_bundle_dir(entry.path()))
                out.push_back(entry.path().filename().string());
        std::sort(out.begin(), out.end());
        return out;
    }

    /// nullptr for ids that do not name a bundle directory.
    std::shared_ptr<const ResultBundle> get(const std::string& id) const
    {
        if (id.empty() || id == "." || id == ".." ||
            id.find_first_of("/\\") != std::string::npos)
            return nullptr;
        {
            std::shared_lock lock(mutex_);
            if (const auto it = cache_.find(id); it != cache_.end())
                return it->second;
        }
        const auto dir = root_ / id;
        if (!is_bundle_dir(dir))
            return nullptr;
        auto bundle = std::make_shared<const ResultBundle>(read_bundle(dir));
        std::unique_lock lock(mutex_);
        return cache_.try_emplace(id, std::move(bundle)).first->second;
    }

private:
    std::filesystem::path root_;
    mutable std::shared_mutex mutex_;
    mutable std::map<std::string, std::shared_ptr<const ResultBundle>> cache_;
};

struct ApiResponse {
    int status = 200;
    json body;
};

namespace detail {

inline ApiResponse api_error(int status, std::string message, const std::string& hash = {})
{
    json body{{"error", std::move(message)}};
    body["config_hash"] = hash.empty() ? json(nullptr) : json(hash);
    return {status, std::move(body)};
}

inline std::optional<std::size_t> parse_index(const std::string& s)
{
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size())
        return std::nullopt;
    return v;
}

inline json point_json(const ResultBundle& b, std::size_t p)
{
    return {{"index", p}, {"v1", b.points[p].v1}, {"v2", b.points[p].v2},
            {"label", b.point_labels[p]}, {"diagonal", b.points[p].is_diagonal()}};
}

inline json nc_json(std::size_t failures)
{
    return {{"failures", failures}, {"status", failures == 0 ? "OK" : "FAIL"}};
}

} // namespace detail

inline ApiResponse api_list(const BundleStore& store)
{
    json list = json::array();
    for (const auto& id : store.ids()) {
        try {
            const auto b = store.get(id);
            list.push_back({{"id", id},
                            {"config_hash", b->config_hash},
                            {"n", b->n},
                            {"points", b->points.size()},
                            {"m_list", b->m_list},
                            {"has_band", b->bands.has_value()}});
        } catch (const Error& e) {
            list.push_back({{"id", id}, {"config_hash", nullptr}, {"error", e.what()}});
        }
    }
    return {200, {{"bundles", std::move(list)}}};
}

inline ApiResponse api_meta(const BundleStore& store, const std::string& id)
{
    const auto b = store.get(id);
    if (!b)
        return detail::api_error(404, "unknown bundle '" + id + "'");
    json points = json::array();
    for (std::size_t p = 0; p < b->points.size(); ++p) {
        auto pj = detail::point_json(*b, p);
        pj["nc"] = detail::nc_json(b->failures(p));
        points.push_back(std::move(pj));
    }
    json body{{"id", id},
              {"config_hash", b->config_hash},
              {"config", b->config},
              {"version", bundle_version},
              {"n", b->n},
              {"source_digest", b->source_digest},
              {"normalized_digest", b->normalized_digest},
              {"points", std::move(points)},
              {"bandwidth", to_json(b->bandwidth)},
              {"window", to_string(b->window)},
              {"m_list", b->m_list},
              {"max_lag", b->max_lag()},
              {"grid_size", b->grid.size()},
              {"has_band", b->bands.has_value()}};
    if (b->bands)
        body["band"] = {{"method", b->bands->method},
                        {"replicates", b->bands->spec.replicates},
                        {"lower_q", b->bands->spec.lower_q},
                        {"upper_q", b->bands->spec.upper_q},
                        {"failures", b->bands->failures}};
    return {200, std::move(body)};
}

inline ApiResponse api_spectrum(const BundleStore& store, const std::string& id,
                                const std::string& point, const std::string& m)
{
    const auto b = store.get(id);
    if (!b)
        return detail::api_error(404, "unknown bundle '" + id + "'");
    const auto p = detail::parse_index(point);
    const auto mv = detail::parse_index(m);
    if (!p || !mv)
        return detail::api_error(400, "point and m must be nonnegative integers", b->config_hash);
    if (*p >= b->points.size())
        return detail::api_error(404, "point index out of range", b->config_hash);
    const auto k = b->m_index(*mv);
    if (!k)
        return detail::api_error(404, "m = " + m + " is not in the bundle's m_list",
                                 b->config_hash);

    const auto& s = b->local[*p][*k];
    json body{{"id", id},
              {"config_hash", b->config_hash},
              {"point", detail::point_json(*b, *p)},
              {"m", *mv},
              {"window", to_string(b->window)},
              {"omega", s.grid.omegas()},
              {"re", s.real()},
              {"im", s.imag()},
              {"nc", detail::nc_json(b->failures(*p))}};
    json global{{"re", b->global[*k].real()}};
    if (b->bands) {
        body["band"] = band_curves_json(b->bands->local_re[*p][*k]);
        if (const auto& im = b->bands->local_im[*p][*k])
            body["band_im"] = band_curves_json(*im);
        global["band"] = band_curves_json(b->bands->global[*k]);
    }
    body["global"] = std::move(global);
    return {200, std::move(body)};
}

inline ApiResponse api_autocorr(const BundleStore& store, const std::string& id,
                                const std::string& point)
{
    const auto b = store.get(id);
    if (!b)
        return detail::api_error(404, "unknown bundle '" + id + "'");
    const auto p = detail::parse_index(point);
    if (!p)
        return detail::api_error(400, "point must be a nonnegative integer", b->config_hash);
    if (*p >= b->points.size())
        return detail::api_error(404, "point index out of range", b->config_hash);
    const auto& set = b->autocorr[*p];
    std::vector<std::size_t> h(set.max_lag);
    std::vector<bool> nc(set.max_lag);
    for (std::size_t i = 0; i < set.max_lag; ++i) {
        h[i] = i + 1;
        nc[i] = !set.converged_v[i] || !set.converged_reflected[i];
    }
    return {200,
            {{"id", id},
             {"config_hash", b->config_hash},
             {"point", detail::point_json(*b, *p)},
             {"h", h},
             {"rho", set.rho_at_v},
             {"rho_reflected", set.rho_at_v_reflected},
             {"nc", nc}}};
}

} // namespace lgspec
