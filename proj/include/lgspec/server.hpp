#pragma once

#include "lgspec/api.hpp"

#include <httplib.h>

#include <string>

namespace lgspec {

/// Binds the read-only JSON API to an httplib server.
inline void install_api(httplib::Server& server, const BundleStore& store)
{
    auto send = [](httplib::Response& res, const ApiResponse& r) {
        res.status = r.status;
        res.set_header("Access-Control-Allow-Origin", "*");
        res.set_content(r.body.dump(), "application/json");
    };
    auto guarded = [send](auto handler) {
        return [send, handler](const httplib::Request& req, httplib::Response& res) {
            try {
                send(res, handler(req));
            } catch (const Error& e) {
                send(res, {500, {{"error", e.what()}, {"config_hash", nullptr}}});
            }
        };
    };

    server.Get("/api/bundles", guarded([&store](const httplib::Request&) { return api_list(store); }));
    server.Get(R"(/api/bundles/([^/]+)/meta)", guarded([&store](const httplib::Request& req) {
                   return api_meta(store, req.matches[1]);
               }));
    server.Get(R"(/api/bundles/([^/]+)/spectrum)", guarded([&store](const httplib::Request& req) {
                   if (!req.has_param("point") || !req.has_param("m"))
                       return ApiResponse{400, {{"error", "spectrum needs point and m"},
                                                {"config_hash", nullptr}}};
                   return api_spectrum(store, req.matches[1], req.get_param_value("point"),
                                       req.get_param_value("m"));
               }));
    server.Get(R"(/api/bundles/([^/]+)/autocorr)", guarded([&store](const httplib::Request& req) {
                   if (!req.has_param("point"))
                       return ApiResponse{400, {{"error", "autocorr needs point"},
                                                {"config_hash", nullptr}}};
                   return api_autocorr(store, req.matches[1], req.get_param_value("point"));
               }));
}

} // namespace lgspec
