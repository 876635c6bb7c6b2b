#include "lgspec/cli.hpp"
#include "lgspec/server.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

enum Exit { ok = 0, usage = 1, data = 2, numerical = 3 };

struct Options {
    std::string config;
    lgspec::ConfigOverrides overrides;
    std::string out;
    std::string bundles;
    std::string host = "127.0.0.1";
    int port = 8080;
};

void add_common(CLI::App* cmd, Options& o)
{
    cmd->add_option("--config", o.config, "JSON run configuration")->required();
    cmd->add_option("--seed", o.overrides.seed, "master seed");
    cmd->add_option("--n", o.overrides.n, "series length for model sources");
    cmd->add_option("--bandwidth", o.overrides.bandwidth, "bandwidth on both axes, or 'auto'");
    cmd->add_option("--m", o.overrides.m_list, "truncation levels")->delimiter(',');
    cmd->add_option("--output", o.overrides.output, "bundle directory");
    cmd->add_option("--replicates", o.overrides.replicates, "band replicates");
    cmd->add_option("--threads", o.overrides.threads, "worker threads (0 = all cores)");
    cmd->add_flag("--fatal-nc", o.overrides.fatal_nonconvergence,
                  "exit 3 when any local fit fails to converge");
}

template <typename Write>
void to_file_or_stdout(const std::string& path, Write&& write)
{
    if (path.empty()) {
        write(std::cout);
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw lgspec::DataError("cannot write " + path);
    write(f);
}

int run(int argc, char** argv)
{
    CLI::App app{"Local Gaussian spectral density estimation"};
    app.require_subcommand(1);
    Options o;

    auto* simulate = app.add_subcommand("simulate", "simulate the configured model to CSV");
    add_common(simulate, o);
    simulate->add_option("--out", o.out, "CSV file (default: stdout)");

    auto* diagnose = app.add_subcommand("diagnose", "strip and square counts at diagonal points");
    add_common(diagnose, o);
    diagnose->add_option("--out", o.out, "also write the counts as CSV");

    auto* estimate = app.add_subcommand("estimate", "fit and write a result bundle");
    add_common(estimate, o);

    auto* band = app.add_subcommand("band", "add replicate confidence bands to a bundle");
    add_common(band, o);

    auto* serve = app.add_subcommand("serve", "serve bundles over a read-only JSON API");
    serve->add_option("--config", o.config, "config whose output directory's parent holds bundles");
    serve->add_option("--bundles", o.bundles, "directory holding bundle directories");
    serve->add_option("--host", o.host, "listen address");
    serve->add_option("--port", o.port, "listen port");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : usage;
    }

    if (serve->parsed()) {
        std::filesystem::path root = o.bundles;
        if (root.empty()) {
            if (o.config.empty())
                throw lgspec::UsageError("serve needs --bundles or --config");
            const auto c = lgspec::load_config(o.config);
            root = std::filesystem::absolute(c.output).parent_path();
        }
        const lgspec::BundleStore store(root);
        httplib::Server server;
        lgspec::install_api(server, store);
        std::cerr << "serving " << store.ids().size() << " bundles from " << root.string()
                  << " on http://" << o.host << ':' << o.port << '\n';
        if (!server.listen(o.host, o.port))
            throw lgspec::UsageError("cannot listen on " + o.host + ":" + std::to_string(o.port));
        return ok;
    }

    const auto c = lgspec::load_config(o.config, o.overrides);
    if (simulate->parsed()) {
        to_file_or_stdout(o.out, [&](std::ostream& out) { lgspec::cmd_simulate(c, out); });
    } else if (diagnose->parsed()) {
        const auto series = lgspec::load_source_series(c);
        const auto rows = lgspec::cmd_diagnose(c, series);
        const auto b = c.resolved_bandwidth(series.size());
        lgspec::write_diagnose_table(std::cout, rows, b);
        if (!o.out.empty())
            to_file_or_stdout(o.out, [&](std::ostream& out) { lgspec::write_diagnose_csv(out, rows, b); });
    } else if (estimate->parsed()) {
        lgspec::cmd_estimate(c, std::cerr);
    } else if (band->parsed()) {
        lgspec::cmd_band(c, std::cerr);
    }
    return ok;
}

} // namespace

int main(int argc, char** argv)
{
    try {
        return run(argc, argv);
    } catch (const lgspec::UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return usage;
    } catch (const lgspec::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return data;
    } catch (const lgspec::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return numerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return data;
    }
}
