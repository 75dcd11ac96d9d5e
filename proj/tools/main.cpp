#include <csignal>
#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>

#include <CLI11.hpp>

#include "alch/alch.h"
#include "bench.hpp"

namespace {

std::optional<bench::Address> parse_server(const std::string& s) {
    if (s.empty()) return std::nullopt;
    const auto colon = s.rfind(':');
    if (colon == std::string::npos) throw CLI::ValidationError("--server", "expected host:port");
    bench::Address a;
    a.host = s.substr(0, colon);
    a.port = static_cast<std::uint16_t>(std::stoul(s.substr(colon + 1)));
    return a;
}

// Runs `fn` against --server, or against an embedded server with `workers` workers.
template <class Fn>
void with_server(const std::string& server, std::uint16_t workers, Fn fn) {
    if (auto a = parse_server(server)) {
        fn(*a);
        return;
    }
    bench::EmbeddedServer embedded(workers);
    fn(embedded.address());
}

int serve(const std::string& host, std::uint16_t port, std::uint16_t workers, std::uint64_t budget) {
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);

    alch_server* server = nullptr;
    bench::check(alch_server_start(host.c_str(), port, workers, budget, &server), "serve");
    std::cout << "listening on " << host << ":" << alch_server_port(server) << " workers=" << workers << std::endl;
    int sig = 0;
    sigwait(&set, &sig);
    std::cout << "signal " << sig << ", shutting down" << std::endl;
    alch_server_free(server);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"alch: distributed matrix offload server, data generator and benchmarks"};
    app.require_subcommand(1);
    std::string log_level = "warn";
    app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")->capture_default_str();

    // serve
    auto* serve_cmd = app.add_subcommand("serve", "run the server until SIGINT/SIGTERM");
    std::string host = "127.0.0.1";
    std::uint16_t port = 7077;
    std::uint16_t workers = 4;
    std::uint64_t budget_mb = 0;
    serve_cmd->add_option("--host", host)->capture_default_str();
    serve_cmd->add_option("--port", port)->capture_default_str();
    serve_cmd->add_option("--workers,-p", workers)->check(CLI::Range(1, 1024))->capture_default_str();
    serve_cmd->add_option("--memory-mb", budget_mb, "matrix memory budget; 0 = 8 GiB");

    // datagen
    auto* gen_cmd = app.add_subcommand("datagen", "write a seeded synthetic matrix file");
    std::string kind = "gaussian";
    std::uint64_t rows = 0, cols = 0, seed = 0, rank = 10, labels = 147;
    std::string out;
    gen_cmd->add_option("kind", kind, "gaussian, lowrank or speech-like")
        ->required()
        ->check(CLI::IsMember({"gaussian", "lowrank", "speech-like"}));
    gen_cmd->add_option("--rows", rows, "default 100000 for speech-like");
    gen_cmd->add_option("--cols", cols, "default 440 for speech-like");
    gen_cmd->add_option("--seed", seed)->capture_default_str();
    gen_cmd->add_option("--rank", rank, "lowrank: planted rank")->capture_default_str();
    gen_cmd->add_option("--labels", labels, "speech-like: label classes")->capture_default_str();
    gen_cmd->add_option("--out,-o", out, "output path")->required();

    // bench-cg
    auto* cg_cmd = app.add_subcommand("bench-cg", "random features + CG ridge regression, swept over D");
    bench::CgConfig cg;
    std::string cg_server;
    cg_cmd->add_option("--features,-D", cg.features, "feature counts")->delimiter(',')->capture_default_str();
    cg_cmd->add_option("--lambda", cg.lambda)->capture_default_str();
    cg_cmd->add_option("--tol", cg.tol)->capture_default_str();
    cg_cmd->add_option("--max-iter", cg.max_iter)->capture_default_str();
    cg_cmd->add_option("--sigma", cg.sigma)->capture_default_str();
    cg_cmd->add_option("--workers,-p", cg.workers)->check(CLI::Range(1, 1024))->capture_default_str();
    cg_cmd->add_option("--clients", cg.clients)->check(CLI::Range(1, 64))->capture_default_str();
    cg_cmd->add_option("--rows", cg.rows)->capture_default_str();
    cg_cmd->add_option("--cols", cg.cols)->capture_default_str();
    cg_cmd->add_option("--labels", cg.labels)->capture_default_str();
    cg_cmd->add_option("--seed", cg.seed)->capture_default_str();
    cg_cmd->add_option("--server", cg_server, "host:port of a running server (default: embedded)");

    // bench-svd
    auto* svd_cmd = app.add_subcommand("bench-svd", "rank-k SVD with client-side or server-side loading");
    bench::SvdConfig svd;
    std::string svd_mode = "client-load", svd_server, svd_file;
    std::uint64_t svd_rows = 2000, svd_cols = 500, svd_seed = 1;
    svd_cmd->add_option("--mode", svd_mode)
        ->check(CLI::IsMember({"client-load", "server-load", "replicate"}))
        ->capture_default_str();
    svd_cmd->add_option("--k", svd.k)->capture_default_str();
    svd_cmd->add_option("--replicas", svd.replicas, "replicate mode: column-wise tiling")->capture_default_str();
    svd_cmd->add_option("--workers,-p", svd.workers)->check(CLI::Range(1, 1024))->capture_default_str();
    svd_cmd->add_option("--repetitions", svd.repetitions)->check(CLI::Range(1, 100))->capture_default_str();
    svd_cmd->add_option("--file", svd_file, "matrix file (default: generated lowrank matrix)");
    svd_cmd->add_option("--rows", svd_rows, "generated matrix rows")->capture_default_str();
    svd_cmd->add_option("--cols", svd_cols, "generated matrix cols")->capture_default_str();
    svd_cmd->add_option("--seed", svd_seed, "generated matrix seed")->capture_default_str();
    svd_cmd->add_option("--server", svd_server, "host:port of a running server (default: embedded)");

    // bench-transfer
    auto* xfer_cmd = app.add_subcommand("bench-transfer", "upload time over client and worker counts");
    bench::TransferConfig xfer;
    std::string xfer_server;
    xfer_cmd->add_option("--rows", xfer.rows)->capture_default_str();
    xfer_cmd->add_option("--cols", xfer.cols)->capture_default_str();
    xfer_cmd->add_option("--client-procs", xfer.client_procs)->delimiter(',')->capture_default_str();
    xfer_cmd->add_option("--workers,-p", xfer.workers)->delimiter(',')->capture_default_str();
    xfer_cmd->add_option("--repetitions", xfer.repetitions)->check(CLI::Range(1, 100))->capture_default_str();
    xfer_cmd->add_option("--batch-rows", xfer.batch_rows)->capture_default_str();
    xfer_cmd->add_option("--server", xfer_server, "host:port of a running server (default: embedded)");

    CLI11_PARSE(app, argc, argv);

    try {
        bench::check(alch_set_log_level(log_level.c_str()), "--log-level");
        if (*serve_cmd) return serve(host, port, workers, budget_mb << 20);

        if (*gen_cmd) {
            if (kind == "speech-like") {
                if (rows == 0) rows = 100000;
                if (cols == 0) cols = 440;
            }
            bench::check(alch_datagen(kind.c_str(), rows, cols, seed, rank, labels, out.c_str()), "datagen");
            std::cout << "wrote " << out << " (" << kind << " " << rows << "x" << cols << ")\n";
            return 0;
        }

        if (*cg_cmd) {
            bench::CgReport rep;
            with_server(cg_server, cg.workers, [&](const bench::Address& a) {
                cg.server = a;
                rep = bench::run_cg(cg);
            });
            bench::print(std::cout, rep);
            return rep.linear_ok && rep.clients_agree ? 0 : 2;
        }

        if (*svd_cmd) {
            svd.mode = bench::parse_svd_mode(svd_mode);
            std::string generated;
            if (svd_file.empty()) {
                generated = "/tmp/alch-bench-svd-" + std::to_string(::getpid()) + ".bin";
                bench::check(alch_datagen("lowrank", svd_rows, svd_cols, svd_seed, 0, 0, generated.c_str()),
                             "datagen");
                svd.path = generated;
            } else {
                svd.path = svd_file;
            }
            bench::SvdReport rep;
            try {
                with_server(svd_server, svd.workers, [&](const bench::Address& a) {
                    svd.server = a;
                    rep = bench::run_svd(svd);
                });
            } catch (...) {
                if (!generated.empty()) {
                    std::remove(generated.c_str());
                    std::remove((generated + ".spectrum.json").c_str());
                }
                throw;
            }
            if (!generated.empty()) {
                std::remove(generated.c_str());
                std::remove((generated + ".spectrum.json").c_str());
            }
            bench::print(std::cout, rep);
            return 0;
        }

        if (*xfer_cmd) {
            std::uint16_t max_workers = 1;
            for (auto w : xfer.workers) max_workers = std::max(max_workers, w);
            bench::TransferReport rep;
            with_server(xfer_server, max_workers, [&](const bench::Address& a) {
                xfer.server = a;
                rep = bench::run_transfer(xfer);
            });
            bench::print(std::cout, rep);
            return 0;
        }
    } catch (const bench::Failure& e) {
        std::cerr << "error: " << e.what() << " [" << alch_status_name(e.status) << "]\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
