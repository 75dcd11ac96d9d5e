#include "bench.hpp"

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <memory>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

namespace bench {

namespace {

struct SessionDel {
    void operator()(alch_session* s) const { alch_session_free(s); }
};
struct MatrixDel {
    void operator()(alch_matrix* m) const { alch_matrix_free(m); }
};
struct ParamsDel {
    void operator()(alch_params* p) const { alch_params_free(p); }
};
struct ResultDel {
    void operator()(alch_result* r) const { alch_result_free(r); }
};

using SessionPtr = std::unique_ptr<alch_session, SessionDel>;
using MatrixPtr = std::unique_ptr<alch_matrix, MatrixDel>;
using ParamsPtr = std::unique_ptr<alch_params, ParamsDel>;
using ResultPtr = std::unique_ptr<alch_result, ResultDel>;

SessionPtr connect(const Address& a, std::uint16_t workers, std::uint32_t batch_rows = 0) {
    alch_session* s = nullptr;
    check(alch_connect(a.host.c_str(), a.port, workers, batch_rows, 0, &s), "connect");
    return SessionPtr(s);
}

MatrixPtr send(alch_session* s, std::uint64_t rows, std::uint64_t cols, const double* data) {
    alch_matrix* m = nullptr;
    check(alch_send_matrix(s, rows, cols, nullptr, data, &m), "send_matrix");
    return MatrixPtr(m);
}

std::vector<double> fetch(alch_session* s, const alch_matrix* m) {
    std::uint64_t r = 0, c = 0;
    alch_matrix_dims(m, &r, &c);
    std::vector<double> out(r * c);
    check(alch_fetch_matrix(s, m, out.data(), out.size()), "fetch_matrix");
    return out;
}

ParamsPtr params() { return ParamsPtr(alch_params_new()); }

ResultPtr run(alch_session* s, const char* routine, std::initializer_list<const alch_matrix*> inputs,
              const alch_params* p) {
    std::vector<const alch_matrix*> in(inputs);
    alch_result* r = nullptr;
    check(alch_run(s, "builtin", routine, in.data(), in.size(), p, &r), routine);
    return ResultPtr(r);
}

MatrixPtr take(alch_result* r, std::size_t i) {
    alch_matrix* m = nullptr;
    check(alch_result_take_output(r, i, &m), "take_output");
    return MatrixPtr(m);
}

double get_f64(const alch_result* r, const std::string& key) {
    double v = 0;
    check(alch_result_get_f64(r, key.c_str(), &v), key.c_str());
    return v;
}

std::int64_t get_i64(const alch_result* r, const std::string& key) {
    std::int64_t v = 0;
    check(alch_result_get_i64(r, key.c_str(), &v), key.c_str());
    return v;
}

bool get_bool(const alch_result* r, const std::string& key) {
    int v = 0;
    check(alch_result_get_bool(r, key.c_str(), &v), key.c_str());
    return v != 0;
}

std::string scratch_path(const std::string& dir, const char* stem) {
    static std::atomic<int> counter{0};
    std::ostringstream os;
    os << dir << "/" << stem << "-" << ::getpid() << "-" << counter++ << ".bin";
    return os.str();
}

std::string fixed(double v, int digits = 4) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << v;
    return os.str();
}

std::string exact(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double mean_of(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return v.empty() ? 0 : s / static_cast<double>(v.size());
}

} // namespace

void check(alch_status s, const char* what) {
    if (s != ALCH_OK) throw Failure(s, std::string(what) + ": " + alch_last_error());
}

EmbeddedServer::EmbeddedServer(std::uint16_t workers) {
    check(alch_server_start("127.0.0.1", 0, workers, 0, &server_), "server_start");
}

EmbeddedServer::~EmbeddedServer() { alch_server_free(server_); }

Address EmbeddedServer::address() const { return {"127.0.0.1", alch_server_port(server_)}; }

double now() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

SvdMode parse_svd_mode(const std::string& s) {
    if (s == "client-load") return SvdMode::ClientLoad;
    if (s == "server-load") return SvdMode::ServerLoad;
    if (s == "replicate") return SvdMode::Replicate;
    throw Failure(ALCH_INVALID_ARGUMENT, "unknown svd mode '" + s + "'");
}

const char* svd_mode_name(SvdMode m) {
    switch (m) {
    case SvdMode::ClientLoad: return "client-load";
    case SvdMode::ServerLoad: return "server-load";
    case SvdMode::Replicate: return "replicate";
    }
    return "?";
}

SvdReport run_svd(const SvdConfig& cfg) {
    SvdReport rep;
    rep.config = cfg;
    std::uint64_t rows = 0, cols = 0;
    check(alch_binfile_info(cfg.path.c_str(), &rows, &cols), "matrix file");
    const std::int64_t replicas = cfg.mode == SvdMode::Replicate ? cfg.replicas : 1;
    rep.rows = rows;
    rep.cols = cols * static_cast<std::uint64_t>(replicas);

    auto session = connect(cfg.server, cfg.workers);
    for (int r = 0; r < cfg.repetitions; ++r) {
        SvdPhases ph;
        MatrixPtr a;
        double t = now();
        if (cfg.mode == SvdMode::ClientLoad) {
            std::vector<double> data(rows * cols);
            check(alch_binfile_read(cfg.path.c_str(), data.data(), data.size()), "read matrix file");
            ph.load = now() - t;
            t = now();
            a = send(session.get(), rows, cols, data.data());
            ph.to_server = now() - t;
        } else {
            auto p = params();
            check(alch_params_set_str(p.get(), "path", cfg.path.c_str()), "path");
            check(alch_params_set_i64(p.get(), "replicas", replicas), "replicas");
            auto res = run(session.get(), "load_bin", {}, p.get());
            a = take(res.get(), 0);
            ph.load = now() - t;
        }

        auto p = params();
        check(alch_params_set_i64(p.get(), "k", cfg.k), "k");
        t = now();
        auto res = run(session.get(), "truncated_svd", {a.get()}, p.get());
        ph.compute = now() - t;
        auto u = take(res.get(), 0);
        auto v = take(res.get(), 1);

        t = now();
        const auto u_local = fetch(session.get(), u.get());
        const auto v_local = fetch(session.get(), v.get());
        rep.s.clear();
        for (std::int64_t i = 0; i < cfg.k; ++i) rep.s.push_back(get_f64(res.get(), "sigma." + std::to_string(i)));
        ph.to_client = now() - t;
        rep.steps = get_i64(res.get(), "steps");

        for (auto* m : {a.get(), u.get(), v.get()}) check(alch_release_matrix(session.get(), m), "release");
        rep.runs.push_back(ph);
    }
    for (const auto& ph : rep.runs) {
        rep.mean.load += ph.load;
        rep.mean.to_server += ph.to_server;
        rep.mean.compute += ph.compute;
        rep.mean.to_client += ph.to_client;
    }
    const double n = static_cast<double>(std::max<std::size_t>(rep.runs.size(), 1));
    rep.mean.load /= n;
    rep.mean.to_server /= n;
    rep.mean.compute /= n;
    rep.mean.to_client /= n;
    return rep;
}

void print(std::ostream& os, const SvdReport& r) {
    const auto& c = r.config;
    const char* mode = svd_mode_name(c.mode);
    os << "bench-svd  mode=" << mode << "  matrix=" << r.rows << "x" << r.cols << "  k=" << c.k
       << "  workers=" << c.workers << "  replicas=" << (c.mode == SvdMode::Replicate ? c.replicas : 1)
       << "  runs=" << r.runs.size() << "\n";
    os << std::left << std::setw(18) << "phase" << std::right << std::setw(12) << "mean_s" << "\n";
    const std::pair<const char*, double> rows[] = {
        {"load", r.mean.load},           {"transfer_in", r.mean.to_server}, {"compute", r.mean.compute},
        {"transfer_out", r.mean.to_client}, {"total", r.mean.total()},
    };
    for (const auto& [name, v] : rows) {
        os << std::left << std::setw(18) << name << std::right << std::setw(12) << fixed(v) << "\n";
    }
    os << "(total excludes load)  steps=" << r.steps << "\n";
    for (const auto& [name, v] : rows) {
        os << "svd mode=" << mode << " workers=" << c.workers << " phase=" << name << " seconds=" << exact(v)
           << "\n";
    }
    os << "svd mode=" << mode << " workers=" << c.workers << " steps=" << r.steps << "\n";
    for (std::size_t i = 0; i < r.s.size(); ++i) {
        os << "svd mode=" << mode << " sigma." << i << "=" << exact(r.s[i]) << "\n";
    }
}

CgReport run_cg(const CgConfig& cfg) {
    if (cfg.features.empty()) throw Failure(ALCH_INVALID_ARGUMENT, "no feature counts given");
    if (cfg.clients < 1) throw Failure(ALCH_INVALID_ARGUMENT, "clients must be >= 1");
    CgReport rep;
    rep.config = cfg;

    const auto path = scratch_path(cfg.scratch_dir, "bench-cg");
    check(alch_datagen("speech-like", cfg.rows, cfg.cols, cfg.seed, 0, cfg.labels, path.c_str()), "datagen");
    const auto labels_path = path + ".labels";
    std::vector<double> x(cfg.rows * cfg.cols);
    std::vector<double> y(cfg.rows * cfg.labels);
    check(alch_binfile_read(path.c_str(), x.data(), x.size()), "read features");
    check(alch_binfile_read(labels_path.c_str(), y.data(), y.size()), "read labels");
    std::remove(path.c_str());
    std::remove(labels_path.c_str());

    rep.per_client.resize(static_cast<std::size_t>(cfg.clients));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(cfg.clients));
    auto client = [&](int c) {
        auto session = connect(cfg.server, cfg.workers);
        for (auto D : cfg.features) {
            CgPoint pt;
            pt.features = D;
            double t = now();
            auto xm = send(session.get(), cfg.rows, cfg.cols, x.data());
            auto ym = send(session.get(), cfg.rows, cfg.labels, y.data());
            pt.to_server = now() - t;

            auto pf = params();
            check(alch_params_set_i64(pf.get(), "features", D), "features");
            check(alch_params_set_f64(pf.get(), "sigma", cfg.sigma), "sigma");
            check(alch_params_set_i64(pf.get(), "seed", static_cast<std::int64_t>(cfg.seed)), "seed");
            t = now();
            auto rf = run(session.get(), "random_features", {xm.get()}, pf.get());
            pt.features_compute = now() - t;
            auto z = take(rf.get(), 0);

            auto pc = params();
            check(alch_params_set_f64(pc.get(), "lambda", cfg.lambda), "lambda");
            check(alch_params_set_f64(pc.get(), "tol", cfg.tol), "tol");
            check(alch_params_set_i64(pc.get(), "max_iter", cfg.max_iter), "max_iter");
            t = now();
            auto cg = run(session.get(), "cg_solve", {z.get(), ym.get()}, pc.get());
            pt.cg_compute = now() - t;
            auto w = take(cg.get(), 0);

            t = now();
            pt.w = fetch(session.get(), w.get());
            pt.to_client = now() - t;

            pt.iter_mean = get_f64(cg.get(), "iter_time_mean_s");
            pt.iter_std = get_f64(cg.get(), "iter_time_std_s");
            pt.iterations = get_i64(cg.get(), "iterations");
            pt.converged = get_bool(cg.get(), "converged");
            const auto cols = get_i64(cg.get(), "columns");
            for (std::int64_t j = 0; j < cols; ++j) {
                pt.max_residual = std::max(pt.max_residual, get_f64(cg.get(), "residual." + std::to_string(j)));
            }
            for (auto* m : {xm.get(), ym.get(), z.get(), w.get()}) check(alch_release_matrix(session.get(), m), "release");
            rep.per_client[static_cast<std::size_t>(c)].push_back(std::move(pt));
        }
    };
    std::vector<std::thread> threads;
    for (int c = 0; c < cfg.clients; ++c) {
        threads.emplace_back([&, c] {
            try {
                client(c);
            } catch (...) {
                errors[static_cast<std::size_t>(c)] = std::current_exception();
            }
        });
    }
    for (auto& t : threads) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    const auto& base = rep.per_client[0];
    for (const auto& pt : base) {
        const double cost = pt.iter_mean / base[0].iter_mean;
        const double size = static_cast<double>(pt.features) / static_cast<double>(base[0].features);
        rep.growth.push_back(cost / size);
        if (cost > 1.25 * size) rep.linear_ok = false;
    }
    for (const auto& other : rep.per_client) {
        for (std::size_t i = 0; i < base.size(); ++i) {
            if (other[i].w != base[i].w || other[i].iterations != base[i].iterations) rep.clients_agree = false;
        }
    }
    return rep;
}

void print(std::ostream& os, const CgReport& r) {
    const auto& c = r.config;
    os << "bench-cg  X=" << c.rows << "x" << c.cols << "  labels=" << c.labels << "  lambda=" << c.lambda
       << "  tol=" << c.tol << "  workers=" << c.workers << "  clients=" << c.clients << "\n";
    os << std::right << std::setw(7) << "D" << std::setw(12) << "xfer_in_s" << std::setw(12) << "features_s"
       << std::setw(12) << "cg_s" << std::setw(12) << "xfer_out_s" << std::setw(12) << "total_s" << std::setw(7)
       << "iters" << std::setw(22) << "per_iter_s" << std::setw(11) << "converged" << "\n";
    for (std::size_t ci = 0; ci < r.per_client.size(); ++ci) {
        for (const auto& pt : r.per_client[ci]) {
            os << std::setw(7) << pt.features << std::setw(12) << fixed(pt.to_server) << std::setw(12)
               << fixed(pt.features_compute) << std::setw(12) << fixed(pt.cg_compute) << std::setw(12)
               << fixed(pt.to_client) << std::setw(12) << fixed(pt.total()) << std::setw(7) << pt.iterations
               << std::setw(22) << (fixed(pt.iter_mean, 5) + " +- " + fixed(pt.iter_std, 5)) << std::setw(11)
               << (pt.converged ? "yes" : "no") << "\n";
        }
    }
    for (std::size_t ci = 0; ci < r.per_client.size(); ++ci) {
        for (const auto& pt : r.per_client[ci]) {
            const std::string head = "cg client=" + std::to_string(ci) + " features=" + std::to_string(pt.features);
            os << head << " phase=transfer_in seconds=" << exact(pt.to_server) << "\n";
            os << head << " phase=features seconds=" << exact(pt.features_compute) << "\n";
            os << head << " phase=compute seconds=" << exact(pt.cg_compute) << "\n";
            os << head << " phase=transfer_out seconds=" << exact(pt.to_client) << "\n";
            os << head << " phase=total seconds=" << exact(pt.total()) << "\n";
            os << head << " iterations=" << pt.iterations << " converged=" << (pt.converged ? 1 : 0)
               << " max_residual=" << exact(pt.max_residual) << " iter_mean_s=" << exact(pt.iter_mean)
               << " iter_std_s=" << exact(pt.iter_std) << "\n";
        }
    }
    for (std::size_t i = 0; i < r.growth.size(); ++i) {
        os << "cg growth features=" << r.per_client[0][i].features << " cost_over_linear=" << exact(r.growth[i])
           << "\n";
    }
    os << "cg check=linear_per_iteration pass=" << (r.linear_ok ? 1 : 0) << "\n";
    if (r.per_client.size() > 1) os << "cg check=clients_agree pass=" << (r.clients_agree ? 1 : 0) << "\n";
}

TransferReport run_transfer(const TransferConfig& cfg) {
    TransferReport rep;
    rep.config = cfg;
    std::vector<double> data(cfg.rows * cfg.cols);
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> g;
    for (auto& v : data) v = g(rng);

    for (int clients : cfg.client_procs) {
        for (auto workers : cfg.workers) {
            if (clients < 1 || static_cast<std::uint64_t>(clients) > cfg.rows) {
                throw Failure(ALCH_INVALID_ARGUMENT, "client count must be in [1, rows]");
            }
            TransferCell cell;
            cell.clients = clients;
            cell.workers = workers;
            for (int r = 0; r < cfg.repetitions; ++r) {
                std::vector<SessionPtr> sessions;
                for (int c = 0; c < clients; ++c) sessions.push_back(connect(cfg.server, workers, cfg.batch_rows));
                std::vector<MatrixPtr> sent(static_cast<std::size_t>(clients));
                std::vector<std::exception_ptr> errors(static_cast<std::size_t>(clients));
                std::vector<std::thread> threads;
                const double t = now();
                for (int c = 0; c < clients; ++c) {
                    threads.emplace_back([&, c] {
                        try {
                            const auto uc = static_cast<std::uint64_t>(c);
                            const auto n = static_cast<std::uint64_t>(clients);
                            const auto begin = cfg.rows * uc / n;
                            const auto end = cfg.rows * (uc + 1) / n;
                            sent[uc] = send(sessions[uc].get(), end - begin, cfg.cols, data.data() + begin * cfg.cols);
                        } catch (...) {
                            errors[static_cast<std::size_t>(c)] = std::current_exception();
                        }
                    });
                }
                for (auto& th : threads) th.join();
                cell.seconds.push_back(now() - t);
                for (auto& e : errors) {
                    if (e) std::rethrow_exception(e);
                }
            }
            cell.mean = mean_of(cell.seconds);
            cell.mb_per_s = static_cast<double>(cfg.rows * cfg.cols * sizeof(double)) / 1e6 / cell.mean;
            rep.cells.push_back(std::move(cell));
        }
    }
    return rep;
}

void print(std::ostream& os, const TransferReport& r) {
    const auto& c = r.config;
    os << "bench-transfer  matrix=" << c.rows << "x" << c.cols << "  bytes=" << c.rows * c.cols * sizeof(double)
       << "  repetitions=" << c.repetitions << "  batch_rows=" << c.batch_rows << "\n";
    os << std::right << std::setw(9) << "clients" << std::setw(9) << "workers" << std::setw(12) << "mean_s"
       << std::setw(12) << "MB/s" << "\n";
    for (const auto& cell : r.cells) {
        os << std::setw(9) << cell.clients << std::setw(9) << cell.workers << std::setw(12) << fixed(cell.mean)
           << std::setw(12) << fixed(cell.mb_per_s, 1) << "\n";
    }
    for (const auto& cell : r.cells) {
        os << "transfer clients=" << cell.clients << " workers=" << cell.workers
           << " seconds=" << exact(cell.mean) << " mb_per_s=" << exact(cell.mb_per_s) << "\n";
    }
}

} // namespace bench
