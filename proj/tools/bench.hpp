#pragma once

// Timing harnesses behind the bench-* subcommands. Everything goes through
// the public C interface.

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "alch/alch.h"

namespace bench {

struct Failure : std::runtime_error {
    alch_status status;
    Failure(alch_status s, const std::string& what) : std::runtime_error(what), status(s) {}
};

/// Throws Failure with alch_last_error() unless `s` is ALCH_OK.
void check(alch_status s, const char* what);

struct Address {
    std::string host = "127.0.0.1";
    std::uint16_t port = 0;
};

/// In-process server for the duration of a bench.
class EmbeddedServer {
  public:
    explicit EmbeddedServer(std::uint16_t workers);
    ~EmbeddedServer();
    EmbeddedServer(const EmbeddedServer&) = delete;
    EmbeddedServer& operator=(const EmbeddedServer&) = delete;
    Address address() const;

  private:
    alch_server* server_ = nullptr;
};

/// Seconds on a monotonic clock.
double now();

// ---- SVD ----

enum class SvdMode { ClientLoad, ServerLoad, Replicate };
SvdMode parse_svd_mode(const std::string& s);
const char* svd_mode_name(SvdMode m);

struct SvdConfig {
    Address server;
    SvdMode mode = SvdMode::ClientLoad;
    std::string path;      // matrix file
    std::uint16_t workers = 1;
    std::int64_t k = 20;
    std::int64_t replicas = 1;
    int repetitions = 3;
};

struct SvdPhases {
    double load = 0;
    double to_server = 0;
    double compute = 0;
    double to_client = 0;
    double total() const { return to_server + compute + to_client; }
};

struct SvdReport {
    SvdConfig config;
    std::uint64_t rows = 0;
    std::uint64_t cols = 0;
    std::vector<SvdPhases> runs;
    SvdPhases mean;
    std::vector<double> s; // singular values of the last run
    std::int64_t steps = 0;
};

SvdReport run_svd(const SvdConfig& cfg);
void print(std::ostream& os, const SvdReport& r);

// ---- CG on random features ----

struct CgConfig {
    Address server;
    std::vector<std::int64_t> features{1000, 2000, 3000};
    double lambda = 1e-5;
    double tol = 1e-10;
    std::int64_t max_iter = 200;
    double sigma = 10.0;
    std::uint16_t workers = 1;
    int clients = 1;
    std::uint64_t rows = 5000;
    std::uint64_t cols = 440;
    std::uint64_t labels = 10;
    std::uint64_t seed = 42;
    std::string scratch_dir = "/tmp";
};

struct CgPoint {
    std::int64_t features = 0;
    double to_server = 0;
    double features_compute = 0;
    double cg_compute = 0;
    double to_client = 0;
    double iter_mean = 0;
    double iter_std = 0;
    std::int64_t iterations = 0;
    bool converged = false;
    double max_residual = 0;
    std::vector<double> w; // fetched solution
    double total() const { return to_server + features_compute + cg_compute + to_client; }
};

struct CgReport {
    CgConfig config;
    std::vector<std::vector<CgPoint>> per_client; // [client][feature index]
    /// Per-iteration cost of each D relative to the first, divided by D / D0.
    std::vector<double> growth;
    bool linear_ok = true;
    bool clients_agree = true;
};

CgReport run_cg(const CgConfig& cfg);
void print(std::ostream& os, const CgReport& r);

// ---- transfer grid ----

struct TransferConfig {
    Address server;
    std::uint64_t rows = 20000;
    std::uint64_t cols = 440;
    std::vector<int> client_procs{1, 2};
    std::vector<std::uint16_t> workers{1, 2};
    int repetitions = 3;
    std::uint32_t batch_rows = 128;
    std::uint64_t seed = 7;
};

struct TransferCell {
    int clients = 0;
    std::uint16_t workers = 0;
    std::vector<double> seconds;
    double mean = 0;
    double mb_per_s = 0;
};

struct TransferReport {
    TransferConfig config;
    std::vector<TransferCell> cells;
};

TransferReport run_transfer(const TransferConfig& cfg);
void print(std::ostream& os, const TransferReport& r);

} // namespace bench
