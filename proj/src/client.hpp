#pragma once

// Client SDK: a session with the driver plus one data socket per allocated
// worker. Matrices live on the server and are referenced through handles;
// rows only cross the wire on send_matrix and fetch_matrix.

#include <atomic>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "params.hpp"
#include "wire.hpp"

namespace alch::client {

/// Row-indexed local matrix; rows may be added in any index order.
class LocalMatrix {
  public:
    LocalMatrix() = default;
    LocalMatrix(std::uint64_t rows, std::uint64_t cols);

    /// Row-major dense data, row i stored with index i.
    static LocalMatrix from_dense(std::uint64_t rows, std::uint64_t cols, std::span<const double> data);

    /// Throws Error(InvalidArgument) for an index out of range, a wrong width or a repeated index.
    void set_row(std::uint64_t index, std::span<const double> values);

    std::uint64_t rows() const noexcept { return rows_; }
    std::uint64_t cols() const noexcept { return cols_; }
    /// Rows stored so far.
    std::size_t stored() const noexcept { return indices_.size(); }
    bool complete() const noexcept { return indices_.size() == rows_; }

    std::span<const std::uint64_t> indices() const noexcept { return indices_; }
    /// Row at storage position `pos` (not row index).
    const double* row_at(std::size_t pos) const noexcept { return values_.data() + pos * cols_; }
    /// Row by index; nullptr when absent.
    const double* find(std::uint64_t index) const;

    /// Throws Error(InvalidArgument) when rows are missing.
    std::vector<double> to_dense() const;

  private:
    std::uint64_t rows_ = 0;
    std::uint64_t cols_ = 0;
    std::vector<std::uint64_t> indices_;
    std::vector<double> values_;
    std::unordered_map<std::uint64_t, std::size_t> position_;
};

struct Options {
    std::string host = "127.0.0.1";
    std::uint16_t port = 0;
    std::uint16_t workers = 1;
    std::uint32_t batch_rows = 128;
    int timeout_ms = 0; // 0 = wait forever
};

class Session;

/// Proxy for a server-resident matrix. Copies share validity: releasing one
/// copy, or closing the session, invalidates all of them.
class MatrixHandle {
  public:
    MatrixHandle() = default;

    std::uint64_t id() const noexcept { return state_ ? state_->id : 0; }
    std::uint64_t rows() const noexcept { return state_ ? state_->rows : 0; }
    std::uint64_t cols() const noexcept { return state_ ? state_->cols : 0; }
    bool valid() const noexcept { return state_ && state_->valid.load(); }
    const std::vector<wire::LayoutEntry>& layout() const;

  private:
    friend class Session;
    struct State {
        std::uint64_t id = 0;
        std::uint64_t rows = 0;
        std::uint64_t cols = 0;
        std::vector<wire::LayoutEntry> layout;
        const void* owner = nullptr;
        std::atomic<bool> valid{true};
    };
    std::shared_ptr<State> state_;
};

struct TaskOutput {
    std::vector<MatrixHandle> outputs;
    ParamMap scalars;
};

class Session {
  public:
    /// Handshake plus one data socket per worker in HANDSHAKE_ACK.
    /// Throws Error(Connection), or the server's error (VersionMismatch, InsufficientWorkers, ...).
    static Session connect(const Options& options);

    Session(Session&&) noexcept;
    Session& operator=(Session&&) noexcept;
    ~Session();

    std::uint32_t id() const noexcept;
    std::size_t worker_count() const noexcept;
    bool closed() const noexcept;

    /// Streams `m` to its owning workers in batches. Requires every row present
    /// and cols > 0. On failure the partial matrix is released server-side.
    MatrixHandle send_matrix(const LocalMatrix& m);
    LocalMatrix fetch_matrix(const MatrixHandle& h);
    /// Row-major dense copy of the matrix.
    std::vector<double> fetch_dense(const MatrixHandle& h);
    void release(const MatrixHandle& h);

    /// Registers a library (cached per session) and returns its id.
    std::uint16_t load_library(const std::string& name, const std::string& path = "");
    TaskOutput run(std::uint16_t lib_id, const std::string& routine, std::span<const MatrixHandle> inputs,
                   const ParamMap& params = {});

    /// Sends CLOSE_SESSION and invalidates every handle. Idempotent.
    void close() noexcept;

  private:
    struct Core;
    void check(const MatrixHandle& h) const;
    explicit Session(std::unique_ptr<Core> core);
    std::unique_ptr<Core> core_;
};

/// Typed stubs over the "builtin" library.
class Builtin {
  public:
    explicit Builtin(Session& session);

    std::uint16_t lib_id() const noexcept { return lib_id_; }

    struct Qr {
        MatrixHandle q;
        MatrixHandle r;
    };
    Qr qr(const MatrixHandle& a);

    struct Cg {
        MatrixHandle w;
        std::vector<std::int64_t> iterations;
        std::vector<double> residuals;
        std::vector<bool> converged;
        double iter_time_mean_s = 0.0;
        double iter_time_std_s = 0.0;
        bool all_converged() const;
    };
    Cg cg(const MatrixHandle& x, const MatrixHandle& y, double lambda = 1e-5, double tol = 1e-10,
          std::int64_t max_iter = 1000);

    struct Svd {
        MatrixHandle u;
        MatrixHandle v;
        std::vector<double> s;
        std::vector<bool> unreliable;
        std::int64_t steps = 0;
    };
    Svd svd(const MatrixHandle& a, std::int64_t k, double tol = 1e-10, std::int64_t max_subspace = 0,
            std::int64_t seed = 0);

    MatrixHandle random_features(const MatrixHandle& x, std::int64_t features, double sigma, std::int64_t seed);
    MatrixHandle load(const std::string& path, std::int64_t replicas = 1);

  private:
    Session* session_;
    std::uint16_t lib_id_;
};

} // namespace alch::client
