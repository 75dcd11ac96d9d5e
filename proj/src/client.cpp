#include "client.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <thread>

#include "error.hpp"
#include "net.hpp"

namespace alch::client {

namespace {

// Largest FETCH_ROWS request, in payload bytes.
constexpr std::uint64_t kFetchChunkBytes = std::uint64_t{8} << 20;

[[noreturn]] void raise(const wire::ErrorMsg& e) {
    throw Error(static_cast<ErrorCode>(e.code), e.message);
}

template <class T>
T expect_reply(wire::Decoded reply, const char* what) {
    if (auto* t = std::get_if<T>(&reply.message)) return std::move(*t);
    if (auto* e = std::get_if<wire::ErrorMsg>(&reply.message)) raise(*e);
    throw Error(ErrorCode::Protocol, std::string("unexpected ") + wire::type_name(wire::type_of(reply.message)) +
                                         " in reply to " + what);
}

// Runs fn(i) for i in [0, n) on n threads (inline when n == 1) and rethrows the first failure.
template <class Fn>
void fan_out(std::size_t n, Fn fn) {
    if (n == 1) {
        fn(0);
        return;
    }
    std::vector<std::exception_ptr> errors(n);
    std::vector<std::thread> threads;
    threads.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        threads.emplace_back([&, i] {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        });
    }
    for (auto& t : threads) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

} // namespace

LocalMatrix::LocalMatrix(std::uint64_t rows, std::uint64_t cols) : rows_(rows), cols_(cols) {}

LocalMatrix LocalMatrix::from_dense(std::uint64_t rows, std::uint64_t cols, std::span<const double> data) {
    if (data.size() != rows * cols) {
        throw Error(ErrorCode::InvalidArgument, "dense data has " + std::to_string(data.size()) +
                                                    " values, expected " + std::to_string(rows * cols));
    }
    LocalMatrix m(rows, cols);
    m.indices_.resize(rows);
    for (std::uint64_t i = 0; i < rows; ++i) {
        m.indices_[i] = i;
        m.position_.emplace(i, i);
    }
    m.values_.assign(data.begin(), data.end());
    return m;
}

void LocalMatrix::set_row(std::uint64_t index, std::span<const double> values) {
    if (index >= rows_) {
        throw Error(ErrorCode::InvalidArgument,
                    "row " + std::to_string(index) + " outside [0, " + std::to_string(rows_) + ")");
    }
    if (values.size() != cols_) {
        throw Error(ErrorCode::InvalidArgument, "row " + std::to_string(index) + " has " +
                                                    std::to_string(values.size()) + " values, expected " +
                                                    std::to_string(cols_));
    }
    if (!position_.emplace(index, indices_.size()).second) {
        throw Error(ErrorCode::InvalidArgument, "row " + std::to_string(index) + " set twice");
    }
    indices_.push_back(index);
    values_.insert(values_.end(), values.begin(), values.end());
}

const double* LocalMatrix::find(std::uint64_t index) const {
    auto it = position_.find(index);
    return it == position_.end() ? nullptr : row_at(it->second);
}

std::vector<double> LocalMatrix::to_dense() const {
    if (!complete()) {
        throw Error(ErrorCode::InvalidArgument,
                    std::to_string(rows_ - indices_.size()) + " of " + std::to_string(rows_) + " rows missing");
    }
    std::vector<double> out(rows_ * cols_);
    for (std::size_t pos = 0; pos < indices_.size(); ++pos) {
        std::copy_n(row_at(pos), cols_, out.begin() + static_cast<std::ptrdiff_t>(indices_[pos] * cols_));
    }
    return out;
}

const std::vector<wire::LayoutEntry>& MatrixHandle::layout() const {
    static const std::vector<wire::LayoutEntry> empty;
    return state_ ? state_->layout : empty;
}

struct WorkerLink {
    std::uint16_t id = 0;
    std::unique_ptr<net::Channel> channel;
    std::mutex mutex;
    std::vector<std::uint8_t> buffer;
};

struct Session::Core {
    Options options;
    std::uint32_t id = 0;
    std::unique_ptr<net::Channel> driver;
    std::mutex driver_mutex;
    std::vector<std::unique_ptr<WorkerLink>> workers;
    std::map<std::uint16_t, std::size_t> worker_index;

    std::mutex state_mutex;
    bool closed = false;
    std::map<std::string, std::uint16_t> libraries;
    std::vector<std::weak_ptr<MatrixHandle::State>> handles;

    wire::Decoded request(const wire::Message& msg) {
        std::lock_guard lock(driver_mutex);
        driver->send(msg, id);
        return driver->expect();
    }

    void ensure_open() {
        std::lock_guard lock(state_mutex);
        if (closed) throw Error(ErrorCode::InvalidHandle, "session is closed");
    }

    WorkerLink& link(std::uint16_t worker_id) {
        auto it = worker_index.find(worker_id);
        if (it == worker_index.end()) {
            throw Error(ErrorCode::Protocol, "layout names worker " + std::to_string(worker_id) +
                                                 " outside the session");
        }
        return *workers[it->second];
    }

    void release_quietly(std::uint64_t matrix_id) {
        try {
            request(wire::ReleaseMatrix{matrix_id});
        } catch (...) {
        }
    }
};

Session::Session(std::unique_ptr<Core> core) : core_(std::move(core)) {}
Session::Session(Session&&) noexcept = default;
Session& Session::operator=(Session&& other) noexcept {
    if (this != &other) {
        close();
        core_ = std::move(other.core_);
    }
    return *this;
}
Session::~Session() { close(); }

Session Session::connect(const Options& options) {
    if (options.workers == 0) throw Error(ErrorCode::InvalidArgument, "workers must be >= 1");
    if (options.batch_rows == 0) throw Error(ErrorCode::InvalidArgument, "batch_rows must be >= 1");
    auto core = std::make_unique<Core>();
    core->options = options;
    auto sock = net::connect_to(options.host, options.port);
    if (options.timeout_ms > 0) sock.set_recv_timeout_ms(options.timeout_ms);
    core->driver = std::make_unique<net::Channel>(std::move(sock));
    core->driver->send(wire::Handshake{wire::kProtocolVersion, options.workers}, 0);
    auto ack = expect_reply<wire::HandshakeAck>(core->driver->expect(), "HANDSHAKE");
    core->id = ack.session_id;
    for (const auto& ep : ack.workers) {
        auto [host, port] = net::split_address(ep.address);
        auto ws = net::connect_to(host, port);
        if (options.timeout_ms > 0) ws.set_recv_timeout_ms(options.timeout_ms);
        auto link = std::make_unique<WorkerLink>();
        link->id = ep.worker_id;
        link->channel = std::make_unique<net::Channel>(std::move(ws));
        core->worker_index[ep.worker_id] = core->workers.size();
        core->workers.push_back(std::move(link));
    }
    return Session(std::move(core));
}

std::uint32_t Session::id() const noexcept { return core_ ? core_->id : 0; }
std::size_t Session::worker_count() const noexcept { return core_ ? core_->workers.size() : 0; }

bool Session::closed() const noexcept {
    if (!core_) return true;
    std::lock_guard lock(core_->state_mutex);
    return core_->closed;
}

MatrixHandle Session::send_matrix(const LocalMatrix& m) {
    if (!core_) throw Error(ErrorCode::InvalidHandle, "session is closed");
    core_->ensure_open();
    if (m.rows() == 0 || m.cols() == 0) {
        throw Error(ErrorCode::InvalidArgument, "cannot send an empty " + std::to_string(m.rows()) + "x" +
                                                    std::to_string(m.cols()) + " matrix");
    }
    if (!m.complete()) {
        throw Error(ErrorCode::InvalidArgument, std::to_string(m.rows() - m.stored()) + " of " +
                                                    std::to_string(m.rows()) + " rows missing");
    }
    auto info = expect_reply<wire::MatrixInfo>(core_->request(wire::CreateMatrix{m.rows(), m.cols()}),
                                               "CREATE_MATRIX");
    try {
        // Owner of each stored row, by binary search over the layout.
        const auto& entries = info.entries;
        std::vector<std::vector<std::size_t>> positions(entries.size());
        const auto indices = m.indices();
        for (std::size_t pos = 0; pos < indices.size(); ++pos) {
            const auto idx = indices[pos];
            auto it = std::upper_bound(entries.begin(), entries.end(), idx,
                                       [](std::uint64_t v, const wire::LayoutEntry& e) { return v < e.row_start; });
            if (it == entries.begin() || idx >= std::prev(it)->row_end) {
                throw Error(ErrorCode::Protocol, "layout does not cover row " + std::to_string(idx));
            }
            positions[static_cast<std::size_t>(std::prev(it) - entries.begin())].push_back(pos);
        }

        const std::size_t batch = core_->options.batch_rows;
        const auto sid = core_->id;
        fan_out(entries.size(), [&](std::size_t e) {
            const auto& mine = positions[e];
            if (mine.empty()) return;
            WorkerLink& link = core_->link(entries[e].worker_id);
            std::lock_guard lock(link.mutex);
            std::vector<std::uint64_t> idx;
            for (std::size_t off = 0; off < mine.size(); off += batch) {
                const std::size_t n = std::min(batch, mine.size() - off);
                idx.resize(n);
                for (std::size_t i = 0; i < n; ++i) idx[i] = indices[mine[off + i]];
                link.buffer.clear();
                wire::encode_rows_into(link.buffer, wire::MsgType::SendRows, sid, info.matrix_id, m.cols(), idx,
                                       [&](std::size_t i) { return m.row_at(mine[off + i]); });
                link.channel->send_bytes(link.buffer);
                auto ack = expect_reply<wire::RowsAck>(link.channel->expect(), "SEND_ROWS");
                if (ack.rows_received != n) {
                    throw Error(ErrorCode::Protocol, "worker acknowledged " + std::to_string(ack.rows_received) +
                                                         " of " + std::to_string(n) + " rows");
                }
            }
        });
        expect_reply<wire::MatrixReady>(core_->request(wire::SendComplete{info.matrix_id}), "SEND_COMPLETE");
    } catch (...) {
        core_->release_quietly(info.matrix_id);
        throw;
    }

    MatrixHandle h;
    h.state_ = std::make_shared<MatrixHandle::State>();
    h.state_->id = info.matrix_id;
    h.state_->rows = info.rows;
    h.state_->cols = info.cols;
    h.state_->layout = std::move(info.entries);
    h.state_->owner = core_.get();
    std::lock_guard lock(core_->state_mutex);
    core_->handles.push_back(h.state_);
    return h;
}

void Session::check(const MatrixHandle& h) const {
    if (!h.state_) throw Error(ErrorCode::InvalidHandle, "empty matrix handle");
    if (h.state_->owner != core_.get()) throw Error(ErrorCode::InvalidHandle, "handle belongs to another session");
    if (!h.state_->valid) {
        throw Error(ErrorCode::InvalidHandle, "matrix " + std::to_string(h.id()) + " was released");
    }
}

std::vector<double> Session::fetch_dense(const MatrixHandle& h) {
    if (!core_) throw Error(ErrorCode::InvalidHandle, "session is closed");
    core_->ensure_open();
    check(h);
    const auto& st = *h.state_;
    std::vector<double> out(st.rows * st.cols);
    const std::uint64_t chunk = std::max<std::uint64_t>(
        1, std::min<std::uint64_t>(kFetchChunkBytes / (st.cols * sizeof(double)), 0xFFFFFFFFu));
    const auto sid = core_->id;
    fan_out(st.layout.size(), [&](std::size_t e) {
        const auto& entry = st.layout[e];
        if (entry.row_end <= entry.row_start) return;
        WorkerLink& link = core_->link(entry.worker_id);
        std::lock_guard lock(link.mutex);
        for (std::uint64_t r = entry.row_start; r < entry.row_end; r += chunk) {
            const auto n = std::min(chunk, entry.row_end - r);
            link.channel->send(wire::FetchRows{st.id, r, static_cast<std::uint32_t>(n)}, sid);
            auto data = expect_reply<wire::RowsData>(link.channel->expect(), "FETCH_ROWS");
            const auto& rows = data.rows;
            if (data.matrix_id != st.id || rows.size() != n || rows.cols != st.cols) {
                throw Error(ErrorCode::Protocol, "ROWS_DATA does not match the request");
            }
            for (std::size_t i = 0; i < rows.size(); ++i) {
                const auto idx = rows.indices[i];
                if (idx < r || idx >= r + n) throw Error(ErrorCode::Protocol, "ROWS_DATA row outside request");
                std::copy_n(rows.row(i).data(), st.cols, out.begin() + static_cast<std::ptrdiff_t>(idx * st.cols));
            }
        }
    });
    return out;
}

LocalMatrix Session::fetch_matrix(const MatrixHandle& h) {
    auto dense = fetch_dense(h);
    return LocalMatrix::from_dense(h.rows(), h.cols(), dense);
}

void Session::release(const MatrixHandle& h) {
    if (!core_) throw Error(ErrorCode::InvalidHandle, "session is closed");
    core_->ensure_open();
    if (!h.state_) throw Error(ErrorCode::InvalidHandle, "empty matrix handle");
    if (h.state_->owner != core_.get()) throw Error(ErrorCode::InvalidHandle, "handle belongs to another session");
    if (!h.state_->valid.exchange(false)) {
        throw Error(ErrorCode::InvalidHandle, "matrix " + std::to_string(h.id()) + " was already released");
    }
    expect_reply<wire::ReleaseMatrix>(core_->request(wire::ReleaseMatrix{h.id()}), "RELEASE_MATRIX");
}

std::uint16_t Session::load_library(const std::string& name, const std::string& path) {
    if (!core_) throw Error(ErrorCode::InvalidHandle, "session is closed");
    core_->ensure_open();
    {
        std::lock_guard lock(core_->state_mutex);
        auto it = core_->libraries.find(name);
        if (it != core_->libraries.end()) return it->second;
    }
    auto ack = expect_reply<wire::LibraryAck>(core_->request(wire::RegisterLibrary{name, path}), "REGISTER_LIBRARY");
    std::lock_guard lock(core_->state_mutex);
    core_->libraries[name] = ack.lib_id;
    return ack.lib_id;
}

TaskOutput Session::run(std::uint16_t lib_id, const std::string& routine, std::span<const MatrixHandle> inputs,
                        const ParamMap& params) {
    if (!core_) throw Error(ErrorCode::InvalidHandle, "session is closed");
    core_->ensure_open();
    wire::RunTask req{lib_id, routine, {}, params};
    for (const auto& h : inputs) {
        check(h);
        req.inputs.push_back(h.id());
    }
    auto result = expect_reply<wire::TaskResult>(core_->request(req), "RUN_TASK");
    TaskOutput out;
    out.scalars = std::move(result.scalars);
    std::lock_guard lock(core_->state_mutex);
    for (auto& info : result.outputs) {
        MatrixHandle h;
        h.state_ = std::make_shared<MatrixHandle::State>();
        h.state_->id = info.matrix_id;
        h.state_->rows = info.rows;
        h.state_->cols = info.cols;
        h.state_->layout = std::move(info.entries);
        h.state_->owner = core_.get();
        core_->handles.push_back(h.state_);
        out.outputs.push_back(std::move(h));
    }
    return out;
}

void Session::close() noexcept {
    if (!core_) return;
    {
        std::lock_guard lock(core_->state_mutex);
        if (core_->closed) return;
        core_->closed = true;
        for (auto& w : core_->handles) {
            if (auto s = w.lock()) s->valid = false;
        }
        core_->handles.clear();
    }
    try {
        core_->request(wire::CloseSession{});
    } catch (...) {
    }
    core_->driver->shutdown();
    for (auto& w : core_->workers) w->channel->shutdown();
}

Builtin::Builtin(Session& session) : session_(&session), lib_id_(session.load_library("builtin")) {}

namespace {

template <class T>
T scalar(const ParamMap& m, const std::string& key) {
    auto v = m.get<T>(key);
    if (!v) throw Error(ErrorCode::Protocol, "task result lacks scalar '" + key + "'");
    return *v;
}

} // namespace

Builtin::Qr Builtin::qr(const MatrixHandle& a) {
    auto out = session_->run(lib_id_, "tsqr", std::span(&a, 1));
    return {out.outputs.at(0), out.outputs.at(1)};
}

bool Builtin::Cg::all_converged() const {
    return std::all_of(converged.begin(), converged.end(), [](bool b) { return b; });
}

Builtin::Cg Builtin::cg(const MatrixHandle& x, const MatrixHandle& y, double lambda, double tol,
                        std::int64_t max_iter) {
    const MatrixHandle in[] = {x, y};
    ParamMap p;
    p.set("lambda", lambda).set("tol", tol).set("max_iter", max_iter);
    auto out = session_->run(lib_id_, "cg_solve", in, p);
    Cg cg;
    cg.w = out.outputs.at(0);
    const auto cols = scalar<std::int64_t>(out.scalars, "columns");
    for (std::int64_t j = 0; j < cols; ++j) {
        const auto s = std::to_string(j);
        cg.iterations.push_back(scalar<std::int64_t>(out.scalars, "iterations." + s));
        cg.residuals.push_back(scalar<double>(out.scalars, "residual." + s));
        cg.converged.push_back(scalar<bool>(out.scalars, "converged." + s));
    }
    cg.iter_time_mean_s = scalar<double>(out.scalars, "iter_time_mean_s");
    cg.iter_time_std_s = scalar<double>(out.scalars, "iter_time_std_s");
    return cg;
}

Builtin::Svd Builtin::svd(const MatrixHandle& a, std::int64_t k, double tol, std::int64_t max_subspace,
                          std::int64_t seed) {
    ParamMap p;
    p.set("k", k).set("tol", tol).set("max_subspace", max_subspace).set("seed", seed);
    auto out = session_->run(lib_id_, "truncated_svd", std::span(&a, 1), p);
    Svd svd;
    svd.u = out.outputs.at(0);
    svd.v = out.outputs.at(1);
    const auto kk = scalar<std::int64_t>(out.scalars, "k");
    for (std::int64_t i = 0; i < kk; ++i) {
        const auto s = std::to_string(i);
        svd.s.push_back(scalar<double>(out.scalars, "sigma." + s));
        svd.unreliable.push_back(scalar<bool>(out.scalars, "unreliable." + s));
    }
    svd.steps = scalar<std::int64_t>(out.scalars, "steps");
    return svd;
}

MatrixHandle Builtin::random_features(const MatrixHandle& x, std::int64_t features, double sigma,
                                      std::int64_t seed) {
    ParamMap p;
    p.set("features", features).set("sigma", sigma).set("seed", seed);
    return session_->run(lib_id_, "random_features", std::span(&x, 1), p).outputs.at(0);
}

MatrixHandle Builtin::load(const std::string& path, std::int64_t replicas) {
    ParamMap p;
    p.set("path", path).set("replicas", replicas);
    return session_->run(lib_id_, "load_bin", {}, p).outputs.at(0);
}

} // namespace alch::client
