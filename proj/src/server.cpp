#include "server.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <latch>
#include <list>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "collective.hpp"
#include "error.hpp"
#include "log.hpp"
#include "matrix_store.hpp"
#include "net.hpp"
#include "routines.hpp"
#include "wire.hpp"

namespace alch::server {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

wire::ErrorMsg to_wire(const Error& e) {
    std::string msg = e.what();
    if (msg.size() > 60000) msg.resize(60000);
    auto code = static_cast<std::uint16_t>(e.code());
    if (code >= 100) code = static_cast<std::uint16_t>(ErrorCode::Internal);
    return {code, msg};
}

wire::MatrixInfo info_of(const store::MatrixRecord& rec) {
    wire::MatrixInfo info{rec.id, rec.rows, rec.cols, {}};
    for (const auto& r : rec.layout.ranges) info.entries.push_back({r.worker_id, r.begin, r.end});
    return info;
}

/// Handler threads for accepted connections; shut down and joined together.
class ConnectionSet {
  public:
    void spawn(std::shared_ptr<net::Channel> channel, std::function<void(net::Channel&)> handler) {
        std::lock_guard lock(mutex_);
        reap_locked();
        auto done = std::make_shared<std::atomic<bool>>(false);
        Entry& e = entries_.emplace_back();
        e.channel = channel;
        e.done = done;
        e.thread = std::thread([channel, done, handler = std::move(handler)] {
            try {
                handler(*channel);
            } catch (const std::exception& ex) {
                spdlog::debug("connection handler ended: {}", ex.what());
            }
            channel->shutdown();
            done->store(true);
        });
    }

    void shutdown_all() {
        std::lock_guard lock(mutex_);
        for (auto& e : entries_) e.channel->shutdown();
    }

    void join_all() {
        std::list<Entry> entries;
        {
            std::lock_guard lock(mutex_);
            entries.swap(entries_);
        }
        for (auto& e : entries) {
            if (e.thread.joinable()) e.thread.join();
        }
    }

  private:
    struct Entry {
        std::thread thread;
        std::shared_ptr<net::Channel> channel;
        std::shared_ptr<std::atomic<bool>> done;
    };

    void reap_locked() {
        for (auto it = entries_.begin(); it != entries_.end();) {
            if (it->done->load()) {
                it->thread.join();
                it = entries_.erase(it);
            } else {
                ++it;
            }
        }
    }

    std::mutex mutex_;
    std::list<Entry> entries_;
};

struct ShardSlot {
    std::mutex mutex;
    store::Shard shard;
    explicit ShardSlot(store::Shard s) : shard(std::move(s)) {}
};

struct SessionState {
    std::uint32_t id = 0;
    std::vector<std::uint16_t> workers;
    std::set<std::uint16_t> libraries;
};

class Core;

class Worker {
  public:
    Worker(Core& core, std::uint16_t id, const std::string& host);

    std::uint16_t id() const noexcept { return id_; }
    std::uint16_t port() const noexcept { return listener_.port(); }

    void start();
    void shutdown_io();
    void join_io();
    void stop_jobs();

    void allocate(std::uint64_t matrix, std::uint64_t cols, std::uint64_t begin, std::uint64_t end);
    void install(store::Shard shard);
    void drop(std::uint64_t matrix);
    std::shared_ptr<ShardSlot> find(std::uint64_t matrix) const;
    std::uint64_t missing(std::uint64_t matrix) const;
    void enqueue(std::function<void()> job);

  private:
    void accept_loop();
    void job_loop();
    void serve(net::Channel& ch);

    Core& core_;
    std::uint16_t id_;
    net::Listener listener_;
    std::thread accept_thread_;
    ConnectionSet connections_;

    mutable std::mutex shards_mutex_;
    std::map<std::uint64_t, std::shared_ptr<ShardSlot>> shards_;

    std::mutex jobs_mutex_;
    std::condition_variable jobs_cv_;
    std::deque<std::function<void()>> jobs_;
    bool jobs_stopping_ = false;
    std::thread job_thread_;
};

class Core {
  public:
    explicit Core(const ServerOptions& options)
        : options_(options), registry_(options.memory_budget), listener_(options.host, options.port) {
        if (options.workers == 0) throw Error(ErrorCode::InvalidArgument, "worker count must be >= 1");
        for (std::uint16_t w = 0; w < options.workers; ++w) {
            workers_.push_back(std::make_unique<Worker>(*this, w, options.host));
        }
        for (auto& w : workers_) w->start();
        accept_thread_ = std::thread([this] { accept_loop(); });
        spdlog::info("server listening host={} port={} workers={} memory_budget={}", options.host,
                     listener_.port(), options.workers, options.memory_budget);
    }

    ~Core() { stop(); }

    void stop() {
        if (stopped_.exchange(true)) return;
        listener_.shutdown();
        connections_.shutdown_all();
        for (auto& w : workers_) w->shutdown_io();
        if (accept_thread_.joinable()) accept_thread_.join();
        connections_.join_all();
        for (auto& w : workers_) w->join_io();
        for (auto& w : workers_) w->stop_jobs();
        spdlog::info("server stopped port={}", listener_.port());
    }

    std::uint16_t port() const noexcept { return listener_.port(); }
    const std::string& host() const noexcept { return options_.host; }
    std::uint16_t worker_count() const noexcept { return options_.workers; }
    store::Registry& registry() noexcept { return registry_; }

    bool session_active(std::uint32_t id) const {
        std::lock_guard lock(sessions_mutex_);
        return sessions_.contains(id);
    }

    std::size_t active_sessions() const {
        std::lock_guard lock(sessions_mutex_);
        return sessions_.size();
    }

  private:
    void accept_loop() {
        while (auto sock = listener_.accept()) {
            if (stopped_) break;
            auto channel = std::make_shared<net::Channel>(std::move(*sock));
            connections_.spawn(channel, [this](net::Channel& ch) { serve_client(ch); });
        }
    }

    std::shared_ptr<SessionState> open_session(std::uint16_t requested) {
        auto s = std::make_shared<SessionState>();
        for (std::uint16_t w = 0; w < requested; ++w) s->workers.push_back(w);
        std::lock_guard lock(sessions_mutex_);
        s->id = next_session_++;
        sessions_.emplace(s->id, s);
        return s;
    }

    void close_session(SessionState& s) {
        {
            std::lock_guard lock(sessions_mutex_);
            sessions_.erase(s.id);
        }
        const auto ids = registry_.live_ids(s.id);
        for (auto id : ids) release(s, id);
        spdlog::info("session closed session={} released={}", s.id, ids.size());
    }

    void release(SessionState& s, std::uint64_t id) {
        const auto rec = registry_.get(s.id, id);
        if (registry_.release(s.id, id)) {
            for (const auto& r : rec.layout.ranges) workers_[r.worker_id]->drop(id);
        }
    }

    void serve_client(net::Channel& ch) {
        std::shared_ptr<SessionState> session;
        try {
            auto first = ch.receive();
            if (!first) return;
            const auto* hs = std::get_if<wire::Handshake>(&first->message);
            if (hs == nullptr) {
                ch.send(wire::ErrorMsg{static_cast<std::uint16_t>(ErrorCode::InvalidRequest),
                                       "expected HANDSHAKE"},
                        0);
                return;
            }
            if (hs->protocol_version != wire::kProtocolVersion) {
                ch.send(wire::ErrorMsg{static_cast<std::uint16_t>(ErrorCode::VersionMismatch),
                                       "protocol version " + std::to_string(hs->protocol_version) +
                                           " not supported; server speaks " +
                                           std::to_string(wire::kProtocolVersion)},
                        0);
                return;
            }
            if (hs->requested_workers == 0) {
                ch.send(wire::ErrorMsg{static_cast<std::uint16_t>(ErrorCode::InvalidRequest),
                                       "requested_workers must be >= 1"},
                        0);
                return;
            }
            if (hs->requested_workers > workers_.size()) {
                ch.send(wire::ErrorMsg{static_cast<std::uint16_t>(ErrorCode::InsufficientWorkers),
                                       "requested " + std::to_string(hs->requested_workers) +
                                           " workers, pool has " + std::to_string(workers_.size())},
                        0);
                return;
            }
            session = open_session(hs->requested_workers);
            wire::HandshakeAck ack{session->id, {}};
            for (auto w : session->workers) {
                ack.workers.push_back({w, options_.host + ":" + std::to_string(workers_[w]->port())});
            }
            ch.send(ack, session->id);
            spdlog::info("session opened session={} workers={}", session->id, session->workers.size());

            while (auto frame = ch.receive()) {
                bool close = false;
                wire::Message reply;
                try {
                    reply = handle(*session, frame->message, close);
                } catch (const Error& e) {
                    reply = to_wire(e);
                } catch (const std::bad_alloc&) {
                    reply = wire::ErrorMsg{static_cast<std::uint16_t>(ErrorCode::ResourceExhausted),
                                           "out of memory"};
                } catch (const std::exception& e) {
                    reply = wire::ErrorMsg{static_cast<std::uint16_t>(ErrorCode::Internal), e.what()};
                }
                ch.send(reply, session->id);
                if (close) break;
            }
        } catch (const Error& e) {
            if (e.code() == ErrorCode::Protocol) {
                try {
                    ch.send(to_wire(e), session ? session->id : 0);
                } catch (...) {
                }
            }
            spdlog::warn("driver connection dropped session={}: {}", session ? session->id : 0, e.what());
        }
        if (session) close_session(*session);
    }

    wire::Message handle(SessionState& s, const wire::Message& msg, bool& close) {
        return std::visit(
            overloaded{
                [&](const wire::RegisterLibrary& m) -> wire::Message {
                    const auto& libs = routines::libraries();
                    for (std::size_t i = 0; i < libs.size(); ++i) {
                        if (libs[i].name != m.name) continue;
                        if (!m.path.empty() && m.path != libs[i].path) {
                            throw Error(ErrorCode::UnknownLibrary,
                                        "library '" + m.name + "' is not available at path '" + m.path + "'");
                        }
                        const auto id = static_cast<std::uint16_t>(i + 1);
                        s.libraries.insert(id);
                        return wire::LibraryAck{id};
                    }
                    throw Error(ErrorCode::UnknownLibrary, "no library named '" + m.name + "'");
                },
                [&](const wire::CreateMatrix& m) -> wire::Message { return create_matrix(s, m); },
                [&](const wire::SendComplete& m) -> wire::Message { return finalize(s, m.matrix_id); },
                [&](const wire::RunTask& m) -> wire::Message { return run_task(s, m); },
                [&](const wire::ReleaseMatrix& m) -> wire::Message {
                    release(s, m.matrix_id);
                    return m;
                },
                [&](const wire::CloseSession& m) -> wire::Message {
                    close = true;
                    return m;
                },
                [&](const auto& m) -> wire::Message {
                    throw Error(ErrorCode::InvalidRequest,
                                std::string("unexpected ") + wire::type_name(wire::type_of(m)) +
                                    " on the driver connection");
                },
            },
            msg);
    }

    wire::MatrixInfo create_matrix(SessionState& s, const wire::CreateMatrix& m) {
        const auto rec = registry_.create(s.id, m.rows, m.cols, s.workers);
        try {
            for (const auto& r : rec.layout.ranges) workers_[r.worker_id]->allocate(rec.id, rec.cols, r.begin, r.end);
        } catch (const std::bad_alloc&) {
            release(s, rec.id);
            throw Error(ErrorCode::ResourceExhausted, "shard allocation failed for " +
                                                          std::to_string(rec.bytes()) + " bytes");
        }
        return info_of(rec);
    }

    wire::Message finalize(SessionState& s, std::uint64_t id) {
        const auto rec = registry_.get(s.id, id);
        if (rec.state == store::MatrixState::Ready) return wire::MatrixReady{id};
        std::uint64_t missing = 0;
        for (const auto& r : rec.layout.ranges) missing += workers_[r.worker_id]->missing(id);
        if (missing != 0) {
            throw Error(ErrorCode::IncompleteMatrix,
                        std::to_string(missing) + (missing == 1 ? " row missing" : " rows missing"));
        }
        registry_.mark_ready(id);
        spdlog::info("matrix ready session={} matrix={} shape={}x{} bytes={}", s.id, id, rec.rows, rec.cols,
                     rec.bytes());
        return wire::MatrixReady{id};
    }

    wire::TaskResult run_task(SessionState& s, const wire::RunTask& req) {
        if (!s.libraries.contains(req.lib_id)) {
            throw Error(ErrorCode::UnknownLibrary,
                        "library id " + std::to_string(req.lib_id) + " not registered in this session");
        }
        const auto& lib = routines::libraries()[req.lib_id - 1];
        const auto* routine = lib.find(req.routine);
        if (routine == nullptr) {
            throw Error(ErrorCode::UnknownRoutine, "library '" + lib.name + "' has no routine '" + req.routine + "'");
        }
        if (req.inputs.size() != routine->input_count) {
            throw Error(ErrorCode::SchemaViolation, routine->name + " takes " +
                                                        std::to_string(routine->input_count) + " inputs, got " +
                                                        std::to_string(req.inputs.size()));
        }
        std::vector<store::MatrixRecord> inputs;
        std::uint64_t input_bytes = 0;
        std::ostringstream dims;
        for (auto id : req.inputs) {
            auto rec = registry_.get(s.id, id);
            if (rec.state != store::MatrixState::Ready) {
                throw Error(ErrorCode::IncompleteMatrix, "matrix " + std::to_string(id) + " is not ready");
            }
            input_bytes += rec.bytes();
            dims << (inputs.empty() ? "" : ",") << rec.rows << "x" << rec.cols;
            inputs.push_back(std::move(rec));
        }
        const auto params = routines::resolve_params(*routine, req.params);

        const int p = static_cast<int>(s.workers.size());
        Communicator comm(p);
        struct Outcome {
            std::vector<routines::OutputBlock> outputs;
            ParamMap scalars;
            std::exception_ptr error;
        };
        std::vector<Outcome> outcomes(static_cast<std::size_t>(p));
        std::latch done(p);
        const auto available = registry_.bytes_available();

        const auto t0 = std::chrono::steady_clock::now();
        {
            std::lock_guard lock(dispatch_mutex_);
            for (int r = 0; r < p; ++r) {
                Worker& worker = *workers_[s.workers[static_cast<std::size_t>(r)]];
                worker.enqueue([&, r] {
                    auto& out = outcomes[static_cast<std::size_t>(r)];
                    try {
                        std::vector<std::shared_ptr<ShardSlot>> held;
                        routines::TaskContext ctx{Comm(comm, r), {}, params, available, {}, {}};
                        for (const auto& rec : inputs) {
                            auto slot = worker.find(rec.id);
                            if (!slot) throw Error(ErrorCode::Internal, "shard missing on worker");
                            const auto& sh = slot->shard;
                            ctx.inputs.push_back({rec.rows, rec.cols, sh.row_start(), sh.local_rows(), sh.data()});
                            held.push_back(std::move(slot));
                        }
                        routine->run(ctx);
                        out.outputs = std::move(ctx.outputs);
                        out.scalars = std::move(ctx.scalars);
                    } catch (const CollectiveAborted&) {
                        // another participant failed first
                    } catch (...) {
                        out.error = std::current_exception();
                        comm.abort();
                    }
                    done.count_down();
                });
            }
        }
        done.wait();
        const double compute_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        for (auto& o : outcomes) {
            if (!o.error) continue;
            try {
                std::rethrow_exception(o.error);
            } catch (const Error&) {
                throw;
            } catch (const std::bad_alloc&) {
                throw Error(ErrorCode::ResourceExhausted, routine->name + ": out of memory");
            } catch (const std::exception& e) {
                throw Error(ErrorCode::Internal, routine->name + ": " + e.what());
            }
        }
        if (comm.aborted()) throw Error(ErrorCode::Internal, routine->name + ": task aborted");

        wire::TaskResult result;
        result.scalars = outcomes[0].scalars;
        std::vector<std::uint64_t> created;
        std::uint64_t output_bytes = 0;
        try {
            const auto count = outcomes[0].outputs.size();
            for (const auto& o : outcomes) {
                if (o.outputs.size() != count) throw Error(ErrorCode::Internal, "participants disagree on outputs");
            }
            for (std::size_t i = 0; i < count; ++i) {
                const auto rows = outcomes[0].outputs[i].rows;
                const auto cols = outcomes[0].outputs[i].cols;
                const auto rec = registry_.create(s.id, rows, cols, s.workers);
                created.push_back(rec.id);
                for (int r = 0; r < p; ++r) {
                    auto& block = outcomes[static_cast<std::size_t>(r)].outputs[i];
                    const auto& range = rec.layout.ranges[static_cast<std::size_t>(r)];
                    if (block.rows != rows || block.cols != cols || block.local.size() != range.size() * cols) {
                        throw Error(ErrorCode::Internal, routine->name + ": output block shape mismatch");
                    }
                    workers_[range.worker_id]->install(
                        store::Shard::filled(rec.id, cols, range.begin, std::move(block.local)));
                }
                registry_.mark_ready(rec.id);
                output_bytes += rec.bytes();
                result.outputs.push_back(info_of(registry_.get(s.id, rec.id)));
            }
        } catch (...) {
            for (auto id : created) release(s, id);
            throw;
        }

        std::ostringstream scalars;
        for (const auto& [key, value] : result.scalars.entries()) {
            if (const auto* d = std::get_if<double>(&value)) {
                scalars << ' ' << key << '=' << format_double(*d);
            }
        }
        spdlog::info("task session={} routine={} inputs={} input_bytes={} output_bytes={} compute_s={:.6f}{}", s.id,
                     routine->name, dims.str(), input_bytes, output_bytes, compute_s, scalars.str());
        return result;
    }

    ServerOptions options_;
    store::Registry registry_;
    net::Listener listener_;
    std::vector<std::unique_ptr<Worker>> workers_;
    std::thread accept_thread_;
    ConnectionSet connections_;
    std::atomic<bool> stopped_{false};

    mutable std::mutex sessions_mutex_;
    std::map<std::uint32_t, std::shared_ptr<SessionState>> sessions_;
    std::uint32_t next_session_ = 1;

    // Tasks are queued on all of their workers under this lock, so every
    // worker sees tasks in the same order and collectives cannot cross.
    std::mutex dispatch_mutex_;
};

Worker::Worker(Core& core, std::uint16_t id, const std::string& host)
    : core_(core), id_(id), listener_(host, 0) {}

void Worker::start() {
    job_thread_ = std::thread([this] { job_loop(); });
    accept_thread_ = std::thread([this] { accept_loop(); });
}

void Worker::shutdown_io() {
    listener_.shutdown();
    connections_.shutdown_all();
}

void Worker::join_io() {
    if (accept_thread_.joinable()) accept_thread_.join();
    connections_.join_all();
}

void Worker::stop_jobs() {
    {
        std::lock_guard lock(jobs_mutex_);
        jobs_stopping_ = true;
    }
    jobs_cv_.notify_all();
    if (job_thread_.joinable()) job_thread_.join();
}

void Worker::accept_loop() {
    while (auto sock = listener_.accept()) {
        auto channel = std::make_shared<net::Channel>(std::move(*sock));
        connections_.spawn(channel, [this](net::Channel& ch) { serve(ch); });
    }
}

void Worker::job_loop() {
    for (;;) {
        std::function<void()> job;
        {
            std::unique_lock lock(jobs_mutex_);
            jobs_cv_.wait(lock, [&] { return jobs_stopping_ || !jobs_.empty(); });
            if (jobs_.empty()) return;
            job = std::move(jobs_.front());
            jobs_.pop_front();
        }
        job();
    }
}

void Worker::enqueue(std::function<void()> job) {
    {
        std::lock_guard lock(jobs_mutex_);
        jobs_.push_back(std::move(job));
    }
    jobs_cv_.notify_one();
}

void Worker::allocate(std::uint64_t matrix, std::uint64_t cols, std::uint64_t begin, std::uint64_t end) {
    auto slot = std::make_shared<ShardSlot>(store::Shard(matrix, cols, begin, end));
    std::lock_guard lock(shards_mutex_);
    shards_[matrix] = std::move(slot);
}

void Worker::install(store::Shard shard) {
    const auto id = shard.matrix_id();
    auto slot = std::make_shared<ShardSlot>(std::move(shard));
    std::lock_guard lock(shards_mutex_);
    shards_[id] = std::move(slot);
}

void Worker::drop(std::uint64_t matrix) {
    std::lock_guard lock(shards_mutex_);
    shards_.erase(matrix);
}

std::shared_ptr<ShardSlot> Worker::find(std::uint64_t matrix) const {
    std::lock_guard lock(shards_mutex_);
    auto it = shards_.find(matrix);
    return it == shards_.end() ? nullptr : it->second;
}

std::uint64_t Worker::missing(std::uint64_t matrix) const {
    auto slot = find(matrix);
    if (!slot) return 0;
    std::lock_guard lock(slot->mutex);
    return slot->shard.missing();
}

void Worker::serve(net::Channel& ch) {
    std::vector<std::uint8_t> out;
    try {
        while (auto frame = ch.receive()) {
            const auto sid = frame->session_id;
            try {
                if (!core_.session_active(sid)) {
                    throw Error(ErrorCode::InvalidRequest, "unknown session " + std::to_string(sid));
                }
                if (auto* m = std::get_if<wire::SendRows>(&frame->message)) {
                    const auto rec = core_.registry().get(sid, m->matrix_id);
                    if (rec.state != store::MatrixState::Filling) {
                        throw Error(ErrorCode::InvalidRequest,
                                    "matrix " + std::to_string(m->matrix_id) + " no longer accepts rows");
                    }
                    auto slot = find(m->matrix_id);
                    if (!slot) {
                        throw Error(ErrorCode::RowOutOfRange, "worker " + std::to_string(id_) +
                                                                  " holds no rows of matrix " +
                                                                  std::to_string(m->matrix_id));
                    }
                    {
                        std::lock_guard lock(slot->mutex);
                        slot->shard.ingest(m->rows);
                    }
                    ch.send(wire::RowsAck{m->matrix_id, static_cast<std::uint32_t>(m->rows.size())}, sid);
                } else if (auto* f = std::get_if<wire::FetchRows>(&frame->message)) {
                    const auto rec = core_.registry().get(sid, f->matrix_id);
                    if (rec.state != store::MatrixState::Ready) {
                        throw Error(ErrorCode::IncompleteMatrix,
                                    "matrix " + std::to_string(f->matrix_id) + " is not ready");
                    }
                    auto slot = find(f->matrix_id);
                    if (!slot) {
                        throw Error(ErrorCode::RowOutOfRange, "worker " + std::to_string(id_) +
                                                                  " holds no rows of matrix " +
                                                                  std::to_string(f->matrix_id));
                    }
                    const auto& sh = slot->shard;
                    if (f->row_start < sh.row_start() || f->row_start + f->row_count > sh.row_end()) {
                        throw Error(ErrorCode::RowOutOfRange, "requested rows outside worker " +
                                                                  std::to_string(id_) + "'s range");
                    }
                    std::vector<std::uint64_t> indices(f->row_count);
                    for (std::uint32_t i = 0; i < f->row_count; ++i) indices[i] = f->row_start + i;
                    const double* base = sh.data().data() + (f->row_start - sh.row_start()) * sh.cols();
                    const auto cols = f->row_count == 0 ? 0 : sh.cols();
                    out.clear();
                    wire::encode_rows_into(out, wire::MsgType::RowsData, sid, f->matrix_id, cols, indices,
                                           [&](std::size_t i) { return base + i * cols; });
                    ch.send_bytes(out);
                    if (out.capacity() > (std::size_t{1} << 24)) out = {};
                } else {
                    throw Error(ErrorCode::InvalidRequest,
                                std::string("unexpected ") + wire::type_name(wire::type_of(frame->message)) +
                                    " on a worker connection");
                }
            } catch (const Error& e) {
                if (e.code() == ErrorCode::Connection) throw;
                ch.send(to_wire(e), sid);
            }
        }
    } catch (const Error& e) {
        if (e.code() == ErrorCode::Protocol) {
            try {
                ch.send(to_wire(e), 0);
            } catch (...) {
            }
        }
        spdlog::debug("worker {} connection dropped: {}", id_, e.what());
    }
}

} // namespace

struct Server::Impl {
    Core core;
    explicit Impl(const ServerOptions& o) : core(o) {}
};

Server::Server(const ServerOptions& options) : impl_(std::make_unique<Impl>(options)) {}
Server::~Server() = default;

std::uint16_t Server::port() const noexcept { return impl_->core.port(); }
const std::string& Server::host() const noexcept { return impl_->core.host(); }
std::uint16_t Server::worker_count() const noexcept { return impl_->core.worker_count(); }
void Server::stop() { impl_->core.stop(); }
std::size_t Server::active_sessions() const { return impl_->core.active_sessions(); }
std::size_t Server::live_matrices() const { return impl_->core.registry().live_count(); }
std::uint64_t Server::bytes_in_use() const { return impl_->core.registry().bytes_in_use(); }

} // namespace alch::server
