#include "alch/alch.h"

#include <cstring>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "binfile.hpp"
#include "client.hpp"
#include "datagen.hpp"
#include "error.hpp"
#include "log.hpp"
#include "server.hpp"

using namespace alch;

struct alch_server {
    std::unique_ptr<server::Server> impl;
};

struct alch_session {
    client::Session impl;
};

struct alch_matrix {
    client::MatrixHandle handle;
};

struct alch_params {
    ParamMap map;
};

struct alch_result {
    std::vector<client::MatrixHandle> outputs;
    std::vector<bool> taken;
    ParamMap scalars;
};

namespace {

thread_local std::string g_last_error;

alch_status fail(alch_status status, const std::string& message) {
    g_last_error = message;
    return status;
}

template <class Fn>
alch_status guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return ALCH_OK;
    } catch (const Error& e) {
        return fail(static_cast<alch_status>(e.code()), e.what());
    } catch (const std::bad_alloc&) {
        return fail(ALCH_RESOURCE_EXHAUSTED, "out of memory");
    } catch (const std::exception& e) {
        return fail(ALCH_INTERNAL, e.what());
    }
}

#define ALCH_REQUIRE(cond, what)                                                                                  \
    do {                                                                                                          \
        if (!(cond)) return fail(ALCH_INVALID_ARGUMENT, what);                                                    \
    } while (0)

template <class T>
alch_status get_scalar(const alch_result* result, const char* key, T* out) {
    ALCH_REQUIRE(result && key && out, "result, key or out is NULL");
    const ParamValue* v = result->scalars.find(key);
    if (v == nullptr) return fail(ALCH_NOT_FOUND, std::string("no scalar '") + key + "'");
    const T* t = std::get_if<T>(v);
    if (t == nullptr) return fail(ALCH_NOT_FOUND, std::string("scalar '") + key + "' has another type");
    *out = *t;
    g_last_error.clear();
    return ALCH_OK;
}

} // namespace

extern "C" {

ALCH_API const char* alch_last_error(void) { return g_last_error.c_str(); }

ALCH_API const char* alch_status_name(alch_status status) {
    if (status == ALCH_OK) return "ok";
    return error_code_name(static_cast<ErrorCode>(status));
}

ALCH_API alch_status alch_set_log_level(const char* level) {
    ALCH_REQUIRE(level, "level is NULL");
    return guarded([&] { set_log_level(level); });
}

ALCH_API alch_status alch_server_start(const char* host, uint16_t port, uint16_t workers, uint64_t memory_budget,
                                       alch_server** out) {
    ALCH_REQUIRE(out, "out is NULL");
    ALCH_REQUIRE(workers >= 1, "workers must be >= 1");
    return guarded([&] {
        server::ServerOptions o;
        if (host != nullptr) o.host = host;
        o.port = port;
        o.workers = workers;
        if (memory_budget != 0) o.memory_budget = memory_budget;
        auto s = std::make_unique<alch_server>();
        s->impl = std::make_unique<server::Server>(o);
        *out = s.release();
    });
}

ALCH_API uint16_t alch_server_port(const alch_server* server) { return server ? server->impl->port() : 0; }

ALCH_API size_t alch_server_live_matrices(const alch_server* server) {
    return server ? server->impl->live_matrices() : 0;
}

ALCH_API void alch_server_free(alch_server* server) {
    if (server == nullptr) return;
    server->impl->stop();
    delete server;
}

ALCH_API alch_status alch_connect(const char* host, uint16_t port, uint16_t workers, uint32_t batch_rows,
                                  int timeout_ms, alch_session** out) {
    ALCH_REQUIRE(out, "out is NULL");
    return guarded([&] {
        client::Options o;
        if (host != nullptr) o.host = host;
        o.port = port;
        o.workers = workers;
        if (batch_rows != 0) o.batch_rows = batch_rows;
        o.timeout_ms = timeout_ms;
        *out = new alch_session{client::Session::connect(o)};
    });
}

ALCH_API uint32_t alch_session_id(const alch_session* session) { return session ? session->impl.id() : 0; }

ALCH_API size_t alch_session_worker_count(const alch_session* session) {
    return session ? session->impl.worker_count() : 0;
}

ALCH_API void alch_session_close(alch_session* session) {
    if (session != nullptr) session->impl.close();
}

ALCH_API void alch_session_free(alch_session* session) { delete session; }

ALCH_API alch_status alch_send_matrix(alch_session* session, uint64_t rows, uint64_t cols, const uint64_t* indices,
                                      const double* values, alch_matrix** out) {
    ALCH_REQUIRE(session && out, "session or out is NULL");
    ALCH_REQUIRE(values || rows * cols == 0, "values is NULL");
    return guarded([&] {
        client::LocalMatrix m;
        if (indices == nullptr) {
            m = client::LocalMatrix::from_dense(rows, cols, std::span<const double>(values, rows * cols));
        } else {
            m = client::LocalMatrix(rows, cols);
            for (uint64_t i = 0; i < rows; ++i) m.set_row(indices[i], std::span<const double>(values + i * cols, cols));
        }
        auto h = session->impl.send_matrix(m);
        *out = new alch_matrix{std::move(h)};
    });
}

ALCH_API uint64_t alch_matrix_id(const alch_matrix* matrix) { return matrix ? matrix->handle.id() : 0; }

ALCH_API void alch_matrix_dims(const alch_matrix* matrix, uint64_t* rows, uint64_t* cols) {
    if (rows != nullptr) *rows = matrix ? matrix->handle.rows() : 0;
    if (cols != nullptr) *cols = matrix ? matrix->handle.cols() : 0;
}

ALCH_API alch_status alch_fetch_matrix(alch_session* session, const alch_matrix* matrix, double* out,
                                       size_t capacity) {
    ALCH_REQUIRE(session && matrix && out, "session, matrix or out is NULL");
    const auto need = matrix->handle.rows() * matrix->handle.cols();
    if (capacity < need) {
        return fail(ALCH_INVALID_ARGUMENT,
                    "buffer holds " + std::to_string(capacity) + " values, need " + std::to_string(need));
    }
    return guarded([&] {
        auto dense = session->impl.fetch_dense(matrix->handle);
        std::memcpy(out, dense.data(), dense.size() * sizeof(double));
    });
}

ALCH_API alch_status alch_release_matrix(alch_session* session, alch_matrix* matrix) {
    ALCH_REQUIRE(session && matrix, "session or matrix is NULL");
    return guarded([&] { session->impl.release(matrix->handle); });
}

ALCH_API void alch_matrix_free(alch_matrix* matrix) { delete matrix; }

ALCH_API alch_params* alch_params_new(void) { return new (std::nothrow) alch_params; }

ALCH_API void alch_params_free(alch_params* params) { delete params; }

ALCH_API alch_status alch_params_set_f64(alch_params* params, const char* key, double value) {
    ALCH_REQUIRE(params && key, "params or key is NULL");
    return guarded([&] { params->map.set(key, value); });
}

ALCH_API alch_status alch_params_set_i64(alch_params* params, const char* key, int64_t value) {
    ALCH_REQUIRE(params && key, "params or key is NULL");
    return guarded([&] { params->map.set(key, static_cast<std::int64_t>(value)); });
}

ALCH_API alch_status alch_params_set_str(alch_params* params, const char* key, const char* value) {
    ALCH_REQUIRE(params && key && value, "params, key or value is NULL");
    return guarded([&] { params->map.set(key, std::string(value)); });
}

ALCH_API alch_status alch_params_set_bool(alch_params* params, const char* key, int value) {
    ALCH_REQUIRE(params && key, "params or key is NULL");
    return guarded([&] { params->map.set(key, value != 0); });
}

ALCH_API alch_status alch_run(alch_session* session, const char* library, const char* routine,
                              const alch_matrix* const* inputs, size_t input_count, const alch_params* params,
                              alch_result** out) {
    ALCH_REQUIRE(session && library && routine && out, "session, library, routine or out is NULL");
    ALCH_REQUIRE(inputs || input_count == 0, "inputs is NULL");
    return guarded([&] {
        std::vector<client::MatrixHandle> in;
        for (size_t i = 0; i < input_count; ++i) {
            if (inputs[i] == nullptr) throw Error(ErrorCode::InvalidArgument, "input matrix is NULL");
            in.push_back(inputs[i]->handle);
        }
        const auto lib = session->impl.load_library(library);
        auto res = session->impl.run(lib, routine, in, params ? params->map : ParamMap{});
        auto r = std::make_unique<alch_result>();
        r->taken.assign(res.outputs.size(), false);
        r->outputs = std::move(res.outputs);
        r->scalars = std::move(res.scalars);
        *out = r.release();
    });
}

ALCH_API size_t alch_result_output_count(const alch_result* result) { return result ? result->outputs.size() : 0; }

ALCH_API alch_status alch_result_take_output(alch_result* result, size_t index, alch_matrix** out) {
    ALCH_REQUIRE(result && out, "result or out is NULL");
    if (index >= result->outputs.size()) {
        return fail(ALCH_NOT_FOUND, "result has " + std::to_string(result->outputs.size()) + " outputs");
    }
    if (result->taken[index]) return fail(ALCH_INVALID_HANDLE, "output already taken");
    return guarded([&] {
        *out = new alch_matrix{result->outputs[index]};
        result->taken[index] = true;
    });
}

ALCH_API alch_status alch_result_get_f64(const alch_result* result, const char* key, double* out) {
    return get_scalar(result, key, out);
}

ALCH_API alch_status alch_result_get_i64(const alch_result* result, const char* key, int64_t* out) {
    std::int64_t v = 0;
    auto st = get_scalar(result, key, &v);
    if (st == ALCH_OK) *out = v;
    return st;
}

ALCH_API alch_status alch_result_get_bool(const alch_result* result, const char* key, int* out) {
    bool v = false;
    auto st = get_scalar(result, key, &v);
    if (st == ALCH_OK) *out = v ? 1 : 0;
    return st;
}

ALCH_API alch_status alch_result_get_str(const alch_result* result, const char* key, const char** out) {
    ALCH_REQUIRE(result && key && out, "result, key or out is NULL");
    const ParamValue* v = result->scalars.find(key);
    const auto* s = v ? std::get_if<std::string>(v) : nullptr;
    if (s == nullptr) return fail(ALCH_NOT_FOUND, std::string("no string scalar '") + key + "'");
    *out = s->c_str();
    return ALCH_OK;
}

ALCH_API void alch_result_free(alch_result* result) { delete result; }

ALCH_API alch_status alch_binfile_write(const char* path, uint64_t rows, uint64_t cols, const double* values) {
    ALCH_REQUIRE(path && (values || rows * cols == 0), "path or values is NULL");
    return guarded([&] { binfile::write(path, rows, cols, std::span<const double>(values, rows * cols)); });
}

ALCH_API alch_status alch_binfile_info(const char* path, uint64_t* rows, uint64_t* cols) {
    ALCH_REQUIRE(path && rows && cols, "path, rows or cols is NULL");
    return guarded([&] {
        const auto h = binfile::read_header(path);
        *rows = h.rows;
        *cols = h.cols;
    });
}

ALCH_API alch_status alch_binfile_read(const char* path, double* out, size_t capacity) {
    ALCH_REQUIRE(path && out, "path or out is NULL");
    return guarded([&] {
        const auto h = binfile::read_header(path);
        if (capacity < h.rows * h.cols) {
            throw Error(ErrorCode::InvalidArgument, "buffer holds " + std::to_string(capacity) + " values, need " +
                                                        std::to_string(h.rows * h.cols));
        }
        const auto data = binfile::read_all(path);
        std::memcpy(out, data.data(), data.size() * sizeof(double));
    });
}

ALCH_API alch_status alch_datagen(const char* kind, uint64_t rows, uint64_t cols, uint64_t seed, uint64_t rank,
                                  uint64_t labels, const char* path) {
    ALCH_REQUIRE(kind && path, "kind or path is NULL");
    return guarded([&] {
        datagen::Spec spec;
        spec.kind = datagen::parse_kind(kind);
        spec.rows = rows;
        spec.cols = cols;
        spec.seed = seed;
        if (rank != 0) spec.rank = rank;
        if (labels != 0) spec.labels = labels;
        datagen::write(spec, path);
    });
}

} // extern "C"
