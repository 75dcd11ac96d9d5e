#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include <unistd.h>

#include "alch/alch.h"

namespace {

struct Server {
    alch_server* s = nullptr;
    explicit Server(std::uint16_t workers) { REQUIRE(alch_server_start("127.0.0.1", 0, workers, 0, &s) == ALCH_OK); }
    ~Server() { alch_server_free(s); }
    std::uint16_t port() const { return alch_server_port(s); }
};

struct Session {
    alch_session* s = nullptr;
    Session(const Server& srv, std::uint16_t workers) {
        REQUIRE(alch_connect("127.0.0.1", srv.port(), workers, 0, 0, &s) == ALCH_OK);
    }
    ~Session() { alch_session_free(s); }
};

} // namespace

TEST_CASE("status names and last error") {
    CHECK(std::string(alch_status_name(ALCH_OK)) == "ok");
    CHECK(std::string(alch_status_name(ALCH_INSUFFICIENT_WORKERS)) == "insufficient workers");
    CHECK(std::string(alch_status_name(ALCH_NOT_FOUND)) == "not found");
    CHECK(alch_set_log_level("loud") == ALCH_INVALID_ARGUMENT);
    CHECK(std::string(alch_last_error()).find("loud") != std::string::npos);
    CHECK(alch_set_log_level("warn") == ALCH_OK);
}

TEST_CASE("null arguments are rejected") {
    alch_server* s = nullptr;
    REQUIRE(alch_server_start(nullptr, 0, 1, 0, &s) == ALCH_OK);
    alch_server_free(s);
    CHECK(alch_server_start("127.0.0.1", 0, 1, 0, nullptr) == ALCH_INVALID_ARGUMENT);
    CHECK(alch_server_start("127.0.0.1", 0, 0, 0, &s) == ALCH_INVALID_ARGUMENT);
    CHECK(alch_send_matrix(nullptr, 1, 1, nullptr, nullptr, nullptr) == ALCH_INVALID_ARGUMENT);
    alch_server_free(nullptr);
    alch_session_free(nullptr);
    alch_matrix_free(nullptr);
    alch_result_free(nullptr);
    alch_params_free(nullptr);
}

TEST_CASE("connect errors carry server codes") {
    Server srv(2);
    alch_session* s = nullptr;
    CHECK(alch_connect("127.0.0.1", srv.port(), 3, 0, 0, &s) == ALCH_INSUFFICIENT_WORKERS);
    CHECK(std::string(alch_last_error()) == "requested 3 workers, pool has 2");
    CHECK(s == nullptr);
}

TEST_CASE("send with indices, fetch, release") {
    Server srv(3);
    Session sess(srv, 3);
    CHECK(alch_session_worker_count(sess.s) == 3);
    const std::vector<std::uint64_t> idx{4, 0, 3, 1, 2};
    const std::vector<double> vals{40, 41, 0, 1, 30, 31, 10, 11, 20, 21};
    alch_matrix* m = nullptr;
    REQUIRE(alch_send_matrix(sess.s, 5, 2, idx.data(), vals.data(), &m) == ALCH_OK);
    std::uint64_t rows = 0, cols = 0;
    alch_matrix_dims(m, &rows, &cols);
    CHECK(rows == 5);
    CHECK(cols == 2);
    CHECK(alch_server_live_matrices(srv.s) == 1);

    std::vector<double> out(10);
    CHECK(alch_fetch_matrix(sess.s, m, out.data(), 9) == ALCH_INVALID_ARGUMENT);
    REQUIRE(alch_fetch_matrix(sess.s, m, out.data(), out.size()) == ALCH_OK);
    CHECK(out == std::vector<double>{0, 1, 10, 11, 20, 21, 30, 31, 40, 41});

    REQUIRE(alch_release_matrix(sess.s, m) == ALCH_OK);
    CHECK(alch_release_matrix(sess.s, m) == ALCH_INVALID_HANDLE);
    CHECK(alch_fetch_matrix(sess.s, m, out.data(), out.size()) == ALCH_INVALID_HANDLE);
    alch_matrix_free(m);
    CHECK(alch_server_live_matrices(srv.s) == 0);

    const std::vector<std::uint64_t> dup{0, 0};
    CHECK(alch_send_matrix(sess.s, 2, 1, dup.data(), vals.data(), &m) == ALCH_INVALID_ARGUMENT);
    CHECK(alch_send_matrix(sess.s, 2, 0, nullptr, vals.data(), &m) == ALCH_INVALID_ARGUMENT);
}

TEST_CASE("run a routine and read scalars") {
    Server srv(2);
    Session sess(srv, 2);
    const std::vector<double> x{1, 0, 0, 0, 2, 0, 0, 0, 3};
    const std::vector<double> y{1, 1, 1};
    alch_matrix *hx = nullptr, *hy = nullptr;
    REQUIRE(alch_send_matrix(sess.s, 3, 3, nullptr, x.data(), &hx) == ALCH_OK);
    REQUIRE(alch_send_matrix(sess.s, 3, 1, nullptr, y.data(), &hy) == ALCH_OK);

    alch_params* p = alch_params_new();
    alch_params_set_f64(p, "lambda", 1e-2);
    alch_params_set_f64(p, "tol", 1e-14);
    const alch_matrix* inputs[] = {hx, hy};
    alch_result* r = nullptr;
    REQUIRE(alch_run(sess.s, "builtin", "cg_solve", inputs, 2, p, &r) == ALCH_OK);
    CHECK(alch_result_output_count(r) == 1);
    int conv = 0;
    CHECK(alch_result_get_bool(r, "converged", &conv) == ALCH_OK);
    CHECK(conv == 1);
    std::int64_t it = 0;
    CHECK(alch_result_get_i64(r, "iterations.0", &it) == ALCH_OK);
    CHECK(it >= 1);
    double d = 0;
    CHECK(alch_result_get_f64(r, "iterations.0", &d) == ALCH_NOT_FOUND);
    CHECK(alch_result_get_f64(r, "missing", &d) == ALCH_NOT_FOUND);

    alch_matrix* w = nullptr;
    REQUIRE(alch_result_take_output(r, 0, &w) == ALCH_OK);
    alch_matrix* again = nullptr;
    CHECK(alch_result_take_output(r, 0, &again) == ALCH_INVALID_HANDLE);
    CHECK(alch_result_take_output(r, 1, &again) == ALCH_NOT_FOUND);
    std::vector<double> wv(3);
    REQUIRE(alch_fetch_matrix(sess.s, w, wv.data(), 3) == ALCH_OK);
    CHECK(wv[0] == doctest::Approx(1.0 / 1.03).epsilon(1e-12));
    CHECK(wv[1] == doctest::Approx(2.0 / 4.03).epsilon(1e-12));
    CHECK(wv[2] == doctest::Approx(3.0 / 9.03).epsilon(1e-12));
    alch_result_free(r);

    alch_params_set_i64(p, "bogus", 1);
    CHECK(alch_run(sess.s, "builtin", "cg_solve", inputs, 2, p, &r) == ALCH_SCHEMA_VIOLATION);
    CHECK(alch_run(sess.s, "builtin", "nope", inputs, 2, nullptr, &r) == ALCH_UNKNOWN_ROUTINE);
    CHECK(alch_run(sess.s, "elsewhere", "cg_solve", inputs, 2, nullptr, &r) == ALCH_UNKNOWN_LIBRARY);
    alch_params_free(p);

    alch_session_close(sess.s);
    alch_session_close(sess.s);
    CHECK(alch_fetch_matrix(sess.s, w, wv.data(), 3) == ALCH_INVALID_HANDLE);
    alch_matrix_free(w);
    alch_matrix_free(hx);
    alch_matrix_free(hy);
}

TEST_CASE("matrix files and datagen") {
    const std::string path = "/tmp/alch-capi-" + std::to_string(::getpid()) + ".bin";
    const std::vector<double> v{1, 2, 3, 4, 5, 6};
    REQUIRE(alch_binfile_write(path.c_str(), 3, 2, v.data()) == ALCH_OK);
    std::uint64_t r = 0, c = 0;
    REQUIRE(alch_binfile_info(path.c_str(), &r, &c) == ALCH_OK);
    CHECK(r == 3);
    CHECK(c == 2);
    std::vector<double> back(6);
    CHECK(alch_binfile_read(path.c_str(), back.data(), 5) == ALCH_INVALID_ARGUMENT);
    REQUIRE(alch_binfile_read(path.c_str(), back.data(), 6) == ALCH_OK);
    CHECK(back == v);
    CHECK(alch_datagen("gaussian", 10, 4, 1, 0, 0, path.c_str()) == ALCH_OK);
    REQUIRE(alch_binfile_info(path.c_str(), &r, &c) == ALCH_OK);
    CHECK(r == 10);
    CHECK(alch_datagen("csv", 10, 4, 1, 0, 0, path.c_str()) == ALCH_INVALID_ARGUMENT);
    CHECK(alch_binfile_info("/nonexistent/x.bin", &r, &c) == ALCH_IO);
    std::remove(path.c_str());
}
