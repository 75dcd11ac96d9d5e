#include <doctest.h>

#include <algorithm>
#include <random>
#include <thread>

#include "client.hpp"
#include "error.hpp"
#include "log.hpp"
#include "net.hpp"
#include "server.hpp"
#include "support/distributed.hpp"

using namespace alch;
using namespace alch::client;
using alch::testing::Mat;
using alch::testing::gaussian;

namespace {

const bool quiet = (set_log_level("warn"), true);

struct Fixture {
    server::Server srv;
    explicit Fixture(std::uint16_t workers, std::uint64_t budget = std::uint64_t{1} << 30)
        : srv(server::ServerOptions{"127.0.0.1", 0, workers, budget}) {}

    Session connect(std::uint16_t workers) {
        Options o;
        o.port = srv.port();
        o.workers = workers;
        return Session::connect(o);
    }
};

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error");
    return ErrorCode::Internal;
}

LocalMatrix local(const Mat& m) {
    return LocalMatrix::from_dense(m.rows(), m.cols(), {m.data(), static_cast<std::size_t>(m.size())});
}

Mat fetch(Session& s, const MatrixHandle& h) {
    const auto d = s.fetch_dense(h);
    return alch::testing::as_mat(d, h.rows(), h.cols());
}

/// Raw driver connection for protocol-level checks.
struct Raw {
    net::Channel ch;
    std::uint32_t sid = 0;
    explicit Raw(std::uint16_t port) : ch(net::connect_to("127.0.0.1", port)) {}

    wire::Message call(const wire::Message& m) {
        ch.send(m, sid);
        return ch.expect().message;
    }
    std::uint16_t error_of(const wire::Message& m) {
        const auto reply = call(m);
        const auto* e = std::get_if<wire::ErrorMsg>(&reply);
        REQUIRE(e != nullptr);
        return e->code;
    }
    wire::HandshakeAck handshake(std::uint16_t workers) {
        auto ack = std::get<wire::HandshakeAck>(call(wire::Handshake{wire::kProtocolVersion, workers}));
        sid = ack.session_id;
        return ack;
    }
};

} // namespace

TEST_CASE("handshake lists the requested workers") {
    Fixture f(4);
    auto s = f.connect(4);
    CHECK(s.worker_count() == 4);
    CHECK(code_of([&] { f.connect(8); }) == ErrorCode::InsufficientWorkers);
    auto t = f.connect(2);
    CHECK(t.id() != s.id());
    CHECK(f.srv.active_sessions() == 2);
}

TEST_CASE("server start errors") {
    CHECK(code_of([] { server::Server s(server::ServerOptions{"127.0.0.1", 0, 0}); }) == ErrorCode::InvalidArgument);
    server::Server a(server::ServerOptions{"127.0.0.1", 0, 1});
    CHECK(code_of([&] { server::Server b(server::ServerOptions{"127.0.0.1", a.port(), 1}); }) ==
          ErrorCode::Connection);
}

TEST_CASE("raw handshake errors") {
    Fixture f(2);
    {
        Raw r(f.srv.port());
        CHECK(r.error_of(wire::Handshake{2, 1}) == 1);
    }
    {
        Raw r(f.srv.port());
        CHECK(r.error_of(wire::Handshake{1, 3}) == 2);
    }
    {
        Raw r(f.srv.port());
        CHECK(r.error_of(wire::CreateMatrix{1, 1}) == 9);
    }
    {
        Raw r(f.srv.port());
        const auto ack = r.handshake(2);
        REQUIRE(ack.workers.size() == 2);
        CHECK(ack.workers[0].worker_id == 0);
        CHECK(ack.workers[1].worker_id == 1);
    }
}

TEST_CASE("raw request errors") {
    Fixture f(2);
    Raw r(f.srv.port());
    r.handshake(2);
    CHECK(r.error_of(wire::RegisterLibrary{"nope", ""}) == 10);
    const auto lib = std::get<wire::LibraryAck>(r.call(wire::RegisterLibrary{"builtin", ""})).lib_id;
    CHECK(r.error_of(wire::RunTask{static_cast<std::uint16_t>(lib + 7), "tsqr", {1}, {}}) == 10);
    CHECK(r.error_of(wire::RunTask{lib, "nope", {}, {}}) == 5);
    CHECK(r.error_of(wire::RunTask{lib, "tsqr", {}, {}}) == 6);
    CHECK(r.error_of(wire::RunTask{lib, "tsqr", {999}, {}}) == 8);

    const auto info = std::get<wire::MatrixInfo>(r.call(wire::CreateMatrix{10, 4}));
    CHECK(info.entries.size() == 2);
    CHECK(info.entries[0] == wire::LayoutEntry{0, 0, 5});
    CHECK(r.error_of(wire::RunTask{lib, "tsqr", {info.matrix_id}, {}}) == 4);
    CHECK(r.error_of(wire::SendComplete{info.matrix_id}) == 4);
    CHECK(r.error_of(wire::ReleaseMatrix{4242}) == 8);
    CHECK(r.error_of(wire::CreateMatrix{0, 4}) == 9);
    CHECK(r.error_of(wire::CreateMatrix{std::uint64_t{1} << 40, 1 << 10}) == 3);
    CHECK(std::holds_alternative<wire::ReleaseMatrix>(r.call(wire::ReleaseMatrix{info.matrix_id})));
    CHECK(f.srv.live_matrices() == 0);
}

TEST_CASE("worker channel rejects rows for unknown and misrouted matrices") {
    Fixture f(2);
    Raw r(f.srv.port());
    const auto ack = r.handshake(2);
    const auto info = std::get<wire::MatrixInfo>(r.call(wire::CreateMatrix{4, 1}));
    const auto [host, port] = net::split_address(ack.workers[1].address);
    net::Channel w(net::connect_to(host, port));
    RowBatch b;
    b.cols = 1;
    b.append(0, std::vector<double>{1.0}); // row 0 lives on worker 0
    w.send(wire::SendRows{info.matrix_id, b}, r.sid);
    CHECK(std::get<wire::ErrorMsg>(w.expect().message).code == 11);
    w.send(wire::FetchRows{info.matrix_id, 2, 1}, r.sid);
    CHECK(std::get<wire::ErrorMsg>(w.expect().message).code == 4);
    w.send(wire::SendRows{info.matrix_id, b}, r.sid + 100);
    CHECK(std::get<wire::ErrorMsg>(w.expect().message).code == 9);

    RowBatch dup;
    dup.cols = 1;
    dup.append(2, std::vector<double>{1.0});
    w.send(wire::SendRows{info.matrix_id, dup}, r.sid);
    CHECK(std::get<wire::RowsAck>(w.expect().message).rows_received == 1);
    w.send(wire::SendRows{info.matrix_id, dup}, r.sid);
    CHECK(std::get<wire::ErrorMsg>(w.expect().message).code == 12);
    RowBatch wide;
    wide.cols = 2;
    wide.append(3, std::vector<double>{1.0, 2.0});
    w.send(wire::SendRows{info.matrix_id, wide}, r.sid);
    CHECK(std::get<wire::ErrorMsg>(w.expect().message).code == 13);

    const auto err = std::get<wire::ErrorMsg>(r.call(wire::SendComplete{info.matrix_id}));
    CHECK(err.code == 4);
    CHECK(err.message.find("3 rows missing") != std::string::npos);
}

TEST_CASE("malformed frame gets ERROR 14 and the connection closes") {
    Fixture f(1);
    Raw r(f.srv.port());
    r.handshake(1);
    const std::vector<std::uint8_t> junk{0x09, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 7};
    r.ch.send_bytes(junk);
    CHECK(std::get<wire::ErrorMsg>(r.ch.expect().message).code == 14);
    CHECK_FALSE(r.ch.receive().has_value());
    // The server keeps serving others.
    auto s = f.connect(1);
    CHECK(s.worker_count() == 1);
}

TEST_CASE("shuffled upload round-trips bit-exactly") {
    Fixture f(4);
    auto s = f.connect(4);
    Mat m = gaussian(10, 4, 1);
    m(3, 2) = -0.0;
    m(7, 1) = std::numeric_limits<double>::denorm_min();
    m(9, 3) = std::numeric_limits<double>::infinity();
    std::vector<std::uint64_t> order(10);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), std::mt19937_64(3));
    LocalMatrix lm(10, 4);
    for (auto i : order) lm.set_row(i, {m.data() + i * 4, 4});
    const auto h = s.send_matrix(lm);
    CHECK(h.rows() == 10);
    CHECK(h.layout().size() == 4);
    const auto back = s.fetch_dense(h);
    CHECK(std::memcmp(back.data(), m.data(), back.size() * sizeof(double)) == 0);
    const auto fetched = s.fetch_matrix(h);
    CHECK(fetched.complete());
    CHECK(std::equal(fetched.find(3), fetched.find(3) + 4, m.data() + 12));
}

TEST_CASE("client-side validation happens before any send") {
    Fixture f(1);
    auto s = f.connect(1);
    CHECK(code_of([&] { s.send_matrix(LocalMatrix(3, 0)); }) == ErrorCode::InvalidArgument);
    LocalMatrix partial(3, 2);
    partial.set_row(0, std::vector<double>{1, 2});
    CHECK(code_of([&] { s.send_matrix(partial); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([&] { partial.set_row(0, std::vector<double>{1, 2}); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([&] { partial.set_row(5, std::vector<double>{1, 2}); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([&] { partial.set_row(1, std::vector<double>{1}); }) == ErrorCode::InvalidArgument);
    CHECK(f.srv.live_matrices() == 0);
}

TEST_CASE("release and close invalidate handles") {
    Fixture f(2);
    auto s = f.connect(2);
    const auto h = s.send_matrix(local(gaussian(6, 3, 1)));
    const auto copy = h;
    CHECK(f.srv.live_matrices() == 1);
    s.release(h);
    CHECK_FALSE(copy.valid());
    CHECK(code_of([&] { s.fetch_dense(copy); }) == ErrorCode::InvalidHandle);
    CHECK(code_of([&] { s.release(copy); }) == ErrorCode::InvalidHandle);
    CHECK(f.srv.live_matrices() == 0);

    const auto a = s.send_matrix(local(gaussian(6, 3, 2)));
    auto other = f.connect(1);
    CHECK(code_of([&] { other.fetch_dense(a); }) == ErrorCode::InvalidHandle);
    s.close();
    s.close();
    CHECK(s.closed());
    CHECK_FALSE(a.valid());
    CHECK(code_of([&] { s.fetch_dense(a); }) == ErrorCode::InvalidHandle);
    CHECK(code_of([&] { s.send_matrix(local(gaussian(2, 2, 1))); }) == ErrorCode::InvalidHandle);
    for (int i = 0; i < 100 && f.srv.live_matrices() != 0; ++i) std::this_thread::sleep_for(std::chrono::milliseconds(10));
    CHECK(f.srv.live_matrices() == 0);
}

TEST_CASE("dropped connection frees the session's matrices") {
    Fixture f(2);
    {
        auto s = f.connect(2);
        s.send_matrix(local(gaussian(20, 3, 1)));
        s.send_matrix(local(gaussian(20, 3, 2)));
        CHECK(f.srv.live_matrices() == 2);
    }
    for (int i = 0; i < 100 && f.srv.live_matrices() != 0; ++i) std::this_thread::sleep_for(std::chrono::milliseconds(10));
    CHECK(f.srv.live_matrices() == 0);
    CHECK(f.srv.bytes_in_use() == 0);
}

TEST_CASE("memory budget surfaces as resource exhausted") {
    Fixture f(1, 1000);
    auto s = f.connect(1);
    CHECK(code_of([&] { s.send_matrix(local(gaussian(20, 10, 1))); }) == ErrorCode::ResourceExhausted);
    s.send_matrix(local(gaussian(10, 10, 1)));
}

TEST_CASE("qr through the SDK recomposes A") {
    Fixture f(3);
    auto s = f.connect(3);
    Builtin lib(s);
    const Mat a = gaussian(50, 6, 4);
    const auto h = s.send_matrix(local(a));
    const auto qr = lib.qr(h);
    CHECK(qr.q.rows() == 50);
    CHECK(qr.r.rows() == 6);
    const Mat q = fetch(s, qr.q), r = fetch(s, qr.r);
    CHECK((a - q * r).norm() <= 1e-10 * a.norm());
    CHECK(h.valid());
}

TEST_CASE("svd outputs have the documented shapes") {
    Fixture f(2);
    auto s = f.connect(2);
    Builtin lib(s);
    const Mat a = gaussian(60, 10, 5);
    const auto out = lib.svd(s.send_matrix(local(a)), 3);
    CHECK(out.u.rows() == 60);
    CHECK(out.u.cols() == 3);
    CHECK(out.v.rows() == 10);
    CHECK(out.v.cols() == 3);
    CHECK(std::is_sorted(out.s.rbegin(), out.s.rend()));
    CHECK(out.steps > 0);
    CHECK(code_of([&] { lib.svd(s.send_matrix(local(a)), 11); }) == ErrorCode::SchemaViolation);
}

TEST_CASE("chained features then CG equals fetch-and-resend") {
    Fixture f(2);
    auto s = f.connect(2);
    Builtin lib(s);
    const Mat x = gaussian(80, 5, 6);
    const Mat y = gaussian(80, 2, 7);
    const auto hx = s.send_matrix(local(x));
    const auto hy = s.send_matrix(local(y));
    const auto z = lib.random_features(hx, 40, 2.0, 3);
    const auto chained = lib.cg(z, hy, 1e-3, 1e-12, 1000);
    const Mat zl = fetch(s, z);
    const auto z2 = s.send_matrix(local(zl));
    const auto twostep = lib.cg(z2, hy, 1e-3, 1e-12, 1000);
    const Mat w1 = fetch(s, chained.w), w2 = fetch(s, twostep.w);
    CHECK((w1 - w2).norm() <= 1e-12 * w2.norm());
    CHECK(chained.all_converged());
    CHECK(chained.iterations.size() == 2);
}

TEST_CASE("numerical failure surfaces as error 7") {
    Fixture f(2);
    auto s = f.connect(2);
    Builtin lib(s);
    Mat x = gaussian(10, 3, 1);
    x(4, 1) = std::nan("");
    const auto hx = s.send_matrix(local(x));
    const auto hy = s.send_matrix(local(gaussian(10, 1, 2)));
    CHECK(code_of([&] { lib.cg(hx, hy); }) == ErrorCode::NumericalFailure);
    // The session stays usable after a failed task.
    CHECK(lib.qr(s.send_matrix(local(gaussian(10, 3, 3)))).q.valid());
}

TEST_CASE("load_bin reads a server-side file") {
    Fixture f(2);
    auto s = f.connect(2);
    Builtin lib(s);
    CHECK(code_of([&] { lib.load("/nonexistent/file.bin"); }) == ErrorCode::InvalidRequest);
}

TEST_CASE("concurrent sessions match sequential runs") {
    Fixture f(4);
    const Mat x = gaussian(300, 20, 1);
    const Mat y = gaussian(300, 2, 2);
    const Mat a = gaussian(400, 30, 3);
    auto run_cg = [&] {
        auto s = f.connect(2);
        Builtin lib(s);
        return fetch(s, lib.cg(s.send_matrix(local(x)), s.send_matrix(local(y))).w);
    };
    auto run_svd = [&] {
        auto s = f.connect(2);
        Builtin lib(s);
        auto r = lib.svd(s.send_matrix(local(a)), 5);
        return std::pair{r.s, fetch(s, r.v)};
    };
    const Mat w_seq = run_cg();
    const auto svd_seq = run_svd();
    Mat w_par;
    std::pair<std::vector<double>, Mat> svd_par;
    std::thread t1([&] { w_par = run_cg(); });
    std::thread t2([&] { svd_par = run_svd(); });
    t1.join();
    t2.join();
    CHECK(w_par == w_seq);
    CHECK(svd_par.first == svd_seq.first);
    CHECK(svd_par.second == svd_seq.second);
}
