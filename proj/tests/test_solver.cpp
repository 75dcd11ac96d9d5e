#include <doctest.h>

#include <cmath>
#include <numbers>

#include "error.hpp"
#include "support/distributed.hpp"

using namespace alch;
using namespace alch::solver;
using alch::testing::Mat;
using alch::testing::as_mat;
using alch::testing::block;
using alch::testing::gaussian;
using alch::testing::on_ranks;
using alch::testing::stack;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error");
    return ErrorCode::Internal;
}

CgResult cg(const Mat& x, const Mat& y, int p, const RidgeParams& params) {
    return on_ranks<CgResult>(p, [&](Comm& c) {
        return cg_solve(c, block(x, p, c.rank()), block(y, p, c.rank()), params);
    })[0];
}

Mat ridge_oracle(const Mat& x, const Mat& y, double lambda) {
    Eigen::MatrixXd a = x.transpose() * x;
    a.diagonal().array() += static_cast<double>(x.rows()) * lambda;
    Eigen::MatrixXd b = x.transpose() * y;
    return a.ldlt().solve(b);
}

double rel(const Mat& a, const Mat& b) { return (a - b).norm() / b.norm(); }

struct SvdOut {
    SvdResult r;
    Mat u;
};

SvdOut svd(const Mat& a, int p, const SvdParams& params) {
    auto parts = on_ranks<SvdResult>(p, [&](Comm& c) { return truncated_svd(c, block(a, p, c.rank()), params); });
    std::vector<std::vector<double>> u;
    for (auto& part : parts) u.push_back(part.u_local);
    return {parts[0], stack(u, static_cast<std::size_t>(params.k))};
}

struct QrOut {
    Mat q;
    Mat r;
};

QrOut qr(const Mat& a, int p) {
    auto parts = on_ranks<TsqrResult>(p, [&](Comm& c) { return tsqr(c, block(a, p, c.rank())); });
    std::vector<std::vector<double>> q;
    for (auto& part : parts) q.push_back(part.q_local);
    return {stack(q, a.cols()), as_mat(parts[0].r, a.cols(), a.cols())};
}

} // namespace

// ------------------------------------------------------------------ CG

TEST_CASE("cg: identity system converges in one iteration") {
    Mat x = Mat::Identity(4, 4);
    Mat y(4, 1);
    y << 1, 2, 3, 4;
    const auto r = cg(x, y, 2, {0.0, 1e-10, 100});
    CHECK(as_mat(r.w, 4, 1) == y);
    CHECK(r.report.iterations[0] == 1);
    CHECK(r.report.converged[0]);
}

TEST_CASE("cg: diagonal X matches the closed form for every lambda") {
    Mat x = Mat::Zero(3, 3);
    x.diagonal() << 1, 2, 3;
    Mat y = Mat::Ones(3, 1);
    {
        const auto r = cg(x, y, 1, {1e-2, 1e-14, 100});
        CHECK(r.w[0] == doctest::Approx(1.0 / 1.03).epsilon(1e-13));
        CHECK(r.w[1] == doctest::Approx(2.0 / 4.03).epsilon(1e-13));
        CHECK(r.w[2] == doctest::Approx(3.0 / 9.03).epsilon(1e-13));
    }
    Mat xd = Mat::Zero(6, 6);
    xd.diagonal() << 0.5, 1, 1.5, 2, 4, 8;
    Mat yd = gaussian(6, 2, 3);
    for (double lambda : {0.0, 1e-5, 1e-1}) {
        for (int p : {1, 2, 4}) {
            const auto r = cg(xd, yd, p, {lambda, 1e-14, 100});
            for (int i = 0; i < 6; ++i) {
                for (int j = 0; j < 2; ++j) {
                    const double dii = xd(i, i);
                    const double expect = dii * yd(i, j) / (dii * dii + 6 * lambda);
                    CHECK(r.w[i * 2 + j] == doctest::Approx(expect).epsilon(1e-12));
                }
            }
        }
    }
}

TEST_CASE("cg: random 200x30 system against the dense oracle") {
    const Mat x = gaussian(200, 30, 11);
    const Mat y = gaussian(200, 5, 12);
    const Mat oracle = ridge_oracle(x, y, 1e-5);
    std::vector<std::int64_t> iters;
    Mat first;
    for (int p : {1, 2, 4, 8}) {
        const auto r = cg(x, y, p, {1e-5, 1e-12, 1000});
        const Mat w = as_mat(r.w, 30, 5);
        CHECK(rel(w, oracle) <= 1e-8);
        if (p == 1) {
            first = w;
            iters = r.report.iterations;
        }
        CHECK(rel(w, first) <= 1e-8);
        CHECK(r.report.iterations == iters);
        for (int j = 0; j < 5; ++j) {
            CHECK(r.report.converged[j]);
            Eigen::MatrixXd a = x.transpose() * x;
            a.diagonal().array() += 200 * 1e-5;
            const Eigen::VectorXd b = x.transpose() * y.col(j);
            const double recomputed = (b - a * w.col(j)).norm() / b.norm();
            CHECK(std::abs(r.report.residuals[j] - recomputed) <= 1e-10);
            CHECK(r.report.residuals[j] <= 1e-12 * 1.01);
        }
    }
}

TEST_CASE("cg: same inputs and p give identical bits") {
    const Mat x = gaussian(150, 20, 1);
    const Mat y = gaussian(150, 3, 2);
    const auto a = cg(x, y, 3, {1e-5, 1e-10, 1000});
    const auto b = cg(x, y, 3, {1e-5, 1e-10, 1000});
    CHECK(a.w == b.w);
    CHECK(a.report.iterations == b.report.iterations);
}

TEST_CASE("cg: zero right-hand side is converged at zero") {
    const Mat x = gaussian(20, 4, 1);
    const Mat y = Mat::Zero(20, 2);
    const auto r = cg(x, y, 2, {1e-5, 1e-10, 10});
    CHECK(r.report.iterations == std::vector<std::int64_t>{0, 0});
    CHECK(std::all_of(r.w.begin(), r.w.end(), [](double v) { return v == 0.0; }));
}

TEST_CASE("cg: iteration cap is flagged") {
    const Mat x = gaussian(100, 40, 5);
    const Mat y = gaussian(100, 1, 6);
    const auto r = cg(x, y, 2, {0.0, 1e-14, 3});
    CHECK(r.report.iterations[0] == 3);
    CHECK_FALSE(r.report.converged[0]);
    CHECK(r.report.residuals[0] > 1e-14);
}

TEST_CASE("cg: errors") {
    const Mat x = gaussian(10, 3, 1);
    const Mat y = gaussian(9, 1, 1);
    CHECK(code_of([&] { cg(x, y, 2, {}); }) == ErrorCode::SchemaViolation);
    const Mat y10 = gaussian(10, 1, 1);
    CHECK(code_of([&] { cg(x, y10, 2, {-1.0, 1e-10, 10}); }) == ErrorCode::SchemaViolation);
    Mat xn = x;
    xn(7, 1) = std::nan("");
    CHECK(code_of([&] { cg(xn, y10, 2, {}); }) == ErrorCode::NumericalFailure);
}

// ------------------------------------------------------------ random features

TEST_CASE("random features: zero row gives sqrt(2/D) cos(b) from the seed") {
    const Mat x = Mat::Zero(3, 5);
    const RandomFeatureParams params{64, 2.0, 99};
    const auto z = random_features(block(x, 1, 0), params);
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> uniform(0.0, 2.0 * std::numbers::pi);
    for (int j = 0; j < 64; ++j) {
        const double b = uniform(rng);
        for (int i = 0; i < 3; ++i) CHECK(z[i * 64 + j] == std::sqrt(2.0 / 64) * std::cos(b));
    }
}

TEST_CASE("random features: shape, p-invariance and determinism") {
    const Mat x = gaussian(100, 44, 4);
    const RandomFeatureParams params{200, 10.0, 5};
    std::vector<std::vector<double>> parts;
    for (int r = 0; r < 3; ++r) parts.push_back(random_features(block(x, 3, r), params));
    const Mat z3 = stack(parts, 200);
    const Mat z1 = as_mat(random_features(block(x, 1, 0), params), 100, 200);
    CHECK(z3.rows() == 100);
    CHECK(z3 == z1);
    CHECK(as_mat(random_features(block(x, 1, 0), params), 100, 200) == z1);
    const Mat other = as_mat(random_features(block(x, 1, 0), {200, 10.0, 6}), 100, 200);
    CHECK(other != z1);
}

TEST_CASE("random features: kernel estimate near the Gaussian kernel") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> n(0.0, 1.0);
    Mat xy(2, 10);
    for (int t = 0; t < 10; ++t) {
        for (int k = 0; k < 10; ++k) {
            xy(0, k) = n(rng);
            xy(1, k) = xy(0, k) + 0.5 * n(rng);
        }
        const double sigma = 2.0;
        const auto z = random_features(block(xy, 1, 0), {10000, sigma, static_cast<std::uint64_t>(t)});
        double dot = 0;
        for (int j = 0; j < 10000; ++j) dot += z[j] * z[10000 + j];
        const double kernel = std::exp(-(xy.row(0) - xy.row(1)).squaredNorm() / (2 * sigma * sigma));
        CHECK(std::abs(dot - kernel) <= 0.05);
    }
}

TEST_CASE("random features: parameter errors") {
    const Mat x = gaussian(2, 2, 1);
    CHECK(code_of([&] { random_features(block(x, 1, 0), {0, 1.0, 0}); }) == ErrorCode::SchemaViolation);
    CHECK(code_of([&] { random_features(block(x, 1, 0), {10, 0.0, 0}); }) == ErrorCode::SchemaViolation);
}

// -------------------------------------------------------------------- SVD

TEST_CASE("svd: diag(3,2,1) embedded in 10x3") {
    Mat a = Mat::Zero(10, 3);
    a(0, 0) = 3;
    a(4, 1) = 2;
    a(9, 2) = 1;
    for (int p : {1, 2, 4}) {
        const auto out = svd(a, p, {2, 1e-12, 0, 0});
        REQUIRE(out.r.s.size() == 2);
        CHECK(out.r.s[0] == doctest::Approx(3.0).epsilon(1e-13));
        CHECK(out.r.s[1] == doctest::Approx(2.0).epsilon(1e-13));
    }
}

TEST_CASE("svd: rank-1 identity") {
    const Mat u = gaussian(60, 1, 1);
    const Mat v = gaussian(8, 1, 2);
    const Mat a = u * v.transpose();
    const auto out = svd(a, 3, {1, 1e-12, 0, 0});
    CHECK(out.r.s[0] == doctest::Approx(u.norm() * v.norm()).epsilon(1e-12));
    const Mat vk = as_mat(out.r.v, 8, 1);
    CHECK(std::abs(std::abs(vk.col(0).dot(v.col(0))) / v.norm() - 1.0) < 1e-12);
    CHECK(std::abs(std::abs(out.u.col(0).dot(u.col(0))) / u.norm() - 1.0) < 1e-12);
}

TEST_CASE("svd: random 500x80, k=20 against the dense oracle") {
    const Mat a = gaussian(500, 80, 21);
    const Eigen::JacobiSVD<Eigen::MatrixXd> oracle(a);
    const auto& s_ref = oracle.singularValues();
    std::vector<double> s1;
    for (int p : {1, 2, 4, 8}) {
        const auto out = svd(a, p, {20, 1e-12, 0, 0});
        const auto& r = out.r;
        REQUIRE(r.s.size() == 20);
        for (int j = 0; j < 20; ++j) {
            CHECK(std::abs(r.s[j] - s_ref(j)) <= 1e-8 * s_ref(j));
            if (j > 0) CHECK(r.s[j] <= r.s[j - 1]);
        }
        const Mat v = as_mat(r.v, 80, 20);
        Eigen::VectorXd s = Eigen::Map<const Eigen::VectorXd>(r.s.data(), 20);
        CHECK((a * v - out.u * s.asDiagonal()).norm() <= 1e-8 * a.norm());
        CHECK((v.transpose() * v - Mat::Identity(20, 20)).norm() <= 1e-8);
        for (int j = 0; j < 20; ++j) {
            const double rq = (a * v.col(j)).squaredNorm();
            CHECK(std::abs(rq - r.s[j] * r.s[j]) <= 1e-8 * r.s[j] * r.s[j]);
        }
        if (p == 1) s1 = r.s;
        for (int j = 0; j < 20; ++j) CHECK(std::abs(r.s[j] - s1[j]) <= 1e-8 * s1[j]);
    }
}

TEST_CASE("svd: rank-deficient columns are flagged unreliable") {
    const Mat a = gaussian(80, 3, 1) * gaussian(3, 10, 2);
    const auto out = svd(a, 2, {5, 1e-10, 0, 0});
    REQUIRE(out.r.unreliable.size() == 5);
    CHECK_FALSE(out.r.unreliable[0]);
    CHECK_FALSE(out.r.unreliable[2]);
    CHECK(out.r.unreliable[3]);
    CHECK(out.r.unreliable[4]);
}

TEST_CASE("svd: errors") {
    const Mat a = gaussian(10, 4, 1);
    CHECK(code_of([&] { svd(a, 2, {5, 1e-10, 0, 0}); }) == ErrorCode::SchemaViolation);
    CHECK(code_of([&] { svd(a, 2, {0, 1e-10, 0, 0}); }) == ErrorCode::SchemaViolation);
    CHECK(code_of([&] { svd(a, 2, {2, 0.0, 0, 0}); }) == ErrorCode::SchemaViolation);
    Mat bad = a;
    bad(3, 3) = INFINITY;
    CHECK(code_of([&] { svd(bad, 2, {2, 1e-10, 0, 0}); }) == ErrorCode::NumericalFailure);
}

TEST_CASE("svd: deterministic for a fixed seed and p") {
    const Mat a = gaussian(300, 40, 9);
    const auto x = svd(a, 4, {6, 1e-10, 0, 3});
    const auto y = svd(a, 4, {6, 1e-10, 0, 3});
    CHECK(x.r.s == y.r.s);
    CHECK(x.r.v == y.r.v);
    CHECK(x.u == y.u);
}

// ------------------------------------------------------------------- TSQR

TEST_CASE("tsqr: identity and selector columns") {
    const Mat i4 = Mat::Identity(4, 4);
    const auto a = qr(i4, 2);
    CHECK((a.q - i4).norm() < 1e-15);
    CHECK((a.r - i4).norm() < 1e-15);

    Mat s = Mat::Zero(4, 2);
    s(0, 0) = 2;
    s(2, 1) = 3;
    const auto b = qr(s, 2);
    Mat r(2, 2);
    r << 2, 0, 0, 3;
    CHECK((b.r - r).norm() < 1e-15);
    Mat q = Mat::Zero(4, 2);
    q(0, 0) = 1;
    q(2, 1) = 1;
    CHECK((b.q - q).norm() < 1e-15);
}

TEST_CASE("tsqr: random 300x12 over 4 workers matches a sequential oracle") {
    const Mat a = gaussian(300, 12, 17);
    for (int p : {1, 2, 3, 4, 8}) {
        const auto f = qr(a, p);
        CHECK((a - f.q * f.r).norm() <= 1e-10 * a.norm());
        CHECK((f.q.transpose() * f.q - Mat::Identity(12, 12)).norm() <= 1e-10);
        CHECK(f.r.isUpperTriangular());
        Eigen::HouseholderQR<Eigen::MatrixXd> h(a);
        Eigen::MatrixXd r_ref = h.matrixQR().topRows(12).triangularView<Eigen::Upper>();
        Eigen::MatrixXd q_ref = h.householderQ() * Eigen::MatrixXd::Identity(300, 12);
        for (int i = 0; i < 12; ++i) {
            CHECK(f.r(i, i) >= 0.0);
            if (r_ref(i, i) < 0) {
                r_ref.row(i) *= -1;
                q_ref.col(i) *= -1;
            }
        }
        CHECK((f.r - r_ref).norm() <= 1e-10 * a.norm());
        CHECK((f.q - q_ref).norm() <= 1e-9);
    }
}

TEST_CASE("tsqr: more workers than rows per block") {
    const Mat a = gaussian(10, 4, 2);
    const auto f = qr(a, 8);
    CHECK((a - f.q * f.r).norm() <= 1e-10 * a.norm());
    CHECK((f.q.transpose() * f.q - Mat::Identity(4, 4)).norm() <= 1e-10);
}

TEST_CASE("tsqr: errors") {
    CHECK(code_of([&] { qr(gaussian(3, 5, 1), 1); }) == ErrorCode::SchemaViolation);
    Mat dep = gaussian(20, 3, 1);
    dep.col(2) = dep.col(0) + dep.col(1);
    CHECK(code_of([&] { qr(dep, 2); }) == ErrorCode::NumericalFailure);
}

// ------------------------------------------------------------ dense helpers

TEST_CASE("householder_qr reconstructs wide and tall inputs") {
    for (auto [m, n] : {std::pair{7, 3}, std::pair{3, 7}, std::pair{5, 5}}) {
        const Mat a = gaussian(m, n, 3);
        const auto f = householder_qr({a.data(), static_cast<std::size_t>(a.size())}, m, n);
        const Mat q = as_mat(f.q, m, f.q_cols);
        const Mat r = as_mat(f.r, f.q_cols, n);
        CHECK((a - q * r).norm() <= 1e-12 * a.norm());
        CHECK((q.transpose() * q - Mat::Identity(f.q_cols, f.q_cols)).norm() <= 1e-12);
    }
}
