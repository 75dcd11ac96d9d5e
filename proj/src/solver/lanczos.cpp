#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>

#include "../error.hpp"
#include "solver.hpp"

namespace alch::solver {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}

// Two passes of classical Gram-Schmidt against the whole basis.
void reorthogonalize(std::vector<double>& w, const std::vector<std::vector<double>>& basis) {
    for (int pass = 0; pass < 2; ++pass) {
        for (const auto& q : basis) axpy(-dot(q, w), q, w);
    }
}

std::vector<double> random_unit(std::mt19937_64& rng, std::size_t n) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = normal(rng);
    const double nrm = std::sqrt(dot(v, v));
    for (auto& x : v) x /= nrm;
    return v;
}

constexpr int kMaxRestarts = 500;

} // namespace

std::int64_t default_max_subspace(std::uint64_t n, std::int64_t k) {
    return std::min<std::int64_t>(static_cast<std::int64_t>(n), std::max<std::int64_t>(2 * k, k + 10));
}

SvdResult truncated_svd(Comm& comm, const BlockView& a, const SvdParams& params) {
    const std::uint64_t n = a.cols;
    const std::int64_t k = params.k;
    if (k < 1 || static_cast<std::uint64_t>(k) > std::min(a.rows, n)) {
        throw Error(ErrorCode::SchemaViolation,
                    "truncated_svd: k=" + std::to_string(k) + " outside [1, min(m,n)=" +
                        std::to_string(std::min(a.rows, n)) + "]");
    }
    if (!(params.tol > 0.0)) throw Error(ErrorCode::SchemaViolation, "truncated_svd: tol <= 0");
    std::int64_t msub = params.max_subspace > 0 ? params.max_subspace : default_max_subspace(n, k);
    if (msub < std::min<std::int64_t>(2 * k, static_cast<std::int64_t>(n))) {
        throw Error(ErrorCode::SchemaViolation, "truncated_svd: max_subspace below min(2k, n)");
    }
    msub = std::min<std::int64_t>(msub, static_cast<std::int64_t>(n));
    msub = std::max<std::int64_t>(msub, std::min<std::int64_t>(k + 1, static_cast<std::int64_t>(n)));

    double bad = 0.0;
    for (double v : a.data) {
        if (!std::isfinite(v)) {
            bad = 1.0;
            break;
        }
    }
    if (comm.allreduce_sum(bad) > 0.0) {
        throw Error(ErrorCode::NumericalFailure, "truncated_svd: non-finite values in input");
    }

    const std::size_t kk = static_cast<std::size_t>(k);
    const std::size_t cap = static_cast<std::size_t>(msub);
    // Ritz vectors kept across a thick restart.
    const std::size_t keep = std::min(cap - 1, kk + (cap - kk) / 2);

    std::mt19937_64 rng(params.seed);
    std::vector<std::vector<double>> basis;
    basis.push_back(random_unit(rng, n));
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(cap), static_cast<Eigen::Index>(cap));
    double anorm = 0.0;
    std::int64_t steps = 0;
    int restarts = 0;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    std::vector<double> residuals(kk, 0.0);

    for (;;) {
        const std::size_t j = basis.size() - 1;
        const auto jj = static_cast<Eigen::Index>(j);
        auto w = gram_apply(comm, a, basis[j], 1, 0.0);
        ++steps;
        // Projection onto the whole basis, twice; the coefficients form column j of V^T G V.
        std::vector<double> h(j + 1, 0.0);
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t i = 0; i <= j; ++i) {
                const double c = dot(basis[i], w);
                h[i] += c;
                axpy(-c, basis[i], w);
            }
        }
        for (std::size_t i = 0; i < j; ++i) {
            t(static_cast<Eigen::Index>(i), jj) = h[i];
            t(jj, static_cast<Eigen::Index>(i)) = h[i];
        }
        t(jj, jj) = h[j];
        const double bj = std::sqrt(dot(w, w));
        anorm = std::max(anorm, std::abs(h[j]) + bj);

        const std::size_t m = j + 1;
        if (m >= kk) {
            es.compute(t.topLeftCorner(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m)));
            if (es.info() != Eigen::Success) {
                throw Error(ErrorCode::NumericalFailure, "truncated_svd: projected eigensolver failed");
            }
            const auto& vals = es.eigenvalues();
            const auto& vecs = es.eigenvectors();
            const double theta_max = std::max(std::abs(vals(0)), std::abs(vals(static_cast<Eigen::Index>(m - 1))));
            bool converged = true;
            for (std::size_t i = 0; i < kk; ++i) {
                const auto col = static_cast<Eigen::Index>(m - 1 - i);
                residuals[i] = std::abs(bj * vecs(static_cast<Eigen::Index>(m - 1), col));
                if (residuals[i] > params.tol * theta_max) converged = false;
            }
            if (m == n) converged = true; // basis spans the whole space
            if (converged) break;

            if (m >= cap) {
                if (++restarts > kMaxRestarts) {
                    std::ostringstream msg;
                    msg << "truncated_svd: not converged after " << kMaxRestarts
                        << " restarts of a " << cap << "-vector basis; ritz residuals:";
                    for (double r : residuals) msg << ' ' << r;
                    throw Error(ErrorCode::NumericalFailure, msg.str());
                }
                // Thick restart: keep the leading Ritz vectors, continue from the residual direction.
                std::vector<std::vector<double>> kept(keep, std::vector<double>(n, 0.0));
                t.setZero();
                for (std::size_t i = 0; i < keep; ++i) {
                    const auto col = static_cast<Eigen::Index>(m - 1 - i);
                    for (std::size_t b = 0; b < m; ++b) axpy(vecs(static_cast<Eigen::Index>(b), col), basis[b], kept[i]);
                    t(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = vals(col);
                }
                basis = std::move(kept);
            }
        }

        if (bj <= 1e-12 * anorm) {
            // Invariant subspace: continue from a fresh direction orthogonal to the basis.
            auto q = random_unit(rng, n);
            reorthogonalize(q, basis);
            reorthogonalize(q, basis);
            const double nrm = std::sqrt(dot(q, q));
            for (auto& x : q) x /= nrm;
            basis.push_back(std::move(q));
        } else {
            for (auto& x : w) x /= bj;
            basis.push_back(std::move(w));
        }
    }

    const std::size_t m = basis.size();
    const auto& vecs = es.eigenvectors();
    const auto& vals = es.eigenvalues();
    SvdResult out;
    out.steps = steps;
    out.s.resize(kk);
    out.v.assign(n * kk, 0.0);
    out.ritz_residuals = residuals;
    for (std::size_t i = 0; i < kk; ++i) {
        const auto col = static_cast<Eigen::Index>(m - 1 - i);
        out.s[i] = std::sqrt(std::max(vals(col), 0.0));
        std::vector<double> y(n, 0.0);
        for (std::size_t b = 0; b < m; ++b) axpy(vecs(static_cast<Eigen::Index>(b), col), basis[b], y);
        const double nrm = std::sqrt(dot(y, y));
        std::size_t big = 0;
        for (std::size_t r = 1; r < n; ++r) {
            if (std::abs(y[r]) > std::abs(y[big])) big = r;
        }
        const double sign = y[big] < 0.0 ? -1.0 : 1.0;
        for (std::size_t r = 0; r < n; ++r) out.v[r * kk + i] = sign * y[r] / nrm;
    }

    const double cutoff = std::sqrt(std::numeric_limits<double>::epsilon()) * out.s[0];
    out.unreliable.resize(kk);
    for (std::size_t i = 0; i < kk; ++i) out.unreliable[i] = !(out.s[i] > cutoff) || out.s[i] == 0.0;

    out.u_local.assign(a.local_rows * kk, 0.0);
    for (std::uint64_t r = 0; r < a.local_rows; ++r) {
        const double* ar = a.row(r);
        for (std::size_t i = 0; i < kk; ++i) {
            if (out.s[i] == 0.0) continue;
            double acc = 0.0;
            for (std::uint64_t c = 0; c < n; ++c) acc += ar[c] * out.v[c * kk + i];
            out.u_local[r * kk + i] = acc / out.s[i];
        }
    }
    return out;
}

} // namespace alch::solver
