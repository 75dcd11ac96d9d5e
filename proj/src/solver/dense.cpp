#include <cmath>

#include "solver.hpp"

namespace alch::solver {

DenseQr householder_qr(std::span<const double> a, std::size_t rows, std::size_t cols) {
    DenseQr out;
    out.rows = rows;
    out.cols = cols;
    out.q_cols = std::min(rows, cols);
    const std::size_t q = out.q_cols;

    std::vector<double> work(a.begin(), a.end());
    auto at = [&](std::size_t i, std::size_t j) -> double& { return work[i * cols + j]; };

    std::vector<std::vector<double>> reflectors(q);
    std::vector<double> betas(q, 0.0);
    std::vector<double> w(cols);

    for (std::size_t j = 0; j < q; ++j) {
        const std::size_t len = rows - j;
        double norm2 = 0.0;
        for (std::size_t i = 0; i < len; ++i) norm2 += at(j + i, j) * at(j + i, j);
        const double alpha = std::sqrt(norm2);
        auto& v = reflectors[j];
        v.assign(len, 0.0);
        if (alpha == 0.0) continue;

        const double sign = at(j, j) >= 0.0 ? 1.0 : -1.0;
        for (std::size_t i = 0; i < len; ++i) v[i] = at(j + i, j);
        v[0] += sign * alpha;
        double vv = 0.0;
        for (double x : v) vv += x * x;
        const double beta = 2.0 / vv;
        betas[j] = beta;

        // A[j:, j:] -= beta v (v^T A[j:, j:])
        std::fill(w.begin() + static_cast<std::ptrdiff_t>(j), w.end(), 0.0);
        for (std::size_t i = 0; i < len; ++i) {
            const double vi = v[i];
            const double* row = &at(j + i, 0);
            for (std::size_t k = j; k < cols; ++k) w[k] += vi * row[k];
        }
        for (std::size_t i = 0; i < len; ++i) {
            const double s = beta * v[i];
            double* row = &at(j + i, 0);
            for (std::size_t k = j; k < cols; ++k) row[k] -= s * w[k];
        }
        at(j, j) = -sign * alpha;
        for (std::size_t i = 1; i < len; ++i) at(j + i, j) = 0.0;
    }

    out.r.assign(q * cols, 0.0);
    for (std::size_t i = 0; i < q; ++i) {
        for (std::size_t k = i; k < cols; ++k) out.r[i * cols + k] = at(i, k);
    }

    // Q = H_0 H_1 ... H_{q-1} [I; 0]
    out.q.assign(rows * q, 0.0);
    for (std::size_t i = 0; i < q; ++i) out.q[i * q + i] = 1.0;
    std::vector<double> t(q);
    for (std::size_t jj = q; jj-- > 0;) {
        if (betas[jj] == 0.0) continue;
        const auto& v = reflectors[jj];
        const std::size_t len = rows - jj;
        std::fill(t.begin(), t.end(), 0.0);
        for (std::size_t i = 0; i < len; ++i) {
            const double vi = v[i];
            const double* row = &out.q[(jj + i) * q];
            for (std::size_t k = 0; k < q; ++k) t[k] += vi * row[k];
        }
        for (std::size_t i = 0; i < len; ++i) {
            const double s = betas[jj] * v[i];
            double* row = &out.q[(jj + i) * q];
            for (std::size_t k = 0; k < q; ++k) row[k] -= s * t[k];
        }
    }
    return out;
}

} // namespace alch::solver
