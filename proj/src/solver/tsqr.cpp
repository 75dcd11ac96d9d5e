#include <cmath>
#include <string>

#include "../error.hpp"
#include "solver.hpp"

namespace alch::solver {

namespace {

// C = A (r x k) * B (k x n), all row-major.
std::vector<double> matmul(std::span<const double> a, std::span<const double> b, std::size_t r,
                           std::size_t k, std::size_t n) {
    std::vector<double> c(r * n, 0.0);
    for (std::size_t i = 0; i < r; ++i) {
        double* ci = c.data() + i * n;
        for (std::size_t l = 0; l < k; ++l) {
            const double ail = a[i * k + l];
            if (ail == 0.0) continue;
            const double* bl = b.data() + l * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += ail * bl[j];
        }
    }
    return c;
}

struct TreeNode {
    DenseQr qr;
    std::size_t own_rows;   // rows of the stack contributed by this rank
    int partner;
};

} // namespace

TsqrResult tsqr(Comm& comm, const BlockView& a) {
    const std::size_t n = a.cols;
    if (a.rows < a.cols) {
        throw Error(ErrorCode::SchemaViolation, "tsqr: needs rows >= cols, got " +
                                                    std::to_string(a.rows) + "x" + std::to_string(a.cols));
    }
    double local_sq = 0.0;
    double bad = 0.0;
    for (double v : a.data) {
        if (!std::isfinite(v)) bad = 1.0;
        local_sq += v * v;
    }
    std::vector<double> stats{local_sq, bad};
    comm.allreduce_sum(stats);
    if (stats[1] > 0.0) throw Error(ErrorCode::NumericalFailure, "tsqr: non-finite values in input");
    const double fro = std::sqrt(stats[0]);

    const int rank = comm.rank();
    const int p = comm.size();

    const DenseQr leaf = householder_qr(a.data, a.local_rows, n);
    std::vector<double> cur_r = leaf.r;
    std::size_t cur_rows = leaf.q_cols;
    std::vector<TreeNode> nodes;
    int parent = -1;

    for (int s = 1; s < p; s *= 2) {
        if (rank % (2 * s) == s) {
            std::vector<double> msg;
            msg.reserve(1 + cur_r.size());
            msg.push_back(static_cast<double>(cur_rows));
            msg.insert(msg.end(), cur_r.begin(), cur_r.end());
            comm.send(rank - s, std::move(msg));
            parent = rank - s;
            break;
        }
        if (rank % (2 * s) == 0 && rank + s < p) {
            auto msg = comm.recv(rank + s);
            const auto other_rows = static_cast<std::size_t>(msg[0]);
            std::vector<double> stacked = cur_r;
            stacked.insert(stacked.end(), msg.begin() + 1, msg.end());
            TreeNode node{householder_qr(stacked, cur_rows + other_rows, n), cur_rows, rank + s};
            cur_r = node.qr.r;
            cur_rows = node.qr.q_cols;
            nodes.push_back(std::move(node));
        }
    }

    TsqrResult out;
    std::vector<double> incoming;
    if (rank == 0) {
        std::vector<double> sign(n, 1.0);
        for (std::size_t i = 0; i < n; ++i) {
            if (cur_r[i * n + i] < 0.0) sign[i] = -1.0;
        }
        out.r = cur_r;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) out.r[i * n + j] *= sign[i];
        }
        incoming.assign(n * n, 0.0);
        for (std::size_t i = 0; i < n; ++i) incoming[i * n + i] = sign[i];
    }
    comm.broadcast(out.r, 0);

    double min_diag = std::abs(out.r[0]);
    for (std::size_t i = 1; i < n; ++i) min_diag = std::min(min_diag, std::abs(out.r[i * n + i]));
    if (min_diag < 1e-12 * fro) {
        throw Error(ErrorCode::NumericalFailure,
                    "tsqr: rank-deficient input (min |R_ii| = " + std::to_string(min_diag) + ")");
    }

    if (rank != 0) {
        incoming = comm.recv(parent);
        if (incoming.size() != cur_rows * n) {
            throw Error(ErrorCode::Internal, "tsqr: unexpected down-sweep block size");
        }
    }
    for (auto it = nodes.rbegin(); it != nodes.rend(); ++it) {
        const auto& qr = it->qr;
        auto y = matmul(qr.q, incoming, qr.rows, qr.q_cols, n);
        std::vector<double> bottom(y.begin() + static_cast<std::ptrdiff_t>(it->own_rows * n), y.end());
        comm.send(it->partner, std::move(bottom));
        y.resize(it->own_rows * n);
        incoming = std::move(y);
    }
    out.q_local = matmul(leaf.q, incoming, leaf.rows, leaf.q_cols, n);
    return out;
}

} // namespace alch::solver
