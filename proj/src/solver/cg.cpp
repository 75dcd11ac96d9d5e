#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

#include "../error.hpp"
#include "solver.hpp"

namespace alch::solver {

namespace {

bool all_finite(std::span<const double> values) {
    for (double v : values) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

} // namespace

std::vector<double> gram_apply(Comm& comm, const BlockView& x, std::span<const double> v,
                               std::size_t c, double shift) {
    const std::size_t d = x.cols;
    std::vector<double> t(c);
    std::vector<double> out(d * c, 0.0);
    if (c == 1) {
        for (std::uint64_t i = 0; i < x.local_rows; ++i) {
            const double* xi = x.row(i);
            double ti = 0.0;
            for (std::size_t k = 0; k < d; ++k) ti += xi[k] * v[k];
            for (std::size_t k = 0; k < d; ++k) out[k] += xi[k] * ti;
        }
    } else {
        for (std::uint64_t i = 0; i < x.local_rows; ++i) {
            const double* xi = x.row(i);
            std::fill(t.begin(), t.end(), 0.0);
            for (std::size_t k = 0; k < d; ++k) {
                const double xik = xi[k];
                const double* vk = v.data() + k * c;
                for (std::size_t j = 0; j < c; ++j) t[j] += xik * vk[j];
            }
            for (std::size_t k = 0; k < d; ++k) {
                const double xik = xi[k];
                double* ok = out.data() + k * c;
                for (std::size_t j = 0; j < c; ++j) ok[j] += xik * t[j];
            }
        }
    }
    comm.allreduce_sum(out);
    if (shift != 0.0) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += shift * v[i];
    }
    return out;
}

CgResult cg_solve(Comm& comm, const BlockView& x, const BlockView& y, const RidgeParams& params) {
    if (x.rows != y.rows) {
        throw Error(ErrorCode::SchemaViolation, "cg_solve: X has " + std::to_string(x.rows) +
                                                    " rows, Y has " + std::to_string(y.rows));
    }
    if (!(params.lambda >= 0.0)) throw Error(ErrorCode::SchemaViolation, "cg_solve: lambda < 0");
    if (!(params.tol > 0.0)) throw Error(ErrorCode::SchemaViolation, "cg_solve: tol must be > 0");
    if (params.max_iter < 1) throw Error(ErrorCode::SchemaViolation, "cg_solve: max_iter < 1");

    const double bad = (all_finite(x.data) && all_finite(y.data)) ? 0.0 : 1.0;
    if (comm.allreduce_sum(bad) > 0.0) {
        throw Error(ErrorCode::NumericalFailure, "cg_solve: non-finite values in inputs");
    }

    const std::size_t d = x.cols;
    const std::size_t c = y.cols;
    const double shift = static_cast<double>(x.rows) * params.lambda;

    // B = X^T Y
    std::vector<double> b(d * c, 0.0);
    for (std::uint64_t i = 0; i < x.local_rows; ++i) {
        const double* xi = x.row(i);
        const double* yi = y.row(i);
        for (std::size_t k = 0; k < d; ++k) {
            const double xik = xi[k];
            if (xik == 0.0) continue;
            for (std::size_t j = 0; j < c; ++j) b[k * c + j] += xik * yi[j];
        }
    }
    comm.allreduce_sum(b);

    CgResult result;
    result.w.assign(d * c, 0.0);
    auto& rep = result.report;
    rep.iterations.assign(c, 0);
    rep.residuals.assign(c, 0.0);
    rep.converged.assign(c, false);

    // Per-column state, stored column-contiguous for the recurrences.
    std::vector<std::vector<double>> r(c, std::vector<double>(d)), p(c, std::vector<double>(d));
    std::vector<double> rr(c), bnorm(c);
    std::vector<std::size_t> active;
    for (std::size_t j = 0; j < c; ++j) {
        for (std::size_t k = 0; k < d; ++k) r[j][k] = b[k * c + j];
        p[j] = r[j];
        rr[j] = std::inner_product(r[j].begin(), r[j].end(), r[j].begin(), 0.0);
        bnorm[j] = std::sqrt(rr[j]);
        if (bnorm[j] == 0.0) {
            rep.converged[j] = true;
        } else {
            active.push_back(j);
        }
    }

    std::vector<double> iter_times;
    std::vector<double> packed;
    for (std::int64_t it = 0; it < params.max_iter && !active.empty(); ++it) {
        const auto t0 = std::chrono::steady_clock::now();
        const std::size_t ca = active.size();
        packed.assign(d * ca, 0.0);
        for (std::size_t a = 0; a < ca; ++a) {
            const auto& pj = p[active[a]];
            for (std::size_t k = 0; k < d; ++k) packed[k * ca + a] = pj[k];
        }
        const auto ap = gram_apply(comm, x, packed, ca, shift);

        std::vector<std::size_t> still;
        for (std::size_t a = 0; a < ca; ++a) {
            const std::size_t j = active[a];
            double pap = 0.0;
            for (std::size_t k = 0; k < d; ++k) pap += p[j][k] * ap[k * ca + a];
            if (!(pap > 0.0) || !std::isfinite(pap)) {
                throw Error(ErrorCode::NumericalFailure,
                            "cg_solve: breakdown p^T A p = " + std::to_string(pap) + " in column " +
                                std::to_string(j));
            }
            const double alpha = rr[j] / pap;
            for (std::size_t k = 0; k < d; ++k) {
                result.w[k * c + j] += alpha * p[j][k];
                r[j][k] -= alpha * ap[k * ca + a];
            }
            const double rr_new = std::inner_product(r[j].begin(), r[j].end(), r[j].begin(), 0.0);
            ++rep.iterations[j];
            if (std::sqrt(rr_new) <= params.tol * bnorm[j]) {
                rep.converged[j] = true;
                continue;
            }
            const double beta = rr_new / rr[j];
            for (std::size_t k = 0; k < d; ++k) p[j][k] = r[j][k] + beta * p[j][k];
            rr[j] = rr_new;
            still.push_back(j);
        }
        active = std::move(still);
        iter_times.push_back(
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }

    // Report the true residual of the returned W, not the recurrence residual.
    const auto aw = gram_apply(comm, x, result.w, c, shift);
    for (std::size_t j = 0; j < c; ++j) {
        double num = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            const double e = b[k * c + j] - aw[k * c + j];
            num += e * e;
        }
        rep.residuals[j] = bnorm[j] == 0.0 ? 0.0 : std::sqrt(num) / bnorm[j];
    }

    if (!iter_times.empty()) {
        const double n = static_cast<double>(iter_times.size());
        const double mean = std::accumulate(iter_times.begin(), iter_times.end(), 0.0) / n;
        double var = 0.0;
        for (double t : iter_times) var += (t - mean) * (t - mean);
        rep.iter_seconds_mean = mean;
        rep.iter_seconds_std = iter_times.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
    }
    return result;
}

} // namespace alch::solver
