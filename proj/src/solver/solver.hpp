#pragma once

// Distributed kernels over block-row matrices. Each function is called by all
// p participants of a task with their own row block and a shared Comm; small
// d- or n-sized state is replicated on every participant.

#include <cstdint>
#include <span>
#include <vector>

#include "../collective.hpp"

namespace alch::solver {

/// One participant's rows of a global rows x cols matrix, row-major.
struct BlockView {
    std::uint64_t rows = 0;       // global
    std::uint64_t cols = 0;
    std::uint64_t row_start = 0;  // first global row held here
    std::uint64_t local_rows = 0;
    std::span<const double> data; // local_rows * cols

    const double* row(std::uint64_t i) const noexcept { return data.data() + i * cols; }
};

// ---------------------------------------------------------------- ridge / CG

struct RidgeParams {
    double lambda = 1e-5;
    double tol = 1e-10;
    std::int64_t max_iter = 1000;
};

struct CgReport {
    std::vector<std::int64_t> iterations;     // per right-hand side
    std::vector<double> residuals;            // ||b - A w|| / ||b||, recomputed after the solve
    std::vector<bool> converged;
    double iter_seconds_mean = 0.0;
    double iter_seconds_std = 0.0;
};

struct CgResult {
    std::vector<double> w; // d x c row-major, replicated
    CgReport report;
};

/// Solves (X^T X + n*lambda*I) W = X^T Y with independent CG recurrences per
/// column of Y. The operator is applied matrix-free: local X_i v and
/// X_i^T (X_i v), then an all-reduce of the d-sized products.
CgResult cg_solve(Comm& comm, const BlockView& x, const BlockView& y, const RidgeParams& params);

/// v -> X^T X v + shift * v for a d x c block (row-major), summed over ranks.
std::vector<double> gram_apply(Comm& comm, const BlockView& x, std::span<const double> v,
                               std::size_t c, double shift);

// ------------------------------------------------------ random Fourier features

struct RandomFeatureParams {
    std::int64_t features = 1000; // D
    double sigma = 10.0;
    std::uint64_t seed = 0;
};

/// Draws the phase vector b (D values, uniform [0, 2pi)) then Omega
/// (d x D row-major, N(0, 1/sigma^2)) from one mt19937_64 seeded with `seed`.
void draw_feature_map(std::uint64_t d, const RandomFeatureParams& params,
                      std::vector<double>& omega, std::vector<double>& phase);

/// Local rows of Z = sqrt(2/D) cos(X Omega + b); no communication.
std::vector<double> random_features(const BlockView& x, const RandomFeatureParams& params);

// ------------------------------------------------------------ truncated SVD

struct SvdParams {
    std::int64_t k = 20;
    double tol = 1e-10;
    std::int64_t max_subspace = 0; // 0 = min(n, max(2k, k + 10))
    std::uint64_t seed = 0;
};

struct SvdResult {
    std::vector<double> s;             // k, descending
    std::vector<double> v;             // n x k row-major, replicated
    std::vector<double> u_local;       // local_rows x k row-major
    std::vector<bool> unreliable;      // sigma_j < sqrt(eps) * sigma_1
    std::vector<double> ritz_residuals;
    std::int64_t steps = 0;            // applications of A^T A
};

std::int64_t default_max_subspace(std::uint64_t n, std::int64_t k);

/// Thick-restart Lanczos with full reorthogonalization on G = A^T A.
SvdResult truncated_svd(Comm& comm, const BlockView& a, const SvdParams& params);

// --------------------------------------------------------------------- TSQR

struct TsqrResult {
    std::vector<double> q_local; // local_rows x n
    std::vector<double> r;       // n x n upper triangular, replicated, diag >= 0
};

/// Local Householder QR per block, binary-tree reduction of stacked R factors,
/// then Q rebuilt down the tree.
TsqrResult tsqr(Comm& comm, const BlockView& a);

// ------------------------------------------------------------ dense helpers

struct DenseQr {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t q_cols = 0;   // min(rows, cols)
    std::vector<double> q;    // rows x q_cols, orthonormal columns
    std::vector<double> r;    // q_cols x cols, upper trapezoidal
};

/// Thin Householder QR of a row-major rows x cols matrix.
DenseQr householder_qr(std::span<const double> a, std::size_t rows, std::size_t cols);

} // namespace alch::solver
