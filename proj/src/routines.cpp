#include "routines.hpp"

#include <limits>
#include <set>
#include <string>

#include "binfile.hpp"
#include "error.hpp"
#include "matrix_store.hpp"

namespace alch::routines {

namespace {

constexpr std::size_t kF64 = 0;
constexpr std::size_t kI64 = 1;
constexpr std::size_t kStr = 2;

bool any(const ParamValue&) { return true; }
bool nonneg_f64(const ParamValue& v) { return std::get<double>(v) >= 0.0; }
bool pos_f64(const ParamValue& v) { return std::get<double>(v) > 0.0; }
bool pos_i64(const ParamValue& v) { return std::get<std::int64_t>(v) >= 1; }
bool nonneg_i64(const ParamValue& v) { return std::get<std::int64_t>(v) >= 0; }
bool nonempty_str(const ParamValue& v) { return !std::get<std::string>(v).empty(); }

std::string idx(const char* prefix, std::size_t i) { return std::string(prefix) + "." + std::to_string(i); }

void run_tsqr(TaskContext& ctx) {
    const auto& a = ctx.inputs[0];
    auto res = solver::tsqr(ctx.comm, a);
    ctx.emit_local(a.rows, a.cols, std::move(res.q_local));
    ctx.emit_replicated(a.cols, a.cols, res.r);
}

void run_cg(TaskContext& ctx) {
    const auto& x = ctx.inputs[0];
    const auto& y = ctx.inputs[1];
    const auto n = *ctx.params.get<std::int64_t>("n");
    if (n != 0 && static_cast<std::uint64_t>(n) != x.rows) {
        throw Error(ErrorCode::SchemaViolation, "cg_solve: n=" + std::to_string(n) +
                                                    " differs from X rows " + std::to_string(x.rows));
    }
    solver::RidgeParams p;
    p.lambda = *ctx.params.get<double>("lambda");
    p.tol = *ctx.params.get<double>("tol");
    p.max_iter = *ctx.params.get<std::int64_t>("max_iter");
    auto res = solver::cg_solve(ctx.comm, x, y, p);
    ctx.emit_replicated(x.cols, y.cols, res.w);

    const auto& rep = res.report;
    std::int64_t max_it = 0;
    bool all = true;
    for (std::size_t j = 0; j < rep.iterations.size(); ++j) {
        max_it = std::max(max_it, rep.iterations[j]);
        all = all && rep.converged[j];
        ctx.scalars.set(idx("iterations", j), rep.iterations[j]);
        ctx.scalars.set(idx("residual", j), rep.residuals[j]);
        ctx.scalars.set(idx("converged", j), static_cast<bool>(rep.converged[j]));
    }
    ctx.scalars.set("columns", static_cast<std::int64_t>(rep.iterations.size()));
    ctx.scalars.set("iterations", max_it);
    ctx.scalars.set("converged", all);
    ctx.scalars.set("iter_time_mean_s", rep.iter_seconds_mean);
    ctx.scalars.set("iter_time_std_s", rep.iter_seconds_std);
}

void run_random_features(TaskContext& ctx) {
    const auto& x = ctx.inputs[0];
    solver::RandomFeatureParams p;
    p.features = *ctx.params.get<std::int64_t>("features");
    p.sigma = *ctx.params.get<double>("sigma");
    p.seed = static_cast<std::uint64_t>(*ctx.params.get<std::int64_t>("seed"));
    const auto D = static_cast<std::uint64_t>(p.features);
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() / sizeof(double);
    const bool overflow = x.rows != 0 && D > limit / x.rows;
    if (overflow || x.rows * D * sizeof(double) > ctx.memory_available) {
        throw Error(ErrorCode::ResourceExhausted,
                    "random_features: output needs " +
                        (overflow ? std::string("more than 2^64") : std::to_string(x.rows * D * sizeof(double))) +
                        " bytes, " + std::to_string(ctx.memory_available) + " available");
    }
    ctx.emit_local(x.rows, D, solver::random_features(x, p));
}

void run_svd(TaskContext& ctx) {
    const auto& a = ctx.inputs[0];
    solver::SvdParams p;
    p.k = *ctx.params.get<std::int64_t>("k");
    p.tol = *ctx.params.get<double>("tol");
    p.max_subspace = *ctx.params.get<std::int64_t>("max_subspace");
    p.seed = static_cast<std::uint64_t>(*ctx.params.get<std::int64_t>("seed"));
    auto res = solver::truncated_svd(ctx.comm, a, p);
    const auto k = static_cast<std::uint64_t>(p.k);
    ctx.emit_local(a.rows, k, std::move(res.u_local));
    ctx.emit_replicated(a.cols, k, res.v);
    ctx.scalars.set("k", p.k);
    ctx.scalars.set("steps", res.steps);
    for (std::size_t i = 0; i < res.s.size(); ++i) {
        ctx.scalars.set(idx("sigma", i), res.s[i]);
        ctx.scalars.set(idx("unreliable", i), static_cast<bool>(res.unreliable[i]));
        ctx.scalars.set(idx("ritz_residual", i), res.ritz_residuals[i]);
    }
}

void run_load_bin(TaskContext& ctx) {
    const auto path = *ctx.params.get<std::string>("path");
    const auto replicas = static_cast<std::uint64_t>(*ctx.params.get<std::int64_t>("replicas"));
    binfile::Header header;
    try {
        header = binfile::read_header(path);
    } catch (const Error& e) {
        throw Error(ErrorCode::InvalidRequest, std::string("load_bin: ") + e.what());
    }
    const std::uint64_t cols = header.cols * replicas;
    if (header.rows == 0 || header.cols == 0) {
        throw Error(ErrorCode::SchemaViolation, "load_bin: file holds an empty matrix");
    }
    if (header.rows * cols * sizeof(double) > ctx.memory_available) {
        throw Error(ErrorCode::ResourceExhausted, "load_bin: matrix needs " +
                                                      std::to_string(header.rows * cols * sizeof(double)) +
                                                      " bytes, " + std::to_string(ctx.memory_available) +
                                                      " available");
    }
    const auto [begin, end] = ctx.my_rows(header.rows);
    const auto raw = binfile::read_rows(path, begin, end - begin);
    std::vector<double> local((end - begin) * cols);
    for (std::uint64_t i = 0; i < end - begin; ++i) {
        for (std::uint64_t r = 0; r < replicas; ++r) {
            std::copy_n(raw.begin() + static_cast<std::ptrdiff_t>(i * header.cols), header.cols,
                        local.begin() + static_cast<std::ptrdiff_t>(i * cols + r * header.cols));
        }
    }
    ctx.emit_local(header.rows, cols, std::move(local));
    ctx.scalars.set("rows", static_cast<std::int64_t>(header.rows));
    ctx.scalars.set("cols", static_cast<std::int64_t>(cols));
}

std::vector<Library> make_libraries() {
    Library builtin;
    builtin.name = "builtin";
    builtin.path = "builtin";
    builtin.routines = {
        Routine{"tsqr", 1, {}, run_tsqr, "A (m x n, m >= n) -> Q (m x n), R (n x n)"},
        Routine{"cg_solve",
                2,
                {
                    {"lambda", kF64, ParamValue{1e-5}, nonneg_f64, "ridge regularization >= 0"},
                    {"tol", kF64, ParamValue{1e-10}, pos_f64, "relative residual threshold > 0"},
                    {"max_iter", kI64, ParamValue{std::int64_t{1000}}, pos_i64, "iteration cap >= 1"},
                    {"n", kI64, ParamValue{std::int64_t{0}}, nonneg_i64, "example count; 0 = rows of X"},
                },
                run_cg,
                "X (n x d), Y (n x c) -> W (d x c) solving (X^T X + n lambda I) W = X^T Y"},
        Routine{"random_features",
                1,
                {
                    {"features", kI64, ParamValue{std::int64_t{1000}}, pos_i64, "output dimension D >= 1"},
                    {"sigma", kF64, ParamValue{10.0}, pos_f64, "Gaussian bandwidth > 0"},
                    {"seed", kI64, ParamValue{std::int64_t{0}}, any, "feature map seed"},
                },
                run_random_features,
                "X (n x d) -> Z (n x D) = sqrt(2/D) cos(X Omega + b)"},
        Routine{"truncated_svd",
                1,
                {
                    {"k", kI64, ParamValue{std::int64_t{20}}, pos_i64, "rank, 1 <= k <= min(m, n)"},
                    {"tol", kF64, ParamValue{1e-10}, pos_f64, "Ritz residual threshold relative to theta_max"},
                    {"max_subspace", kI64, ParamValue{std::int64_t{0}}, nonneg_i64,
                     "Lanczos basis cap; 0 = min(n, max(2k, k + 10))"},
                    {"seed", kI64, ParamValue{std::int64_t{0}}, any, "start vector seed"},
                },
                run_svd,
                "A (m x n) -> U (m x k), V (n x k); sigma.<i> scalars"},
        Routine{"load_bin",
                0,
                {
                    {"path", kStr, std::nullopt, nonempty_str, "server-side matrix file"},
                    {"replicas", kI64, ParamValue{std::int64_t{1}}, pos_i64, "column-wise tiling factor"},
                },
                run_load_bin,
                "() -> A read from a matrix file, tiled column-wise"},
    };
    return {builtin};
}

} // namespace

std::pair<std::uint64_t, std::uint64_t> TaskContext::my_rows(std::uint64_t rows) const {
    const auto layout = store::plan_layout(rows, 1, static_cast<std::size_t>(size()));
    const auto& r = layout.ranges[static_cast<std::size_t>(rank())];
    return {r.begin, r.end};
}

void TaskContext::emit_replicated(std::uint64_t rows, std::uint64_t cols, std::span<const double> full) {
    const auto [begin, end] = my_rows(rows);
    std::vector<double> local(full.begin() + static_cast<std::ptrdiff_t>(begin * cols),
                              full.begin() + static_cast<std::ptrdiff_t>(end * cols));
    outputs.push_back({rows, cols, std::move(local)});
}

void TaskContext::emit_local(std::uint64_t rows, std::uint64_t cols, std::vector<double> local) {
    outputs.push_back({rows, cols, std::move(local)});
}

const Routine* Library::find(std::string_view routine) const noexcept {
    for (const auto& r : routines) {
        if (r.name == routine) return &r;
    }
    return nullptr;
}

const std::vector<Library>& libraries() {
    static const std::vector<Library> libs = make_libraries();
    return libs;
}

const Library* find_library(std::string_view name) noexcept {
    for (const auto& lib : libraries()) {
        if (lib.name == name) return &lib;
    }
    return nullptr;
}

ParamMap resolve_params(const Routine& routine, const ParamMap& given) {
    static const char* tag_names[] = {"f64", "i64", "string", "bool", "matrix"};
    std::set<std::string> known;
    ParamMap out;
    for (const auto& spec : routine.params) {
        known.insert(spec.name);
        const ParamValue* v = given.find(spec.name);
        if (v == nullptr) {
            if (!spec.default_value) {
                throw Error(ErrorCode::SchemaViolation,
                            routine.name + ": missing required parameter '" + spec.name + "'");
            }
            out.set(spec.name, *spec.default_value);
            continue;
        }
        if (v->index() != spec.tag) {
            throw Error(ErrorCode::SchemaViolation, routine.name + ": parameter '" + spec.name +
                                                        "' must be " + tag_names[spec.tag] + ", got " +
                                                        tag_names[v->index()]);
        }
        if (!spec.valid(*v)) {
            throw Error(ErrorCode::SchemaViolation, routine.name + ": parameter '" + spec.name +
                                                        "' out of range (" + spec.doc + ")");
        }
        out.set(spec.name, *v);
    }
    for (const auto& [key, value] : given.entries()) {
        if (!known.contains(key)) {
            throw Error(ErrorCode::SchemaViolation, routine.name + ": unknown parameter '" + key + "'");
        }
    }
    return out;
}

} // namespace alch::routines
