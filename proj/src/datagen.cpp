#include "datagen.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include <json.hpp>

#include "binfile.hpp"
#include "error.hpp"
#include "solver/solver.hpp"

namespace alch::datagen {

namespace {

std::vector<double> gaussian(std::mt19937_64& rng, std::size_t n, double stddev = 1.0) {
    std::normal_distribution<double> normal(0.0, stddev);
    std::vector<double> v(n);
    for (auto& x : v) x = normal(rng);
    return v;
}

// rows x r matrix with orthonormal columns.
std::vector<double> orthonormal(std::mt19937_64& rng, std::uint64_t rows, std::uint64_t r) {
    return solver::householder_qr(gaussian(rng, rows * r), rows, r).q;
}

} // namespace

Kind parse_kind(const std::string& name) {
    if (name == "gaussian") return Kind::Gaussian;
    if (name == "lowrank") return Kind::LowRank;
    if (name == "speech-like") return Kind::SpeechLike;
    throw Error(ErrorCode::InvalidArgument, "unknown datagen kind '" + name + "'");
}

Dataset generate(const Spec& spec) {
    if (spec.rows == 0 || spec.cols == 0) {
        throw Error(ErrorCode::InvalidArgument, "datagen: rows and cols must be positive");
    }
    std::mt19937_64 rng(spec.seed);
    Dataset out;
    out.rows = spec.rows;
    out.cols = spec.cols;

    switch (spec.kind) {
    case Kind::Gaussian:
        out.data = gaussian(rng, spec.rows * spec.cols);
        break;

    case Kind::LowRank: {
        const std::uint64_t r = spec.rank;
        if (r == 0 || r > std::min(spec.rows, spec.cols)) {
            throw Error(ErrorCode::InvalidArgument, "datagen: lowrank needs 1 <= rank <= min(rows, cols)");
        }
        // A = U diag(s) V^T + noise, s_i = 100 * 0.9^i
        const auto u = orthonormal(rng, spec.rows, r);
        const auto v = orthonormal(rng, spec.cols, r);
        out.spectrum.resize(r);
        for (std::uint64_t i = 0; i < r; ++i) out.spectrum[i] = 100.0 * std::pow(0.9, static_cast<double>(i));
        out.data = gaussian(rng, spec.rows * spec.cols, spec.noise);
        for (std::uint64_t i = 0; i < spec.rows; ++i) {
            double* row = out.data.data() + i * spec.cols;
            for (std::uint64_t l = 0; l < r; ++l) {
                const double us = u[i * r + l] * out.spectrum[l];
                for (std::uint64_t j = 0; j < spec.cols; ++j) row[j] += us * v[j * r + l];
            }
        }
        break;
    }

    case Kind::SpeechLike: {
        if (spec.labels == 0) throw Error(ErrorCode::InvalidArgument, "datagen: labels must be positive");
        // Class centroids plus per-frame noise; labels one-hot.
        const auto centroids = gaussian(rng, spec.labels * spec.cols);
        std::uniform_int_distribution<std::uint64_t> pick(0, spec.labels - 1);
        std::normal_distribution<double> noise(0.0, 0.5);
        out.data.resize(spec.rows * spec.cols);
        out.label_cols = spec.labels;
        out.labels.assign(spec.rows * spec.labels, 0.0);
        for (std::uint64_t i = 0; i < spec.rows; ++i) {
            const auto c = pick(rng);
            out.labels[i * spec.labels + c] = 1.0;
            for (std::uint64_t j = 0; j < spec.cols; ++j) {
                out.data[i * spec.cols + j] = centroids[c * spec.cols + j] + noise(rng);
            }
        }
        break;
    }
    }
    return out;
}

void write(const Spec& spec, const std::string& path) {
    const auto ds = generate(spec);
    binfile::write(path, ds.rows, ds.cols, ds.data);
    if (spec.kind == Kind::LowRank) {
        nlohmann::json side = {
            {"kind", "lowrank"},        {"rows", ds.rows},   {"cols", ds.cols},
            {"rank", spec.rank},        {"noise", spec.noise}, {"seed", spec.seed},
            {"singular_values", ds.spectrum},
        };
        std::ofstream out(path + ".spectrum.json");
        if (!out) throw Error(ErrorCode::Io, "cannot create '" + path + ".spectrum.json'");
        out << side.dump(2) << '\n';
    }
    if (spec.kind == Kind::SpeechLike) {
        binfile::write(path + ".labels", ds.rows, ds.label_cols, ds.labels);
    }
}

} // namespace alch::datagen
