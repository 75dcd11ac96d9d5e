#include <cmath>
#include <numbers>
#include <random>

#include "../error.hpp"
#include "solver.hpp"

namespace alch::solver {

void draw_feature_map(std::uint64_t d, const RandomFeatureParams& params,
                      std::vector<double>& omega, std::vector<double>& phase) {
    if (params.features < 1) throw Error(ErrorCode::SchemaViolation, "random_features: D < 1");
    if (!(params.sigma > 0.0)) throw Error(ErrorCode::SchemaViolation, "random_features: sigma <= 0");
    const auto D = static_cast<std::size_t>(params.features);
    std::mt19937_64 rng(params.seed);
    std::uniform_real_distribution<double> uniform(0.0, 2.0 * std::numbers::pi);
    std::normal_distribution<double> normal(0.0, 1.0 / params.sigma);
    phase.resize(D);
    for (auto& b : phase) b = uniform(rng);
    omega.resize(d * D);
    for (auto& w : omega) w = normal(rng);
}

std::vector<double> random_features(const BlockView& x, const RandomFeatureParams& params) {
    std::vector<double> omega, phase;
    draw_feature_map(x.cols, params, omega, phase);
    const auto D = static_cast<std::size_t>(params.features);
    const double scale = std::sqrt(2.0 / static_cast<double>(D));

    std::vector<double> z(x.local_rows * D);
    for (std::uint64_t i = 0; i < x.local_rows; ++i) {
        double* zi = z.data() + i * D;
        std::copy(phase.begin(), phase.end(), zi);
        const double* xi = x.row(i);
        for (std::uint64_t k = 0; k < x.cols; ++k) {
            const double xik = xi[k];
            if (xik == 0.0) continue;
            const double* wk = omega.data() + k * D;
            for (std::size_t j = 0; j < D; ++j) zi[j] += xik * wk[j];
        }
        for (std::size_t j = 0; j < D; ++j) zi[j] = scale * std::cos(zi[j]);
    }
    return z;
}

} // namespace alch::solver
