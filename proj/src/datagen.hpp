#pragma once

// Seeded synthetic matrices standing in for the case-study datasets.

#include <cstdint>
#include <string>
#include <vector>

namespace alch::datagen {

enum class Kind { Gaussian, LowRank, SpeechLike };

/// "gaussian", "lowrank", "speech-like"; throws InvalidArgument otherwise.
Kind parse_kind(const std::string& name);

struct Spec {
    Kind kind = Kind::Gaussian;
    std::uint64_t rows = 0;
    std::uint64_t cols = 0;
    std::uint64_t seed = 0;
    std::uint64_t rank = 10;     // lowrank
    double noise = 1e-2;         // lowrank: std-dev of the additive noise
    std::uint64_t labels = 147;  // speech-like: one-hot label columns
};

struct Dataset {
    std::uint64_t rows = 0;
    std::uint64_t cols = 0;
    std::vector<double> data;            // row-major
    std::vector<double> spectrum;        // lowrank: planted singular values, descending
    std::uint64_t label_cols = 0;
    std::vector<double> labels;          // speech-like: rows x labels one-hot
};

Dataset generate(const Spec& spec);

/// Writes the matrix file at `path`; lowrank adds `<path>.spectrum.json`,
/// speech-like adds `<path>.labels` (a matrix file of one-hot labels).
void write(const Spec& spec, const std::string& path);

} // namespace alch::datagen
