#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace alch {

/// A group of indexed rows of one matrix. `values` is row-major,
/// `indices.size() * cols` long; rows appear in the order of `indices`.
struct RowBatch {
    std::uint64_t cols = 0;
    std::vector<std::uint64_t> indices;
    std::vector<double> values;

    std::size_t size() const noexcept { return indices.size(); }

    std::span<const double> row(std::size_t i) const noexcept {
        return {values.data() + i * cols, static_cast<std::size_t>(cols)};
    }

    void append(std::uint64_t index, std::span<const double> row) {
        indices.push_back(index);
        values.insert(values.end(), row.begin(), row.end());
    }

    bool operator==(const RowBatch&) const = default;
};

} // namespace alch
