#pragma once

// Server-side distributed dense matrices: 1D block-row layout, per-worker
// shards and the driver's handle registry.
//
// Shard memory is row-major: local row `i` (global row `row_start + i`)
// occupies values [i * cols, (i + 1) * cols).

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "rows.hpp"

namespace alch::store {

struct RowRange {
    std::uint16_t worker_id = 0;
    std::uint64_t begin = 0;
    std::uint64_t end = 0; // exclusive

    std::uint64_t size() const noexcept { return end - begin; }
    bool operator==(const RowRange&) const = default;
};

struct Layout {
    std::uint64_t rows = 0;
    std::uint64_t cols = 0;
    std::uint64_t block = 0; // ceil(rows / p), at least 1
    std::vector<RowRange> ranges;

    std::size_t workers() const noexcept { return ranges.size(); }
    /// Position (not worker id) of the owner of `row`.
    std::size_t owner(std::uint64_t row) const noexcept { return static_cast<std::size_t>(row / block); }
};

/// Worker w (by position) owns [w*ceil(rows/p), min((w+1)*ceil(rows/p), rows)).
/// `worker_ids` names the participants; defaults to 0..p-1.
Layout plan_layout(std::uint64_t rows, std::uint64_t cols, std::size_t p,
                   std::span<const std::uint16_t> worker_ids = {});

/// Positions into `indices` grouped by owning worker, preserving input order.
std::vector<std::vector<std::size_t>> route_rows(const Layout& layout,
                                                 std::span<const std::uint64_t> indices);

/// One worker's rows of one matrix.
class Shard {
  public:
    Shard(std::uint64_t matrix_id, std::uint64_t cols, std::uint64_t row_start,
          std::uint64_t row_end);

    /// A shard that is complete from the start (routine outputs).
    static Shard filled(std::uint64_t matrix_id, std::uint64_t cols, std::uint64_t row_start,
                        std::vector<double> data);

    /// Stores one row; rejects out-of-range indices, wrong widths and duplicates.
    void ingest(std::uint64_t row_index, std::span<const double> values);
    /// Stores every row of `batch`; validates the whole batch before writing.
    void ingest(const RowBatch& batch);

    RowBatch extract(std::uint64_t row_start, std::uint64_t row_count) const;

    bool complete() const noexcept { return filled_count_ == row_end_ - row_start_; }
    std::uint64_t missing() const noexcept { return row_end_ - row_start_ - filled_count_; }

    std::uint64_t matrix_id() const noexcept { return matrix_id_; }
    std::uint64_t cols() const noexcept { return cols_; }
    std::uint64_t row_start() const noexcept { return row_start_; }
    std::uint64_t row_end() const noexcept { return row_end_; }
    std::uint64_t local_rows() const noexcept { return row_end_ - row_start_; }
    std::span<const double> data() const noexcept { return data_; }

  private:
    std::uint64_t matrix_id_;
    std::uint64_t cols_;
    std::uint64_t row_start_;
    std::uint64_t row_end_;
    std::vector<double> data_;
    std::vector<bool> filled_;
    std::uint64_t filled_count_ = 0;
};

enum class MatrixState { Filling, Ready, Released };

struct MatrixRecord {
    std::uint64_t id = 0;
    std::uint32_t session = 0;
    std::uint64_t rows = 0;
    std::uint64_t cols = 0;
    Layout layout;
    MatrixState state = MatrixState::Filling;

    std::uint64_t bytes() const noexcept { return rows * cols * sizeof(double); }
};

/// Driver-side handle table. Ids increase strictly and are never reused;
/// released matrices stay as tombstones so double releases stay idempotent.
class Registry {
  public:
    explicit Registry(std::uint64_t memory_budget_bytes);

    /// Reserves memory and returns a new record in `Filling`.
    /// Throws ResourceExhausted when the budget cannot hold rows x cols doubles.
    MatrixRecord create(std::uint32_t session, std::uint64_t rows, std::uint64_t cols,
                        std::span<const std::uint16_t> workers);

    /// Record lookup for `session`; released, unknown or foreign ids throw UnknownMatrix.
    MatrixRecord get(std::uint32_t session, std::uint64_t id) const;

    void mark_ready(std::uint64_t id);
    /// Returns true when the matrix was live and is now released.
    bool release(std::uint32_t session, std::uint64_t id);

    std::vector<std::uint64_t> live_ids(std::uint32_t session) const;
    std::uint64_t bytes_in_use() const;
    std::uint64_t bytes_available() const;
    std::size_t live_count() const;

  private:
    mutable std::mutex mutex_;
    std::uint64_t budget_;
    std::uint64_t used_ = 0;
    std::uint64_t next_id_ = 1;
    std::map<std::uint64_t, MatrixRecord> records_;
};

} // namespace alch::store
