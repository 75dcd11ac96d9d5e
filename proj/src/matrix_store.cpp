#include "matrix_store.hpp"

#include <algorithm>
#include <cstring>
#include <limits>

#include "error.hpp"

namespace alch::store {

Layout plan_layout(std::uint64_t rows, std::uint64_t cols, std::size_t p,
                   std::span<const std::uint16_t> worker_ids) {
    if (p == 0) throw Error(ErrorCode::InvalidArgument, "plan_layout: p must be >= 1");
    if (!worker_ids.empty() && worker_ids.size() != p) {
        throw Error(ErrorCode::InvalidArgument, "plan_layout: worker id count differs from p");
    }
    Layout layout;
    layout.rows = rows;
    layout.cols = cols;
    layout.block = std::max<std::uint64_t>(1, (rows + p - 1) / p);
    layout.ranges.reserve(p);
    for (std::size_t w = 0; w < p; ++w) {
        const std::uint64_t begin = std::min<std::uint64_t>(w * layout.block, rows);
        const std::uint64_t end = std::min<std::uint64_t>((w + 1) * layout.block, rows);
        const auto id = worker_ids.empty() ? static_cast<std::uint16_t>(w) : worker_ids[w];
        layout.ranges.push_back({id, begin, end});
    }
    return layout;
}

std::vector<std::vector<std::size_t>> route_rows(const Layout& layout,
                                                 std::span<const std::uint64_t> indices) {
    std::vector<std::vector<std::size_t>> batches(layout.workers());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= layout.rows) {
            throw Error(ErrorCode::RowOutOfRange,
                        "row " + std::to_string(indices[i]) + " outside a " +
                            std::to_string(layout.rows) + "-row matrix");
        }
        batches[layout.owner(indices[i])].push_back(i);
    }
    return batches;
}

Shard::Shard(std::uint64_t matrix_id, std::uint64_t cols, std::uint64_t row_start,
             std::uint64_t row_end)
    : matrix_id_(matrix_id), cols_(cols), row_start_(row_start), row_end_(row_end),
      data_((row_end - row_start) * cols, 0.0), filled_(row_end - row_start, false) {}

Shard Shard::filled(std::uint64_t matrix_id, std::uint64_t cols, std::uint64_t row_start,
                    std::vector<double> data) {
    const std::uint64_t rows = cols == 0 ? 0 : data.size() / cols;
    Shard s(matrix_id, cols, row_start, row_start);
    s.row_end_ = row_start + rows;
    s.data_ = std::move(data);
    s.filled_.assign(rows, true);
    s.filled_count_ = rows;
    return s;
}

void Shard::ingest(std::uint64_t row_index, std::span<const double> values) {
    if (row_index < row_start_ || row_index >= row_end_) {
        throw Error(ErrorCode::RowOutOfRange, "row " + std::to_string(row_index) +
                                                  " outside shard [" + std::to_string(row_start_) +
                                                  "," + std::to_string(row_end_) + ")");
    }
    if (values.size() != cols_) {
        throw Error(ErrorCode::WidthMismatch, "row " + std::to_string(row_index) + " has " +
                                                  std::to_string(values.size()) + " values, expected " +
                                                  std::to_string(cols_));
    }
    const std::uint64_t local = row_index - row_start_;
    if (filled_[local]) {
        throw Error(ErrorCode::DuplicateRow, "row " + std::to_string(row_index) + " sent twice");
    }
    if (cols_ > 0) std::memcpy(data_.data() + local * cols_, values.data(), cols_ * sizeof(double));
    filled_[local] = true;
    ++filled_count_;
}

void Shard::ingest(const RowBatch& batch) {
    if (batch.size() > 0 && batch.cols != cols_) {
        throw Error(ErrorCode::WidthMismatch, "batch has " + std::to_string(batch.cols) +
                                                  " columns, matrix has " + std::to_string(cols_));
    }
    std::vector<std::uint64_t> seen;
    seen.reserve(batch.size());
    for (auto idx : batch.indices) {
        if (idx < row_start_ || idx >= row_end_) {
            throw Error(ErrorCode::RowOutOfRange, "row " + std::to_string(idx) +
                                                      " outside shard [" + std::to_string(row_start_) +
                                                      "," + std::to_string(row_end_) + ")");
        }
        if (filled_[idx - row_start_]) {
            throw Error(ErrorCode::DuplicateRow, "row " + std::to_string(idx) + " sent twice");
        }
        seen.push_back(idx);
    }
    std::sort(seen.begin(), seen.end());
    if (std::adjacent_find(seen.begin(), seen.end()) != seen.end()) {
        throw Error(ErrorCode::DuplicateRow, "row repeated within one batch");
    }
    for (std::size_t i = 0; i < batch.size(); ++i) ingest(batch.indices[i], batch.row(i));
}

RowBatch Shard::extract(std::uint64_t row_start, std::uint64_t row_count) const {
    if (!complete()) {
        throw Error(ErrorCode::IncompleteMatrix, "shard of matrix " + std::to_string(matrix_id_) +
                                                     " is still filling");
    }
    if (row_start < row_start_ || row_start + row_count > row_end_ ||
        row_start + row_count < row_start) {
        throw Error(ErrorCode::RowOutOfRange, "requested rows outside shard [" +
                                                  std::to_string(row_start_) + "," +
                                                  std::to_string(row_end_) + ")");
    }
    RowBatch out;
    out.cols = row_count == 0 ? 0 : cols_;
    out.indices.reserve(row_count);
    for (std::uint64_t r = 0; r < row_count; ++r) out.indices.push_back(row_start + r);
    const auto first = data_.begin() + static_cast<std::ptrdiff_t>((row_start - row_start_) * cols_);
    out.values.assign(first, first + static_cast<std::ptrdiff_t>(row_count * cols_));
    return out;
}

Registry::Registry(std::uint64_t memory_budget_bytes) : budget_(memory_budget_bytes) {}

MatrixRecord Registry::create(std::uint32_t session, std::uint64_t rows, std::uint64_t cols,
                              std::span<const std::uint16_t> workers) {
    if (rows == 0 || cols == 0) {
        throw Error(ErrorCode::InvalidRequest, "matrix dimensions must be positive");
    }
    std::lock_guard lock(mutex_);
    const std::uint64_t avail = budget_ - used_;
    const bool overflow = rows > std::numeric_limits<std::uint64_t>::max() / cols / sizeof(double);
    const std::uint64_t need = overflow ? 0 : rows * cols * sizeof(double);
    if (overflow || need > avail) {
        throw Error(ErrorCode::ResourceExhausted,
                    "matrix needs " + (overflow ? std::string("more than 2^64") : std::to_string(need)) +
                        " bytes, " + std::to_string(avail) + " available");
    }
    MatrixRecord rec;
    rec.id = next_id_++;
    rec.session = session;
    rec.rows = rows;
    rec.cols = cols;
    rec.layout = plan_layout(rows, cols, workers.size(), workers);
    used_ += need;
    records_.emplace(rec.id, rec);
    return rec;
}

MatrixRecord Registry::get(std::uint32_t session, std::uint64_t id) const {
    std::lock_guard lock(mutex_);
    auto it = records_.find(id);
    if (it == records_.end() || it->second.session != session ||
        it->second.state == MatrixState::Released) {
        throw Error(ErrorCode::UnknownMatrix, "unknown matrix " + std::to_string(id));
    }
    return it->second;
}

void Registry::mark_ready(std::uint64_t id) {
    std::lock_guard lock(mutex_);
    auto it = records_.find(id);
    if (it != records_.end() && it->second.state == MatrixState::Filling) {
        it->second.state = MatrixState::Ready;
    }
}

bool Registry::release(std::uint32_t session, std::uint64_t id) {
    std::lock_guard lock(mutex_);
    auto it = records_.find(id);
    if (it == records_.end() || it->second.session != session) {
        throw Error(ErrorCode::UnknownMatrix, "unknown matrix " + std::to_string(id));
    }
    if (it->second.state == MatrixState::Released) return false;
    it->second.state = MatrixState::Released;
    used_ -= it->second.bytes();
    return true;
}

std::vector<std::uint64_t> Registry::live_ids(std::uint32_t session) const {
    std::lock_guard lock(mutex_);
    std::vector<std::uint64_t> ids;
    for (const auto& [id, rec] : records_) {
        if (rec.session == session && rec.state != MatrixState::Released) ids.push_back(id);
    }
    return ids;
}

std::uint64_t Registry::bytes_in_use() const {
    std::lock_guard lock(mutex_);
    return used_;
}

std::uint64_t Registry::bytes_available() const {
    std::lock_guard lock(mutex_);
    return budget_ - used_;
}

std::size_t Registry::live_count() const {
    std::lock_guard lock(mutex_);
    return static_cast<std::size_t>(std::count_if(records_.begin(), records_.end(), [](const auto& kv) {
        return kv.second.state != MatrixState::Released;
    }));
}

} // namespace alch::store
