#pragma once

// Compile-time library registry: the routines a client can invoke by name,
// each with its input arity and parameter schema.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "collective.hpp"
#include "params.hpp"
#include "solver/solver.hpp"

namespace alch::routines {

/// One distributed output: global shape plus this participant's rows
/// (its block-row range for the task's worker count).
struct OutputBlock {
    std::uint64_t rows = 0;
    std::uint64_t cols = 0;
    std::vector<double> local;
};

struct TaskContext {
    Comm comm;
    std::vector<solver::BlockView> inputs;
    ParamMap params; // resolved: defaults filled in
    std::uint64_t memory_available = 0;

    std::vector<OutputBlock> outputs;
    ParamMap scalars; // reported from rank 0

    int rank() const noexcept { return comm.rank(); }
    int size() const noexcept { return comm.size(); }

    /// [begin, end) of this participant's rows of a `rows`-row output.
    std::pair<std::uint64_t, std::uint64_t> my_rows(std::uint64_t rows) const;
    /// Emits an output held in full (row-major) on every participant.
    void emit_replicated(std::uint64_t rows, std::uint64_t cols, std::span<const double> full);
    void emit_local(std::uint64_t rows, std::uint64_t cols, std::vector<double> local);
};

struct ParamSpec {
    std::string name;
    std::size_t tag;                          // ParamValue alternative index
    std::optional<ParamValue> default_value;  // nullopt = required
    std::function<bool(const ParamValue&)> valid;
    std::string doc;
};

struct Routine {
    std::string name;
    std::size_t input_count;
    std::vector<ParamSpec> params;
    std::function<void(TaskContext&)> run;
    std::string doc;
};

struct Library {
    std::string name;
    std::string path; // accepted REGISTER_LIBRARY path besides the empty string
    std::vector<Routine> routines;

    const Routine* find(std::string_view routine) const noexcept;
};

const std::vector<Library>& libraries();
const Library* find_library(std::string_view name) noexcept;

/// Checks `given` against the schema and fills defaults.
/// Throws Error(SchemaViolation) for unknown keys, wrong tags, failed checks, missing keys.
ParamMap resolve_params(const Routine& routine, const ParamMap& given);

} // namespace alch::routines
