#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace alch {

struct MatrixRef {
    std::uint64_t id = 0;
    bool operator==(const MatrixRef&) const = default;
};

/// Alternative index equals the wire type tag: 0=f64, 1=i64, 2=string, 3=bool, 4=matrix handle.
using ParamValue = std::variant<double, std::int64_t, std::string, bool, MatrixRef>;

/// Ordered key/value map with unique keys; insertion order is preserved on the wire.
class ParamMap {
  public:
    using Entry = std::pair<std::string, ParamValue>;

    ParamMap() = default;

    /// Inserts or replaces.
    ParamMap& set(std::string key, ParamValue value);

    const ParamValue* find(std::string_view key) const noexcept;
    bool contains(std::string_view key) const noexcept { return find(key) != nullptr; }

    template <typename T>
    std::optional<T> get(std::string_view key) const {
        const ParamValue* v = find(key);
        if (v == nullptr) return std::nullopt;
        if (const T* t = std::get_if<T>(v)) return *t;
        return std::nullopt;
    }

    const std::vector<Entry>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }

    bool operator==(const ParamMap&) const = default;

  private:
    std::vector<Entry> entries_;
};

inline ParamMap& ParamMap::set(std::string key, ParamValue value) {
    for (auto& [k, v] : entries_) {
        if (k == key) {
            v = std::move(value);
            return *this;
        }
    }
    entries_.emplace_back(std::move(key), std::move(value));
    return *this;
}

inline const ParamValue* ParamMap::find(std::string_view key) const noexcept {
    for (const auto& [k, v] : entries_) {
        if (k == key) return &v;
    }
    return nullptr;
}

} // namespace alch
