#pragma once

// Strict reader for parameter objects: typed lookups that name the failing
// field, and a final check that rejects unknown keys.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <string>
#include <type_traits>
#include <vector>

#include <json.hpp>

#include "viewscale/error.hpp"

namespace viewscale::detail {

using nlohmann::json;

// JSON has no infinity; non-finite values travel as strings.
inline json number_or_string(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

inline double to_double(const json& v, const std::string& name) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const auto& s = v.get_ref<const std::string&>();
    if (s == "inf" || s == "infinity" || s == "+inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf" || s == "-infinity") return -std::numeric_limits<double>::infinity();
  }
  throw InputError(name + ": expected a number");
}

class Fields {
 public:
  Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    require(j_.is_object(), where_ + ": expected a table");
  }

  bool has(const char* key) const { return j_.contains(key); }
  std::string name(const char* key) const { return where_ + "." + key; }

  const json* raw(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void get(const char* key, double& out) {
    if (const auto* v = raw(key)) out = to_double(*v, name(key));
  }

  void get(const char* key, bool& out) {
    if (const auto* v = raw(key)) {
      require(v->is_boolean(), name(key) + ": expected true or false");
      out = v->get<bool>();
    }
  }

  void get(const char* key, std::string& out) {
    if (const auto* v = raw(key)) {
      require(v->is_string(), name(key) + ": expected a string");
      out = v->get<std::string>();
    }
  }

  void get(const char* key, int& out) {
    if (const auto* v = raw(key)) {
      require(v->is_number_integer(), name(key) + ": expected an integer");
      const auto x = v->get<std::int64_t>();
      require(x >= std::numeric_limits<int>::min() && x <= std::numeric_limits<int>::max(),
              name(key) + ": integer out of range");
      out = static_cast<int>(x);
    }
  }

  template <class T>
    requires(std::is_unsigned_v<T> && !std::is_same_v<T, bool>)
  void get(const char* key, T& out) {
    if (const auto* v = raw(key)) {
      const auto x = to_count(*v, name(key));
      require(x <= std::numeric_limits<T>::max(), name(key) + ": integer out of range");
      out = static_cast<T>(x);
    }
  }

  template <std::size_t N>
  void get(const char* key, std::array<double, N>& out) {
    if (const auto* v = raw(key)) {
      require(v->is_array() && v->size() == N,
              name(key) + ": expected an array of " + std::to_string(N) + " numbers");
      for (std::size_t i = 0; i < N; ++i) out[i] = to_double((*v)[i], name(key));
    }
  }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key)) throw InputError(where_ + "." + key + ": unknown key");
  }

  static std::uint64_t to_count(const json& v, const std::string& name) {
    require(v.is_number_integer() && (v.is_number_unsigned() || v.get<std::int64_t>() >= 0),
            name + ": expected a nonnegative integer");
    return v.get<std::uint64_t>();
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

}  // namespace viewscale::detail
