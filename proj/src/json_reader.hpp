#ifndef REPCTL_SRC_JSON_READER_HPP
#define REPCTL_SRC_JSON_READER_HPP

// Field-by-field JSON reading that records every problem instead of stopping
// at the first one.

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "repctl/errors.hpp"

namespace repctl::detail {

inline std::string join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

class Reader {
 public:
  using json = nlohmann::json;

  explicit Reader(std::vector<FieldError>& errors) : errors_(errors) {}

  bool object(const json& doc, const std::string& path,
              std::initializer_list<const char*> allowed, const char* root = "problem") {
    if (!doc.is_object()) {
      fail(path.empty() ? root : path, "expected an object");
      return false;
    }
    for (const auto& [key, _] : doc.items()) {
      bool known = false;
      for (const char* a : allowed) known = known || key == a;
      if (!known) fail(join(path, key), "unknown key");
    }
    return true;
  }

  std::optional<double> number(const json& doc, const std::string& path,
                               const char* key, std::optional<double> fallback) {
    auto it = doc.find(key);
    if (it == doc.end()) {
      if (!fallback) fail(join(path, key), "missing required key");
      return fallback;
    }
    if (!it->is_number()) {
      fail(join(path, key), "expected a number");
      return std::nullopt;
    }
    return it->get<double>();
  }

  /// Non-negative integer no larger than `max`.
  std::optional<std::uint64_t> count(const json& doc, const std::string& path, const char* key,
                                     std::optional<std::uint64_t> fallback,
                                     std::uint64_t max = std::numeric_limits<std::uint64_t>::max()) {
    auto it = doc.find(key);
    if (it == doc.end()) {
      if (!fallback) fail(join(path, key), "missing required key");
      return fallback;
    }
    if (it->is_number_unsigned() && it->get<std::uint64_t>() <= max)
      return it->get<std::uint64_t>();
    if (it->is_number_integer() && it->get<std::int64_t>() >= 0 &&
        static_cast<std::uint64_t>(it->get<std::int64_t>()) <= max)
      return static_cast<std::uint64_t>(it->get<std::int64_t>());
    if (it->is_number_float()) {
      const double x = it->get<double>();
      if (x >= 0.0 && x <= static_cast<double>(max) && std::floor(x) == x)
        return static_cast<std::uint64_t>(x);
    }
    fail(join(path, key), "expected a non-negative integer");
    return std::nullopt;
  }

  std::optional<bool> boolean(const json& doc, const std::string& path, const char* key,
                              std::optional<bool> fallback) {
    auto it = doc.find(key);
    if (it == doc.end()) {
      if (!fallback) fail(join(path, key), "missing required key");
      return fallback;
    }
    if (!it->is_boolean()) {
      fail(join(path, key), "expected true or false");
      return std::nullopt;
    }
    return it->get<bool>();
  }

  std::optional<std::string> choice(const json& doc, const std::string& path, const char* key,
                                    std::initializer_list<const char*> options,
                                    std::optional<std::string> fallback = std::nullopt) {
    auto it = doc.find(key);
    if (it == doc.end()) {
      if (!fallback) fail(join(path, key), "missing required key");
      return fallback;
    }
    if (it->is_string()) {
      const auto s = it->get<std::string>();
      for (const char* o : options)
        if (s == o) return s;
    }
    std::string msg = "expected one of:";
    for (const char* o : options) msg += std::string(" ") + o;
    fail(join(path, key), msg);
    return std::nullopt;
  }

  std::optional<std::string> kind(const json& doc, const std::string& path,
                                  std::initializer_list<const char*> options) {
    return choice(doc, path, "kind", options);
  }

  std::optional<std::vector<double>> numbers(const json& doc, const std::string& path,
                                             const char* key) {
    auto it = doc.find(key);
    if (it == doc.end()) {
      fail(join(path, key), "missing required key");
      return std::nullopt;
    }
    bool ok = it->is_array();
    std::vector<double> out;
    if (ok)
      for (const auto& x : *it) {
        if (!x.is_number()) {
          ok = false;
          break;
        }
        out.push_back(x.get<double>());
      }
    if (!ok) {
      fail(join(path, key), "expected an array of numbers");
      return std::nullopt;
    }
    return out;
  }

  void fail(std::string field, std::string message) {
    errors_.push_back({std::move(field), std::move(message)});
  }

  std::size_t error_count() const { return errors_.size(); }

 private:
  std::vector<FieldError>& errors_;
};

}  // namespace repctl::detail

#endif  // REPCTL_SRC_JSON_READER_HPP
