#pragma once

/**
 * Checkpoint value types.
 *
 * A Checkpoint is an ordered (lexicographic by name) map of named dense
 * float32 tensors plus an optional string-to-string metadata map. Tensors
 * are row-major and immutable by convention once a checkpoint is built.
 */

#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "ckmerge/errors.hpp"

namespace ckmerge {

struct Tensor {
  std::vector<std::int64_t> shape;
  std::vector<float> data;

  std::int64_t numel() const {
    std::int64_t n = 1;
    for (std::int64_t d : shape) n *= d;
    return n;
  }
};

inline bool tensors_equal(const Tensor& a, const Tensor& b) {
  if (a.shape != b.shape) return false;
  if (a.data.size() != b.data.size()) return false;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    // Bit comparison, so -0.0f vs 0.0f and NaN payloads are distinguished.
    if (std::bit_cast<std::uint32_t>(a.data[i]) != std::bit_cast<std::uint32_t>(b.data[i]))
      return false;
  }
  return true;
}

struct Checkpoint {
  std::map<std::string, Tensor> tensors;
  std::map<std::string, std::string> meta;

  std::int64_t numel() const {
    std::int64_t n = 0;
    for (const auto& [name, t] : tensors) n += t.numel();
    return n;
  }

  // Throws ValidationError on the first violated invariant.
  void validate(bool allow_nonfinite = false) const {
    for (const auto& [name, t] : tensors) {
      if (name.empty()) throw ValidationError("tensor with empty name");
      if (t.shape.empty())
        throw ValidationError("tensor '" + name + "' has empty shape");
      for (std::int64_t d : t.shape) {
        if (d < 1)
          throw ValidationError("tensor '" + name + "' has non-positive dimension");
      }
      if (static_cast<std::int64_t>(t.data.size()) != t.numel())
        throw ValidationError("tensor '" + name + "' data length does not match shape");
      if (!allow_nonfinite) {
        for (float v : t.data) {
          if (!std::isfinite(v))
            throw ValidationError("tensor '" + name + "' contains a non-finite element");
        }
      }
    }
  }
};

inline bool checkpoints_tensor_equal(const Checkpoint& a, const Checkpoint& b) {
  if (a.tensors.size() != b.tensors.size()) return false;
  auto ia = a.tensors.begin();
  auto ib = b.tensors.begin();
  for (; ia != a.tensors.end(); ++ia, ++ib) {
    if (ia->first != ib->first) return false;
    if (!tensors_equal(ia->second, ib->second)) return false;
  }
  return true;
}

inline bool operator==(const Checkpoint& a, const Checkpoint& b) {
  return a.meta == b.meta && checkpoints_tensor_equal(a, b);
}

// ============================================================================
// Compatibility
// ============================================================================

enum class MismatchKind { missing_in_a, missing_in_b, shape_mismatch };

inline const char* to_string(MismatchKind k) {
  switch (k) {
    case MismatchKind::missing_in_a: return "missing-in-a";
    case MismatchKind::missing_in_b: return "missing-in-b";
    case MismatchKind::shape_mismatch: return "shape-mismatch";
  }
  return "?";
}

struct Mismatch {
  std::string tensor;
  MismatchKind kind;
  std::string detail;
};

struct CompatReport {
  bool compatible = true;
  std::vector<Mismatch> mismatches;

  std::string summary() const {
    std::string s;
    for (const auto& m : mismatches) {
      if (!s.empty()) s += "; ";
      s += m.tensor + ": " + to_string(m.kind);
      if (!m.detail.empty()) s += " (" + m.detail + ")";
    }
    return s.empty() ? "compatible" : s;
  }
};

// Two checkpoints are merge-compatible iff they hold the same tensor names
// with identical shapes. Element values are irrelevant here.
inline CompatReport validate_compat(const Checkpoint& a, const Checkpoint& b) {
  CompatReport report;
  auto shape_str = [](const std::vector<std::int64_t>& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i) out += ",";
      out += std::to_string(s[i]);
    }
    return out + "]";
  };
  auto ia = a.tensors.begin();
  auto ib = b.tensors.begin();
  while (ia != a.tensors.end() || ib != b.tensors.end()) {
    if (ib == b.tensors.end() || (ia != a.tensors.end() && ia->first < ib->first)) {
      report.mismatches.push_back({ia->first, MismatchKind::missing_in_b, ""});
      ++ia;
    } else if (ia == a.tensors.end() || ib->first < ia->first) {
      report.mismatches.push_back({ib->first, MismatchKind::missing_in_a, ""});
      ++ib;
    } else {
      if (ia->second.shape != ib->second.shape) {
        report.mismatches.push_back(
            {ia->first, MismatchKind::shape_mismatch,
             shape_str(ia->second.shape) + " vs " + shape_str(ib->second.shape)});
      }
      ++ia;
      ++ib;
    }
  }
  report.compatible = report.mismatches.empty();
  return report;
}

struct CompatError : Error {
  CompatReport report;
  explicit CompatError(CompatReport r)
      : Error("incompatible checkpoints: " + r.summary()), report(std::move(r)) {}
};

inline void require_compat(const Checkpoint& a, const Checkpoint& b) {
  CompatReport r = validate_compat(a, b);
  if (!r.compatible) throw CompatError(std::move(r));
}

}  // namespace ckmerge
