#pragma once

#include <optional>
#include <string>
#include <vector>

#include "llg/error.hpp"

namespace llg {

/// Norms of the derived field u at one sample (present only when a frame pipeline ran).
struct DerivedNorms {
  double u_l_n_over_delta = 0.0;  // ||u||_{L^{n/delta}}
  double grad_u_l_n = 0.0;        // ||grad u||_{L^n}
  double u_l_n = 0.0;             // ||u||_{L^n}
  double u_l_inf = 0.0;           // ||u||_{L^inf}
};

struct NormRecord {
  double t = 0.0;
  double energy = 0.0;     // E(m)
  double linf_grad = 0.0;  // ||grad m||_{L^inf}
  double ln_grad = 0.0;    // ||grad m||_{L^n}
  double h1_dev = 0.0;     // ||m - m_inf||_{H^1}
  double linf_dev = 0.0;   // ||m - m_inf||_{L^inf}
  std::optional<DerivedNorms> derived;
};

/// Time-stamped norm record of one run. delta is carried so series built with
/// different exponents are never mixed.
struct NormSeries {
  int dimension = 3;
  double box_length = 1.0;
  double lambda = 1.0;
  double delta = 0.62;
  std::vector<NormRecord> records;

  void append(const NormRecord& r) {
    require(records.empty() || r.t > records.back().t, "norm series times must be strictly increasing");
    records.push_back(r);
  }
  std::size_t size() const { return records.size(); }
  bool has_derived() const {
    if (records.empty()) return false;
    for (const auto& r : records)
      if (!r.derived) return false;
    return true;
  }
  std::vector<double> times() const {
    std::vector<double> t;
    t.reserve(records.size());
    for (const auto& r : records) t.push_back(r.t);
    return t;
  }
};

}  // namespace llg
