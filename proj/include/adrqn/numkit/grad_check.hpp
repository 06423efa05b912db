#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "adrqn/numkit/parameter.hpp"

namespace adrqn::numkit {

struct GradCheckEntry {
  std::string name;
  std::size_t count = 0;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
};

struct GradCheckReport {
  double tolerance = 1e-4;
  std::vector<GradCheckEntry> entries;

  double worst() const {
    double w = 0.0;
    for (const auto& e : entries) w = std::max(w, e.max_rel_error);
    return w;
  }
  bool passed() const { return worst() < tolerance; }

  friend std::ostream& operator<<(std::ostream& os, const GradCheckReport& r) {
    for (const auto& e : r.entries) {
      os << "  " << e.name << " (" << e.count << "): rel " << e.max_rel_error << " abs " << e.max_abs_error
         << (e.max_rel_error < r.tolerance ? "" : "  <-- exceeds tolerance") << '\n';
    }
    return os;
  }
};

struct GradCheckOptions {
  double tolerance = 1e-4;
  double step = 1e-5;
  // Denominator floor so entries whose true gradient is ~0 are judged on absolute error.
  double denominator_floor = 1e-6;
};

/// Relative error used throughout: |a - n| / max(|a| + |n|, floor).
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max(std::abs(analytic) + std::abs(numeric), floor);
}

/// Compares analytic gradients with central differences.
///
/// `loss` evaluates the scalar objective at the current parameter values.
/// `backward` must zero and then populate `grad` for every entry of `targets`.
/// Every element of every target tensor is perturbed, so keep instances small.
inline GradCheckReport grad_check(const ParameterList& targets, const std::function<double()>& loss,
                                  const std::function<void()>& backward, GradCheckOptions options = {}) {
  backward();
  GradCheckReport report;
  report.tolerance = options.tolerance;
  for (Parameter* p : targets) {
    GradCheckEntry entry{p->name, p->value.size(), 0.0, 0.0};
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double saved = p->value[i];
      p->value[i] = saved + options.step;
      const double up = loss();
      p->value[i] = saved - options.step;
      const double down = loss();
      p->value[i] = saved;
      const double numeric = (up - down) / (2.0 * options.step);
      const double analytic = p->grad[i];
      entry.max_abs_error = std::max(entry.max_abs_error, std::abs(analytic - numeric));
      entry.max_rel_error =
          std::max(entry.max_rel_error, relative_error(analytic, numeric, options.denominator_floor));
    }
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace adrqn::numkit
