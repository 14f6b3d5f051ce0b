#pragma once

// Distance-estimation metrics over (ground truth, prediction) pairs, plus
// fixed-width binned error breakdowns along distance / distance-change /
// velocity-change axes. Relative errors are taken against ground truth.
//
// Two medians are reported because the common "MRE" label is ambiguous:
// mre_paper is the median of absolute errors in metres, mre_relative the
// median of |err|/gt. Binned reports use the relative form, the one
// comparable across bins and plottable next to MARE.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace monorange::metrics {

class EmptySet : public std::runtime_error {
 public:
  explicit EmptySet(const std::string& what) : std::runtime_error(what) {}
};

class NonPositiveDistance : public std::runtime_error {
 public:
  explicit NonPositiveDistance(const std::string& what) : std::runtime_error(what) {}
};

struct EvalPair {
  double d_gt = 0.0;             // metres, > 0
  double d_pred = 0.0;           // metres, > 0
  double distance_change = 0.0;  // gt range change over the lookback window, metres
  double velocity_change = 0.0;  // gt closing-rate change over the window, m/s
};

struct MetricsReport {
  std::size_t n = 0;
  double mare = 0.0;            // mean |err| / gt
  double mre_paper = 0.0;       // median |err|, metres
  double mre_relative = 0.0;    // median |err| / gt
  double ci95_halfwidth = 0.0;  // 1.96 * std(relative errors) / sqrt(n)
  double rmse = 0.0;            // metres
  double delta_125 = 0.0;       // fraction with max(ratio, 1/ratio) < 1.25
  double srd = 0.0;             // mean err^2 / gt, metres
  double rmse_log = 0.0;        // sqrt(mean (ln pred - ln gt)^2)
};

namespace detail {

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

}  // namespace detail

inline MetricsReport compute_metrics(std::span<const EvalPair> pairs) {
  if (pairs.empty()) throw EmptySet("compute_metrics: no pairs");
  for (const auto& p : pairs) {
    if (!(p.d_gt > 0.0) || !(p.d_pred > 0.0))
      throw NonPositiveDistance("compute_metrics: distances must be positive (gt " +
                                std::to_string(p.d_gt) + ", pred " + std::to_string(p.d_pred) +
                                ")");
  }
  const auto n = static_cast<double>(pairs.size());
  MetricsReport r;
  r.n = pairs.size();

  std::vector<double> abs_errors, rel_errors;
  abs_errors.reserve(pairs.size());
  rel_errors.reserve(pairs.size());
  double sum_rel = 0.0, sum_sq = 0.0, sum_srd = 0.0, sum_logsq = 0.0;
  std::size_t delta_hits = 0;
  for (const auto& p : pairs) {
    const double err = std::abs(p.d_pred - p.d_gt);
    const double rel = err / p.d_gt;
    abs_errors.push_back(err);
    rel_errors.push_back(rel);
    sum_rel += rel;
    sum_sq += err * err;
    sum_srd += err * err / p.d_gt;
    const double dlog = std::log(p.d_pred) - std::log(p.d_gt);
    sum_logsq += dlog * dlog;
    if (std::max(p.d_pred / p.d_gt, p.d_gt / p.d_pred) < 1.25) ++delta_hits;
  }
  r.mare = sum_rel / n;
  r.mre_paper = detail::median(abs_errors);
  r.mre_relative = detail::median(rel_errors);
  r.rmse = std::sqrt(sum_sq / n);
  r.delta_125 = static_cast<double>(delta_hits) / n;
  r.srd = sum_srd / n;
  r.rmse_log = std::sqrt(sum_logsq / n);

  if (pairs.size() >= 2) {
    const double mean = r.mare;
    double ss = 0.0;
    for (const double e : rel_errors) ss += (e - mean) * (e - mean);
    const double sample_std = std::sqrt(ss / (n - 1.0));
    r.ci95_halfwidth = 1.96 * sample_std / std::sqrt(n);
  }
  return r;
}

enum class BinAxis { Distance, DistanceChange, VelocityChange };

inline const char* to_string(BinAxis axis) {
  switch (axis) {
    case BinAxis::Distance: return "distance";
    case BinAxis::DistanceChange: return "distance_change";
    case BinAxis::VelocityChange: return "velocity_change";
  }
  return "?";
}

struct ErrorBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  std::optional<double> mare;  // absent for empty bins
  std::optional<double> mre;   // median relative error
};

struct BinnedErrorReport {
  BinAxis axis = BinAxis::Distance;
  double bin_width = 5.0;
  std::vector<ErrorBin> bins;

  std::size_t total_count() const {
    std::size_t n = 0;
    for (const auto& b : bins) n += b.count;
    return n;
  }
};

/// Bins aligned to multiples of bin_width covering the observed axis range;
/// empty interior bins are kept with count 0 and absent metrics.
inline BinnedErrorReport binned_report(std::span<const EvalPair> pairs, BinAxis axis,
                                       double bin_width) {
  if (pairs.empty()) throw EmptySet("binned_report: no pairs");
  if (!(bin_width > 0.0)) throw std::invalid_argument("binned_report: bin width must be positive");

  const auto axis_value = [axis](const EvalPair& p) {
    switch (axis) {
      case BinAxis::Distance: return p.d_gt;
      case BinAxis::DistanceChange: return p.distance_change;
      case BinAxis::VelocityChange: return p.velocity_change;
    }
    return p.d_gt;
  };

  long long idx_min = 0, idx_max = 0;
  bool first = true;
  for (const auto& p : pairs) {
    const auto idx = static_cast<long long>(std::floor(axis_value(p) / bin_width));
    if (first || idx < idx_min) idx_min = idx;
    if (first || idx > idx_max) idx_max = idx;
    first = false;
  }

  BinnedErrorReport report;
  report.axis = axis;
  report.bin_width = bin_width;
  const auto nbins = static_cast<std::size_t>(idx_max - idx_min + 1);
  std::vector<std::vector<double>> rel(nbins);
  for (const auto& p : pairs) {
    const auto idx = static_cast<long long>(std::floor(axis_value(p) / bin_width));
    rel[static_cast<std::size_t>(idx - idx_min)].push_back(std::abs(p.d_pred - p.d_gt) / p.d_gt);
  }
  for (std::size_t i = 0; i < nbins; ++i) {
    ErrorBin bin;
    bin.lo = static_cast<double>(idx_min + static_cast<long long>(i)) * bin_width;
    bin.hi = bin.lo + bin_width;
    bin.count = rel[i].size();
    if (!rel[i].empty()) {
      double s = 0.0;
      for (const double e : rel[i]) s += e;
      bin.mare = s / static_cast<double>(rel[i].size());
      bin.mre = detail::median(rel[i]);
    }
    report.bins.push_back(bin);
  }
  return report;
}

// --- serialization -------------------------------------------------------

inline nlohmann::json to_json(const MetricsReport& r) {
  return nlohmann::json{{"n", r.n},
                        {"mare", r.mare},
                        {"mre_paper_m", r.mre_paper},
                        {"mre_relative", r.mre_relative},
                        {"ci95_halfwidth", r.ci95_halfwidth},
                        {"rmse", r.rmse},
                        {"delta_125", r.delta_125},
                        {"srd", r.srd},
                        {"rmse_log", r.rmse_log}};
}

inline std::string to_text(const MetricsReport& r) {
  std::ostringstream out;
  out.precision(6);
  const auto row = [&out](const char* name, double v) {
    out << name;
    for (std::size_t i = std::string(name).size(); i < 22; ++i) out << ' ';
    out << v << "\n";
  };
  out << "samples               " << r.n << "\n";
  row("MARE", r.mare);
  row("MRE (paper, m)", r.mre_paper);
  row("MRE (relative)", r.mre_relative);
  row(".95CI (halfwidth)", r.ci95_halfwidth);
  row("RMSE (m)", r.rmse);
  row("delta < 1.25", r.delta_125);
  row("SRD (m)", r.srd);
  row("RMSE_log", r.rmse_log);
  return out.str();
}

inline nlohmann::json to_json(const BinnedErrorReport& r) {
  nlohmann::json bins = nlohmann::json::array();
  for (const auto& b : r.bins) {
    nlohmann::json jb{{"lo", b.lo}, {"hi", b.hi}, {"count", b.count}};
    jb["mare"] = b.mare ? nlohmann::json(*b.mare) : nlohmann::json(nullptr);
    jb["mre"] = b.mre ? nlohmann::json(*b.mre) : nlohmann::json(nullptr);
    bins.push_back(jb);
  }
  return nlohmann::json{{"axis", to_string(r.axis)}, {"bin_width", r.bin_width}, {"bins", bins}};
}

/// CSV with columns bin_lo,bin_hi,mare,mre,count; empty bins carry "nan".
inline std::string to_csv(const BinnedErrorReport& r) {
  std::ostringstream out;
  out << "bin_lo,bin_hi,mare,mre,count\n";
  out.precision(17);
  for (const auto& b : r.bins) {
    out << b.lo << ',' << b.hi << ',';
    if (b.mare) out << *b.mare;
    else out << "nan";
    out << ',';
    if (b.mre) out << *b.mre;
    else out << "nan";
    out << ',' << b.count << "\n";
  }
  return out.str();
}

}  // namespace monorange::metrics
