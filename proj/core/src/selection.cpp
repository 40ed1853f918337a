#include "adsel/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include <fmt/format.h>

#include "adsel/csv.hpp"
#include "adsel/error.hpp"
#include "json_io.hpp"

namespace adsel {

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(fmt::format("pearson: length mismatch {} vs {}", x.size(), y.size()));
  if (x.size() < 2) throw Error("pearson: need at least two samples");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

CorrelationMatrix correlation_matrix(const FeatureTable& table) {
  const std::size_t d = table.cols();
  CorrelationMatrix m{table.columns(), std::vector<double>(d * d, 0.0)};
  std::vector<std::vector<double>> cols;
  cols.reserve(d);
  for (std::size_t c = 0; c < d; ++c) cols.push_back(table.column(c));
  for (std::size_t i = 0; i < d; ++i) {
    const bool constant = std::all_of(cols[i].begin(), cols[i].end(), [&](double v) { return v == cols[i][0]; });
    m.values[i * d + i] = constant ? 0.0 : 1.0;
    for (std::size_t j = i + 1; j < d; ++j) {
      const double r = pearson(cols[i], cols[j]);
      m.values[i * d + j] = r;
      m.values[j * d + i] = r;
    }
  }
  return m;
}

PruneResult prune_correlated(const CorrelationMatrix& matrix, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw Error(fmt::format("PCC threshold {} outside (0, 1]", threshold));
  std::vector<std::size_t> kept;
  std::vector<PrunedPair> removed;
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    std::size_t strongest = 0;
    double strongest_r = -1.0;
    for (std::size_t k : kept) {
      double r = std::abs(matrix.at(i, k));
      if (r > strongest_r) {
        strongest_r = r;
        strongest = k;
      }
    }
    if (kept.empty() || strongest_r <= threshold) {
      kept.push_back(i);
    } else {
      removed.push_back({matrix.names[strongest], matrix.names[i], strongest_r});
    }
  }
  std::vector<std::string> names;
  for (std::size_t k : kept) names.push_back(matrix.names[k]);
  return {FeatureSubset(std::move(names)), std::move(removed)};
}

std::vector<ModelIndex> ModelSelectionTrace::selected() const {
  std::vector<ModelIndex> out;
  for (const auto& s : steps)
    if (s.included) out.push_back(s.model);
  return out;
}

std::vector<std::string> ModelSelectionTrace::selected_ids() const {
  std::vector<std::string> out;
  for (const auto& s : steps)
    if (s.included) out.push_back(s.model_id);
  return out;
}

ModelSelectionTrace select_inference_models(const ClassifierProfile& profile, Criterion criterion, double theta_pct) {
  if (profile.images() == 0 || profile.models() == 0) throw Error("cannot select models from an empty profile");
  if (!(theta_pct > 0.0)) throw Error(fmt::format("theta must be positive, got {}", theta_pct));

  const std::size_t n = profile.images();
  auto pct = [n](std::size_t count) { return static_cast<double>(count) * 100.0 / static_cast<double>(n); };
  ModelSelectionTrace trace{criterion, theta_pct, {}};

  // First model: optimal for the most images.
  std::vector<std::size_t> optimal_count(profile.models(), 0);
  for (const auto& label : optimum_labels(profile, criterion)) {
    if (label) ++optimal_count[*label];
  }
  ModelIndex first = 0;
  for (ModelIndex m = 1; m < profile.models(); ++m) {
    if (optimal_count[m] > optimal_count[first]) first = m;
  }

  std::vector<std::uint8_t> covered(n, 0);
  std::vector<std::uint8_t> chosen(profile.models(), 0);
  std::size_t covered_count = 0;
  auto add_model = [&](ModelIndex m) {
    chosen[m] = 1;
    for (std::size_t i = 0; i < n; ++i) {
      if (!covered[i] && profile.at(i, m).correct(criterion)) {
        covered[i] = 1;
        ++covered_count;
      }
    }
  };

  add_model(first);
  double current = pct(covered_count);
  trace.steps.push_back({first, profile.model_ids()[first], optimal_count[first], n, 0.0, current, current, true});

  for (;;) {
    // Most accurate unchosen model on the currently failed images.
    std::optional<ModelIndex> best;
    std::size_t best_fixed = 0;
    for (ModelIndex m = 0; m < profile.models(); ++m) {
      if (chosen[m]) continue;
      std::size_t fixed = 0;
      for (std::size_t i = 0; i < n; ++i) fixed += (!covered[i] && profile.at(i, m).correct(criterion)) ? 1 : 0;
      if (!best || fixed > best_fixed) {
        best = m;
        best_fixed = fixed;
      }
    }
    if (!best) break;
    const std::size_t failed_before = n - covered_count;
    add_model(*best);
    const double next = pct(covered_count);
    const double gain = pct(best_fixed);
    trace.steps.push_back({*best, profile.model_ids()[*best], best_fixed, failed_before, current, next, gain,
                           gain > theta_pct});
    if (gain <= theta_pct) break;
    current = next;
  }
  return trace;
}

void write_trace_json(std::ostream& out, const ModelSelectionTrace& trace) {
  out << json_io::to_json(trace).dump(2) << '\n';
}

void write_trace_csv(std::ostream& out, const ModelSelectionTrace& trace) {
  out << "step,model_id,score,failed_before,accuracy_before_pct,accuracy_after_pct,gain_pct,included\n";
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    const auto& s = trace.steps[i];
    out << i << ',' << s.model_id << ',' << s.score << ',' << s.failed_before << ','
        << csv::format_double(s.accuracy_before_pct) << ',' << csv::format_double(s.accuracy_after_pct) << ','
        << csv::format_double(s.gain_pct) << ',' << (s.included ? 1 : 0) << '\n';
  }
}

}  // namespace adsel
