#include "viewscale/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "viewscale/control_proxy.hpp"
#include "viewscale/error.hpp"

namespace viewscale {

StabilitySummary stability_summary(const std::map<std::size_t, double>& by_budget,
                                   std::size_t floor) {
  StabilitySummary s;
  double sum = 0;
  double best = 0;
  for (const auto& [budget, value] : by_budget) {
    if (budget < floor) continue;
    if (s.budgets == 0) {
      s.worst = best = value;
    } else {
      s.worst = std::max(s.worst, value);
      best = std::min(best, value);
    }
    sum += value;
    ++s.budgets;
  }
  require(s.budgets > 0, "stability_summary: no budget >= " + std::to_string(floor));
  s.mean = sum / static_cast<double>(s.budgets);
  s.range = s.worst - best;
  return s;
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = rank;
    i = j + 1;
  }
  return ranks;
}

std::optional<double> pearson(std::span<const double> xs, std::span<const double> ys) {
  require(xs.size() == ys.size(), "pearson: inputs differ in length");
  require(xs.size() >= 2, "pearson: need at least two points");
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0 || syy == 0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::optional<double> spearman(std::span<const double> xs, std::span<const double> ys) {
  require(xs.size() == ys.size(), "spearman: inputs differ in length");
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  return pearson(rx, ry);
}

std::vector<int> novelty_bins(std::span<const double> values, int k) {
  require(!values.empty(), "novelty_bins: values are empty");
  require(k >= 1, "novelty_bins: k must be >= 1");
  const std::size_t n = values.size();
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<int> bins;
  bins.reserve(n);
  for (const double v : values) {
    // Lowest 0-based rank among equal values.
    const auto r = static_cast<std::size_t>(
        std::lower_bound(sorted.begin(), sorted.end(), v) - sorted.begin());
    bins.push_back(static_cast<int>(static_cast<std::size_t>(k) * r / n) + 1);
  }
  return bins;
}

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

// P(W+ <= w) and P(W+ >= w) under the null, on doubled ranks.
std::pair<double, double> exact_tails(const std::vector<long>& doubled_ranks,
                                      long w_doubled) {
  const long total = std::accumulate(doubled_ranks.begin(), doubled_ranks.end(), 0L);
  std::vector<double> counts(static_cast<std::size_t>(total) + 1, 0.0);
  counts[0] = 1.0;
  long reach = 0;
  for (const long r : doubled_ranks) {
    for (long s = reach; s >= 0; --s)
      if (counts[static_cast<std::size_t>(s)] != 0.0)
        counts[static_cast<std::size_t>(s + r)] += counts[static_cast<std::size_t>(s)];
    reach += r;
  }
  const double all = std::ldexp(1.0, static_cast<int>(doubled_ranks.size()));
  double low = 0, high = 0;
  for (long s = 0; s <= total; ++s) {
    if (s <= w_doubled) low += counts[static_cast<std::size_t>(s)];
    if (s >= w_doubled) high += counts[static_cast<std::size_t>(s)];
  }
  return {low / all, high / all};
}

}  // namespace

WilcoxonResult paired_wilcoxon(std::span<const double> deltas) {
  WilcoxonResult out;
  std::vector<double> all(deltas.begin(), deltas.end());
  if (!all.empty()) {
    out.median_delta = median(all);
    out.mean_delta = std::accumulate(all.begin(), all.end(), 0.0) /
                     static_cast<double>(all.size());
  }
  std::vector<double> nonzero;
  for (const double d : deltas) {
    if (d > 0) ++out.wins;
    else if (d < 0) ++out.losses;
    else ++out.ties;
    if (d != 0) nonzero.push_back(d);
  }
  out.n_used = nonzero.size();
  if (nonzero.empty()) {
    out.degenerate = true;
    out.p_value = 1.0;
    return out;
  }
  std::vector<double> magnitudes;
  for (const double d : nonzero) magnitudes.push_back(std::abs(d));
  const auto ranks = average_ranks(magnitudes);
  std::vector<long> doubled;
  long w_doubled = 0;
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    const long r2 = std::lround(2.0 * ranks[i]);
    doubled.push_back(r2);
    if (nonzero[i] > 0) w_doubled += r2;
  }
  out.w_plus = static_cast<double>(w_doubled) / 2.0;
  const double n = static_cast<double>(nonzero.size());

  if (nonzero.size() <= kWilcoxonExactLimit) {
    const auto [low, high] = exact_tails(doubled, w_doubled);
    out.p_value = std::min(1.0, 2.0 * std::min(low, high));
    out.exact = true;
    return out;
  }

  const double mean = n * (n + 1) / 4.0;
  double tie_term = 0;
  {
    std::vector<double> sorted = magnitudes;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size();) {
      std::size_t j = i;
      while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
      const double t = static_cast<double>(j - i + 1);
      tie_term += t * t * t - t;
      i = j + 1;
    }
  }
  const double var = n * (n + 1) * (2 * n + 1) / 24.0 - tie_term / 48.0;
  if (var <= 0) {
    out.p_value = 1.0;
    return out;
  }
  const double z = std::max(0.0, (std::abs(out.w_plus - mean) - 0.5) / std::sqrt(var));
  out.p_value = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  return out;
}

// ---------------------------------------------------------------------------

namespace {

using Key = std::pair<std::string, std::size_t>;

std::map<Key, std::vector<const RunRecord*>> group(std::span<const RunRecord> records) {
  std::map<Key, std::vector<const RunRecord*>> out;
  for (const auto& r : records) out[{r.method, r.budget}].push_back(&r);
  return out;
}

}  // namespace

std::vector<ScalingRow> scaling_table(std::span<const RunRecord> records) {
  std::vector<ScalingRow> rows;
  for (const auto& [key, members] : group(records)) {
    std::vector<double> values;
    double coverage = 0;
    for (const auto* r : members) {
      values.push_back(r->metric_value);
      coverage += r->coverage_fraction;
    }
    const auto est = mean_with_ci(values);
    rows.push_back({key.first, key.second, members.size(), est.mean, est.ci95,
                    coverage / static_cast<double>(members.size())});
  }
  return rows;
}

std::vector<StabilityRow> stability_table(std::span<const RunRecord> records,
                                          std::size_t floor) {
  std::map<std::string, std::map<std::size_t, double>> per_method;
  for (const auto& row : scaling_table(records))
    per_method[row.method][row.budget] = row.mean;
  std::vector<StabilityRow> out;
  for (const auto& [method, series] : per_method) {
    const bool any = std::any_of(series.begin(), series.end(),
                                 [&](const auto& kv) { return kv.first >= floor; });
    if (!any) continue;
    out.push_back({method, stability_summary(series, floor)});
  }
  return out;
}

std::vector<CorrelationRow> correlation_table(std::span<const RunRecord> records) {
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> per_method;
  for (const auto& row : scaling_table(records)) {
    per_method[row.method].first.push_back(row.coverage_mean);
    per_method[row.method].second.push_back(row.mean);
  }
  std::vector<CorrelationRow> out;
  for (const auto& [method, xy] : per_method) {
    CorrelationRow row{method, xy.first.size(), std::nullopt, std::nullopt};
    if (row.points >= 2) {
      row.pearson = pearson(xy.first, xy.second);
      row.spearman = spearman(xy.first, xy.second);
    }
    out.push_back(row);
  }
  return out;
}

std::vector<NoveltyBinPoint> novelty_bin_points(std::span<const RunRecord> records,
                                                int k) {
  std::vector<NoveltyBinPoint> out;
  for (const auto& r : records) {
    if (r.novelty_values.empty()) continue;
    require(r.frame_errors.size() == r.novelty_values.size(),
            "novelty bins: frame_errors must align with novelty_values for " +
                r.method + "/" + r.scene_id);
    const auto bins = novelty_bins(r.novelty_values, k);
    std::vector<double> sum(static_cast<std::size_t>(k), 0.0);
    std::vector<std::size_t> count(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < bins.size(); ++i) {
      sum[static_cast<std::size_t>(bins[i] - 1)] += r.frame_errors[i];
      ++count[static_cast<std::size_t>(bins[i] - 1)];
    }
    for (int b = 0; b < k; ++b) {
      const auto idx = static_cast<std::size_t>(b);
      if (count[idx] == 0) continue;
      out.push_back({r.method, r.budget, r.scene_id, b + 1,
                     sum[idx] / static_cast<double>(count[idx])});
    }
  }
  return out;
}

std::vector<TailRow> tail_table(std::span<const RunRecord> records, int k) {
  std::map<Key, std::vector<double>> tails;
  for (const auto& p : novelty_bin_points(records, k))
    if (p.bin == k) tails[{p.method, p.budget}].push_back(p.mean_error);
  std::vector<TailRow> out;
  for (const auto& [key, values] : tails) {
    const auto est = mean_with_ci(values);
    out.push_back({key.first, key.second, values.size(), est.mean, est.ci95});
  }
  return out;
}

std::vector<PairedRow> paired_table(std::span<const RunRecord> records,
                                    const std::string& target) {
  // budget -> method -> scene -> value
  std::map<std::size_t, std::map<std::string, std::map<std::string, double>>> cube;
  for (const auto& r : records) cube[r.budget][r.method][r.scene_id] = r.metric_value;
  std::vector<PairedRow> out;
  for (const auto& [budget, methods] : cube) {
    const auto t = methods.find(target);
    if (t == methods.end()) continue;
    std::map<std::string, double> best_other;
    for (const auto& [method, scenes] : methods) {
      if (method == target) continue;
      std::vector<double> deltas;
      for (const auto& [scene, value] : scenes) {
        const auto it = t->second.find(scene);
        if (it != t->second.end()) deltas.push_back(it->second - value);
        auto [pos, inserted] = best_other.emplace(scene, value);
        if (!inserted) pos->second = std::min(pos->second, value);
      }
      if (!deltas.empty())
        out.push_back({budget, target, method, paired_wilcoxon(deltas)});
    }
    std::vector<double> deltas;
    for (const auto& [scene, value] : best_other) {
      const auto it = t->second.find(scene);
      if (it != t->second.end()) deltas.push_back(it->second - value);
    }
    if (!deltas.empty())
      out.push_back({budget, target, "best_other", paired_wilcoxon(deltas)});
  }
  return out;
}

}  // namespace viewscale
