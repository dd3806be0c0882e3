#include "jelly/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace jelly {

std::vector<std::int64_t> largest_remainder(std::int64_t total, const std::vector<double>& fracs) {
  const int n = static_cast<int>(fracs.size());
  std::vector<std::int64_t> out(n);
  std::vector<std::pair<double, int>> rem(n);
  std::int64_t assigned = 0;
  for (int i = 0; i < n; ++i) {
    double q = static_cast<double>(total) * fracs[i];
    out[i] = static_cast<std::int64_t>(std::floor(q));
    rem[i] = {q - std::floor(q), i};
    assigned += out[i];
  }
  std::sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (std::int64_t k = 0; k < total - assigned; ++k) out[rem[k % n].second] += 1;
  return out;
}

namespace {

// Rounds the quota matrix row_totals[c]*fracs[s] to integers whose rows sum to
// row_totals and whose columns sum to the largest-remainder targets for the
// grand total. Remaining units go to the eligible cell with the largest
// fractional part (ties: lower class, then lower split).
std::vector<std::vector<std::int64_t>> apportion(const std::vector<std::int64_t>& row_totals,
                                                 const std::vector<double>& fracs) {
  const int nc = static_cast<int>(row_totals.size());
  const int ns = static_cast<int>(fracs.size());
  const std::int64_t grand = std::accumulate(row_totals.begin(), row_totals.end(), std::int64_t{0});
  std::vector<std::int64_t> col_target = largest_remainder(grand, fracs);

  std::vector<std::vector<std::int64_t>> cell(nc, std::vector<std::int64_t>(ns, 0));
  std::vector<std::vector<double>> frac_part(nc, std::vector<double>(ns, 0.0));
  std::vector<std::int64_t> row_def(row_totals);
  std::vector<std::int64_t> col_def(col_target);

  for (int c = 0; c < nc; ++c) {
    for (int s = 0; s < ns; ++s) {
      double q = static_cast<double>(row_totals[c]) * fracs[s];
      cell[c][s] = static_cast<std::int64_t>(std::floor(q));
      frac_part[c][s] = q - std::floor(q);
      row_def[c] -= cell[c][s];
      col_def[s] -= cell[c][s];
    }
  }

  std::int64_t remaining = std::accumulate(row_def.begin(), row_def.end(), std::int64_t{0});
  while (remaining > 0) {
    int bc = -1, bs = -1;
    double best = -1.0;
    for (int c = 0; c < nc; ++c) {
      if (row_def[c] <= 0) continue;
      for (int s = 0; s < ns; ++s) {
        if (col_def[s] <= 0) continue;
        if (frac_part[c][s] > best) {
          best = frac_part[c][s];
          bc = c;
          bs = s;
        }
      }
    }
    cell[bc][bs] += 1;
    row_def[bc] -= 1;
    col_def[bs] -= 1;
    frac_part[bc][bs] = -2.0;  // each cell takes at most one extra unit
    remaining -= 1;
  }
  return cell;
}

void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i) - 1));
    std::swap(idx[i - 1], idx[j]);
  }
}

// Stratified split of `events` into fracs.size() buckets. Order of draws is fixed:
// class groups keep input order, each group is shuffled with its own child stream.
std::vector<std::vector<Event>> stratified_split(const std::vector<Event>& events,
                                                 const std::vector<double>& fracs, Rng rng) {
  std::array<std::vector<std::size_t>, kNumClasses> by_class;
  for (std::size_t i = 0; i < events.size(); ++i)
    by_class[class_index(events[i].label)].push_back(i);

  std::vector<std::int64_t> row_totals(kNumClasses);
  for (int c = 0; c < kNumClasses; ++c)
    row_totals[c] = static_cast<std::int64_t>(by_class[c].size());
  auto cell = apportion(row_totals, fracs);

  std::vector<std::vector<Event>> out(fracs.size());
  for (int c = 0; c < kNumClasses; ++c) {
    Rng class_rng = rng.split(static_cast<std::uint64_t>(c));
    shuffle_indices(by_class[c], class_rng);
    std::size_t pos = 0;
    for (std::size_t s = 0; s < fracs.size(); ++s) {
      for (std::int64_t k = 0; k < cell[c][s]; ++k) out[s].push_back(events[by_class[c][pos++]]);
    }
  }
  return out;
}

}  // namespace

SplitResult split_dataset(const std::vector<Event>& events, const SplitSpec& spec,
                          std::uint64_t seed) {
  require(!events.empty(), Errc::degenerate_input, "split_dataset: empty event list");
  double frac_sum = spec.train_frac + spec.val_frac + spec.test_frac;
  require(std::abs(frac_sum - 1.0) <= 1e-9, Errc::invalid_argument,
          "split fractions must sum to 1, got " + std::to_string(frac_sum));
  require(spec.train_frac >= 0 && spec.val_frac >= 0 && spec.test_frac >= 0,
          Errc::invalid_argument, "split fractions must be non-negative");

  SplitResult result;
  Rng rng(seed);

  if (spec.mode == SplitMode::RandomSplit) {
    require(!spec.held_out_environment.has_value(), Errc::invalid_argument,
            "held_out_environment is only valid in LeaveOneEnvironmentOut mode");
    auto parts = stratified_split(events, {spec.train_frac, spec.val_frac, spec.test_frac}, rng);
    result.train = std::move(parts[0]);
    result.val = std::move(parts[1]);
    result.test = std::move(parts[2]);
    return result;
  }

  require(spec.held_out_environment.has_value(), Errc::invalid_argument,
          "LeaveOneEnvironmentOut requires held_out_environment");
  std::set<int> env_ids;
  for (const auto& e : events) env_ids.insert(e.environment_id);
  require(env_ids.size() >= 2, Errc::degenerate_input,
          "LeaveOneEnvironmentOut needs at least two distinct environment_ids");
  int held = *spec.held_out_environment;
  require(env_ids.count(held) == 1, Errc::invalid_argument,
          "held_out_environment " + std::to_string(held) + " not present in data");

  std::vector<Event> rest;
  for (const auto& e : events) {
    if (e.environment_id == held)
      result.test.push_back(e);
    else
      rest.push_back(e);
  }
  double tv = spec.train_frac + spec.val_frac;
  require(tv > 0, Errc::invalid_argument, "train_frac + val_frac must be positive");
  auto parts = stratified_split(rest, {spec.train_frac / tv, spec.val_frac / tv}, rng);
  result.train = std::move(parts[0]);
  result.val = std::move(parts[1]);
  return result;
}

}  // namespace jelly
