#include "blockpred/windowing.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <nlohmann/json.hpp>
#include <ostream>

#include "blockpred/errors.hpp"
#include "blockpred/rng.hpp"

namespace blockpred {

void WindowConfig::validate() const {
  if (r < 1) throw ConfigError("window r must be >= 1");
  if (r_prime < 1) throw ConfigError("window r_prime must be >= 1");
  if (stride < 1) throw ConfigError("window stride must be >= 1");
}

std::string to_string(SplitName s) {
  switch (s) {
    case SplitName::train: return "train";
    case SplitName::val: return "val";
    case SplitName::test: return "test";
  }
  return "train";
}

SplitName split_name_from_string(const std::string& s) {
  if (s == "train") return SplitName::train;
  if (s == "val") return SplitName::val;
  if (s == "test") return SplitName::test;
  throw ParseError("unknown split '" + s + "'");
}

const std::vector<SequenceSample>& DatasetSplit::part(SplitName name) const {
  switch (name) {
    case SplitName::train: return train;
    case SplitName::val: return val;
    case SplitName::test: return test;
  }
  return train;
}

std::vector<SequenceSample>& DatasetSplit::part(SplitName name) {
  return const_cast<std::vector<SequenceSample>&>(std::as_const(*this).part(name));
}

LinkStatus future_label(std::span<const LinkStatus> statuses, int r_prime) {
  if (r_prime < 1 || statuses.size() != static_cast<std::size_t>(r_prime)) {
    throw LengthError("future window has " + std::to_string(statuses.size()) +
                      " entries, expected r'=" + std::to_string(r_prime));
  }
  const bool any_blocked = std::any_of(statuses.begin(), statuses.end(),
                                       [](LinkStatus s) { return s == LinkStatus::blocked; });
  return any_blocked ? LinkStatus::blocked : LinkStatus::los;
}

std::size_t window_count(std::size_t n, const WindowConfig& cfg) {
  const auto needed = static_cast<std::size_t>(cfg.r + cfg.r_prime);
  if (n < needed) return 0;
  return (n - needed) / static_cast<std::size_t>(cfg.stride) + 1;
}

std::vector<SequenceSample> build_windows(std::span<const LinkStatus> statuses,
                                          const std::string& scenario_id, const WindowConfig& cfg) {
  cfg.validate();
  const std::size_t n = statuses.size();
  const std::size_t count = window_count(n, cfg);
  if (count == 0) {
    throw InsufficientDataError("scenario '" + scenario_id + "' has " + std::to_string(n) +
                                " samples; windowing needs at least r + r' = " +
                                std::to_string(cfg.r + cfg.r_prime));
  }
  std::vector<SequenceSample> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const auto anchor = static_cast<std::size_t>(cfg.r - 1) + k * static_cast<std::size_t>(cfg.stride);
    SequenceSample seq;
    seq.scenario_id = scenario_id;
    seq.anchor_index = static_cast<std::int64_t>(anchor);
    seq.r = cfg.r;
    seq.r_prime = cfg.r_prime;
    seq.label = future_label(statuses.subspan(anchor + 1, static_cast<std::size_t>(cfg.r_prime)),
                             cfg.r_prime);
    out.push_back(std::move(seq));
  }
  return out;
}

std::vector<SequenceSample> build_windows(const Scenario& scenario, const WindowConfig& cfg) {
  std::vector<LinkStatus> statuses;
  statuses.reserve(scenario.samples.size());
  for (const auto& s : scenario.samples) statuses.push_back(s.link_status);
  return build_windows(statuses, scenario.scenario_id, cfg);
}

std::vector<SequenceSample> balance(const std::vector<SequenceSample>& dataset, std::uint64_t seed) {
  std::vector<std::size_t> los, blocked;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    (dataset[i].label == LinkStatus::blocked ? blocked : los).push_back(i);
  }
  if (los.empty() || blocked.empty()) {
    throw EmptyClassError("cannot balance: " + std::to_string(los.size()) + " LOS and " +
                          std::to_string(blocked.size()) + " blocked sequences");
  }
  const std::size_t gap = los.size() > blocked.size() ? los.size() - blocked.size()
                                                      : blocked.size() - los.size();
  if (gap <= 1) return dataset;

  auto& majority = los.size() > blocked.size() ? los : blocked;
  const std::size_t keep = std::min(los.size(), blocked.size());
  // Partial Fisher-Yates picks `keep` survivors uniformly.
  Rng rng(seed);
  for (std::size_t i = 0; i < keep; ++i) {
    const auto j = i + rng.index(majority.size() - i);
    std::swap(majority[i], majority[j]);
  }
  std::vector<char> survive(dataset.size(), 1);
  for (std::size_t i = keep; i < majority.size(); ++i) survive[majority[i]] = 0;

  std::vector<SequenceSample> out;
  out.reserve(2 * keep);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (survive[i]) out.push_back(dataset[i]);
  }
  return out;
}

std::pair<std::size_t, std::size_t> split_cuts(std::size_t v, const SplitFractions& f) {
  const double total = f[0] + f[1] + f[2];
  if (std::abs(total - 1.0) > 1e-9 || f[0] < 0 || f[1] < 0 || f[2] < 0) {
    throw FractionError("split fractions must be non-negative and sum to 1");
  }
  if (f == kDefaultSplitFractions) {
    // Exact integer arithmetic: 0.7 and 0.9 are not representable.
    return {7 * v / 10, 9 * v / 10};
  }
  // Nudge before flooring so products like 0.9 * 10 = 8.999... land on 9.
  const auto cut = [v](double frac) {
    const auto c = static_cast<std::size_t>(std::floor(frac * static_cast<double>(v) + 1e-7));
    return std::min(c, v);
  };
  return {cut(f[0]), cut(f[0] + f[1])};
}

DatasetSplit split(const std::vector<SequenceSample>& dataset, const SplitFractions& fractions,
                   std::uint64_t seed) {
  const auto [train_end, val_end] = split_cuts(dataset.size(), fractions);
  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order.begin(), order.end());

  DatasetSplit out;
  out.fractions = fractions;
  out.seed = seed;
  for (std::size_t k = 0; k < order.size(); ++k) {
    auto& dst = k < train_end ? out.train : (k < val_end ? out.val : out.test);
    dst.push_back(dataset[order[k]]);
  }
  return out;
}

std::map<int, DatasetSplit> sweep_datasets(const Scenario& scenario, int r,
                                           const std::vector<int>& r_primes, std::uint64_t seed,
                                           int stride) {
  std::map<int, DatasetSplit> out;
  for (int rp : r_primes) {
    WindowConfig cfg{r, rp, stride};
    const auto windows = build_windows(scenario, cfg);
    const auto balanced = balance(windows, derive_seed(seed, "balance"));
    out.emplace(rp, split(balanced, kDefaultSplitFractions, derive_seed(seed, "split")));
  }
  return out;
}

DatasetSplit combine_splits(const std::vector<DatasetSplit>& parts) {
  DatasetSplit out;
  if (!parts.empty()) {
    out.fractions = parts.front().fractions;
    out.seed = parts.front().seed;
  }
  for (const auto& p : parts) {
    out.train.insert(out.train.end(), p.train.begin(), p.train.end());
    out.val.insert(out.val.end(), p.val.begin(), p.val.end());
    out.test.insert(out.test.end(), p.test.begin(), p.test.end());
  }
  return out;
}

void write_listing(const DatasetSplit& split, std::ostream& out) {
  for (auto name : {SplitName::train, SplitName::val, SplitName::test}) {
    for (const auto& seq : split.part(name)) {
      nlohmann::ordered_json j;
      j["scenario_id"] = seq.scenario_id;
      j["anchor_index"] = seq.anchor_index;
      j["r"] = seq.r;
      j["r_prime"] = seq.r_prime;
      j["label"] = to_int(seq.label);
      j["split"] = to_string(name);
      out << j.dump() << '\n';
    }
  }
}

DatasetSplit read_listing(std::istream& in, const std::string& source) {
  DatasetSplit out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      SequenceSample seq;
      seq.scenario_id = j.at("scenario_id").get<std::string>();
      seq.anchor_index = j.at("anchor_index").get<std::int64_t>();
      seq.r = j.at("r").get<int>();
      seq.r_prime = j.at("r_prime").get<int>();
      seq.label = link_status_from_int(j.at("label").get<int>());
      out.part(split_name_from_string(j.at("split").get<std::string>())).push_back(std::move(seq));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(source + ": " + e.what(), line_no);
    } catch (const ValidationError& e) {
      throw ParseError(source + ": " + e.what(), line_no);
    } catch (const ParseError& e) {
      throw ParseError(source + ": " + e.what(), line_no);
    }
  }
  return out;
}

}  // namespace blockpred
