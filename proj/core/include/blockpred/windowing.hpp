#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "blockpred/coredata.hpp"

namespace blockpred {

struct WindowConfig {
  int r = 8;        // observation length
  int r_prime = 1;  // future window
  int stride = 1;

  /// Throws ConfigError.
  void validate() const;
};

/// One (observation window, future label) pair. The observation covers the
/// scenario positions [anchor_index - r + 1, anchor_index].
struct SequenceSample {
  std::string scenario_id;
  std::int64_t anchor_index = 0;
  int r = 8;
  int r_prime = 1;
  LinkStatus label = LinkStatus::los;

  std::int64_t first_index() const { return anchor_index - r + 1; }

  friend bool operator==(const SequenceSample&, const SequenceSample&) = default;
};

enum class SplitName { train, val, test };
std::string to_string(SplitName s);
SplitName split_name_from_string(const std::string& s);

using SplitFractions = std::array<double, 3>;
inline constexpr SplitFractions kDefaultSplitFractions{0.7, 0.2, 0.1};

struct DatasetSplit {
  std::vector<SequenceSample> train;
  std::vector<SequenceSample> val;
  std::vector<SequenceSample> test;
  SplitFractions fractions = kDefaultSplitFractions;
  std::uint64_t seed = 0;

  const std::vector<SequenceSample>& part(SplitName name) const;
  std::vector<SequenceSample>& part(SplitName name);
  std::size_t size() const { return train.size() + val.size() + test.size(); }
};

/// Future blockage label: 1 iff any status in the future window is blocked.
/// Throws LengthError unless statuses.size() == r_prime.
LinkStatus future_label(std::span<const LinkStatus> statuses, int r_prime);

/// Number of windows build_windows emits for n samples, or 0 if too short.
std::size_t window_count(std::size_t n, const WindowConfig& cfg);

/// Dense sliding windows over one scenario. Anchors run over
/// [r-1, n-r'-1] in steps of `stride`. Throws InsufficientDataError when the
/// scenario has fewer than r + r' samples.
std::vector<SequenceSample> build_windows(const Scenario& scenario, const WindowConfig& cfg);

/// Label-only overload used by tests and the sweep tooling.
std::vector<SequenceSample> build_windows(std::span<const LinkStatus> statuses,
                                          const std::string& scenario_id, const WindowConfig& cfg);

/// Down-samples the majority class uniformly at random (seeded) until the
/// class gap is at most one. Survivors keep their relative order. Input whose
/// gap is already <= 1 is returned unchanged. Throws EmptyClassError.
std::vector<SequenceSample> balance(const std::vector<SequenceSample>& dataset, std::uint64_t seed);

/// Seeded permutation followed by contiguous cuts at floor(f0*V) and
/// floor((f0+f1)*V). Throws FractionError when fractions do not sum to 1.
DatasetSplit split(const std::vector<SequenceSample>& dataset,
                   const SplitFractions& fractions = kDefaultSplitFractions, std::uint64_t seed = 0);

/// Split boundaries (train_end, val_end) for V items.
std::pair<std::size_t, std::size_t> split_cuts(std::size_t v, const SplitFractions& fractions);

/// build_windows + balance + split for each r' in `r_primes`.
std::map<int, DatasetSplit> sweep_datasets(const Scenario& scenario, int r,
                                           const std::vector<int>& r_primes, std::uint64_t seed,
                                           int stride = 1);

/// Concatenates per-scenario splits part-by-part into one combined split.
DatasetSplit combine_splits(const std::vector<DatasetSplit>& parts);

/// Dataset listing: JSON lines of
/// {"scenario_id","anchor_index","r","r_prime","label","split"}.
void write_listing(const DatasetSplit& split, std::ostream& out);
DatasetSplit read_listing(std::istream& in, const std::string& source = "listing");

}  // namespace blockpred
