#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace blockpred {

/// Per-sample LOS link status b[t]: 0 = LOS, 1 = blocked.
enum class LinkStatus : std::uint8_t { los = 0, blocked = 1 };

inline int to_int(LinkStatus s) { return static_cast<int>(s); }
/// Throws ValidationError for values outside {0,1}.
LinkStatus link_status_from_int(long long value);

enum class TimeOfDay { day, night, mixed };

std::string to_string(TimeOfDay t);
TimeOfDay time_of_day_from_string(const std::string& s);

struct Sample {
  std::string scenario_id;
  std::uint64_t seq_index = 0;
  double timestamp = 0.0;  // seconds
  std::string image_ref;   // as written in the manifest (relative to it, or absolute)
  std::optional<std::vector<double>> power;  // M received-power readings, units per header
  LinkStatus link_status = LinkStatus::los;

  friend bool operator==(const Sample&, const Sample&) = default;
};

struct Scenario {
  std::string scenario_id;
  std::vector<Sample> samples;
  double sample_rate_hz = 10.0;
  TimeOfDay time_of_day = TimeOfDay::day;
  int beam_count = 64;     // M
  int antenna_count = 16;  // N
  std::string power_units = "linear";
  /// Directory relative image_refs are resolved against.
  std::filesystem::path base_dir;

  std::filesystem::path image_path(std::size_t position) const;
};

struct ScenarioStats {
  std::size_t n_samples = 0;
  std::size_t n_blocked = 0;
  std::size_t n_los = 0;
  double duration_s = 0.0;

  friend bool operator==(const ScenarioStats&, const ScenarioStats&) = default;
};

struct ManifestOptions {
  /// Require every image_ref to exist on disk.
  bool check_images = true;
};

inline constexpr int kManifestVersion = 1;

/// Reads a manifest: a `#`-prefixed JSON header line followed by CSV rows
/// `seq_index,timestamp,image_ref,label[,power_0..power_{M-1}]`.
/// An empty timestamp field is synthesized as seq_index / sample_rate_hz.
Scenario load_manifest(const std::filesystem::path& path, const ManifestOptions& options = {});

/// Same as load_manifest but from a stream. `source` is used as the default
/// scenario id and for messages; `base_dir` resolves relative image refs.
Scenario parse_manifest(std::istream& in, const std::string& source,
                        const std::filesystem::path& base_dir, const ManifestOptions& options = {});

void write_manifest(const Scenario& scenario, std::ostream& out);
void write_manifest(const Scenario& scenario, const std::filesystem::path& path);

/// Checks Scenario invariants. Throws ValidationError.
void validate(const Scenario& scenario);

ScenarioStats scenario_stats(const Scenario& scenario);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

}  // namespace blockpred
