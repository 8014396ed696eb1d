#include "blockpred/coredata.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "blockpred/errors.hpp"

namespace blockpred {
namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

template <typename T>
bool parse_number(std::string_view text, T& value) {
  if (text.empty()) return false;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if constexpr (std::is_floating_point_v<T>) {
    if (*first == '+') ++first;
  }
  const auto [ptr, ec] = std::from_chars(first, last, value);
  return ec == std::errc() && ptr == last;
}

}  // namespace

LinkStatus link_status_from_int(long long value) {
  if (value != 0 && value != 1) {
    throw ValidationError("link status must be 0 or 1, got " + std::to_string(value));
  }
  return static_cast<LinkStatus>(value);
}

std::string to_string(TimeOfDay t) {
  switch (t) {
    case TimeOfDay::day: return "day";
    case TimeOfDay::night: return "night";
    case TimeOfDay::mixed: return "mixed";
  }
  return "day";
}

TimeOfDay time_of_day_from_string(const std::string& s) {
  if (s == "day") return TimeOfDay::day;
  if (s == "night") return TimeOfDay::night;
  if (s == "mixed") return TimeOfDay::mixed;
  throw ValidationError("unknown time_of_day '" + s + "'");
}

std::filesystem::path Scenario::image_path(std::size_t position) const {
  const std::filesystem::path ref(samples.at(position).image_ref);
  return ref.is_absolute() ? ref : base_dir / ref;
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

Scenario parse_manifest(std::istream& in, const std::string& source,
                        const std::filesystem::path& base_dir, const ManifestOptions& options) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(source + ": empty manifest", 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.empty() || line.front() != '#') {
    throw ParseError(source + ": first line must be a '#' JSON header", 1);
  }

  Scenario scenario;
  scenario.base_dir = base_dir;
  try {
    const auto header = nlohmann::json::parse(line.substr(1));
    for (const char* key : {"version", "sample_rate_hz", "M", "power_units", "time_of_day"}) {
      if (!header.contains(key)) {
        throw ParseError(source + ": header missing field '" + key + "'", 1);
      }
    }
    const int version = header.at("version").get<int>();
    if (version != kManifestVersion) {
      throw ParseError(source + ": unsupported manifest version " + std::to_string(version), 1);
    }
    scenario.sample_rate_hz = header.at("sample_rate_hz").get<double>();
    scenario.beam_count = header.at("M").get<int>();
    scenario.antenna_count = header.value("N", 16);
    scenario.power_units = header.at("power_units").get<std::string>();
    scenario.time_of_day = time_of_day_from_string(header.at("time_of_day").get<std::string>());
    scenario.scenario_id = header.value("scenario_id", source);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(source + ": bad header: " + e.what(), 1);
  }
  if (!(scenario.sample_rate_hz > 0.0)) throw ValidationError(source + ": sample_rate_hz must be > 0");
  if (scenario.beam_count <= 0) throw ValidationError(source + ": M must be positive");

  const std::size_t m = static_cast<std::size_t>(scenario.beam_count);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() < 4) {
      throw ParseError(source + ": expected at least 4 fields, got " + std::to_string(fields.size()),
                       line_no);
    }
    Sample s;
    s.scenario_id = scenario.scenario_id;
    if (!parse_number(fields[0], s.seq_index)) {
      throw ParseError(source + ": bad seq_index '" + std::string(fields[0]) + "'", line_no);
    }
    if (fields[1].empty()) {
      s.timestamp = static_cast<double>(s.seq_index) / scenario.sample_rate_hz;
    } else if (!parse_number(fields[1], s.timestamp) || !std::isfinite(s.timestamp)) {
      throw ParseError(source + ": bad timestamp '" + std::string(fields[1]) + "'", line_no);
    }
    s.image_ref = std::string(fields[2]);
    if (s.image_ref.empty()) throw ParseError(source + ": empty image_ref", line_no);
    long long label = 0;
    if (fields[3].empty()) throw ParseError(source + ": missing label", line_no);
    if (!parse_number(fields[3], label)) {
      throw ParseError(source + ": bad label '" + std::string(fields[3]) + "'", line_no);
    }
    try {
      s.link_status = link_status_from_int(label);
    } catch (const ValidationError& e) {
      throw ValidationError(source + ": line " + std::to_string(line_no) + ": " + e.what());
    }
    const std::size_t n_power = fields.size() - 4;
    if (n_power > 0) {
      if (n_power != m) {
        throw ValidationError(source + ": line " + std::to_string(line_no) + ": power vector has " +
                              std::to_string(n_power) + " entries, expected M=" + std::to_string(m));
      }
      std::vector<double> power(m);
      for (std::size_t k = 0; k < m; ++k) {
        if (!parse_number(fields[4 + k], power[k])) {
          throw ParseError(source + ": bad power value '" + std::string(fields[4 + k]) + "'",
                           line_no);
        }
      }
      s.power = std::move(power);
    }
    if (!scenario.samples.empty() && s.seq_index <= scenario.samples.back().seq_index) {
      throw ValidationError(source + ": line " + std::to_string(line_no) +
                            ": seq_index not strictly increasing");
    }
    if (!scenario.samples.empty() && s.timestamp < scenario.samples.back().timestamp) {
      throw ValidationError(source + ": line " + std::to_string(line_no) +
                            ": timestamp decreases");
    }
    if (options.check_images) {
      const std::filesystem::path ref(s.image_ref);
      const auto resolved = ref.is_absolute() ? ref : base_dir / ref;
      if (!std::filesystem::exists(resolved)) {
        throw ValidationError(source + ": line " + std::to_string(line_no) +
                              ": image not found: " + resolved.string());
      }
    }
    scenario.samples.push_back(std::move(s));
  }
  return scenario;
}

Scenario load_manifest(const std::filesystem::path& path, const ManifestOptions& options) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  std::string source = path.stem().string();
  // Scenario ids default to the parent directory for the conventional name.
  if (source == "manifest" && path.has_parent_path()) {
    source = std::filesystem::absolute(path).parent_path().filename().string();
  }
  auto scenario = parse_manifest(in, source, path.parent_path(), options);
  return scenario;
}

void write_manifest(const Scenario& scenario, std::ostream& out) {
  nlohmann::ordered_json header;
  header["version"] = kManifestVersion;
  header["scenario_id"] = scenario.scenario_id;
  header["sample_rate_hz"] = scenario.sample_rate_hz;
  header["M"] = scenario.beam_count;
  header["N"] = scenario.antenna_count;
  header["power_units"] = scenario.power_units;
  header["time_of_day"] = to_string(scenario.time_of_day);
  out << '#' << header.dump() << '\n';
  for (const auto& s : scenario.samples) {
    out << s.seq_index << ',' << format_double(s.timestamp) << ',' << s.image_ref << ','
        << to_int(s.link_status);
    if (s.power) {
      for (double p : *s.power) out << ',' << format_double(p);
    }
    out << '\n';
  }
}

void write_manifest(const Scenario& scenario, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write manifest " + path.string());
  write_manifest(scenario, out);
  if (!out) throw IoError("write failed for " + path.string());
}

void validate(const Scenario& scenario) {
  if (!(scenario.sample_rate_hz > 0.0)) throw ValidationError("sample_rate_hz must be > 0");
  for (std::size_t i = 0; i < scenario.samples.size(); ++i) {
    const auto& s = scenario.samples[i];
    if (s.scenario_id != scenario.scenario_id) {
      throw ValidationError("sample " + std::to_string(i) + " has scenario_id '" + s.scenario_id +
                            "', expected '" + scenario.scenario_id + "'");
    }
    if (i > 0 && s.seq_index <= scenario.samples[i - 1].seq_index) {
      throw ValidationError("seq_index not strictly increasing at sample " + std::to_string(i));
    }
    if (i > 0 && s.timestamp < scenario.samples[i - 1].timestamp) {
      throw ValidationError("timestamp decreases at sample " + std::to_string(i));
    }
    if (s.power && s.power->size() != static_cast<std::size_t>(scenario.beam_count)) {
      throw ValidationError("power vector length mismatch at sample " + std::to_string(i));
    }
    const auto v = static_cast<int>(s.link_status);
    if (v != 0 && v != 1) throw ValidationError("link status out of range at sample " + std::to_string(i));
  }
}

ScenarioStats scenario_stats(const Scenario& scenario) {
  ScenarioStats stats;
  stats.n_samples = scenario.samples.size();
  for (const auto& s : scenario.samples) {
    if (s.link_status == LinkStatus::blocked) ++stats.n_blocked;
  }
  stats.n_los = stats.n_samples - stats.n_blocked;
  if (!scenario.samples.empty()) {
    stats.duration_s = scenario.samples.back().timestamp - scenario.samples.front().timestamp;
  }
  return stats;
}

}  // namespace blockpred
