#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "bbm/config.hpp"
#include "bbm/decoration.hpp"
#include "bbm/engine.hpp"
#include "bbm/fkpp.hpp"
#include "bbm/frontstats.hpp"
#include "bbm/harness.hpp"

namespace bbm {

// "bbm 0.3.0"
std::string version_string();

// Shortest decimal form that parses back to the same double.
std::string format_double(double x);
double parse_double(std::string_view s);  // IoError on malformed input

// Files live in an existing directory; a missing directory is an IoError
// rather than something created on the fly. Each file has a single writer.
class OutputDir {
 public:
  OutputDir(std::filesystem::path dir, RunConfig config);
  const std::filesystem::path& path() const { return dir_; }
  const RunConfig& config() const { return config_; }

  // Opens name for writing. CSV files start with "# bbm <version>" and one
  // "# key = value" comment line per config entry.
  std::ofstream open_csv(const std::string& name) const;
  void write_json(const std::string& name, nlohmann::json body) const;
  std::ofstream open_raw(const std::string& name) const;

 private:
  std::filesystem::path dir_;
  RunConfig config_;
};

void write_csv_preamble(std::ostream& out, const RunConfig& config);

// Line-delimited JSON: a header record (version, config, grid), then one
// record per node with its checkpoints.
void write_arena(std::ostream& out, const LineageArena& arena, const RunConfig& config);
LineageArena read_arena(std::istream& in);

void write_snapshot_csv(std::ostream& out, const PopulationSnapshot& s);
void write_front_csv(std::ostream& out, std::span<const FrontRecord> records);

// Stored medians and m_t - 1.5 log t for every slice.
void write_medians_csv(std::ostream& out, const FkppTable& table);
void write_wave_csv(std::ostream& out, const WaveProfile& w);

// Report JSON (with version and config echo) plus one CSV of raw columns
// when the report has any.
void write_report(const OutputDir& dir, const ExperimentReport& report);

}  // namespace bbm
