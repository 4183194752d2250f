#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "slipsim/model.hpp"
#include "slipsim/stats.hpp"

namespace slipsim {

inline constexpr const char* kArtifactName = "slipsim";
inline constexpr const char* kArtifactVersion = "0.1.0";

// Shortest decimal representation that parses back to the same double.
std::string format_double(double x);
double parse_double(const std::string& s);

void write_trade_log(const std::filesystem::path& path, std::span<const TradeLogRow> rows);
std::vector<TradeLogRow> read_trade_log(const std::filesystem::path& path);

void write_execution_records(const std::filesystem::path& path,
                             std::span<const ExecutionRecord> records);
std::vector<ExecutionRecord> read_execution_records(const std::filesystem::path& path);

void write_open_positions(const std::filesystem::path& path,
                          std::span<const OpenPositionRecord> records);

void write_summary(const std::filesystem::path& path, const SummaryReport& report);

// Figure-data tables (delimiter-separated, header row, newline-terminated).
void write_histogram_table(const std::filesystem::path& path, const Histogram& h);
void write_binned_mean_table(const std::filesystem::path& path, const BinnedConditionalMean& b,
                             const std::string& x_name, const std::string& y_name);

std::uint64_t fnv1a_file_digest(const std::filesystem::path& path);

struct ManifestEntry {
  std::string file;  // relative to the manifest's directory
  std::uint64_t digest{};
};

void write_manifest(const std::filesystem::path& path, const ModelConfig& config,
                    std::int64_t replicates, const std::vector<ManifestEntry>& outputs);

struct Manifest {
  std::string artifact;
  std::string version;
  ModelConfig config;
  std::int64_t replicates{};
  std::vector<ManifestEntry> outputs;
};

Manifest read_manifest(const std::filesystem::path& path);

}  // namespace slipsim
