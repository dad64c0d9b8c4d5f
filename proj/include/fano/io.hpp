#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fano/surfaces.hpp"

namespace fano {

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Numeric CSV with a single header line. Values are printed with 12
/// significant digits, so identical inputs give identical bytes.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> columns);

  void row(const std::vector<double>& values);
  const std::vector<std::string>& columns() const { return columns_; }
  std::size_t rows() const { return rows_; }
  const std::string& text() const { return text_; }

 private:
  std::vector<std::string> columns_;
  std::string text_;
  std::size_t rows_ = 0;
};

/// Collects emitted files and writes manifest.json next to them.
class Manifest {
 public:
  Manifest(std::filesystem::path out_dir, std::string scenario);

  /// Writes the CSV under out_dir/name and records its hash.
  void write_csv(const std::string& name, const CsvWriter& csv);
  void write_text(const std::string& name, const std::string& text);

  nlohmann::json& summary() { return summary_; }
  void set_config(const std::string& yaml_text, const nlohmann::json& config);
  void add_warning(const std::string& message) { warnings_.push_back(message); }

  /// Writes manifest.json and returns its path.
  std::filesystem::path finish() const;
  const std::filesystem::path& out_dir() const { return out_dir_; }

 private:
  void record(const std::string& name, const std::string& kind, std::size_t rows,
              const std::vector<std::string>& columns);

  std::filesystem::path out_dir_;
  std::string scenario_;
  nlohmann::json files_ = nlohmann::json::array();
  nlohmann::json summary_ = nlohmann::json::object();
  nlohmann::json config_ = nlohmann::json::object();
  std::string config_yaml_;
  std::vector<std::string> warnings_;
};

/// Environment variable that names the default spectrum cache directory.
inline constexpr const char* kCacheEnv = "FANOCHAIN_CACHE_DIR";

/// Binary store of adiabatic spectra keyed by a hash of everything that
/// determines them. A disabled cache (empty directory) never hits.
class SpectrumCache {
 public:
  explicit SpectrumCache(std::filesystem::path dir = {});

  /// Explicit directory, else the environment variable, else disabled.
  static SpectrumCache from_environment(const std::string& explicit_dir);

  bool enabled() const { return !dir_.empty(); }
  const std::filesystem::path& dir() const { return dir_; }

  static std::string key(const ModelConfig& config, const AngularGrid& grid, const SpectrumOptions& options);

  std::optional<AdiabaticSpectrum> load(const std::string& key) const;
  void store(const std::string& key, const AdiabaticSpectrum& spectrum) const;

  /// load() or compute_spectrum() followed by store().
  AdiabaticSpectrum get(const ModelConfig& config, const AngularGrid& grid, const SpectrumOptions& options = {},
                        bool* hit = nullptr) const;

 private:
  std::filesystem::path dir_;
};

}  // namespace fano
