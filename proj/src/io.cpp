#include "fano/io.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace fano {

namespace fs = std::filesystem;

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("sha256: digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

CsvWriter::CsvWriter(std::vector<std::string> columns) : columns_(std::move(columns)) {
  for (size_t i = 0; i < columns_.size(); ++i) {
    if (i) text_ += ',';
    text_ += columns_[i];
  }
  text_ += '\n';
}

void CsvWriter::row(const std::vector<double>& values) {
  if (values.size() != columns_.size()) throw Error("csv: row width does not match the header");
  char buf[32];
  for (size_t i = 0; i < values.size(); ++i) {
    if (i) text_ += ',';
    // Normalize negative zero so reruns on different paths print the same bytes.
    const double v = values[i] == 0.0 ? 0.0 : values[i];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    text_ += buf;
  }
  text_ += '\n';
  ++rows_;
}

namespace {

void write_file(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace

Manifest::Manifest(fs::path out_dir, std::string scenario) : out_dir_(std::move(out_dir)), scenario_(std::move(scenario)) {
  std::error_code ec;
  fs::create_directories(out_dir_, ec);
  if (ec) throw ValidationError("--out: cannot create " + out_dir_.string() + ": " + ec.message());
}

void Manifest::record(const std::string& name, const std::string& kind, std::size_t rows,
                      const std::vector<std::string>& columns) {
  const fs::path path = out_dir_ / name;
  nlohmann::json entry = {{"path", name},
                          {"kind", kind},
                          {"sha256", sha256_file(path)},
                          {"bytes", static_cast<std::uint64_t>(fs::file_size(path))}};
  if (kind == "csv") {
    entry["rows"] = rows;
    entry["columns"] = columns;
  }
  files_.push_back(std::move(entry));
}

void Manifest::write_csv(const std::string& name, const CsvWriter& csv) {
  write_file(out_dir_ / name, csv.text());
  record(name, "csv", csv.rows(), csv.columns());
}

void Manifest::write_text(const std::string& name, const std::string& text) {
  write_file(out_dir_ / name, text);
  record(name, "text", 0, {});
}

void Manifest::set_config(const std::string& yaml_text, const nlohmann::json& config) {
  config_yaml_ = yaml_text;
  config_ = config;
}

fs::path Manifest::finish() const {
  nlohmann::json m;
  m["scenario"] = scenario_;
  m["config_sha256"] = sha256_hex(config_yaml_);
  m["config"] = config_;
  m["config_yaml"] = config_yaml_;
  m["files"] = files_;
  m["summary"] = summary_;
  m["warnings"] = warnings_;
  const fs::path path = out_dir_ / "manifest.json";
  write_file(path, m.dump(2) + "\n");
  return path;
}

SpectrumCache::SpectrumCache(fs::path dir) : dir_(std::move(dir)) {}

SpectrumCache SpectrumCache::from_environment(const std::string& explicit_dir) {
  if (!explicit_dir.empty()) return SpectrumCache(explicit_dir);
  if (const char* env = std::getenv(kCacheEnv); env && *env) return SpectrumCache(env);
  return SpectrumCache();
}

std::string SpectrumCache::key(const ModelConfig& c, const AngularGrid& grid, const SpectrumOptions& o) {
  std::ostringstream s;
  s.precision(17);
  s << "v1 n=" << c.n_sites << " j=" << c.hop_j << " c3=" << c.c3 << " r=" << c.ring_radius << " tb=" << c.theta_beta
    << " te=" << c.theta_eta << " ta=" << c.theta_alpha0 << " d=" << c.ring_center_offset
    << " cu=" << c.cu_onsite.alpha << "," << c.cu_onsite.beta << "," << c.cu_onsite.eta << " m=" << c.vib_mass
    << " w=" << c.vib_freq << " mode=" << static_cast<int>(c.coupling_mode) << " dmin=" << c.min_site_distance
    << " grid=" << grid.size() << " tie=" << o.tie_tolerance << " ov=" << o.min_overlap
    << " lw=" << o.label_half_width << " chain=";
  for (const auto& [label, v] : c.chain_onsite) s << label << ":" << v << ";";
  return sha256_hex(s.str());
}

namespace {

constexpr char kMagic[8] = {'F', 'A', 'N', 'O', 'S', 'P', 'C', '1'};

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
bool take(std::istream& in, T& v) {
  return static_cast<bool>(in.read(reinterpret_cast<char*>(&v), sizeof(T)));
}

}  // namespace

void SpectrumCache::store(const std::string& key, const AdiabaticSpectrum& sp) const {
  if (!enabled()) return;
  fs::create_directories(dir_);
  const fs::path final_path = dir_ / (key + ".spec");
  const fs::path tmp = dir_ / (key + ".spec.tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("--cache-dir: cannot write " + tmp.string());
    out.write(kMagic, sizeof kMagic);
    const std::int32_t dim = sp.dimension(), n = sp.grid.size(), offset = sp.surface_index_offset;
    const std::int32_t nflags = static_cast<std::int32_t>(sp.flags.size());
    put(out, dim);
    put(out, n);
    put(out, offset);
    put(out, nflags);
    for (const auto& f : sp.flags) {
      put(out, static_cast<std::int32_t>(f.theta_index));
      put(out, static_cast<std::int32_t>(f.surface));
      put(out, f.overlap);
    }
    out.write(reinterpret_cast<const char*>(sp.energies.data()), sizeof(double) * sp.energies.size());
    for (const auto& v : sp.vectors) out.write(reinterpret_cast<const char*>(v.data()), sizeof(double) * v.size());
  }
  fs::rename(tmp, final_path);
}

std::optional<AdiabaticSpectrum> SpectrumCache::load(const std::string& key) const {
  if (!enabled()) return std::nullopt;
  std::ifstream in(dir_ / (key + ".spec"), std::ios::binary);
  if (!in) return std::nullopt;
  char magic[sizeof kMagic];
  if (!in.read(magic, sizeof magic) || !std::equal(magic, magic + sizeof magic, kMagic)) return std::nullopt;
  std::int32_t dim = 0, n = 0, offset = 0, nflags = 0;
  if (!take(in, dim) || !take(in, n) || !take(in, offset) || !take(in, nflags)) return std::nullopt;
  if (dim <= 0 || n <= 0 || (n & (n - 1)) != 0 || nflags < 0) return std::nullopt;
  AdiabaticSpectrum sp;
  sp.grid = AngularGrid(n);
  sp.surface_index_offset = offset;
  for (int i = 0; i < nflags; ++i) {
    std::int32_t j = 0, s = 0;
    double ov = 0;
    if (!take(in, j) || !take(in, s) || !take(in, ov)) return std::nullopt;
    sp.flags.push_back({j, s, ov});
  }
  sp.energies.resize(dim, n);
  if (!in.read(reinterpret_cast<char*>(sp.energies.data()), sizeof(double) * sp.energies.size())) return std::nullopt;
  sp.vectors.assign(n, Eigen::MatrixXd(dim, dim));
  for (auto& v : sp.vectors)
    if (!in.read(reinterpret_cast<char*>(v.data()), sizeof(double) * v.size())) return std::nullopt;
  return sp;
}

AdiabaticSpectrum SpectrumCache::get(const ModelConfig& config, const AngularGrid& grid, const SpectrumOptions& options,
                                     bool* hit) const {
  const std::string k = key(config, grid, options);
  if (auto cached = load(k)) {
    if (hit) *hit = true;
    return std::move(*cached);
  }
  if (hit) *hit = false;
  AdiabaticSpectrum sp = compute_spectrum(config, grid, options);
  store(k, sp);
  return sp;
}

}  // namespace fano
