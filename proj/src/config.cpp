#include "fano/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace fano {

namespace {

constexpr double kPi = std::numbers::pi;

// Preset differences from the defaults. Angles in radians.
const std::map<std::string, std::string>& preset_table() {
  static const std::map<std::string, std::string> table = {
      {"slanted", R"(
model:
  n_sites: 100
  c3: 4.0
  ring_radius: 1.0
  theta_beta: 1.5707963267948966
  theta_eta: 5.235987755982989
  ring_center_offset: 1.9
  cu_onsite: {alpha: 0.0, beta: 2.0, eta: 2.0}
  vib_freq: 0.12
vibration:
  sigma_theta: 0.06366197723675814
calibrate: true
calibration:
  level: 0
packet:
  nu: 1
)"},
      {"flat", R"(
model:
  n_sites: 100
  c3: 3.0
  ring_radius: 1.0
  theta_beta: 2.0943951023931953
  theta_eta: 4.1887902047863905
  ring_center_offset: 1.8
  cu_onsite: {alpha: 0.0, beta: 3.0, eta: 3.0}
  vib_freq: 0.12
vibration:
  sigma_theta: 0.06366197723675814
calibrate: true
calibration:
  level: 0
packet:
  nu: 2
)"},
      {"ci", R"(
model:
  n_sites: 100
  c3: 4.0
  ring_radius: 0.5
  theta_beta: 2.0943951023931953
  theta_eta: 4.1887902047863905
  ring_center_offset: 1.3
  cu_onsite: {alpha: 0.0, beta: 0.0, eta: 0.0}
  vib_freq: 0.12
vibration:
  sigma_theta: 0.06366197723675814
calibrate: true
calibration:
  level: 1
)"},
      {"clean", R"(
model:
  c3: 0.0
  vib_freq: 0.12
vibration:
  sigma_theta: 0.06366197723675814
calibrate: false
)"},
  };
  return table;
}

std::string coupling_name(CouplingMode m) {
  return m == CouplingMode::FullDipole ? "full_dipole" : "nearest_neighbor";
}

CouplingMode parse_coupling(const std::string& s) {
  if (s == "nearest_neighbor") return CouplingMode::NearestNeighborChain;
  if (s == "full_dipole") return CouplingMode::FullDipole;
  throw ValidationError("model.coupling_mode: expected nearest_neighbor or full_dipole, got '" + s + "'");
}

NacMode parse_nac(const std::string& s) {
  if (s == "full") return NacMode::Full;
  if (s == "disabled") return NacMode::Disabled;
  throw ValidationError("propagation.nac_mode: expected full or disabled, got '" + s + "'");
}

BoundaryPolicy parse_boundary(const std::string& s) {
  if (s == "size_limited") return BoundaryPolicy::SizeLimited;
  if (s == "absorbing") return BoundaryPolicy::Absorbing;
  throw ValidationError("propagation.boundary_policy: expected size_limited or absorbing, got '" + s + "'");
}

// Strict reader over one mapping: every key must be consumed.
class Section {
 public:
  Section(const YAML::Node& node, std::string path) : node_(node), path_(std::move(path)) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) throw ValidationError(path_ + ": expected a mapping");
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!node_ || !node_[key]) return;
    try {
      out = node_[key].template as<T>();
    } catch (const YAML::Exception&) {
      throw ValidationError(path_ + "." + key + ": cannot parse value");
    }
  }

  YAML::Node child(const std::string& key) {
    seen_.insert(key);
    return node_ ? node_[key] : YAML::Node();
  }

  std::string path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    if (!node_ || node_.IsNull()) return;
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!seen_.count(key)) throw ValidationError(path(key) + ": unknown key");
    }
  }

 private:
  YAML::Node node_;
  std::string path_;
  std::set<std::string> seen_;
};

RunConfig decode(const YAML::Node& root) {
  RunConfig c;
  Section top(root, "");
  top.get("preset", c.preset);
  top.get("calibrate", c.calibrate);

  {
    Section s(top.child("model"), "model");
    auto& m = c.model;
    s.get("n_sites", m.n_sites);
    s.get("hop_j", m.hop_j);
    s.get("c3", m.c3);
    s.get("ring_radius", m.ring_radius);
    s.get("theta_beta", m.theta_beta);
    s.get("theta_eta", m.theta_eta);
    s.get("theta_alpha0", m.theta_alpha0);
    s.get("ring_center_offset", m.ring_center_offset);
    s.get("vib_mass", m.vib_mass);
    s.get("vib_freq", m.vib_freq);
    s.get("min_site_distance", m.min_site_distance);
    std::string mode = coupling_name(m.coupling_mode);
    s.get("coupling_mode", mode);
    m.coupling_mode = parse_coupling(mode);
    {
      Section cu(s.child("cu_onsite"), "model.cu_onsite");
      cu.get("alpha", m.cu_onsite.alpha);
      cu.get("beta", m.cu_onsite.beta);
      cu.get("eta", m.cu_onsite.eta);
      cu.finish();
    }
    const YAML::Node chain = s.child("chain_onsite");
    if (chain && !chain.IsNull()) {
      if (!chain.IsMap()) throw ValidationError("model.chain_onsite: expected a mapping label -> energy");
      m.chain_onsite.clear();
      for (const auto& kv : chain) {
        try {
          m.chain_onsite[kv.first.as<int>()] = kv.second.as<double>();
        } catch (const YAML::Exception&) {
          throw ValidationError("model.chain_onsite: entries must be integer label -> energy");
        }
      }
    }
    s.finish();
  }
  {
    Section s(top.child("vibration"), "vibration");
    s.get("sigma_theta", c.vibration.sigma_theta);
    s.get("freeze_margin", c.vibration.freeze_margin);
    s.get("freeze_basis", c.vibration.freeze_basis);
    s.finish();
  }
  {
    Section s(top.child("grid"), "grid");
    s.get("n_points", c.grid.n_points);
    s.get("nac_half_width", c.grid.nac_half_width);
    s.get("spectrum_sites", c.grid.spectrum_sites);
    s.finish();
  }
  {
    Section s(top.child("packet"), "packet");
    s.get("energy", c.packet.energy);
    s.get("sigma_e", c.packet.sigma_e);
    s.get("n0", c.packet.n0);
    s.get("nu", c.packet.nu);
    s.get("nus", c.packet.nus);
    s.finish();
  }
  {
    Section s(top.child("propagation"), "propagation");
    auto& p = c.propagation;
    s.get("dt", p.dt);
    s.get("t_final", p.t_final);
    s.get("snapshot_stride", p.snapshot_stride);
    std::string nac = p.nac_mode == NacMode::Full ? "full" : "disabled";
    s.get("nac_mode", nac);
    p.nac_mode = parse_nac(nac);
    s.get("frozen", c.frozen);
    s.get("static_theta", p.frozen);
    std::string boundary = p.boundary_policy == BoundaryPolicy::SizeLimited ? "size_limited" : "absorbing";
    s.get("boundary_policy", boundary);
    p.boundary_policy = parse_boundary(boundary);
    s.get("guard_sites", p.guard_sites);
    s.get("guard_threshold", p.guard_threshold);
    s.get("splitting_order", p.splitting_order);
    s.finish();
  }
  {
    Section s(top.child("calibration"), "calibration");
    auto& t = c.calibration;
    s.get("level", t.level);
    s.get("resonance_energy", t.resonance_energy);
    s.get("max_transmission", t.max_transmission);
    s.get("scan_min", t.scan_min);
    s.get("scan_max", t.scan_max);
    s.get("scan_points", t.scan_points);
    s.get("tune_offset", t.tune_offset);
    s.get("offset_min", t.offset_min);
    s.get("offset_max", t.offset_max);
    s.finish();
  }
  {
    Section s(top.child("scan"), "scan");
    s.get("e_min", c.scan.e_min);
    s.get("e_max", c.scan.e_max);
    s.get("n_points", c.scan.n_points);
    s.finish();
  }
  {
    Section s(top.child("thermal"), "thermal");
    s.get("t_max", c.thermal.t_max);
    s.get("n_points", c.thermal.n_points);
    s.finish();
  }
  top.finish();
  return c;
}

YAML::Node parse(const std::string& text, const std::string& origin) {
  try {
    return YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ValidationError(origin + ": " + e.what());
  }
}

// Recursive merge of `over` into `base` (maps merge, everything else replaces).
void merge(YAML::Node base, const YAML::Node& over) {
  if (!over || over.IsNull()) return;
  for (const auto& kv : over) {
    const auto key = kv.first.as<std::string>();
    if (kv.second.IsMap() && base[key] && base[key].IsMap())
      merge(base[key], kv.second);
    else
      base[key] = YAML::Clone(kv.second);
  }
}

void apply_override(YAML::Node root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ValidationError("--set: expected key=value, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);
  std::vector<std::string> parts;
  std::stringstream ss(key);
  for (std::string p; std::getline(ss, p, '.');) {
    if (p.empty()) throw ValidationError("--set: malformed key '" + key + "'");
    parts.push_back(p);
  }
  std::vector<YAML::Node> chain{root};
  for (size_t i = 0; i + 1 < parts.size(); ++i) {
    YAML::Node next = chain.back()[parts[i]];
    if (!next || !next.IsMap()) {
      chain.back()[parts[i]] = YAML::Node(YAML::NodeType::Map);
      next = chain.back()[parts[i]];
    }
    chain.push_back(next);
  }
  chain.back()[parts.back()] = parse(value, "--set " + key);
}

YAML::Node load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  YAML::Node node = parse(ss.str(), path);
  if (node.IsNull()) return YAML::Node(YAML::NodeType::Map);
  if (!node.IsMap()) throw ValidationError(path + ": top level must be a mapping");
  return node;
}

YAML::Node preset_node(const std::string& name) {
  YAML::Node root = parse(to_yaml(RunConfig{}), "defaults");
  if (name.empty()) return root;
  auto it = preset_table().find(name);
  if (it == preset_table().end()) throw ValidationError("preset: unknown preset '" + name + "'");
  merge(root, parse(it->second, "preset " + name));
  root["preset"] = name;
  return root;
}

}  // namespace

ModelConfig RunConfig::effective_model() const {
  ModelConfig m = model;
  if (vibration.sigma_theta > 0) m.vib_mass = mass_for_sigma_theta(m, vibration.sigma_theta);
  return m;
}

ModelConfig RunConfig::dynamics_model(const ModelConfig& calibrated) const {
  if (!frozen) return calibrated;
  return freeze_check(calibrated, calibrated.sigma_theta(), vibration.freeze_margin);
}

double RunConfig::nac_half_width() const {
  if (grid.nac_half_width > 0) return grid.nac_half_width;
  return std::min(kPi, 8 * effective_model().sigma_theta());
}

PacketSpec RunConfig::packet_spec(const ModelConfig& m, int nu) const {
  PacketSpec p;
  p.k = chain_wavenumber(m, packet.energy);
  p.n0 = packet.n0;
  p.sigma = packet_sigma_for_energy_width(m, p.k, packet.sigma_e);
  p.nu = nu;
  return p;
}

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& [k, v] : preset_table()) out.push_back(k);
  return out;
}

RunConfig preset_config(const std::string& name) { return decode(preset_node(name)); }

RunConfig from_yaml_text(const std::string& text) {
  YAML::Node root = parse(text, "config");
  if (!root.IsMap() && !root.IsNull()) throw ValidationError("config: top level must be a mapping");
  return decode(root);
}

RunConfig load_run_config(const std::string& preset, const std::string& path,
                          const std::vector<std::string>& overrides) {
  YAML::Node file = path.empty() ? YAML::Node(YAML::NodeType::Map) : load_file(path);
  std::string name = preset;
  if (file["preset"]) name = file["preset"].as<std::string>();
  for (const auto& o : overrides)
    if (o.rfind("preset=", 0) == 0) name = o.substr(7);
  YAML::Node root = preset_node(name);
  merge(root, file);
  for (const auto& o : overrides) apply_override(root, o);
  root["preset"] = name;
  return decode(root);
}

std::string to_yaml(const RunConfig& c) {
  YAML::Emitter e;
  e.SetDoublePrecision(17);
  e << YAML::BeginMap;
  e << YAML::Key << "preset" << YAML::Value << c.preset;
  e << YAML::Key << "calibrate" << YAML::Value << c.calibrate << YAML::Comment("shift CU levels before running");

  const auto& m = c.model;
  e << YAML::Key << "model" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "n_sites" << YAML::Value << m.n_sites << YAML::Comment("chain length N (even)");
  e << YAML::Key << "hop_j" << YAML::Value << m.hop_j << YAML::Comment("J, energy unit");
  e << YAML::Key << "c3" << YAML::Value << m.c3 << YAML::Comment("J * a^3");
  e << YAML::Key << "ring_radius" << YAML::Value << m.ring_radius << YAML::Comment("a");
  e << YAML::Key << "theta_beta" << YAML::Value << m.theta_beta << YAML::Comment("rad");
  e << YAML::Key << "theta_eta" << YAML::Value << m.theta_eta << YAML::Comment("rad");
  e << YAML::Key << "theta_alpha0" << YAML::Value << m.theta_alpha0 << YAML::Comment("rad, trap center");
  e << YAML::Key << "ring_center_offset" << YAML::Value << m.ring_center_offset << YAML::Comment("a, site 0 to ring center");
  e << YAML::Key << "vib_mass" << YAML::Value << m.vib_mass << YAML::Comment("M; replaced when vibration.sigma_theta > 0");
  e << YAML::Key << "vib_freq" << YAML::Value << m.vib_freq << YAML::Comment("omega, J");
  e << YAML::Key << "coupling_mode" << YAML::Value << coupling_name(m.coupling_mode)
    << YAML::Comment("nearest_neighbor | full_dipole");
  e << YAML::Key << "min_site_distance" << YAML::Value << m.min_site_distance << YAML::Comment("a");
  e << YAML::Key << "cu_onsite" << YAML::Value << YAML::Flow << YAML::BeginMap;
  e << YAML::Key << "alpha" << YAML::Value << m.cu_onsite.alpha;
  e << YAML::Key << "beta" << YAML::Value << m.cu_onsite.beta;
  e << YAML::Key << "eta" << YAML::Value << m.cu_onsite.eta;
  e << YAML::EndMap << YAML::Comment("J, before calibration");
  e << YAML::Key << "chain_onsite" << YAML::Value << YAML::Flow << YAML::BeginMap;
  for (const auto& [label, v] : m.chain_onsite) e << YAML::Key << label << YAML::Value << v;
  e << YAML::EndMap << YAML::Comment("label -> J");
  e << YAML::EndMap;

  e << YAML::Key << "vibration" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "sigma_theta" << YAML::Value << c.vibration.sigma_theta << YAML::Comment("rad, ground-state width");
  e << YAML::Key << "freeze_margin" << YAML::Value << c.vibration.freeze_margin
    << YAML::Comment("frozen-limit omega / 4J");
  e << YAML::Key << "freeze_basis" << YAML::Value << c.vibration.freeze_basis
    << YAML::Comment("vibrational states kept in frozen-limit runs");
  e << YAML::EndMap;

  e << YAML::Key << "grid" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "n_points" << YAML::Value << c.grid.n_points << YAML::Comment("theta points, power of two");
  e << YAML::Key << "nac_half_width" << YAML::Value << c.grid.nac_half_width
    << YAML::Comment("rad; <= 0 means 8 sigma_theta");
  e << YAML::Key << "spectrum_sites" << YAML::Value << c.grid.spectrum_sites << YAML::Comment("N for band-structure scenarios");
  e << YAML::EndMap;

  e << YAML::Key << "packet" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "energy" << YAML::Value << c.packet.energy << YAML::Comment("J");
  e << YAML::Key << "sigma_e" << YAML::Value << c.packet.sigma_e << YAML::Comment("J");
  e << YAML::Key << "n0" << YAML::Value << c.packet.n0 << YAML::Comment("site label");
  e << YAML::Key << "nu" << YAML::Value << c.packet.nu;
  e << YAML::Key << "nus" << YAML::Value << YAML::Flow << c.packet.nus;
  e << YAML::EndMap;

  const auto& p = c.propagation;
  e << YAML::Key << "propagation" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "dt" << YAML::Value << p.dt << YAML::Comment("1/J");
  e << YAML::Key << "t_final" << YAML::Value << p.t_final << YAML::Comment("1/J");
  e << YAML::Key << "snapshot_stride" << YAML::Value << p.snapshot_stride << YAML::Comment("steps");
  e << YAML::Key << "nac_mode" << YAML::Value << (p.nac_mode == NacMode::Full ? "full" : "disabled");
  e << YAML::Key << "frozen" << YAML::Value << c.frozen << YAML::Comment("omega raised at fixed sigma_theta");
  e << YAML::Key << "static_theta" << YAML::Value << p.frozen << YAML::Comment("drop the theta kinetic and trap terms");
  e << YAML::Key << "boundary_policy" << YAML::Value
    << (p.boundary_policy == BoundaryPolicy::SizeLimited ? "size_limited" : "absorbing");
  e << YAML::Key << "guard_sites" << YAML::Value << p.guard_sites;
  e << YAML::Key << "guard_threshold" << YAML::Value << p.guard_threshold;
  e << YAML::Key << "splitting_order" << YAML::Value << p.splitting_order
    << YAML::Comment("2 or 4");
  e << YAML::EndMap;

  const auto& t = c.calibration;
  e << YAML::Key << "calibration" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "level" << YAML::Value << t.level << YAML::Comment("isolated-CU level index, ascending");
  e << YAML::Key << "resonance_energy" << YAML::Value << t.resonance_energy << YAML::Comment("J");
  e << YAML::Key << "max_transmission" << YAML::Value << t.max_transmission;
  e << YAML::Key << "scan_min" << YAML::Value << t.scan_min << YAML::Comment("J");
  e << YAML::Key << "scan_max" << YAML::Value << t.scan_max << YAML::Comment("J");
  e << YAML::Key << "scan_points" << YAML::Value << t.scan_points;
  e << YAML::Key << "tune_offset" << YAML::Value << t.tune_offset;
  e << YAML::Key << "offset_min" << YAML::Value << t.offset_min << YAML::Comment("a");
  e << YAML::Key << "offset_max" << YAML::Value << t.offset_max << YAML::Comment("a");
  e << YAML::EndMap;

  e << YAML::Key << "scan" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "e_min" << YAML::Value << c.scan.e_min << YAML::Comment("J");
  e << YAML::Key << "e_max" << YAML::Value << c.scan.e_max << YAML::Comment("J");
  e << YAML::Key << "n_points" << YAML::Value << c.scan.n_points;
  e << YAML::EndMap;

  e << YAML::Key << "thermal" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "t_max" << YAML::Value << c.thermal.t_max << YAML::Comment("omega / k_B");
  e << YAML::Key << "n_points" << YAML::Value << c.thermal.n_points;
  e << YAML::EndMap;

  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

std::vector<std::string> validate_run_config(const RunConfig& c) {
  std::vector<std::string> out = c.model.violations();
  auto add = [&](const std::string& s) { out.push_back(s); };

  if (c.vibration.sigma_theta < 0) add("vibration.sigma_theta: must be >= 0");
  if (c.vibration.sigma_theta > 0 && !(c.model.vib_freq > 0))
    add("vibration.sigma_theta: needs model.vib_freq > 0 to fix the mass");
  if (!(c.vibration.freeze_margin >= 10)) add("vibration.freeze_margin: must be >= 10");
  if (c.vibration.freeze_basis < 1 || c.vibration.freeze_basis > c.grid.n_points)
    add("vibration.freeze_basis: must lie between 1 and grid.n_points");

  const int n = c.grid.n_points;
  if (n <= 0 || (n & (n - 1)) != 0) {
    add("grid.n_points: must be a positive power of two");
  } else if (out.empty() && c.model.vib_freq > 0) {
    const double sigma = c.effective_model().sigma_theta();
    const double spacing = 2 * kPi / n;
    // At least 8 grid points across the +-2 sigma_theta core of the density.
    if (4 * sigma / spacing < 8) {
      int suggest = n;
      while (4 * sigma / (2 * kPi / suggest) < 8) suggest *= 2;
      std::ostringstream msg;
      msg << "grid.n_points: sigma_theta = " << sigma << " rad is covered by " << 4 * sigma / spacing
          << " points within +-2 sigma (need 8); use n_points >= " << suggest;
      add(msg.str());
    }
  }
  if (c.grid.spectrum_sites < 2 || c.grid.spectrum_sites % 2 != 0)
    add("grid.spectrum_sites: must be even and >= 2");
  if (c.grid.nac_half_width > kPi) add("grid.nac_half_width: must be <= pi");

  if (!(std::abs(c.packet.energy) < 2 * c.model.hop_j)) add("packet.energy: must lie inside the band (-2J, 2J)");
  if (!(c.packet.sigma_e > 0)) add("packet.sigma_e: must be > 0");
  if (c.packet.nu < 0) add("packet.nu: must be >= 0");
  if (c.packet.nus.empty()) add("packet.nus: must list at least one vibrational state");
  for (int nu : c.packet.nus)
    if (nu < 0) add("packet.nus: entries must be >= 0");

  if (out.empty() && std::abs(c.packet.energy) < 2 * c.model.hop_j && c.packet.sigma_e > 0) {
    const SiteLayout layout(c.model.n_sites);
    const double k = std::acos(c.packet.energy / (2 * c.model.hop_j));
    const double sigma = packet_sigma_for_energy_width(c.model, k, c.packet.sigma_e);
    const double lo = c.packet.n0 - 4 * sigma;
    const double hi = c.packet.n0 + 4 * sigma;
    if (sigma < 2) add("packet.sigma_e: packet narrower than 2 sites");
    if (lo < layout.first_label() + c.propagation.guard_sites || hi >= 0) {
      std::ostringstream msg;
      msg << "packet.n0: packet core [" << lo << ", " << hi << "] must fit between the left guard ("
          << layout.first_label() + c.propagation.guard_sites << ") and site 0";
      add(msg.str());
    }
  }

  try {
    c.propagation.validate();
  } catch (const ValidationError& e) {
    add(e.what());
  }
  if (c.propagation.guard_sites < 0 || 2 * c.propagation.guard_sites > c.model.n_sites)
    add("propagation.guard_sites: must lie between 0 and model.n_sites / 2");
  if (c.calibration.level < 0 || c.calibration.level > 2) add("calibration.level: must be 0, 1 or 2");
  if (!(c.calibration.max_transmission > 0 && c.calibration.max_transmission <= 1))
    add("calibration.max_transmission: must lie in (0, 1]");
  if (!(c.scan.e_min > -2 * c.model.hop_j && c.scan.e_max < 2 * c.model.hop_j && c.scan.e_min < c.scan.e_max))
    add("scan.e_min: scan window must be an ordered interval inside the band");
  if (c.scan.n_points < 2) add("scan.n_points: must be >= 2");
  if (c.thermal.n_points < 1 || !(c.thermal.t_max >= 0)) add("thermal.t_max: need t_max >= 0 and n_points >= 1");
  return out;
}

}  // namespace fano
