#include "fano/scenarios.hpp"

#include <yaml-cpp/yaml.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>

namespace fano {

namespace fs = std::filesystem;

PreparedModel prepare_model(const RunConfig& config) {
  PreparedModel out;
  out.model = config.effective_model();
  if (config.calibrate) {
    out.model = calibrate(out.model, config.calibration, &out.report);
    out.calibrated = true;
  }
  return out;
}

TransportResult run_transport(const ModelConfig& model, const RunConfig& config, int nu,
                              const PropagationSettings& settings, const std::vector<Observer>& extra,
                              TransportMethod method) {
  const AngularGrid grid = config.angular_grid();
  InitialState init = initial_state(model, grid, config.packet_spec(model, nu));
  TransportResult out;
  out.warnings = init.warnings;
  std::vector<Observer> observers{[&](double t, const Field& a) {
    Eigen::VectorXd p = site_populations(a, grid.spacing());
    out.times.push_back(t);
    out.n_r.push_back(right_weight(p, model.n_sites));
    out.populations.push_back(std::move(p));
  }};
  observers.insert(observers.end(), extra.begin(), extra.end());
  if (method == TransportMethod::VibronicBasis)
    out.diagnostics = VibronicBasisPropagator(model, grid, settings, config.vibration.freeze_basis).run(init.psi, observers);
  else
    out.diagnostics = propagate_diabatic(init.psi, model, settings, observers);
  if (!out.diagnostics.valid) out.warnings.push_back("run flagged invalid: " + out.diagnostics.invalid_reason);
  out.final_state = std::move(init.psi);
  return out;
}

TransportResult run_frozen_limit(const ModelConfig& model, const RunConfig& config, int nu,
                                 const std::vector<Observer>& extra) {
  const ModelConfig frozen = freeze_check(model, model.sigma_theta(), config.vibration.freeze_margin);
  return run_transport(frozen, config, nu, config.propagation, extra, TransportMethod::VibronicBasis);
}

SurfaceRecord run_with_surfaces(const ModelConfig& model, const RunConfig& config, int nu,
                                const PropagationSettings& settings, const AdiabaticSpectrum& spectrum,
                                const NacField& nac, TransportMethod method) {
  SurfaceRecord rec;
  const AngularGrid& grid = spectrum.grid;
  SpectralDerivative derivative(grid, spectrum.dimension());
  rec.mean_density = Eigen::MatrixXd::Zero(spectrum.dimension(), grid.size());
  Observer obs = [&](double t, const Field& a) {
    Wavefunction psi;
    psi.grid = grid;
    psi.amplitudes = a;
    const SurfaceWavefunction phi = project_adiabatic(psi, spectrum);
    rec.surface_populations.push_back(surface_populations(phi));
    rec.rates.times.push_back(t);
    rec.rates.rates.push_back(transition_rates(phi.amplitudes, nac, derivative));
    rec.mean_density += phi.amplitudes.cwiseAbs2();
  };
  rec.transport = run_transport(model, config, nu, settings, {obs}, method);
  if (!rec.surface_populations.empty()) rec.mean_density /= static_cast<double>(rec.surface_populations.size());
  return rec;
}

namespace {

nlohmann::json yaml_to_json(const YAML::Node& node) {
  switch (node.Type()) {
    case YAML::NodeType::Map: {
      nlohmann::json j = nlohmann::json::object();
      for (const auto& kv : node) j[kv.first.as<std::string>()] = yaml_to_json(kv.second);
      return j;
    }
    case YAML::NodeType::Sequence: {
      nlohmann::json j = nlohmann::json::array();
      for (const auto& v : node) j.push_back(yaml_to_json(v));
      return j;
    }
    case YAML::NodeType::Scalar: {
      const std::string s = node.Scalar();
      if (s == "true") return true;
      if (s == "false") return false;
      char* end = nullptr;
      const long long i = std::strtoll(s.c_str(), &end, 10);
      if (!s.empty() && *end == '\0') return i;
      const double d = std::strtod(s.c_str(), &end);
      if (!s.empty() && *end == '\0') return d;
      return s;
    }
    default:
      return nullptr;
  }
}

std::string nu_column(int nu) { return "N_R_nu" + std::to_string(nu); }

nlohmann::json diagnostics_json(const RunDiagnostics& d) {
  return {{"max_norm_drift", d.max_norm_drift},
          {"max_energy_drift", d.max_energy_drift},
          {"max_guard_density", d.max_guard_density},
          {"valid", d.valid},
          {"steps", d.steps}};
}

struct Context {
  const RunConfig& config;
  Manifest& manifest;
  const SpectrumCache& cache;
  PreparedModel prepared;

  void note(const TransportResult& r, const std::string& label) {
    for (const auto& w : r.warnings) manifest.add_warning(label + ": " + w);
    manifest.summary()["runs"][label] = diagnostics_json(r.diagnostics);
  }

  TransportMethod method() const { return config.frozen ? TransportMethod::VibronicBasis : TransportMethod::Grid; }

  // Wavepacket run honoring the frozen switch of the config.
  TransportResult transport(int nu, const PropagationSettings& settings, const std::vector<Observer>& extra = {}) {
    if (config.frozen) return run_frozen_limit(prepared.model, config, nu, extra);
    return run_transport(prepared.model, config, nu, settings, extra);
  }
};

void write_scan(Context& ctx, const std::string& name, const ModelConfig& model) {
  const auto& s = ctx.config.scan;
  const auto curve = scan_transmission(model, model.theta_alpha0, s.e_min, s.e_max, s.n_points);
  CsvWriter csv({"E_over_J", "T", "R", "frozen_theta"});
  for (size_t i = 0; i < curve.energies.size(); ++i)
    csv.row({curve.energies[i] / model.hop_j, curve.transmission[i], curve.reflection[i], curve.frozen_theta});
  ctx.manifest.write_csv(name, csv);

  auto& sum = ctx.manifest.summary();
  sum["max_T"] = *std::max_element(curve.transmission.begin(), curve.transmission.end());
  const double e_res = ctx.config.calibration.resonance_energy;
  sum["T_at_resonance"] = std::abs(e_res) < 2 * model.hop_j ? transmission(model, e_res, model.theta_alpha0).t : 0.0;
  // Fano zeros: isolated-CU levels inside the band, reported analytically.
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> cu(isolated_cu_hamiltonian(model, model.theta_alpha0).h);
  nlohmann::json zeros = nlohmann::json::array();
  const bool coupled = chain_cu_coupling(model, model.theta_alpha0).norm() > 0;
  for (int i = 0; i < 3 && coupled; ++i)
    if (std::abs(cu.eigenvalues()(i)) < 2 * model.hop_j) zeros.push_back(cu.eigenvalues()(i));
  sum["fano_zeros"] = zeros;
}

void write_spectrum(Context& ctx, const std::string& prefix) {
  ModelConfig model = ctx.prepared.model;
  model.n_sites = ctx.config.grid.spectrum_sites;
  const AngularGrid grid = ctx.config.angular_grid();
  bool hit = false;
  const AdiabaticSpectrum sp = ctx.cache.get(model, grid, {}, &hit);
  const LocalizationProfile loc = localization(sp, model.n_sites);

  CsvWriter csv({"theta", "surface", "energy", "w_left", "w_right", "w_cu"});
  for (int s = 0; s < sp.dimension(); ++s)
    for (int j = 0; j < grid.size(); ++j)
      csv.row({grid[j], static_cast<double>(sp.label(s)), sp.energies(s, j), loc.w_left(s, j), loc.w_right(s, j),
               loc.w_cu(s, j)});
  ctx.manifest.write_csv(prefix + "_spectrum.csv", csv);

  CsvWriter levels({"theta", "level", "energy"});
  std::vector<double> gaps;
  for (int l = 0; l < 3; ++l)
    for (int j = 0; j < grid.size(); ++j) {
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> cu(
          isolated_cu_hamiltonian(model, grid[j], GeometryPolicy::Clamp).h, Eigen::EigenvaluesOnly);
      levels.row({grid[j], static_cast<double>(l), cu.eigenvalues()(l)});
    }
  ctx.manifest.write_csv(prefix + "_cu_levels.csv", levels);

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> cu0(isolated_cu_hamiltonian(model, model.theta_alpha0).h,
                                                     Eigen::EigenvaluesOnly);
  auto& sum = ctx.manifest.summary();
  sum["n_sites"] = model.n_sites;
  sum["cu_levels_at_theta0"] = {cu0.eigenvalues()(0), cu0.eigenvalues()(1), cu0.eigenvalues()(2)};
  sum["cu_min_gap_at_theta0"] = std::min(cu0.eigenvalues()(1) - cu0.eigenvalues()(0),
                                         cu0.eigenvalues()(2) - cu0.eigenvalues()(1));
  sum["tracking_flags"] = sp.flags.size();
  sum["cache_hit"] = hit;
}

// N_R(t) for the frozen reference and each requested nu, written as one wide CSV.
std::map<std::string, TransportResult> write_nr_series(Context& ctx, const std::string& name, bool keep_primary) {
  const RunConfig& c = ctx.config;
  std::map<std::string, TransportResult> runs;
  std::vector<std::string> order{"frozen"};
  runs.emplace("frozen",
               run_frozen_limit(ctx.prepared.model, c, 0));  // frozen reference starts in the ground state
  for (int nu : c.packet.nus) {
    order.push_back(nu_column(nu));
    runs.emplace(nu_column(nu), ctx.transport(nu, c.propagation));
  }
  if (keep_primary && !runs.count(nu_column(c.packet.nu)))
    runs.emplace(nu_column(c.packet.nu), ctx.transport(c.packet.nu, c.propagation));

  std::vector<std::string> cols{"t"};
  for (const auto& k : order) cols.push_back(k == "frozen" ? "N_R_frozen" : k);
  CsvWriter csv(cols);
  const auto& times = runs.at("frozen").times;
  for (size_t i = 0; i < times.size(); ++i) {
    std::vector<double> row{times[i]};
    for (const auto& k : order) row.push_back(runs.at(k).n_r[i]);
    csv.row(row);
  }
  ctx.manifest.write_csv(name, csv);

  nlohmann::json finals = nlohmann::json::object();
  for (auto& [k, r] : runs) {
    ctx.note(r, k);
    finals[k] = r.final_n_r();
  }
  ctx.manifest.summary()["N_R_final_by_run"] = finals;
  ctx.manifest.summary()["N_R_final"] = runs.at(nu_column(c.packet.nu)).final_n_r();
  return runs;
}

void scenario_fig2a(Context& ctx) { write_scan(ctx, "fig2a.csv", ctx.prepared.model); }

void scenario_fig2bc(Context& ctx) { write_spectrum(ctx, "fig2bc"); }

void scenario_fig3(Context& ctx) {
  const RunConfig& c = ctx.config;
  auto runs = write_nr_series(ctx, "fig3b.csv", true);

  const auto& primary = runs.at(nu_column(c.packet.nu));
  CsvWriter pn({"t", "n", "p_n"});
  const SiteLayout layout(ctx.prepared.model.n_sites);
  for (size_t i = 0; i < primary.times.size(); ++i)
    for (int s = 0; s < layout.n_sites; ++s)
      pn.row({primary.times[i], static_cast<double>(layout.label_of(s)), primary.populations[i](s)});
  ctx.manifest.write_csv("fig3a.csv", pn);

  // Thermal average needs nu = 0, 1, ..., K.
  std::vector<double> by_nu;
  for (int nu = 0; runs.count(nu_column(nu)); ++nu) by_nu.push_back(runs.at(nu_column(nu)).final_n_r());
  if (by_nu.empty()) {
    ctx.manifest.add_warning("thermal: packet.nus lacks nu = 0; no thermal curve written");
    return;
  }
  CsvWriter thermal({"T_over_omega", "N_R"});
  const double t_cap = max_thermal_temperature(static_cast<int>(by_nu.size()));
  const double t_max = std::min(c.thermal.t_max, t_cap * (1 - 1e-9));
  if (t_max < c.thermal.t_max)
    ctx.manifest.add_warning("thermal: t_max clipped to " + std::to_string(t_max) + " for the available nu range");
  for (int i = 0; i < c.thermal.n_points; ++i) {
    const double t = c.thermal.n_points == 1 ? 0.0 : t_max * i / (c.thermal.n_points - 1);
    thermal.row({t, thermal_transmission(by_nu, t)});
  }
  ctx.manifest.write_csv("fig3b_thermal.csv", thermal);
}

struct SurfaceSetup {
  ModelConfig model;
  AdiabaticSpectrum spectrum;
  NacField nac;
  PropagationSettings settings;
  TransportMethod method = TransportMethod::Grid;
};

SurfaceSetup surface_setup(Context& ctx, int stride_divisor) {
  const RunConfig& c = ctx.config;
  SurfaceSetup s;
  s.model = c.dynamics_model(ctx.prepared.model);
  s.method = ctx.method();
  const AngularGrid grid = c.angular_grid();
  bool hit = false;
  s.spectrum = ctx.cache.get(s.model, grid, {}, &hit);
  s.nac = nac_hellmann_feynman(s.model, s.spectrum,
                               window_indices(grid, s.model.theta_alpha0, c.nac_half_width()));
  s.settings = c.propagation;
  s.settings.snapshot_stride = std::max(1, c.propagation.snapshot_stride / stride_divisor);
  auto& sum = ctx.manifest.summary();
  sum["cache_hit"] = hit;
  sum["tracking_flags_in_window"] = flags_in(s.spectrum, s.nac.active).size();
  sum["nac_singular_points"] = s.nac.singular.size();
  return s;
}

void scenario_fig4(Context& ctx) {
  const RunConfig& c = ctx.config;
  // Rates are integrated in time, so sample them ten times more often.
  SurfaceSetup s = surface_setup(ctx, 10);
  const SurfaceRecord rec = run_with_surfaces(s.model, c, c.packet.nu, s.settings, s.spectrum, s.nac, s.method);
  ctx.note(rec.transport, nu_column(c.packet.nu));
  const AngularGrid& grid = s.spectrum.grid;

  CsvWriter a({"theta", "surface", "energy", "density"});
  for (int k = 0; k < s.spectrum.dimension(); ++k)
    for (int j = 0; j < grid.size(); ++j)
      a.row({grid[j], static_cast<double>(s.spectrum.label(k)), s.spectrum.energies(k, j), rec.mean_density(k, j)});
  ctx.manifest.write_csv("fig4a.csv", a);

  CsvWriter b({"t", "surface", "delta_p"});
  const Eigen::VectorXd& p0 = rec.surface_populations.front();
  for (size_t i = 0; i < rec.surface_populations.size(); ++i)
    for (int k = 0; k < s.spectrum.dimension(); ++k)
      b.row({rec.rates.times[i], static_cast<double>(s.spectrum.label(k)), rec.surface_populations[i](k) - p0(k)});
  ctx.manifest.write_csv("fig4b.csv", b);

  const double t_star = time_to_fraction(rec.transport.times, rec.transport.n_r, 0.95);
  const TransitionProbabilities tp = transition_probabilities(rec.rates, t_star);
  CsvWriter p({"k", "l", "P_kl"});
  for (int k = 0; k < tp.p.rows(); ++k)
    for (int l = 0; l < tp.p.cols(); ++l)
      if (k != l && tp.p(k, l) != 0.0)
        p.row({static_cast<double>(s.spectrum.label(k)), static_cast<double>(s.spectrum.label(l)), tp.p(k, l)});
  ctx.manifest.write_csv("fig4_pkl.csv", p);

  const AdjacencySplit split = adjacency_split(tp.p);
  auto& sum = ctx.manifest.summary();
  sum["t_star"] = t_star;
  sum["P_adjacent"] = split.adjacent;
  sum["P_distant"] = split.distant;
  sum["stride_change"] = tp.stride_change;
  sum["N_R_final"] = rec.transport.final_n_r();
  if (tp.coarse) ctx.manifest.add_warning("P_kl: result changes by more than 1% when the snapshot stride doubles");
}

void scenario_ci_spectrum(Context& ctx) { write_spectrum(ctx, "ci"); }

void scenario_ci_transport(Context& ctx) {
  write_scan(ctx, "ci_transmission.csv", ctx.prepared.model);
  write_nr_series(ctx, "ci_dynamics.csv", false);
  auto& sum = ctx.manifest.summary();
  const double frozen = sum["N_R_final_by_run"]["frozen"];
  const double mobile = sum["N_R_final"];
  sum["mobile_over_frozen"] = frozen > 0 ? mobile / frozen : 0.0;
}

void scenario_si_dynamics(Context& ctx) {
  const RunConfig& c = ctx.config;
  const ModelConfig model = c.dynamics_model(ctx.prepared.model);
  const AngularGrid grid = c.angular_grid();
  const SiteLayout layout(model.n_sites);
  // Density maps near the control unit: chain labels -3..3 and the three CU sites.
  std::vector<int> rows;
  for (int n = -3; n <= 3; ++n) rows.push_back(layout.chain_index(n));
  rows.insert(rows.end(), {layout.alpha(), layout.beta(), layout.eta()});
  CsvWriter dens({"t", "n", "theta", "density"});
  Observer obs = [&](double t, const Field& a) {
    for (int r : rows)
      for (int j = 0; j < grid.size(); ++j)
        dens.row({t, static_cast<double>(layout.label_of(r)), grid[j], std::norm(a(r, j))});
  };
  const TransportResult run = ctx.transport(c.packet.nu, c.propagation, {obs});
  ctx.note(run, nu_column(c.packet.nu));
  ctx.manifest.write_csv("si_density.csv", dens);
  CsvWriter pn({"t", "n", "p_n"});
  for (size_t i = 0; i < run.times.size(); ++i)
    for (int s = 0; s < model.dimension(); ++s)
      pn.row({run.times[i], static_cast<double>(layout.label_of(s)), run.populations[i](s)});
  ctx.manifest.write_csv("si_populations.csv", pn);
  ctx.manifest.summary()["N_R_final"] = run.final_n_r();
}

void scenario_movie_frames(Context& ctx) {
  const RunConfig& c = ctx.config;
  SurfaceSetup s = surface_setup(ctx, 1);
  const int max_label = 4;
  const SiteLayout layout(s.model.n_sites);
  const AngularGrid& grid = s.spectrum.grid;
  int frame = 0;
  Observer obs = [&](double t, const Field& a) {
    Wavefunction psi;
    psi.grid = grid;
    psi.amplitudes = a;
    const SurfaceWavefunction phi = project_adiabatic(psi, s.spectrum);
    const Eigen::VectorXd p = site_populations(a, grid.spacing());
    char name[64];
    CsvWriter sites({"t", "n", "p_n"});
    for (int i = 0; i < s.model.dimension(); ++i) sites.row({t, static_cast<double>(layout.label_of(i)), p(i)});
    std::snprintf(name, sizeof name, "frames/frame_%04d_sites.csv", frame);
    ctx.manifest.write_csv(name, sites);
    CsvWriter surf({"t", "theta", "surface", "density"});
    for (int label = -max_label; label <= max_label; ++label) {
      const int k = s.spectrum.surface_of_label(label);
      if (k < 0 || k >= s.spectrum.dimension()) continue;
      for (int j = 0; j < grid.size(); ++j) surf.row({t, grid[j], static_cast<double>(label), std::norm(phi.amplitudes(k, j))});
    }
    std::snprintf(name, sizeof name, "frames/frame_%04d_surfaces.csv", frame);
    ctx.manifest.write_csv(name, surf);
    ++frame;
  };
  const TransportResult run = run_transport(s.model, c, c.packet.nu, s.settings, {obs}, s.method);
  ctx.note(run, nu_column(c.packet.nu));
  ctx.manifest.summary()["snapshot_count"] = frame;
  ctx.manifest.summary()["N_R_final"] = run.final_n_r();
}

void scenario_custom(Context& ctx) {
  const RunConfig& c = ctx.config;
  const ModelConfig& model = ctx.prepared.model;
  write_scan(ctx, "custom_transmission.csv", model);
  const TransportResult run = ctx.transport(c.packet.nu, c.propagation);
  ctx.note(run, nu_column(c.packet.nu));
  CsvWriter csv({"t", "N_R"});
  for (size_t i = 0; i < run.times.size(); ++i) csv.row({run.times[i], run.n_r[i]});
  ctx.manifest.write_csv("custom_dynamics.csv", csv);
  auto& sum = ctx.manifest.summary();
  sum["T_at_packet_energy"] = transmission(model, c.packet.energy, model.theta_alpha0).t;
  sum["N_R_final"] = run.final_n_r();
}

const std::vector<std::pair<std::string, std::function<void(Context&)>>>& registry() {
  static const std::vector<std::pair<std::string, std::function<void(Context&)>>> table = {
      {"fig2a", scenario_fig2a},
      {"fig2bc", scenario_fig2bc},
      {"fig3", scenario_fig3},
      {"fig4", scenario_fig4},
      {"ci-spectrum", scenario_ci_spectrum},
      {"ci-transport", scenario_ci_transport},
      {"si-dynamics", scenario_si_dynamics},
      {"movie-frames", scenario_movie_frames},
      {"custom", scenario_custom},
  };
  return table;
}

}  // namespace

nlohmann::json config_json(const RunConfig& config) { return yaml_to_json(YAML::Load(to_yaml(config))); }

std::vector<std::string> scenario_names() {
  std::vector<std::string> out;
  for (const auto& [name, fn] : registry()) out.push_back(name);
  return out;
}

std::string default_preset(const std::string& scenario) {
  if (scenario.rfind("ci-", 0) == 0) return "ci";
  if (scenario == "custom") return "";
  return "slanted";
}

fs::path run_scenario(const std::string& scenario, const RunConfig& config, const fs::path& out_dir,
                      const SpectrumCache& cache) {
  const auto& table = registry();
  const auto it = std::find_if(table.begin(), table.end(), [&](const auto& e) { return e.first == scenario; });
  if (it == table.end()) throw ValidationError("scenario: unknown scenario '" + scenario + "'");

  const auto problems = validate_run_config(config);
  if (!problems.empty()) {
    std::string msg = problems.front();
    for (size_t i = 1; i < problems.size(); ++i) msg += "; " + problems[i];
    throw ValidationError(msg);
  }

  Manifest manifest(out_dir, scenario);
  manifest.set_config(to_yaml(config), config_json(config));
  Context ctx{config, manifest, cache, prepare_model(config)};
  if (ctx.prepared.calibrated) {
    const auto& m = ctx.prepared.model;
    manifest.summary()["calibration"] = {{"onsite_shift", ctx.prepared.report.onsite_shift},
                                         {"max_transmission", ctx.prepared.report.max_transmission},
                                         {"ring_center_offset", ctx.prepared.report.ring_center_offset},
                                         {"cu_onsite", {m.cu_onsite.alpha, m.cu_onsite.beta, m.cu_onsite.eta}}};
  }
  manifest.summary()["vib_mass"] = ctx.prepared.model.vib_mass;
  manifest.summary()["sigma_theta"] = ctx.prepared.model.sigma_theta();
  it->second(ctx);
  return manifest.finish();
}

}  // namespace fano
