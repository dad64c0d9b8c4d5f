#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "fano/config.hpp"

using namespace fano;

namespace {

bool mentions(const std::vector<std::string>& v, const std::string& needle) {
  for (const auto& s : v)
    if (s.find(needle) != std::string::npos) return true;
  return false;
}

std::filesystem::path temp_file(const std::string& name, const std::string& text) {
  const auto p = std::filesystem::temp_directory_path() / name;
  std::ofstream(p) << text;
  return p;
}

}  // namespace

TEST_CASE("every preset passes validation") {
  const auto names = preset_names();
  CHECK(names.size() >= 4);
  for (const auto& n : names) {
    CAPTURE(n);
    const RunConfig c = preset_config(n);
    CHECK(validate_run_config(c).empty());
    CHECK(c.preset == n);
  }
  CHECK_THROWS_AS(preset_config("nope"), ValidationError);
}

TEST_CASE("presets carry their geometry") {
  const RunConfig s = preset_config("slanted");
  CHECK(s.model.c3 == 4.0);
  CHECK(s.model.ring_center_offset == doctest::Approx(1.9));
  CHECK(s.model.theta_beta == doctest::Approx(std::numbers::pi / 2));
  CHECK(s.model.theta_eta == doctest::Approx(5 * std::numbers::pi / 3));
  CHECK(s.calibrate);
  const RunConfig f = preset_config("flat");
  CHECK(f.model.theta_eta - f.model.theta_beta == doctest::Approx(2 * std::numbers::pi / 3));
  const RunConfig ci = preset_config("ci");
  CHECK(ci.model.cu_onsite.alpha == ci.model.cu_onsite.beta);
  CHECK(ci.calibration.level == 1);
}

TEST_CASE("YAML round trip reproduces the configuration") {
  RunConfig c = preset_config("flat");
  c.model.chain_onsite[3] = 0.25;
  c.model.coupling_mode = CouplingMode::FullDipole;
  c.propagation.boundary_policy = BoundaryPolicy::Absorbing;
  c.propagation.nac_mode = NacMode::Disabled;
  c.packet.nus = {0, 3};
  c.frozen = true;
  const std::string text = to_yaml(c);
  const RunConfig back = from_yaml_text(text);
  CHECK(to_yaml(back) == text);
  CHECK(back.model.chain_onsite.at(3) == 0.25);
  CHECK(back.model.coupling_mode == CouplingMode::FullDipole);
  CHECK(back.propagation.nac_mode == NacMode::Disabled);
  CHECK(back.packet.nus == std::vector<int>{0, 3});
  CHECK(back.frozen);
  CHECK(back.model.c3 == c.model.c3);
  CHECK(text.find("# ") != std::string::npos);
}

TEST_CASE("unknown keys are rejected with their path") {
  try {
    from_yaml_text("model:\n  c4: 1\n");
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("model.c4") != std::string::npos);
  }
  CHECK_THROWS_AS(from_yaml_text("bogus: 1\n"), ValidationError);
  CHECK_THROWS_AS(from_yaml_text("model:\n  coupling_mode: sideways\n"), ValidationError);
  CHECK_THROWS_AS(from_yaml_text("model:\n  n_sites: [1, 2]\n"), ValidationError);
}

TEST_CASE("dotted overrides apply last and accept lists") {
  const RunConfig c = load_run_config("slanted", "", {"model.c3=2.5", "packet.nus=[0, 4]", "propagation.dt=0.01"});
  CHECK(c.model.c3 == 2.5);
  CHECK(c.packet.nus == std::vector<int>{0, 4});
  CHECK(c.propagation.dt == 0.01);
  CHECK(c.model.ring_center_offset == doctest::Approx(1.9));
  const RunConfig p = load_run_config("slanted", "", {"preset=flat"});
  CHECK(p.preset == "flat");
  CHECK(p.model.c3 == preset_config("flat").model.c3);
  CHECK_THROWS_AS(load_run_config("slanted", "", {"model.c3"}), ValidationError);
  CHECK_THROWS_AS(load_run_config("slanted", "", {"model.nothing=1"}), ValidationError);
}

TEST_CASE("config files layer between the preset and the overrides") {
  const auto path = temp_file("fanochain_layer.yaml", "preset: flat\nmodel:\n  c3: 2.0\n  n_sites: 60\n");
  const RunConfig c = load_run_config("slanted", path.string(), {"model.n_sites=80"});
  CHECK(c.preset == "flat");
  CHECK(c.model.c3 == 2.0);
  CHECK(c.model.n_sites == 80);
  CHECK(c.model.ring_center_offset == doctest::Approx(preset_config("flat").model.ring_center_offset));
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_run_config("", "/nonexistent/x.yaml", {}), ValidationError);
}

TEST_CASE("an under-resolved angular grid names a sufficient size") {
  RunConfig c = preset_config("slanted");
  c.grid.n_points = 64;
  const auto v = validate_run_config(c);
  REQUIRE(mentions(v, "grid.n_points"));
  CHECK(mentions(v, "256"));
  c.grid.n_points = 100;
  CHECK(mentions(validate_run_config(c), "power of two"));
}

TEST_CASE("the packet must fit on the left chain") {
  RunConfig c = preset_config("slanted");
  c.packet.n0 = -5;
  CHECK(mentions(validate_run_config(c), "packet.n0"));
  c = preset_config("slanted");
  c.packet.n0 = -47;
  CHECK(mentions(validate_run_config(c), "packet.n0"));
  c = preset_config("slanted");
  c.packet.energy = 2.5;
  CHECK(mentions(validate_run_config(c), "packet.energy"));
  c = preset_config("slanted");
  c.packet.sigma_e = 1.0;
  CHECK(mentions(validate_run_config(c), "narrower than 2 sites"));
}

TEST_CASE("all violations are listed at once") {
  RunConfig c = preset_config("slanted");
  c.model.n_sites = 7;
  c.propagation.splitting_order = 3;
  c.calibration.level = 4;
  const auto v = validate_run_config(c);
  CHECK(mentions(v, "model.n_sites"));
  CHECK(mentions(v, "propagation.splitting_order"));
  CHECK(mentions(v, "calibration.level"));
}

TEST_CASE("vibration width fixes the mass as 1 / (2 sigma^2 omega R^2)") {
  const RunConfig c = preset_config("slanted");
  const ModelConfig m = c.effective_model();
  const double s = c.vibration.sigma_theta;
  CHECK(s == doctest::Approx(0.2 / std::numbers::pi));
  CHECK(m.vib_mass == doctest::Approx(1.0 / (2 * s * s * m.vib_freq * m.ring_radius * m.ring_radius)));
  CHECK(m.sigma_theta() == doctest::Approx(s));
  const ModelConfig f = c.dynamics_model(m);
  CHECK(f.vib_freq == m.vib_freq);
  RunConfig frozen = c;
  frozen.frozen = true;
  CHECK(frozen.dynamics_model(m).vib_freq >= 40.0);
  CHECK(frozen.dynamics_model(m).sigma_theta() == doctest::Approx(s));
}

TEST_CASE("packet settings translate to a wavepacket") {
  const RunConfig c = preset_config("slanted");
  const PacketSpec p = c.packet_spec(c.model, 2);
  CHECK(p.k == doctest::Approx(std::numbers::pi / 2));
  CHECK(p.sigma == doctest::Approx(std::sqrt(2.0) / c.packet.sigma_e));
  CHECK(p.nu == 2);
  CHECK(c.nac_half_width() == doctest::Approx(8 * c.vibration.sigma_theta));
}
