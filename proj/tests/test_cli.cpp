#include <doctest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "fano/io.hpp"

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args, const fs::path& log = {}) {
  std::string cmd = std::string(FANOCHAIN_EXE) + " " + args;
  cmd += log.empty() ? " >/dev/null 2>&1" : " >" + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  return p;
}

nlohmann::json manifest(const fs::path& dir) { return nlohmann::json::parse(slurp(dir / "manifest.json")); }

std::string header(const fs::path& csv) {
  std::ifstream in(csv);
  std::string line;
  std::getline(in, line);
  return line;
}

// Every listed file exists, hashes match and CSV rows agree with the manifest.
void check_files(const fs::path& dir, const nlohmann::json& m) {
  for (const auto& f : m["files"]) {
    const fs::path p = dir / f["path"].get<std::string>();
    REQUIRE(fs::exists(p));
    CHECK(f["sha256"] == fano::sha256_file(p));
    if (f["kind"] == "csv") {
      std::ifstream in(p);
      std::string line;
      size_t lines = 0;
      while (std::getline(in, line)) ++lines;
      CHECK(lines == f["rows"].get<size_t>() + 1);
      std::string cols;
      for (const auto& c : f["columns"]) cols += (cols.empty() ? "" : ",") + c.get<std::string>();
      CHECK(header(p) == cols);
    }
  }
}

}  // namespace

TEST_CASE("validate exits 0 for presets and 2 with the list of violations") {
  CHECK(run_cli("validate --preset slanted") == 0);
  const fs::path log = fs::temp_directory_path() / "fanochain_validate.log";
  CHECK(run_cli("validate --preset slanted --set model.n_sites=7 --set grid.n_points=64", log) == 2);
  const auto j = nlohmann::json::parse(slurp(log));
  CHECK(j["valid"] == false);
  CHECK(j["violations"].size() >= 1);
  CHECK(slurp(log).find("model.n_sites") != std::string::npos);
  CHECK(run_cli("validate --set model.unknown=1") == 2);
  CHECK(run_cli("presets") == 0);
}

TEST_CASE("fig2a writes the documented CSV and a reproducible manifest") {
  const fs::path a = fresh_dir("fanochain_fig2a_a");
  const fs::path b = fresh_dir("fanochain_fig2a_b");
  REQUIRE(run_cli("run fig2a --out " + a.string()) == 0);
  REQUIRE(run_cli("run fig2a --threads 1 --out " + b.string()) == 0);
  const auto m = manifest(a);
  CHECK(m["scenario"] == "fig2a");
  CHECK(m["summary"]["max_T"].get<double>() <= 0.07);
  CHECK(m["summary"]["T_at_resonance"].get<double>() < 1e-6);
  CHECK(m["config"]["preset"] == "slanted");
  CHECK(m["config_sha256"] == fano::sha256_hex(m["config_yaml"].get<std::string>()));
  CHECK(header(a / "fig2a.csv") == "E_over_J,T,R,frozen_theta");
  check_files(a, m);
  CHECK(slurp(a / "fig2a.csv") == slurp(b / "fig2a.csv"));
  CHECK(manifest(b)["files"] == m["files"]);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("invalid configuration exits 2 with a JSON error") {
  const fs::path log = fs::temp_directory_path() / "fanochain_invalid.log";
  CHECK(run_cli("run fig2a --set model.n_sites=7 --out " + fresh_dir("fanochain_bad").string(), log) == 2);
  const auto j = nlohmann::json::parse(slurp(log));
  CHECK(j["error"] == "validation");
  CHECK(j["exit_code"] == 2);
}

TEST_CASE("an unreachable calibration target exits 3") {
  const fs::path log = fs::temp_directory_path() / "fanochain_calib.log";
  CHECK(run_cli("run fig2a --set calibration.max_transmission=1e-6 --out " + fresh_dir("fanochain_c").string(), log) ==
        3);
  const auto j = nlohmann::json::parse(slurp(log));
  CHECK(j["error"] == "calibration");
  CHECK(j.contains("diagnostics"));
}

TEST_CASE("a numerical failure exits 4") {
  const fs::path out = fresh_dir("fanochain_num");
  CHECK(run_cli("run custom --preset slanted --set propagation.frozen=true --set vibration.freeze_basis=1 --set packet.nu=2 "
                "--set propagation.t_final=2 --out " +
                out.string()) == 4);
}

TEST_CASE("custom run on a decoupled chain transmits everything") {
  const fs::path out = fresh_dir("fanochain_clean");
  REQUIRE(run_cli("run custom --preset clean --set propagation.t_final=30 --out " + out.string()) == 0);
  const auto m = manifest(out);
  CHECK(m["summary"]["T_at_packet_energy"].get<double>() == doctest::Approx(1.0));
  CHECK(m["summary"]["N_R_final"].get<double>() > 0.999);
  CHECK(header(out / "custom_dynamics.csv") == "t,N_R");
  check_files(out, m);
  fs::remove_all(out);
}

TEST_CASE("fig3 in the frozen limit stays blocked and writes all three tables") {
  const fs::path out = fresh_dir("fanochain_fig3");
  REQUIRE(run_cli("run fig3 --set propagation.frozen=true --out " + out.string()) == 0);
  const auto m = manifest(out);
  CHECK(m["summary"]["N_R_final"].get<double>() < 0.01);
  CHECK(header(out / "fig3b.csv") == "t,N_R_frozen,N_R_nu0,N_R_nu1,N_R_nu2");
  CHECK(header(out / "fig3a.csv") == "t,n,p_n");
  CHECK(header(out / "fig3b_thermal.csv") == "T_over_omega,N_R");
  check_files(out, m);
  fs::remove_all(out);
}

TEST_CASE("fig4 and spectrum tables follow their schemas") {
  const fs::path out = fresh_dir("fanochain_fig2bc");
  REQUIRE(run_cli("run fig2bc --out " + out.string()) == 0);
  CHECK(header(out / "fig2bc_spectrum.csv") == "theta,surface,energy,w_left,w_right,w_cu");
  CHECK(header(out / "fig2bc_cu_levels.csv") == "theta,level,energy");
  check_files(out, manifest(out));

  const fs::path f4 = fresh_dir("fanochain_fig4");
  REQUIRE(run_cli("run fig4 --set propagation.t_final=4 --out " + f4.string()) == 0);
  CHECK(header(f4 / "fig4a.csv") == "theta,surface,energy,density");
  CHECK(header(f4 / "fig4b.csv") == "t,surface,delta_p");
  CHECK(header(f4 / "fig4_pkl.csv") == "k,l,P_kl");
  check_files(f4, manifest(f4));
  fs::remove_all(out);
  fs::remove_all(f4);
}

TEST_CASE("movie frames: one site table and one surface table per snapshot") {
  const fs::path out = fresh_dir("fanochain_frames");
  const fs::path cache = fresh_dir("fanochain_cli_cache");
  REQUIRE(run_cli("run movie-frames --set propagation.t_final=5 --cache-dir " + cache.string() + " --out " +
                  out.string()) == 0);
  const auto m = manifest(out);
  const int frames = m["summary"]["snapshot_count"].get<int>();
  CHECK(frames > 1);
  CHECK(m["files"].size() == static_cast<size_t>(2 * frames));
  CHECK(header(out / "frames/frame_0000_sites.csv") == "t,n,p_n");
  CHECK(header(out / "frames/frame_0000_surfaces.csv") == "t,theta,surface,density");
  CHECK(m["summary"]["cache_hit"] == false);
  CHECK_FALSE(fs::is_empty(cache));

  const fs::path again = fresh_dir("fanochain_frames2");
  ::setenv(fano::kCacheEnv, cache.c_str(), 1);
  REQUIRE(run_cli("run movie-frames --set propagation.t_final=5 --out " + again.string()) == 0);
  ::unsetenv(fano::kCacheEnv);
  CHECK(manifest(again)["summary"]["cache_hit"] == true);
  CHECK(slurp(again / "frames/frame_0001_surfaces.csv") == slurp(out / "frames/frame_0001_surfaces.csv"));
  fs::remove_all(out);
  fs::remove_all(again);
  fs::remove_all(cache);
}
