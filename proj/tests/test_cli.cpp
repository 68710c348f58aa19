#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "pas/io.hpp"

// End-to-end coverage through the installed binary: exit codes, artifact
// layout, rerun determinism, and the integrity check. PAS_CLI_PATH is
// injected by the build so the test always drives the binary it was built
// with.
#ifndef PAS_CLI_PATH
#error "PAS_CLI_PATH must point at the pas executable"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kCli = PAS_CLI_PATH;

struct Scratch {
  fs::path root;
  Scratch() {
    root = fs::temp_directory_path() / "pas_cli_test";
    fs::remove_all(root);
    fs::create_directories(root);
  }
  fs::path operator/(const std::string& name) const { return root / name; }
};

const Scratch& scratch() {
  static Scratch s;
  return s;
}

// Runs the CLI through the shell with a scrubbed environment; returns the
// exit code and captures combined output.
int run_cli(const std::string& arguments, std::string* output = nullptr,
            const std::string& env_prefix = "") {
  static int capture_counter = 0;
  const fs::path capture = scratch() / ("capture_" + std::to_string(capture_counter++) + ".txt");
  const std::string command = "env -u PAS_OUT -u PAS_THREADS " + env_prefix + " " + kCli + " " +
                              arguments + " > " + capture.string() + " 2>&1";
  const int status = std::system(command.c_str());
  if (output) *output = pas::read_text_file(capture);
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string base_config_text(int n_steps) {
  json config;
  config["model"] = {{"preset", "rank2-manifold"}, {"dimension", 8}, {"seed", 7}};
  config["schedule"] = {{"rho", 7.0}, {"t_min", 0.002}, {"t_max", 80.0}, {"n_steps", n_steps}};
  config["solver"] = {{"kind", "euler"}};
  config["train"] = {{"trajectories", 16},
                     {"inner_iterations", 30},
                     {"teacher_steps", 20},
                     {"parameterization", "relative"}};
  config["sampling"] = {{"count", 2}, {"format", "csv"}};
  config["error_curve"] = {{"trajectories", 4}, {"teacher_steps", 20}};
  config["subspace"] = {{"mode", "per-trajectory"}, {"trajectories", 6}, {"max_k", 5}};
  config["seed"] = 11;
  return config.dump(2) + "\n";
}

fs::path write_config(const std::string& name, const std::string& text) {
  const fs::path path = scratch() / name;
  pas::write_text_file(path, text);
  return path;
}

fs::path config_path() {
  static const fs::path path = write_config("config.json", base_config_text(5));
  return path;
}

bool same_bytes(const fs::path& a, const fs::path& b) {
  return pas::read_binary_file(a) == pas::read_binary_file(b);
}

}  // namespace

TEST_CASE("schedule writes its grid and a manifest, deterministically") {
  const fs::path out_a = scratch() / "sched_a";
  const fs::path out_b = scratch() / "sched_b";
  std::string output;
  CHECK(run_cli("schedule --config " + config_path().string() + " --out " + out_a.string(),
                &output) == 0);
  CHECK(output.find("wrote 1 artifact(s)") != std::string::npos);
  REQUIRE(fs::exists(out_a / "schedule.csv"));
  REQUIRE(fs::exists(out_a / "manifest.json"));
  const std::string csv = pas::read_text_file(out_a / "schedule.csv");
  CHECK(csv.rfind("index,time\n0,0.002\n", 0) == 0);

  CHECK(run_cli("schedule --config " + config_path().string() + " --out " + out_b.string()) == 0);
  CHECK(same_bytes(out_a / "schedule.csv", out_b / "schedule.csv"));

  const pas::RunManifest manifest = pas::load_manifest(out_a);
  REQUIRE(manifest.artifacts.size() == 1);
  CHECK(manifest.artifacts[0].path == "schedule.csv");
  CHECK(manifest.artifacts[0].bytes == csv.size());
  CHECK(manifest.artifacts[0].checksum == pas::fnv1a64(csv));
  CHECK(manifest.subcommand == "schedule");
  CHECK(manifest.seed == 11);
}

TEST_CASE("sample artifacts are rerun-identical, thread-invariant, seed-sensitive") {
  const fs::path out_a = scratch() / "sample_a";
  const fs::path out_b = scratch() / "sample_b";
  const fs::path out_threads = scratch() / "sample_t";
  const fs::path out_seed = scratch() / "sample_s";
  const std::string base = "sample --config " + config_path().string();
  CHECK(run_cli(base + " --out " + out_a.string()) == 0);
  CHECK(run_cli(base + " --out " + out_b.string()) == 0);
  CHECK(run_cli(base + " --out " + out_threads.string() + " --threads 4") == 0);
  CHECK(run_cli(base + " --out " + out_seed.string() + " --seed 999") == 0);

  for (const std::string name :
       {"trajectory_0000.csv", "trajectory_0001.csv", "error_curve.csv", "summary.json"}) {
    REQUIRE(fs::exists(out_a / name));
    CHECK(same_bytes(out_a / name, out_b / name));
    CHECK(same_bytes(out_a / name, out_threads / name));
  }
  CHECK_FALSE(same_bytes(out_a / "trajectory_0000.csv", out_seed / "trajectory_0000.csv"));
}

TEST_CASE("report verifies artifacts and fails on corruption") {
  const fs::path out = scratch() / "report_run";
  CHECK(run_cli("sample --config " + config_path().string() + " --out " + out.string()) == 0);
  std::string output;
  CHECK(run_cli("report " + out.string(), &output) == 0);
  CHECK(output.find("artifacts: 4 verified") != std::string::npos);
  CHECK(output.find("run: sample (seed 11, threads 1)") != std::string::npos);

  // Flip one byte of an artifact: the checksum no longer matches.
  std::ofstream(out / "error_curve.csv", std::ios::app) << "#";
  CHECK(run_cli("report " + out.string(), &output) == 4);
  CHECK(output.find("integrity error") != std::string::npos);

  CHECK(run_cli("report " + (scratch() / "no_such_run").string(), &output) == 4);
}

TEST_CASE("train-pas emits a table plus log and prints the step summary") {
  const fs::path out = scratch() / "train_run";
  std::string output;
  CHECK(run_cli("train-pas --config " + config_path().string() + " --out " + out.string(),
                &output) == 0);
  CHECK(output.find("corrected steps: ") != std::string::npos);
  CHECK(output.find("stored scalars") != std::string::npos);
  REQUIRE(fs::exists(out / "correction_table.json"));
  REQUIRE(fs::exists(out / "training_log.csv"));
  const pas::CorrectionTable table = pas::load_correction_table(out / "correction_table.json");
  CHECK(table.n_steps == 5);
  CHECK(table.trajectories == 16);
  const std::string log = pas::read_text_file(out / "training_log.csv");
  CHECK(log.rfind("step,", 0) == 0);
  // One log row per step plus the header.
  CHECK(std::count(log.begin(), log.end(), '\n') == 6);
}

TEST_CASE("an infinite tau trains an empty table and reports the no-op") {
  const fs::path cfg = write_config("config_inf.json", [] {
    json config = json::parse(base_config_text(5));
    config["train"]["tau"] = "inf";
    return config.dump(2) + "\n";
  }());
  const fs::path out = scratch() / "train_inf";
  CHECK(run_cli("train-pas --config " + cfg.string() + " --out " + out.string()) == 0);
  const pas::CorrectionTable table = pas::load_correction_table(out / "correction_table.json");
  CHECK(table.entries.empty());
  std::string output;
  CHECK(run_cli("report " + out.string(), &output) == 0);
  CHECK(output.find("0 corrected steps; outputs identical to baseline") != std::string::npos);
}

TEST_CASE("correct-sample consumes the table; incompatible tables abort cleanly") {
  const fs::path train_out = scratch() / "table_run";
  CHECK(run_cli("train-pas --config " + config_path().string() + " --out " +
                train_out.string()) == 0);
  const fs::path table = train_out / "correction_table.json";

  const fs::path out = scratch() / "corrected_run";
  std::string output;
  CHECK(run_cli("correct-sample --config " + config_path().string() + " --out " + out.string() +
                    " --table " + table.string(),
                &output) == 0);
  CHECK(output.find("final error: ") != std::string::npos);
  for (const std::string name : {"corrected_0000.csv", "error_curve_corrected.csv",
                                 "error_curve_uncorrected.csv", "summary.json"})
    REQUIRE(fs::exists(out / name));

  // A table trained for a different grid is rejected before any output lands.
  const fs::path cfg6 = write_config("config_n6.json", base_config_text(6));
  const fs::path mismatch_out = scratch() / "mismatch_run";
  CHECK(run_cli("correct-sample --config " + cfg6.string() + " --out " + mismatch_out.string() +
                    " --table " + table.string(),
                &output) == 2);
  CHECK_FALSE(fs::exists(mismatch_out / "manifest.json"));
  CHECK_FALSE(fs::exists(mismatch_out / "corrected_0000.csv"));

  // Omitting --table is a usage error.
  CHECK(run_cli("correct-sample --config " + config_path().string() + " --out " +
                    (scratch() / "no_table_run").string(),
                &output) == 2);
}

TEST_CASE("analyze-subspace and error-curve emit their layouts") {
  const fs::path sub_out = scratch() / "subspace_run";
  CHECK(run_cli("analyze-subspace --config " + config_path().string() + " --out " +
                sub_out.string()) == 0);
  REQUIRE(fs::exists(sub_out / "cumulative_variance.csv"));
  REQUIRE(fs::exists(sub_out / "cumulative_variance_per_trajectory.csv"));
  const json summary = json::parse(pas::read_text_file(sub_out / "summary.json"));
  CHECK(summary["mode"] == "per-trajectory");
  REQUIRE(summary["cumulative_fraction"].size() == 5);
  double previous = 0.0;
  for (const auto& f : summary["cumulative_fraction"]) {
    CHECK(f.get<double>() >= previous);
    previous = f.get<double>();
  }

  const fs::path curve_out = scratch() / "curve_run";
  CHECK(run_cli("error-curve --config " + config_path().string() + " --out " +
                curve_out.string()) == 0);
  REQUIRE(fs::exists(curve_out / "error_curve_uncorrected.csv"));
  CHECK_FALSE(fs::exists(curve_out / "error_curve_corrected.csv"));
  const json curve_summary = json::parse(pas::read_text_file(curve_out / "summary.json"));
  CHECK(curve_summary.contains("growth"));
  CHECK(curve_summary["growth"].contains("argmax_position"));

  // With a trained table the corrected curve joins the artifacts.
  const fs::path train_out = scratch() / "curve_table_run";
  CHECK(run_cli("train-pas --config " + config_path().string() + " --out " +
                train_out.string()) == 0);
  const fs::path both_out = scratch() / "curve_both_run";
  CHECK(run_cli("error-curve --config " + config_path().string() + " --out " +
                both_out.string() + " --table " +
                (train_out / "correction_table.json").string()) == 0);
  REQUIRE(fs::exists(both_out / "error_curve_corrected.csv"));
  const json both_summary = json::parse(pas::read_text_file(both_out / "summary.json"));
  CHECK(both_summary.contains("reduction_percent"));
}

TEST_CASE("validation and I/O failures map to exit codes 2 and 4") {
  std::string output;
  // Unknown config key.
  const fs::path bad_key = write_config("config_bad_key.json", [] {
    json config = json::parse(base_config_text(5));
    config["surprise"] = 1;
    return config.dump(2) + "\n";
  }());
  CHECK(run_cli("schedule --config " + bad_key.string() + " --out " +
                    (scratch() / "never_a").string(),
                &output) == 2);
  CHECK(output.find("surprise") != std::string::npos);

  // Malformed JSON.
  const fs::path bad_json = write_config("config_bad.json", "{ not json");
  CHECK(run_cli("schedule --config " + bad_json.string() + " --out " +
                (scratch() / "never_b").string()) == 2);

  // Invalid tau string.
  const fs::path bad_tau = write_config("config_bad_tau.json", [] {
    json config = json::parse(base_config_text(5));
    config["train"]["tau"] = "huge";
    return config.dump(2) + "\n";
  }());
  CHECK(run_cli("train-pas --config " + bad_tau.string() + " --out " +
                (scratch() / "never_c").string()) == 2);

  // Missing config file is an I/O failure.
  CHECK(run_cli("schedule --config " + (scratch() / "missing.json").string() + " --out " +
                (scratch() / "never_d").string()) == 4);

  // Usage errors.
  CHECK(run_cli("schedule --out " + (scratch() / "never_e").string()) == 2);  // no --config
  CHECK(run_cli("frobnicate") == 2);
  CHECK(run_cli("") == 2);
  CHECK(run_cli("--help") == 0);
}

TEST_CASE("PAS_OUT steers the output directory but loses to --out") {
  const fs::path env_out = scratch() / "env_out";
  CHECK(run_cli("schedule --config " + config_path().string(), nullptr,
                "PAS_OUT=" + env_out.string()) == 0);
  CHECK(fs::exists(env_out / "schedule.csv"));

  const fs::path flag_out = scratch() / "flag_out";
  const fs::path env_loser = scratch() / "env_loser";
  CHECK(run_cli("schedule --config " + config_path().string() + " --out " + flag_out.string(),
                nullptr, "PAS_OUT=" + env_loser.string()) == 0);
  CHECK(fs::exists(flag_out / "schedule.csv"));
  CHECK_FALSE(fs::exists(env_loser));
}

TEST_CASE("PAS_THREADS changes the thread count without changing artifacts") {
  const fs::path out_env = scratch() / "threads_env";
  std::string output;
  CHECK(run_cli("sample --config " + config_path().string() + " --out " + out_env.string(),
                &output, "PAS_THREADS=3") == 0);
  const pas::RunManifest manifest = pas::load_manifest(out_env);
  CHECK(manifest.threads == 3);
  const fs::path out_serial = scratch() / "threads_serial";
  CHECK(run_cli("sample --config " + config_path().string() + " --out " + out_serial.string()) ==
        0);
  CHECK(same_bytes(out_env / "error_curve.csv", out_serial / "error_curve.csv"));
  CHECK(same_bytes(out_env / "trajectory_0000.csv", out_serial / "trajectory_0000.csv"));
}
