#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pas/config.hpp"
#include "pas/correction.hpp"
#include "pas/errors.hpp"
#include "pas/io.hpp"
#include "pas/metrics.hpp"
#include "pas/parallel.hpp"
#include "pas/rng.hpp"
#include "pas/schedule.hpp"
#include "pas/score_model.hpp"
#include "pas/solvers.hpp"
#include "pas/subspace.hpp"

namespace {

using nlohmann::json;

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string table_path;
};

// Buffers every artifact so nothing touches the filesystem until the whole
// computation has succeeded: a failing run leaves no partial outputs.
class ArtifactSet {
 public:
  void add(const std::string& name, std::string text) {
    text_.emplace_back(name, std::move(text));
  }
  void add(const std::string& name, std::vector<std::uint8_t> bytes) {
    binary_.emplace_back(name, std::move(bytes));
  }

  std::vector<pas::ArtifactRecord> flush(const std::filesystem::path& dir) const {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw pas::IoError("cannot create output directory " + dir.string());
    std::vector<pas::ArtifactRecord> records;
    for (const auto& [name, text] : text_) {
      pas::write_text_file(dir / name, text);
      records.push_back({name, text.size(), pas::fnv1a64(text)});
    }
    for (const auto& [name, bytes] : binary_) {
      pas::write_binary_file(dir / name, bytes);
      records.push_back({name, bytes.size(), pas::fnv1a64(bytes.data(), bytes.size())});
    }
    return records;
  }

 private:
  std::vector<std::pair<std::string, std::string>> text_;
  std::vector<std::pair<std::string, std::vector<std::uint8_t>>> binary_;
};

std::string padded_index(int value) {
  char buffer[16];
  std::snprintf(buffer, sizeof(buffer), "%04d", value);
  return buffer;
}

struct RunContext {
  pas::ExperimentConfig config;
  std::filesystem::path out;
  std::uint64_t config_checksum = 0;
};

// Flag > environment > config file, per the reproducibility contract: the
// environment may only steer the output directory and thread count.
RunContext make_context(const CommonArgs& args, bool needs_out) {
  if (args.config_path.empty()) throw pas::ConfigError("missing --config");
  RunContext ctx;
  const std::string raw = pas::read_text_file(args.config_path);
  ctx.config = pas::config_from_json(raw);
  ctx.config.config_dir = std::filesystem::path(args.config_path).parent_path();
  if (ctx.config.config_dir.empty()) ctx.config.config_dir = ".";
  ctx.config_checksum = pas::fnv1a64(raw);

  if (args.seed) ctx.config.seed = *args.seed;

  if (args.threads) {
    ctx.config.threads = *args.threads;
  } else if (const char* env = std::getenv("PAS_THREADS")) {
    ctx.config.threads = std::atoi(env);
  }
  if (ctx.config.threads < 1) throw pas::ConfigError("threads must be >= 1");

  std::string out = args.out_dir;
  if (out.empty())
    if (const char* env = std::getenv("PAS_OUT")) out = env;
  if (out.empty()) out = ctx.config.out_dir;
  if (out.empty() && needs_out)
    throw pas::ConfigError("no output directory (use --out, PAS_OUT, or config key 'out')");
  ctx.out = out;

  ctx.config.train.seed = ctx.config.seed;
  ctx.config.train.threads = ctx.config.threads;
  return ctx;
}

void finish_run(const RunContext& ctx, const std::string& subcommand, const ArtifactSet& artifacts,
                std::chrono::steady_clock::time_point started) {
  pas::RunManifest manifest;
  manifest.subcommand = subcommand;
  manifest.seed = ctx.config.seed;
  manifest.threads = ctx.config.threads;
  manifest.config_checksum = ctx.config_checksum;
  manifest.artifacts = artifacts.flush(ctx.out);
  manifest.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  pas::save_manifest(ctx.out, manifest);
  std::cout << subcommand << ": wrote " << manifest.artifacts.size() << " artifact(s) to "
            << ctx.out.string() << "\n";
}

std::vector<Eigen::VectorXd> draw_noises(const pas::ScoreModel& model, double t_max, int count,
                                         std::uint64_t seed) {
  std::vector<Eigen::VectorXd> noises(static_cast<std::size_t>(count));
  for (int s = 0; s < count; ++s) {
    pas::RandomStream stream(seed, static_cast<std::uint64_t>(s));
    noises[static_cast<std::size_t>(s)] = model.draw_terminal_state(t_max, stream);
  }
  return noises;
}

pas::DirectionField field_of(const pas::ScoreModel& model) {
  return [&model](const Eigen::VectorXd& x, double t) { return model.noise_prediction(x, t); };
}

std::string curve_metadata(const pas::ExperimentConfig& config, bool corrected) {
  std::string meta = "solver=" + pas::to_string(config.solver.kind);
  if (config.solver.kind == pas::SolverKind::ipndm)
    meta += ",order=" + std::to_string(config.solver.order);
  meta += ",n_steps=" + std::to_string(config.schedule.n_steps);
  meta += corrected ? ",corrected=true" : ",corrected=false";
  meta += ",norm=" + pas::to_string(config.error_curve.norm);
  meta += config.error_curve.per_dimension ? ",per_dimension=true" : ",per_dimension=false";
  meta += ",teacher=" + pas::to_string(config.error_curve.teacher_kind) + "@" +
          std::to_string(config.error_curve.teacher_steps);
  return meta;
}

// --- subcommands ---

void run_schedule(const RunContext& ctx, ArtifactSet& artifacts) {
  const pas::TimeSchedule schedule = pas::build_schedule(ctx.config.schedule);
  artifacts.add("schedule.csv", pas::schedule_csv(schedule));
}

void run_sample(const RunContext& ctx, ArtifactSet& artifacts) {
  const pas::ScoreModel model = pas::build_model(ctx.config);
  const pas::TimeSchedule schedule = pas::build_schedule(ctx.config.schedule);
  const pas::DirectionField field = field_of(model);
  const int count = ctx.config.sampling.count;
  const std::vector<Eigen::VectorXd> noises =
      draw_noises(model, schedule.t_max, count, ctx.config.seed);

  std::vector<pas::TrajectoryRecord> records(static_cast<std::size_t>(count));
  std::vector<std::vector<Eigen::VectorXd>> references(static_cast<std::size_t>(count));
  pas::parallel_for(count, ctx.config.threads, [&](int s) {
    const std::size_t i = static_cast<std::size_t>(s);
    records[i] = pas::sample(field, ctx.config.solver, schedule, noises[i]);
    references[i] =
        pas::generate_ground_truth(field, schedule, noises[i], ctx.config.error_curve.teacher_steps,
                                   ctx.config.error_curve.teacher_kind);
  });

  std::vector<pas::ErrorCurve> curves;
  std::vector<Eigen::VectorXd> finals;
  std::vector<Eigen::VectorXd> reference_finals;
  for (int s = 0; s < count; ++s) {
    const std::size_t i = static_cast<std::size_t>(s);
    if (ctx.config.sampling.format == "binary")
      artifacts.add("trajectory_" + padded_index(s) + ".bin", pas::trajectory_binary(records[i]));
    else
      artifacts.add("trajectory_" + padded_index(s) + ".csv", pas::trajectory_csv(records[i]));
    curves.push_back(pas::truncation_error_curve(records[i], references[i],
                                                 ctx.config.error_curve.norm,
                                                 ctx.config.error_curve.per_dimension));
    finals.push_back(records[i].state(0));
    reference_finals.push_back(references[i][0]);
  }
  artifacts.add("error_curve.csv", pas::error_curve_csv(pas::average_error_curves(curves),
                                                        curve_metadata(ctx.config, false)));

  json summary;
  summary["subcommand"] = "sample";
  summary["trajectories"] = count;
  summary["final_error_uncorrected"] =
      pas::final_state_error(finals, reference_finals, ctx.config.error_curve.norm,
                             ctx.config.error_curve.per_dimension);
  artifacts.add("summary.json", summary.dump(2) + "\n");
}

void run_train(const RunContext& ctx, ArtifactSet& artifacts) {
  const pas::ScoreModel model = pas::build_model(ctx.config);
  const pas::TimeSchedule schedule = pas::build_schedule(ctx.config.schedule);
  const pas::TrainResult result =
      pas::train_correction_table(model, ctx.config.solver, schedule, ctx.config.train);

  std::string log_csv =
      "step,t,t_prev,loss_uncorrected,loss_corrected,tau_used,accepted,divergence,"
      "sensitivity,max_effective_k\n";
  for (const pas::StepLog& log : result.log) {
    log_csv += std::to_string(log.step_index) + "," + pas::format_double(log.t) + "," +
               pas::format_double(log.t_prev) + "," + pas::format_double(log.loss_uncorrected) +
               "," + pas::format_double(log.loss_corrected) + "," +
               pas::format_double(log.tau_used) + "," + (log.accepted ? "1" : "0") + "," +
               (log.divergence ? "1" : "0") + "," + pas::format_double(log.sensitivity) + "," +
               std::to_string(log.max_effective_k) + "\n";
    std::cout << "step " << log.step_index << ": loss " << pas::format_double(log.loss_uncorrected)
              << " -> " << pas::format_double(log.loss_corrected) << " ("
              << (log.accepted ? "accepted" : "rejected") << ")\n";
  }
  const pas::CorrectionTable& table = result.table;
  std::cout << "corrected steps: " << table.corrected_steps_string() << " ("
            << table.entries.size() << " entries, " << table.stored_scalars()
            << " stored scalars)\n";

  artifacts.add("correction_table.json", pas::correction_table_to_json(table));
  artifacts.add("training_log.csv", log_csv);

  json summary;
  summary["subcommand"] = "train-pas";
  summary["corrected_steps"] = table.corrected_steps_string();
  summary["entries"] = table.entries.size();
  summary["stored_scalars"] = table.stored_scalars();
  json step_losses = json::array();
  for (const pas::CorrectionEntry& e : table.entries)
    step_losses.push_back({{"step", e.step_index},
                           {"loss_uncorrected", e.loss_uncorrected},
                           {"loss_corrected", e.loss_corrected}});
  summary["accepted"] = std::move(step_losses);
  artifacts.add("summary.json", summary.dump(2) + "\n");
}

void run_correct_sample(const CommonArgs& args, const RunContext& ctx, ArtifactSet& artifacts) {
  if (args.table_path.empty()) throw pas::ConfigError("correct-sample requires --table");
  const pas::CorrectionTable table = pas::load_correction_table(args.table_path);
  const pas::ScoreModel model = pas::build_model(ctx.config);
  const pas::TimeSchedule schedule = pas::build_schedule(ctx.config.schedule);
  const pas::DirectionField field = field_of(model);
  const int count = ctx.config.sampling.count;
  const std::vector<Eigen::VectorXd> noises =
      draw_noises(model, schedule.t_max, count, ctx.config.seed);

  std::vector<pas::TrajectoryRecord> corrected(static_cast<std::size_t>(count));
  std::vector<pas::TrajectoryRecord> uncorrected(static_cast<std::size_t>(count));
  std::vector<std::vector<Eigen::VectorXd>> references(static_cast<std::size_t>(count));
  pas::parallel_for(count, ctx.config.threads, [&](int s) {
    const std::size_t i = static_cast<std::size_t>(s);
    corrected[i] = pas::sample_with_correction(field, ctx.config.solver, schedule, table, noises[i]);
    uncorrected[i] = pas::sample(field, ctx.config.solver, schedule, noises[i]);
    references[i] =
        pas::generate_ground_truth(field, schedule, noises[i], ctx.config.error_curve.teacher_steps,
                                   ctx.config.error_curve.teacher_kind);
  });

  std::vector<pas::ErrorCurve> corrected_curves, uncorrected_curves;
  std::vector<Eigen::VectorXd> corrected_finals, uncorrected_finals, reference_finals;
  for (int s = 0; s < count; ++s) {
    const std::size_t i = static_cast<std::size_t>(s);
    if (ctx.config.sampling.format == "binary")
      artifacts.add("corrected_" + padded_index(s) + ".bin", pas::trajectory_binary(corrected[i]));
    else
      artifacts.add("corrected_" + padded_index(s) + ".csv", pas::trajectory_csv(corrected[i]));
    corrected_curves.push_back(pas::truncation_error_curve(corrected[i], references[i],
                                                           ctx.config.error_curve.norm,
                                                           ctx.config.error_curve.per_dimension));
    uncorrected_curves.push_back(pas::truncation_error_curve(uncorrected[i], references[i],
                                                             ctx.config.error_curve.norm,
                                                             ctx.config.error_curve.per_dimension));
    corrected_finals.push_back(corrected[i].state(0));
    uncorrected_finals.push_back(uncorrected[i].state(0));
    reference_finals.push_back(references[i][0]);
  }
  artifacts.add("error_curve_corrected.csv",
                pas::error_curve_csv(pas::average_error_curves(corrected_curves),
                                     curve_metadata(ctx.config, true)));
  artifacts.add("error_curve_uncorrected.csv",
                pas::error_curve_csv(pas::average_error_curves(uncorrected_curves),
                                     curve_metadata(ctx.config, false)));

  const double err_corrected =
      pas::final_state_error(corrected_finals, reference_finals, ctx.config.error_curve.norm,
                             ctx.config.error_curve.per_dimension);
  const double err_uncorrected =
      pas::final_state_error(uncorrected_finals, reference_finals, ctx.config.error_curve.norm,
                             ctx.config.error_curve.per_dimension);

  json summary;
  summary["subcommand"] = "correct-sample";
  summary["trajectories"] = count;
  summary["corrected_steps"] = table.corrected_steps_string();
  summary["entries"] = table.entries.size();
  summary["stored_scalars"] = table.stored_scalars();
  summary["final_error_corrected"] = err_corrected;
  summary["final_error_uncorrected"] = err_uncorrected;
  summary["reduction_percent"] =
      err_uncorrected > 0.0 ? 100.0 * (1.0 - err_corrected / err_uncorrected) : 0.0;
  artifacts.add("summary.json", summary.dump(2) + "\n");

  std::cout << "final error: " << pas::format_double(err_uncorrected) << " -> "
            << pas::format_double(err_corrected) << " (corrected steps "
            << table.corrected_steps_string() << ")\n";
}

void run_analyze_subspace(const RunContext& ctx, ArtifactSet& artifacts) {
  const pas::ScoreModel model = pas::build_model(ctx.config);
  const pas::TimeSchedule schedule = pas::build_schedule(ctx.config.schedule);
  const pas::DirectionField field = field_of(model);
  const int count = ctx.config.subspace.trajectories;
  const int max_k = ctx.config.subspace.max_k;
  const std::vector<Eigen::VectorXd> noises =
      draw_noises(model, schedule.t_max, count, ctx.config.seed);

  std::vector<pas::TrajectoryRecord> records(static_cast<std::size_t>(count));
  pas::parallel_for(count, ctx.config.threads, [&](int s) {
    records[static_cast<std::size_t>(s)] =
        pas::sample(field, ctx.config.solver, schedule, noises[static_cast<std::size_t>(s)]);
  });

  const int rows_per_trajectory = schedule.n_steps + 1;
  std::vector<double> averaged;
  if (ctx.config.subspace.mode == "pooled") {
    Eigen::MatrixXd pooled(static_cast<Eigen::Index>(count) * rows_per_trajectory,
                           model.dimension());
    for (int s = 0; s < count; ++s)
      for (int i = 0; i < rows_per_trajectory; ++i)
        pooled.row(static_cast<Eigen::Index>(s) * rows_per_trajectory + i) =
            records[static_cast<std::size_t>(s)].states[static_cast<std::size_t>(i)];
    averaged = pas::cumulative_variance(pooled, max_k);
  } else {
    std::string per_trajectory = "trajectory,components,cumulative_fraction\n";
    averaged.assign(static_cast<std::size_t>(max_k), 0.0);
    for (int s = 0; s < count; ++s) {
      Eigen::MatrixXd rows(rows_per_trajectory, model.dimension());
      for (int i = 0; i < rows_per_trajectory; ++i)
        rows.row(i) = records[static_cast<std::size_t>(s)].states[static_cast<std::size_t>(i)];
      const std::vector<double> fractions = pas::cumulative_variance(rows, max_k);
      for (int k = 0; k < max_k; ++k) {
        averaged[static_cast<std::size_t>(k)] += fractions[static_cast<std::size_t>(k)];
        per_trajectory += std::to_string(s) + "," + std::to_string(k + 1) + "," +
                          pas::format_double(fractions[static_cast<std::size_t>(k)]) + "\n";
      }
    }
    for (double& f : averaged) f /= static_cast<double>(count);
    artifacts.add("cumulative_variance_per_trajectory.csv", per_trajectory);
  }
  artifacts.add("cumulative_variance.csv", pas::cumulative_variance_csv(averaged));

  json summary;
  summary["subcommand"] = "analyze-subspace";
  summary["mode"] = ctx.config.subspace.mode;
  summary["trajectories"] = count;
  summary["cumulative_fraction"] = averaged;
  if (averaged.size() >= 3) summary["top3_fraction"] = averaged[2];
  artifacts.add("summary.json", summary.dump(2) + "\n");
}

void run_error_curve(const CommonArgs& args, const RunContext& ctx, ArtifactSet& artifacts) {
  const pas::ScoreModel model = pas::build_model(ctx.config);
  const pas::TimeSchedule schedule = pas::build_schedule(ctx.config.schedule);
  const pas::DirectionField field = field_of(model);
  const int count = ctx.config.error_curve.trajectories;
  const std::vector<Eigen::VectorXd> noises =
      draw_noises(model, schedule.t_max, count, ctx.config.seed);

  std::optional<pas::CorrectionTable> table;
  if (!args.table_path.empty()) table = pas::load_correction_table(args.table_path);

  std::vector<pas::TrajectoryRecord> plain(static_cast<std::size_t>(count));
  std::vector<pas::TrajectoryRecord> corrected(table ? static_cast<std::size_t>(count) : 0);
  std::vector<std::vector<Eigen::VectorXd>> references(static_cast<std::size_t>(count));
  pas::parallel_for(count, ctx.config.threads, [&](int s) {
    const std::size_t i = static_cast<std::size_t>(s);
    plain[i] = pas::sample(field, ctx.config.solver, schedule, noises[i]);
    if (table)
      corrected[i] =
          pas::sample_with_correction(field, ctx.config.solver, schedule, *table, noises[i]);
    references[i] =
        pas::generate_ground_truth(field, schedule, noises[i], ctx.config.error_curve.teacher_steps,
                                   ctx.config.error_curve.teacher_kind);
  });

  std::vector<pas::ErrorCurve> plain_curves, corrected_curves;
  std::vector<Eigen::VectorXd> plain_finals, corrected_finals, reference_finals;
  for (int s = 0; s < count; ++s) {
    const std::size_t i = static_cast<std::size_t>(s);
    plain_curves.push_back(pas::truncation_error_curve(plain[i], references[i],
                                                       ctx.config.error_curve.norm,
                                                       ctx.config.error_curve.per_dimension));
    plain_finals.push_back(plain[i].state(0));
    reference_finals.push_back(references[i][0]);
    if (table) {
      corrected_curves.push_back(pas::truncation_error_curve(corrected[i], references[i],
                                                             ctx.config.error_curve.norm,
                                                             ctx.config.error_curve.per_dimension));
      corrected_finals.push_back(corrected[i].state(0));
    }
  }

  const pas::ErrorCurve mean_plain = pas::average_error_curves(plain_curves);
  artifacts.add("error_curve_uncorrected.csv",
                pas::error_curve_csv(mean_plain, curve_metadata(ctx.config, false)));

  json summary;
  summary["subcommand"] = "error-curve";
  summary["trajectories"] = count;
  summary["final_error_uncorrected"] =
      pas::final_state_error(plain_finals, reference_finals, ctx.config.error_curve.norm,
                             ctx.config.error_curve.per_dimension);
  const pas::GrowthProfile profile = pas::error_growth_profile(mean_plain);
  summary["growth"] = {{"argmax_position", profile.argmax_position},
                       {"argmax_step_index", profile.argmax_step_index},
                       {"argmax_interior", profile.argmax_interior()},
                       {"head_mean", profile.head_mean},
                       {"mid_mean", profile.mid_mean},
                       {"tail_mean", profile.tail_mean}};
  if (table) {
    artifacts.add("error_curve_corrected.csv",
                  pas::error_curve_csv(pas::average_error_curves(corrected_curves),
                                       curve_metadata(ctx.config, true)));
    const double err_corrected =
        pas::final_state_error(corrected_finals, reference_finals, ctx.config.error_curve.norm,
                               ctx.config.error_curve.per_dimension);
    const double err_uncorrected = summary["final_error_uncorrected"].get<double>();
    summary["final_error_corrected"] = err_corrected;
    summary["corrected_steps"] = table->corrected_steps_string();
    summary["stored_scalars"] = table->stored_scalars();
    summary["reduction_percent"] =
        err_uncorrected > 0.0 ? 100.0 * (1.0 - err_corrected / err_uncorrected) : 0.0;
  }
  artifacts.add("summary.json", summary.dump(2) + "\n");
}

int run_report(const std::string& directory) {
  const std::filesystem::path dir = directory.empty() ? "." : directory;
  const pas::RunManifest manifest = pas::load_manifest(dir);

  for (const pas::ArtifactRecord& artifact : manifest.artifacts) {
    const std::filesystem::path path = dir / artifact.path;
    if (!std::filesystem::exists(path))
      throw pas::IoError("integrity error: missing artifact " + artifact.path);
    const std::vector<std::uint8_t> bytes = pas::read_binary_file(path);
    if (bytes.size() != artifact.bytes ||
        pas::fnv1a64(bytes.data(), bytes.size()) != artifact.checksum)
      throw pas::IoError("integrity error: checksum mismatch for " + artifact.path);
  }

  std::cout << "run: " << manifest.subcommand << " (seed " << manifest.seed << ", threads "
            << manifest.threads << ")\n";
  std::cout << "config checksum: " << pas::checksum_string(manifest.config_checksum) << "\n";
  std::cout << "wall time: " << pas::format_double(manifest.wall_time_seconds) << " s\n";
  std::cout << "artifacts: " << manifest.artifacts.size() << " verified\n";

  const std::filesystem::path summary_path = dir / "summary.json";
  if (std::filesystem::exists(summary_path)) {
    const json summary = json::parse(pas::read_text_file(summary_path));
    if (summary.contains("corrected_steps")) {
      const std::string steps = summary["corrected_steps"].get<std::string>();
      if (steps == "-") {
        std::cout << "0 corrected steps; outputs identical to baseline\n";
      } else {
        std::cout << "corrected steps: " << steps;
        if (summary.contains("stored_scalars"))
          std::cout << " (" << summary["stored_scalars"].get<int>() << " stored scalars)";
        std::cout << "\n";
      }
    }
    if (summary.contains("final_error_uncorrected") && summary.contains("final_error_corrected")) {
      std::cout << "final error: " << pas::format_double(summary["final_error_uncorrected"])
                << " -> " << pas::format_double(summary["final_error_corrected"]);
      if (summary.contains("reduction_percent"))
        std::cout << " (" << pas::format_double(summary["reduction_percent"]) << "% reduction)";
      std::cout << "\n";
    } else if (summary.contains("final_error_uncorrected")) {
      std::cout << "final error (uncorrected): "
                << pas::format_double(summary["final_error_uncorrected"]) << "\n";
    }
    if (summary.contains("top3_fraction"))
      std::cout << "top-3 cumulative variance: " << pas::format_double(summary["top3_fraction"])
                << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trajectory-subspace correction laboratory for few-step ODE sampling"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string report_dir;

  const auto add_common = [&args](CLI::App* cmd, bool with_table) {
    cmd->add_option("--config", args.config_path, "experiment config (JSON)");
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--seed", args.seed, "override the config seed");
    cmd->add_option("--threads", args.threads, "worker threads");
    if (with_table) cmd->add_option("--table", args.table_path, "correction table (JSON)");
    return cmd;
  };

  CLI::App* cmd_schedule = add_common(app.add_subcommand("schedule", "emit the time grid"), false);
  CLI::App* cmd_sample =
      add_common(app.add_subcommand("sample", "run the solver, dump trajectories and error curve"),
                 false);
  CLI::App* cmd_train = add_common(
      app.add_subcommand("train-pas", "train the per-step correction table"), false);
  CLI::App* cmd_correct = add_common(
      app.add_subcommand("correct-sample", "sample with a trained correction table"), true);
  CLI::App* cmd_subspace = add_common(
      app.add_subcommand("analyze-subspace", "cumulative variance of trajectory matrices"), false);
  CLI::App* cmd_curve = add_common(
      app.add_subcommand("error-curve", "averaged truncation-error curves"), true);
  CLI::App* cmd_report = app.add_subcommand("report", "verify a run directory and summarize it");
  cmd_report->add_option("dir", report_dir, "run directory (default .)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  const auto started = std::chrono::steady_clock::now();
  try {
    if (*cmd_report) return run_report(report_dir);

    RunContext ctx = make_context(args, true);
    ArtifactSet artifacts;
    std::string name;
    if (*cmd_schedule) {
      name = "schedule";
      run_schedule(ctx, artifacts);
    } else if (*cmd_sample) {
      name = "sample";
      run_sample(ctx, artifacts);
    } else if (*cmd_train) {
      name = "train-pas";
      run_train(ctx, artifacts);
    } else if (*cmd_correct) {
      name = "correct-sample";
      run_correct_sample(args, ctx, artifacts);
    } else if (*cmd_subspace) {
      name = "analyze-subspace";
      run_analyze_subspace(ctx, artifacts);
    } else if (*cmd_curve) {
      name = "error-curve";
      run_error_curve(args, ctx, artifacts);
    }
    finish_run(ctx, name, artifacts, started);
    return 0;
  } catch (const pas::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const pas::NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {  // ConfigError and argument misuse
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
