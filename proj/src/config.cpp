#include "pas/config.hpp"

#include <limits>
#include <nlohmann/json.hpp>

#include "json_support.hpp"
#include "pas/errors.hpp"
#include "pas/io.hpp"

namespace pas {

using nlohmann::json;
using jsonio::get_as;
using jsonio::get_or;
using jsonio::require_keys;

namespace {

// tau is a number, or the string "inf" (infinite tolerance: correction off).
double get_tau(const json& section, const std::string& where, double fallback) {
  if (!section.contains("tau")) return fallback;
  const json& value = section.at("tau");
  if (value.is_string()) {
    const std::string text = value.get<std::string>();
    if (text == "inf" || text == "+inf" || text == "infinity")
      return std::numeric_limits<double>::infinity();
    throw ConfigError(where + ": key 'tau' must be a number or \"inf\"");
  }
  return get_as<double>(section, where, "tau");
}

void require_positive(int value, const std::string& where, const char* key) {
  if (value < 1)
    throw ConfigError(where + ": key '" + std::string(key) + "' must be >= 1");
}

SolverKind get_teacher_kind(const json& section, const std::string& where, SolverKind fallback) {
  if (!section.contains("teacher_kind")) return fallback;
  const SolverKind kind =
      solver_kind_from_string(get_as<std::string>(section, where, "teacher_kind"));
  if (kind == SolverKind::ipndm)
    throw ConfigError(where + ": teacher_kind must be euler or heun");
  return kind;
}

}  // namespace

ExperimentConfig config_from_json(const std::string& text) {
  const std::string where = "config";
  const json j = jsonio::parse(text, where);
  require_keys(j, where, {},
               {"model", "schedule", "solver", "train", "sampling", "subspace", "error_curve",
                "seed", "threads", "out"});
  ExperimentConfig config;

  if (j.contains("model")) {
    const json& model = j.at("model");
    if (!model.is_object()) throw ConfigError("config.model: expected a JSON object");
    if (model.contains("file")) {
      require_keys(model, "config.model", {"file"}, {});
      config.model_file = get_as<std::string>(model, "config.model", "file");
    } else {
      config.model_json = model.dump();
      model_from_json(config.model_json);  // validate eagerly, fail at load time
    }
  }

  if (j.contains("schedule")) {
    const json& s = j.at("schedule");
    const std::string sw = "config.schedule";
    require_keys(s, sw, {}, {"rho", "t_min", "t_max", "n_steps"});
    config.schedule.rho = get_or<double>(s, sw, "rho", config.schedule.rho);
    config.schedule.t_min = get_or<double>(s, sw, "t_min", config.schedule.t_min);
    config.schedule.t_max = get_or<double>(s, sw, "t_max", config.schedule.t_max);
    config.schedule.n_steps = get_or<int>(s, sw, "n_steps", config.schedule.n_steps);
  }

  if (j.contains("solver")) {
    const json& s = j.at("solver");
    const std::string sw = "config.solver";
    require_keys(s, sw, {}, {"kind", "order"});
    if (s.contains("kind"))
      config.solver.kind = solver_kind_from_string(get_as<std::string>(s, sw, "kind"));
    config.solver.order = get_or<int>(s, sw, "order", config.solver.order);
    if (config.solver.order < 1 || config.solver.order > 4)
      throw ConfigError(sw + ": key 'order' must be in [1, 4]");
  }

  if (j.contains("train")) {
    const json& s = j.at("train");
    const std::string sw = "config.train";
    require_keys(s, sw, {},
                 {"basis_k", "loss", "huber_scale", "per_dimension_loss", "learning_rate",
                  "inner_iterations", "batch_size", "tau", "trajectories", "teacher_steps",
                  "teacher_kind", "parameterization"});
    TrainConfig& t = config.train;
    t.basis_k = get_or<int>(s, sw, "basis_k", t.basis_k);
    if (t.basis_k < 1 || t.basis_k > 4)
      throw ConfigError(sw + ": key 'basis_k' must be in [1, 4]");
    if (s.contains("loss"))
      t.loss.kind = loss_kind_from_string(get_as<std::string>(s, sw, "loss"));
    t.loss.huber_scale = get_or<double>(s, sw, "huber_scale", t.loss.huber_scale);
    t.loss.per_dimension = get_or<bool>(s, sw, "per_dimension_loss", t.loss.per_dimension);
    t.learning_rate = get_or<double>(s, sw, "learning_rate", t.learning_rate);
    t.inner_iterations = get_or<int>(s, sw, "inner_iterations", t.inner_iterations);
    t.batch_size = get_or<int>(s, sw, "batch_size", t.batch_size);
    t.tau = get_tau(s, sw, t.tau);
    t.trajectories = get_or<int>(s, sw, "trajectories", t.trajectories);
    require_positive(t.trajectories, sw, "trajectories");
    t.teacher_steps = get_or<int>(s, sw, "teacher_steps", t.teacher_steps);
    require_positive(t.teacher_steps, sw, "teacher_steps");
    t.teacher_kind = get_teacher_kind(s, sw, t.teacher_kind);
    if (s.contains("parameterization"))
      t.parameterization =
          coordinate_param_from_string(get_as<std::string>(s, sw, "parameterization"));
  }

  if (j.contains("sampling")) {
    const json& s = j.at("sampling");
    const std::string sw = "config.sampling";
    require_keys(s, sw, {}, {"count", "format"});
    config.sampling.count = get_or<int>(s, sw, "count", config.sampling.count);
    require_positive(config.sampling.count, sw, "count");
    config.sampling.format = get_or<std::string>(s, sw, "format", config.sampling.format);
    if (config.sampling.format != "csv" && config.sampling.format != "binary")
      throw ConfigError(sw + ": key 'format' must be \"csv\" or \"binary\"");
  }

  if (j.contains("subspace")) {
    const json& s = j.at("subspace");
    const std::string sw = "config.subspace";
    require_keys(s, sw, {}, {"mode", "trajectories", "max_k"});
    config.subspace.mode = get_or<std::string>(s, sw, "mode", config.subspace.mode);
    if (config.subspace.mode != "per-trajectory" && config.subspace.mode != "pooled")
      throw ConfigError(sw + ": key 'mode' must be \"per-trajectory\" or \"pooled\"");
    config.subspace.trajectories =
        get_or<int>(s, sw, "trajectories", config.subspace.trajectories);
    require_positive(config.subspace.trajectories, sw, "trajectories");
    config.subspace.max_k = get_or<int>(s, sw, "max_k", config.subspace.max_k);
    require_positive(config.subspace.max_k, sw, "max_k");
  }

  if (j.contains("error_curve")) {
    const json& s = j.at("error_curve");
    const std::string sw = "config.error_curve";
    require_keys(s, sw, {}, {"trajectories", "norm", "per_dimension", "teacher_steps",
                             "teacher_kind"});
    ErrorCurveConfig& e = config.error_curve;
    e.trajectories = get_or<int>(s, sw, "trajectories", e.trajectories);
    require_positive(e.trajectories, sw, "trajectories");
    if (s.contains("norm")) e.norm = norm_kind_from_string(get_as<std::string>(s, sw, "norm"));
    e.per_dimension = get_or<bool>(s, sw, "per_dimension", e.per_dimension);
    e.teacher_steps = get_or<int>(s, sw, "teacher_steps", e.teacher_steps);
    require_positive(e.teacher_steps, sw, "teacher_steps");
    e.teacher_kind = get_teacher_kind(s, sw, e.teacher_kind);
  }

  config.seed = get_or<std::uint64_t>(j, where, "seed", 0);
  config.threads = get_or<int>(j, where, "threads", 1);
  require_positive(config.threads, where, "threads");
  config.out_dir = get_or<std::string>(j, where, "out", "");
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  ExperimentConfig config = config_from_json(read_text_file(path));
  config.config_dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  return config;
}

ScoreModel build_model(const ExperimentConfig& config) {
  if (!config.model_file.empty()) {
    const std::filesystem::path base =
        config.config_dir.empty() ? std::filesystem::path(".") : config.config_dir;
    return load_model(config.model_file.is_absolute() ? config.model_file
                                                      : base / config.model_file);
  }
  if (!config.model_json.empty()) return model_from_json(config.model_json);
  throw ConfigError("config: missing 'model' section");
}

TimeSchedule build_schedule(const ScheduleParams& params) {
  try {
    return build_schedule(params.rho, params.t_min, params.t_max, params.n_steps);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config.schedule: ") + e.what());
  }
}

}  // namespace pas
