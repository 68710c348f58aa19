#include "pas/io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>
#include <sstream>

#include "json_support.hpp"
#include "pas/errors.hpp"

namespace pas {

using nlohmann::json;
using jsonio::get_as;
using jsonio::get_or;
using jsonio::require_keys;

std::string format_double(double value) {
  std::array<char, 32> buffer;
  const auto result = std::to_chars(buffer.data(), buffer.data() + buffer.size(), value);
  return std::string(buffer.data(), result.ptr);
}

std::uint64_t fnv1a64(const void* data, std::size_t size) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t hash = 14695981039346656037ull;
  for (std::size_t i = 0; i < size; ++i) {
    hash ^= bytes[i];
    hash *= 1099511628211ull;
  }
  return hash;
}

std::uint64_t fnv1a64(const std::string& text) { return fnv1a64(text.data(), text.size()); }

std::string checksum_string(std::uint64_t checksum) {
  std::array<char, 17> hex{};
  for (int i = 15; i >= 0; --i) {
    hex[static_cast<std::size_t>(i)] = "0123456789abcdef"[checksum & 0xf];
    checksum >>= 4;
  }
  return std::string("fnv1a64:") + hex.data();
}

namespace {

std::uint64_t parse_checksum(const std::string& text, const std::string& where) {
  const std::string prefix = "fnv1a64:";
  if (text.rfind(prefix, 0) != 0 || text.size() != prefix.size() + 16)
    throw IoError(where + ": malformed checksum '" + text + "'");
  std::uint64_t value = 0;
  const auto result =
      std::from_chars(text.data() + prefix.size(), text.data() + text.size(), value, 16);
  if (result.ec != std::errc() || result.ptr != text.data() + text.size())
    throw IoError(where + ": malformed checksum '" + text + "'");
  return value;
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  std::ostringstream out;
  out << in.rdbuf();
  if (in.bad()) throw IoError("read failure: " + path.string());
  return out.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("write failure: " + path.string());
}

std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failure: " + path.string());
  return bytes;
}

void write_binary_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failure: " + path.string());
}

std::string schedule_csv(const TimeSchedule& schedule) {
  std::string out = "index,time\n";
  for (std::size_t i = 0; i < schedule.times.size(); ++i) {
    out += std::to_string(i);
    out += ",";
    out += format_double(schedule.times[i]);
    out += "\n";
  }
  return out;
}

std::string trajectory_csv(const TrajectoryRecord& record) {
  const int n = record.schedule.n_steps;
  const Eigen::Index dim = record.states.front().size();
  std::string out = "step,time";
  for (Eigen::Index j = 0; j < dim; ++j) out += ",state_" + std::to_string(j);
  for (Eigen::Index j = 0; j < dim; ++j) out += ",direction_" + std::to_string(j);
  out += "\n";
  for (int i = n; i >= 0; --i) {
    out += std::to_string(i);
    out += ",";
    out += format_double(record.schedule.times[static_cast<std::size_t>(i)]);
    const Eigen::VectorXd& x = record.state(i);
    for (Eigen::Index j = 0; j < dim; ++j) {
      out += ",";
      out += format_double(x[j]);
    }
    if (i >= 1) {
      const Eigen::VectorXd& d = record.direction(i);
      for (Eigen::Index j = 0; j < dim; ++j) {
        out += ",";
        out += format_double(d[j]);
      }
    } else {
      out.append(static_cast<std::size_t>(dim), ',');
    }
    out += "\n";
  }
  return out;
}

std::string cumulative_variance_csv(const std::vector<double>& fractions) {
  std::string out = "components,cumulative_fraction\n";
  for (std::size_t j = 0; j < fractions.size(); ++j) {
    out += std::to_string(j + 1);
    out += ",";
    out += format_double(fractions[j]);
    out += "\n";
  }
  return out;
}

std::string error_curve_csv(const ErrorCurve& curve, const std::string& metadata) {
  std::string out;
  if (!metadata.empty()) out += "# " + metadata + "\n";
  out += "step,time,error\n";
  for (std::size_t j = 0; j < curve.values.size(); ++j) {
    out += std::to_string(curve.step_indices[j]);
    out += ",";
    out += format_double(curve.times[j]);
    out += ",";
    out += format_double(curve.values[j]);
    out += "\n";
  }
  return out;
}

namespace {

constexpr char kTrajectoryMagic[8] = {'P', 'A', 'S', 'T', 'R', 'A', 'J', '1'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t value) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((value >> (8 * i)) & 0xff));
}

void put_f64(std::vector<std::uint8_t>& out, double value) {
  const std::uint64_t bits = std::bit_cast<std::uint64_t>(value);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>((bits >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const std::vector<std::uint8_t>& bytes, std::size_t offset) {
  std::uint32_t value = 0;
  for (int i = 3; i >= 0; --i) value = (value << 8) | bytes[offset + static_cast<std::size_t>(i)];
  return value;
}

double get_f64(const std::vector<std::uint8_t>& bytes, std::size_t offset) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | bytes[offset + static_cast<std::size_t>(i)];
  return std::bit_cast<double>(bits);
}

}  // namespace

std::vector<std::uint8_t> trajectory_binary(const TrajectoryRecord& record) {
  const std::uint32_t n = static_cast<std::uint32_t>(record.schedule.n_steps);
  const std::uint32_t dim = static_cast<std::uint32_t>(record.states.front().size());
  std::vector<std::uint8_t> out;
  out.reserve(20 + 8 * (n + 1) * (1 + 2 * dim));
  out.insert(out.end(), kTrajectoryMagic, kTrajectoryMagic + 8);
  put_u32(out, 1);
  put_u32(out, dim);
  put_u32(out, n);
  for (double t : record.schedule.times) put_f64(out, t);
  for (const Eigen::VectorXd& x : record.states)
    for (Eigen::Index j = 0; j < x.size(); ++j) put_f64(out, x[j]);
  for (const Eigen::VectorXd& d : record.directions)
    for (Eigen::Index j = 0; j < d.size(); ++j) put_f64(out, d[j]);
  return out;
}

TrajectoryFrames read_trajectory_binary(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 20 || std::memcmp(bytes.data(), kTrajectoryMagic, 8) != 0)
    throw IoError("trajectory container: bad magic");
  if (get_u32(bytes, 8) != 1) throw IoError("trajectory container: unsupported version");
  const std::uint32_t dim = get_u32(bytes, 12);
  const std::uint32_t n = get_u32(bytes, 16);
  const std::size_t expected =
      20 + 8 * (static_cast<std::size_t>(n) + 1) * (1 + dim) + 8 * static_cast<std::size_t>(n) * dim;
  if (dim == 0 || bytes.size() != expected)
    throw IoError("trajectory container: truncated or inconsistent payload");

  TrajectoryFrames frames;
  std::size_t offset = 20;
  frames.times.resize(n + 1);
  for (std::uint32_t i = 0; i <= n; ++i, offset += 8) frames.times[i] = get_f64(bytes, offset);
  frames.states.resize(n + 1);
  for (std::uint32_t i = 0; i <= n; ++i) {
    Eigen::VectorXd x(dim);
    for (std::uint32_t j = 0; j < dim; ++j, offset += 8) x[j] = get_f64(bytes, offset);
    frames.states[i] = std::move(x);
  }
  frames.directions.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    Eigen::VectorXd d(dim);
    for (std::uint32_t j = 0; j < dim; ++j, offset += 8) d[j] = get_f64(bytes, offset);
    frames.directions[i] = std::move(d);
  }
  return frames;
}

namespace {

Eigen::VectorXd get_vector(const json& object, const std::string& where, const char* key) {
  const std::vector<double> values = get_as<std::vector<double>>(object, where, key);
  return Eigen::Map<const Eigen::VectorXd>(values.data(),
                                           static_cast<Eigen::Index>(values.size()));
}

}  // namespace

std::string correction_table_to_json(const CorrectionTable& table) {
  json j;
  j["format_version"] = table.format_version;
  j["solver"] = {{"kind", to_string(table.solver.kind)}, {"order", table.solver.order}};
  j["schedule"] = {{"rho", table.rho},
                   {"t_min", table.t_min},
                   {"t_max", table.t_max},
                   {"n", table.n_steps}};
  j["basis_k"] = table.basis_k;
  j["loss"] = to_string(table.loss);
  j["huber_scale"] = table.huber_scale;
  j["per_dimension_loss"] = table.per_dimension_loss;
  // JSON has no infinity literal; an infinite margin is stored as "inf", the
  // same spelling the experiment config accepts.
  if (std::isinf(table.tau))
    j["tau"] = "inf";
  else
    j["tau"] = table.tau;
  j["lr"] = table.learning_rate;
  j["trajectories"] = table.trajectories;
  j["teacher_steps"] = table.teacher_steps;
  j["parameterization"] = to_string(table.parameterization);
  j["seed"] = table.seed;
  j["entries"] = json::array();
  for (const CorrectionEntry& e : table.entries) {
    json entry;
    entry["step"] = e.step_index;
    entry["coords"] = std::vector<double>(e.coords.data(), e.coords.data() + e.coords.size());
    entry["loss_uncorrected"] = e.loss_uncorrected;
    entry["loss_corrected"] = e.loss_corrected;
    entry["tau_used"] = e.tau_used;
    j["entries"].push_back(std::move(entry));
  }
  return j.dump(2) + "\n";
}

CorrectionTable correction_table_from_json(const std::string& text) {
  const std::string where = "correction table";
  const json j = jsonio::parse(text, where);
  require_keys(j, where,
               {"format_version", "solver", "schedule", "basis_k", "loss", "tau", "lr",
                "trajectories", "seed", "entries"},
               {"huber_scale", "per_dimension_loss", "teacher_steps", "parameterization"});

  CorrectionTable table;
  table.format_version = get_as<int>(j, where, "format_version");
  if (table.format_version != 1)
    throw ConfigError(where + ": unsupported format_version " +
                      std::to_string(table.format_version));

  const json& solver = j.at("solver");
  require_keys(solver, where + ".solver", {"kind"}, {"order"});
  table.solver.kind = solver_kind_from_string(get_as<std::string>(solver, where, "kind"));
  table.solver.order = get_or<int>(solver, where, "order", 3);

  const json& schedule = j.at("schedule");
  require_keys(schedule, where + ".schedule", {"rho", "t_min", "t_max", "n"}, {});
  table.rho = get_as<double>(schedule, where, "rho");
  table.t_min = get_as<double>(schedule, where, "t_min");
  table.t_max = get_as<double>(schedule, where, "t_max");
  table.n_steps = get_as<int>(schedule, where, "n");

  table.basis_k = get_as<int>(j, where, "basis_k");
  table.loss = loss_kind_from_string(get_as<std::string>(j, where, "loss"));
  table.huber_scale = get_or<double>(j, where, "huber_scale", 0.03);
  table.per_dimension_loss = get_or<bool>(j, where, "per_dimension_loss", true);
  if (j.at("tau").is_string()) {
    if (j.at("tau").get<std::string>() != "inf")
      throw ConfigError(where + ": key 'tau' must be a number or \"inf\"");
    table.tau = std::numeric_limits<double>::infinity();
  } else {
    table.tau = get_as<double>(j, where, "tau");
  }
  table.learning_rate = get_as<double>(j, where, "lr");
  table.trajectories = get_as<int>(j, where, "trajectories");
  table.teacher_steps = get_or<int>(j, where, "teacher_steps", 100);
  table.parameterization = coordinate_param_from_string(
      get_or<std::string>(j, where, "parameterization", "absolute"));
  table.seed = get_as<std::uint64_t>(j, where, "seed");

  for (const json& entry : j.at("entries")) {
    require_keys(entry, where + ".entries[]", {"step", "coords"},
                 {"loss_uncorrected", "loss_corrected", "tau_used"});
    CorrectionEntry e;
    e.step_index = get_as<int>(entry, where, "step");
    e.coords = get_vector(entry, where, "coords");
    e.loss_uncorrected = get_or<double>(entry, where, "loss_uncorrected", 0.0);
    e.loss_corrected = get_or<double>(entry, where, "loss_corrected", 0.0);
    e.tau_used = get_or<double>(entry, where, "tau_used", 0.0);
    table.entries.push_back(std::move(e));
  }
  return table;
}

void save_correction_table(const std::filesystem::path& path, const CorrectionTable& table) {
  write_text_file(path, correction_table_to_json(table));
}

CorrectionTable load_correction_table(const std::filesystem::path& path) {
  return correction_table_from_json(read_text_file(path));
}

ScoreModel model_from_json(const std::string& text) {
  const std::string where = "model";
  const json j = jsonio::parse(text, where);
  if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");

  if (j.contains("preset")) {
    const std::string preset = get_as<std::string>(j, where, "preset");
    if (preset == "isotropic") {
      require_keys(j, where, {"preset", "dimension"}, {});
      return isotropic_model(get_as<int>(j, where, "dimension"));
    }
    if (preset == "rank2-manifold") {
      require_keys(j, where, {"preset", "dimension", "seed"}, {"eigenvalues", "floor"});
      const std::vector<double> eigenvalues =
          get_or<std::vector<double>>(j, where, "eigenvalues", {25.0, 9.0});
      return rank_manifold_model(get_as<int>(j, where, "dimension"), eigenvalues,
                                 get_or<double>(j, where, "floor", 1e-4),
                                 get_as<std::uint64_t>(j, where, "seed"));
    }
    if (preset == "mixture-symmetric") {
      require_keys(j, where, {"preset", "dimension", "seed"}, {});
      return symmetric_mixture_model(get_as<int>(j, where, "dimension"),
                                     get_as<std::uint64_t>(j, where, "seed"));
    }
    throw ConfigError(where + ": unknown preset '" + preset + "'");
  }

  require_keys(j, where, {"dimension", "components"}, {});
  const int dimension = get_as<int>(j, where, "dimension");
  std::vector<GaussianComponent> components;
  for (const json& cj : j.at("components")) {
    require_keys(cj, where + ".components[]", {"weight", "mean", "eigenvalues", "axes"}, {});
    GaussianComponent c;
    c.weight = get_as<double>(cj, where, "weight");
    c.mean = get_vector(cj, where, "mean");
    c.eigenvalues = get_vector(cj, where, "eigenvalues");
    const std::vector<std::vector<double>> axes =
        get_as<std::vector<std::vector<double>>>(cj, where, "axes");
    c.axes.resize(dimension, static_cast<Eigen::Index>(axes.size()));
    for (std::size_t k = 0; k < axes.size(); ++k) {
      if (axes[k].size() != static_cast<std::size_t>(dimension))
        throw ConfigError(where + ": axis " + std::to_string(k) + " has wrong dimension");
      c.axes.col(static_cast<Eigen::Index>(k)) = Eigen::Map<const Eigen::VectorXd>(
          axes[k].data(), static_cast<Eigen::Index>(axes[k].size()));
    }
    components.push_back(std::move(c));
  }
  return ScoreModel(dimension, std::move(components));
}

std::string model_to_json(const ScoreModel& model) {
  json j;
  j["dimension"] = model.dimension();
  j["components"] = json::array();
  for (const GaussianComponent& c : model.components()) {
    json cj;
    cj["weight"] = c.weight;
    cj["mean"] = std::vector<double>(c.mean.data(), c.mean.data() + c.mean.size());
    cj["eigenvalues"] =
        std::vector<double>(c.eigenvalues.data(), c.eigenvalues.data() + c.eigenvalues.size());
    cj["axes"] = json::array();
    for (Eigen::Index k = 0; k < c.axes.cols(); ++k) {
      const Eigen::VectorXd axis = c.axes.col(k);
      cj["axes"].push_back(std::vector<double>(axis.data(), axis.data() + axis.size()));
    }
    j["components"].push_back(std::move(cj));
  }
  return j.dump(2) + "\n";
}

ScoreModel load_model(const std::filesystem::path& path) {
  return model_from_json(read_text_file(path));
}

std::string manifest_to_json(const RunManifest& manifest) {
  json j;
  j["format_version"] = manifest.format_version;
  j["tool"] = manifest.tool;
  j["subcommand"] = manifest.subcommand;
  j["seed"] = manifest.seed;
  j["threads"] = manifest.threads;
  j["config_checksum"] = checksum_string(manifest.config_checksum);
  j["wall_time_seconds"] = manifest.wall_time_seconds;
  j["artifacts"] = json::array();
  for (const ArtifactRecord& a : manifest.artifacts) {
    j["artifacts"].push_back({{"path", a.path},
                              {"bytes", a.bytes},
                              {"checksum", checksum_string(a.checksum)}});
  }
  return j.dump(2) + "\n";
}

RunManifest manifest_from_json(const std::string& text) {
  const std::string where = "manifest";
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw IoError(where + ": invalid JSON: " + e.what());
  }
  try {
    RunManifest manifest;
    manifest.format_version = j.at("format_version").get<int>();
    manifest.tool = j.at("tool").get<std::string>();
    manifest.subcommand = j.at("subcommand").get<std::string>();
    manifest.seed = j.at("seed").get<std::uint64_t>();
    manifest.threads = j.at("threads").get<int>();
    manifest.config_checksum = parse_checksum(j.at("config_checksum").get<std::string>(), where);
    manifest.wall_time_seconds = j.at("wall_time_seconds").get<double>();
    for (const json& aj : j.at("artifacts")) {
      ArtifactRecord a;
      a.path = aj.at("path").get<std::string>();
      a.bytes = aj.at("bytes").get<std::uint64_t>();
      a.checksum = parse_checksum(aj.at("checksum").get<std::string>(), where);
      manifest.artifacts.push_back(std::move(a));
    }
    return manifest;
  } catch (const json::exception& e) {
    throw IoError(where + ": malformed contents: " + e.what());
  }
}

void save_manifest(const std::filesystem::path& directory, const RunManifest& manifest) {
  write_text_file(directory / "manifest.json", manifest_to_json(manifest));
}

RunManifest load_manifest(const std::filesystem::path& directory) {
  const std::filesystem::path path = directory / "manifest.json";
  if (!std::filesystem::exists(path)) throw IoError("no manifest found in " + directory.string());
  return manifest_from_json(read_text_file(path));
}

}  // namespace pas
