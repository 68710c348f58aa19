#include "pas/correction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "pas/errors.hpp"
#include "pas/parallel.hpp"
#include "pas/subspace.hpp"

namespace pas {

std::string to_string(CoordinateParam param) {
  return param == CoordinateParam::absolute ? "absolute" : "relative";
}

CoordinateParam coordinate_param_from_string(const std::string& name) {
  if (name == "absolute") return CoordinateParam::absolute;
  if (name == "relative") return CoordinateParam::relative;
  throw ConfigError("unknown parameterization '" + name + "' (expected absolute or relative)");
}

const CorrectionEntry* CorrectionTable::find(int step_index) const {
  for (const CorrectionEntry& e : entries)
    if (e.step_index == step_index) return &e;
  return nullptr;
}

int CorrectionTable::stored_scalars() const {
  int total = 0;
  for (const CorrectionEntry& e : entries) total += static_cast<int>(e.coords.size());
  return total;
}

std::string CorrectionTable::corrected_steps_string() const {
  if (entries.empty()) return "-";
  std::string out;
  for (size_t j = 0; j < entries.size(); ++j) {
    if (j) out += ",";
    out += std::to_string(entries[j].step_index);
  }
  return out;
}

namespace {

void validate_problem(const CoordinateProblem& p) {
  const size_t b = p.states.size();
  if (b == 0) throw std::invalid_argument("coordinate problem: empty batch");
  if (p.histories.size() != b || p.targets.size() != b || p.bases.size() != b ||
      p.scales.size() != b)
    throw std::invalid_argument("coordinate problem: inconsistent batch arrays");
  if (p.coord_size < 1) throw std::invalid_argument("coordinate problem: coord_size must be >= 1");
  if (p.solver.kind == SolverKind::heun)
    throw std::invalid_argument("coordinate problem: corrections apply to euler/ipndm only");
}

Eigen::VectorXd corrected_direction(const CoordinateProblem& p, size_t s,
                                    const Eigen::VectorXd& coords) {
  const Eigen::Index k_s = p.bases[s].cols();
  return p.bases[s] * (p.scales[s] * coords.head(k_s));
}

Eigen::VectorXd step_state(const CoordinateProblem& p, size_t s, const Eigen::VectorXd& d) {
  if (p.solver.kind == SolverKind::euler) return euler_step(*p.states[s], d, p.t, p.t_prev);
  static const HistoryBuffer empty_history{};
  const HistoryBuffer& history = p.histories[s] ? *p.histories[s] : empty_history;
  return ipndm_step(*p.states[s], d, history, p.solver.order, p.t, p.t_prev).state;
}

double step_sensitivity(const CoordinateProblem& p, size_t s) {
  const double h = p.t_prev - p.t;
  if (p.solver.kind == SolverKind::euler) return h;
  const int available = p.histories[s] ? static_cast<int>(p.histories[s]->directions.size()) : 0;
  const int effective = std::min(p.solver.order, available + 1);
  return h * multistep_weights(effective)[0];
}

}  // namespace

double coordinate_loss(const CoordinateProblem& p, const Eigen::VectorXd& coords,
                       const LossOptions& loss) {
  validate_problem(p);
  const int b = static_cast<int>(p.states.size());
  std::vector<double> per_sample(static_cast<size_t>(b));
  parallel_for(b, p.threads, [&](int s) {
    const Eigen::VectorXd out =
        step_state(p, static_cast<size_t>(s), corrected_direction(p, static_cast<size_t>(s), coords));
    per_sample[static_cast<size_t>(s)] = loss_value(loss, out - *p.targets[static_cast<size_t>(s)]);
  });
  double sum = 0.0;
  for (const double v : per_sample) sum += v;
  return sum / static_cast<double>(b);
}

namespace {

// Batch-mean analytic gradient over the index range [first, last).
Eigen::VectorXd gradient_over_range(const CoordinateProblem& p, const Eigen::VectorXd& coords,
                                    const LossOptions& loss, int first, int last) {
  const int count = last - first;
  std::vector<Eigen::VectorXd> per_sample(static_cast<size_t>(count));
  parallel_for(count, p.threads, [&](int idx) {
    const size_t s = static_cast<size_t>(first + idx);
    const Eigen::VectorXd out = step_state(p, s, corrected_direction(p, s, coords));
    const Eigen::VectorXd outer = loss_gradient(loss, out - *p.targets[s]);
    const double factor = step_sensitivity(p, s) * p.scales[s];
    Eigen::VectorXd g = Eigen::VectorXd::Zero(p.coord_size);
    g.head(p.bases[s].cols()).noalias() = factor * (p.bases[s].transpose() * outer);
    per_sample[static_cast<size_t>(idx)] = std::move(g);
  });
  Eigen::VectorXd total = Eigen::VectorXd::Zero(p.coord_size);
  for (const Eigen::VectorXd& g : per_sample) total += g;
  return total / static_cast<double>(count);
}

}  // namespace

Eigen::VectorXd coordinate_gradient(const CoordinateProblem& p, const Eigen::VectorXd& coords,
                                    const LossOptions& loss) {
  validate_problem(p);
  if (coords.size() != p.coord_size)
    throw std::invalid_argument("coordinate_gradient: coordinate size mismatch");
  return gradient_over_range(p, coords, loss, 0, static_cast<int>(p.states.size()));
}

Eigen::VectorXd coordinate_gradient_fd(const CoordinateProblem& p, const Eigen::VectorXd& coords,
                                       const LossOptions& loss, double delta) {
  validate_problem(p);
  if (!(std::isfinite(delta) && delta > 0.0))
    throw std::invalid_argument("coordinate_gradient_fd: delta must be finite and > 0");
  Eigen::VectorXd grad(p.coord_size);
  Eigen::VectorXd probe = coords;
  for (int j = 0; j < p.coord_size; ++j) {
    probe[j] = coords[j] + delta;
    const double up = coordinate_loss(p, probe, loss);
    probe[j] = coords[j] - delta;
    const double down = coordinate_loss(p, probe, loss);
    probe[j] = coords[j];
    grad[j] = (up - down) / (2.0 * delta);
  }
  return grad;
}

Eigen::VectorXd optimize_coordinates(const CoordinateProblem& p, const Eigen::VectorXd& init,
                                     const TrainConfig& config) {
  validate_problem(p);
  if (init.size() != p.coord_size)
    throw std::invalid_argument("optimize_coordinates: init size mismatch");
  if (config.inner_iterations < 0)
    throw std::invalid_argument("optimize_coordinates: inner_iterations must be >= 0");
  if (!(std::isfinite(config.learning_rate) && config.learning_rate > 0.0))
    throw std::invalid_argument("optimize_coordinates: learning_rate must be finite and > 0");

  const int b = static_cast<int>(p.states.size());
  const int batch = (config.batch_size <= 0 || config.batch_size >= b) ? b : config.batch_size;
  const int chunks = (b + batch - 1) / batch;

  Eigen::VectorXd coords = init;
  for (int it = 0; it < config.inner_iterations; ++it) {
    const int chunk = it % chunks;
    const int first = chunk * batch;
    const int last = std::min(b, first + batch);
    const Eigen::VectorXd grad = gradient_over_range(p, coords, config.loss, first, last);
    coords -= config.learning_rate * grad;
    if (!coords.allFinite()) break;  // keep the divergent iterate; acceptance rejects it
  }
  return coords;
}

bool adaptive_accept(double loss_corrected, double loss_uncorrected, double tau) {
  return loss_uncorrected - (loss_corrected + tau) > 0.0;
}

namespace {

double mean_of(const std::vector<double>& values) {
  double sum = 0.0;
  for (const double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

}  // namespace

TrainResult train_correction_table(const DirectionField& field, const SolverSpec& student,
                                   const TimeSchedule& schedule,
                                   const std::vector<Eigen::VectorXd>& terminal_states,
                                   const TrainConfig& config) {
  if (student.kind == SolverKind::heun)
    throw ConfigError("train_correction_table: student solver must be euler or ipndm");
  if (student.kind == SolverKind::ipndm && (student.order < 1 || student.order > 4))
    throw ConfigError("train_correction_table: ipndm order must be in [1, 4]");
  if (config.basis_k < 1) throw ConfigError("train_correction_table: basis_k must be >= 1");
  if (terminal_states.empty())
    throw ConfigError("train_correction_table: need at least one trajectory");
  if (config.teacher_steps < 1)
    throw ConfigError("train_correction_table: teacher_steps must be >= 1");
  const int n = schedule.n_steps;
  if (schedule.times.size() != static_cast<size_t>(n) + 1)
    throw ConfigError("train_correction_table: schedule not built");

  const int b = static_cast<int>(terminal_states.size());
  const Eigen::Index dim = terminal_states.front().size();
  for (const auto& x : terminal_states)
    if (x.size() != dim || !x.allFinite())
      throw ConfigError("train_correction_table: inconsistent or non-finite terminal states");

  TrainResult result;
  CorrectionTable& table = result.table;
  table.solver = student;
  table.rho = schedule.rho;
  table.t_min = schedule.t_min;
  table.t_max = schedule.t_max;
  table.n_steps = n;
  table.basis_k = config.basis_k;
  table.loss = config.loss.kind;
  table.huber_scale = config.loss.huber_scale;
  table.per_dimension_loss = config.loss.per_dimension;
  table.tau = config.tau;
  table.learning_rate = config.learning_rate;
  table.trajectories = b;
  table.teacher_steps = config.teacher_steps;
  table.parameterization = config.parameterization;
  table.seed = config.seed;

  // Fixed references from the uncorrected teacher.
  std::vector<std::vector<Eigen::VectorXd>> reference(static_cast<size_t>(b));
  parallel_for(b, config.threads, [&](int s) {
    reference[static_cast<size_t>(s)] = generate_ground_truth(
        field, schedule, terminal_states[static_cast<size_t>(s)], config.teacher_steps,
        config.teacher_kind);
  });

  std::vector<Eigen::VectorXd> states(terminal_states);
  std::vector<HistoryBuffer> buffers(static_cast<size_t>(b));
  for (int s = 0; s < b; ++s) buffers[static_cast<size_t>(s)].origin = terminal_states[static_cast<size_t>(s)];

  std::vector<Eigen::VectorXd> directions(static_cast<size_t>(b));
  parallel_for(b, config.threads, [&](int s) {
    directions[static_cast<size_t>(s)] =
        field(states[static_cast<size_t>(s)], schedule.times[static_cast<size_t>(n)]);
  });

  bool any_accepted = false;
  for (int i = n; i >= 1; --i) {
    const double t = schedule.times[static_cast<size_t>(i)];
    const double t_prev = schedule.times[static_cast<size_t>(i) - 1];

    CoordinateProblem problem;
    problem.t = t;
    problem.t_prev = t_prev;
    problem.solver = student;
    problem.coord_size = config.basis_k;
    problem.threads = config.threads;
    problem.states.resize(static_cast<size_t>(b));
    problem.histories.resize(static_cast<size_t>(b));
    problem.targets.resize(static_cast<size_t>(b));
    problem.bases.resize(static_cast<size_t>(b));
    problem.scales.resize(static_cast<size_t>(b));
    parallel_for(b, config.threads, [&](int s_int) {
      const size_t s = static_cast<size_t>(s_int);
      problem.states[s] = &states[s];
      problem.histories[s] = &buffers[s];
      problem.targets[s] = &reference[s][static_cast<size_t>(i) - 1];
      problem.bases[s] = pca_basis(buffers[s], directions[s], config.basis_k);
      problem.scales[s] =
          config.parameterization == CoordinateParam::relative ? directions[s].norm() : 1.0;
    });

    int max_k = 0;
    for (const auto& basis : problem.bases) max_k = std::max(max_k, static_cast<int>(basis.cols()));

    Eigen::VectorXd init = Eigen::VectorXd::Zero(config.basis_k);
    if (config.parameterization == CoordinateParam::absolute) {
      std::vector<double> norms(static_cast<size_t>(b));
      for (int s = 0; s < b; ++s) norms[static_cast<size_t>(s)] = directions[static_cast<size_t>(s)].norm();
      init[0] = mean_of(norms);
    } else {
      init[0] = 1.0;
    }

    const Eigen::VectorXd optimized = optimize_coordinates(problem, init, config);

    // Uncorrected step for every trajectory; reused verbatim on rejection.
    std::vector<Eigen::VectorXd> plain_next(static_cast<size_t>(b));
    std::vector<double> plain_losses(static_cast<size_t>(b));
    parallel_for(b, config.threads, [&](int s_int) {
      const size_t s = static_cast<size_t>(s_int);
      plain_next[s] = step_state(problem, s, directions[s]);
      plain_losses[s] = loss_value(config.loss, plain_next[s] - *problem.targets[s]);
    });
    const double loss_uncorrected = mean_of(plain_losses);

    double loss_corrected = std::numeric_limits<double>::quiet_NaN();
    std::vector<Eigen::VectorXd> corrected_next;
    std::vector<Eigen::VectorXd> corrected_dirs;
    if (optimized.allFinite()) {
      corrected_next.resize(static_cast<size_t>(b));
      corrected_dirs.resize(static_cast<size_t>(b));
      std::vector<double> losses(static_cast<size_t>(b));
      parallel_for(b, config.threads, [&](int s_int) {
        const size_t s = static_cast<size_t>(s_int);
        corrected_dirs[s] = corrected_direction(problem, s, optimized);
        corrected_next[s] = step_state(problem, s, corrected_dirs[s]);
        losses[s] = loss_value(config.loss, corrected_next[s] - *problem.targets[s]);
      });
      loss_corrected = mean_of(losses);
    }

    const double tau_used = any_accepted ? kLaterTau : config.tau;
    const bool divergence = !std::isfinite(loss_corrected);
    const bool accepted =
        !divergence && adaptive_accept(loss_corrected, loss_uncorrected, tau_used);

    StepLog log;
    log.step_index = i;
    log.t = t;
    log.t_prev = t_prev;
    log.loss_uncorrected = loss_uncorrected;
    log.loss_corrected = loss_corrected;
    log.tau_used = tau_used;
    log.accepted = accepted;
    log.divergence = divergence;
    log.sensitivity = step_sensitivity(problem, 0);
    log.max_effective_k = max_k;
    result.log.push_back(log);

    if (accepted) {
      any_accepted = true;
      CorrectionEntry entry;
      entry.step_index = i;
      entry.coords = optimized.head(std::max(1, max_k));
      entry.loss_uncorrected = loss_uncorrected;
      entry.loss_corrected = loss_corrected;
      entry.tau_used = tau_used;
      table.entries.push_back(std::move(entry));
    }

    // Advance with whichever direction won; the consumed direction is buffered.
    for (int s_int = 0; s_int < b; ++s_int) {
      const size_t s = static_cast<size_t>(s_int);
      if (accepted) {
        states[s] = corrected_next[s];
        buffers[s].directions.push_back(std::move(corrected_dirs[s]));
      } else {
        states[s] = plain_next[s];
        buffers[s].directions.push_back(directions[s]);
      }
    }
    if (i > 1) {
      parallel_for(b, config.threads, [&](int s_int) {
        const size_t s = static_cast<size_t>(s_int);
        directions[s] = field(states[s], t_prev);
      });
    }
  }
  return result;
}

TrainResult train_correction_table(const ScoreModel& model, const SolverSpec& student,
                                   const TimeSchedule& schedule, const TrainConfig& config) {
  if (config.trajectories < 1)
    throw ConfigError("train_correction_table: trajectories must be >= 1");
  std::vector<Eigen::VectorXd> terminal_states(static_cast<size_t>(config.trajectories));
  for (int s = 0; s < config.trajectories; ++s) {
    RandomStream stream(config.seed, static_cast<std::uint64_t>(s));
    terminal_states[static_cast<size_t>(s)] = model.draw_terminal_state(schedule.t_max, stream);
  }
  const DirectionField field = [&model](const Eigen::VectorXd& x, double t) {
    return model.noise_prediction(x, t);
  };
  return train_correction_table(field, student, schedule, terminal_states, config);
}

TrajectoryRecord sample_with_correction(const DirectionField& field, const SolverSpec& spec,
                                        const TimeSchedule& schedule,
                                        const CorrectionTable& table,
                                        const Eigen::VectorXd& x_terminal) {
  if (spec.kind != table.solver.kind)
    throw IncompatibleTableError("sample_with_correction: table was trained for solver '" +
                                 to_string(table.solver.kind) + "', requested '" +
                                 to_string(spec.kind) + "'");
  if (spec.kind == SolverKind::ipndm && spec.order != table.solver.order)
    throw IncompatibleTableError("sample_with_correction: table was trained at order " +
                                 std::to_string(table.solver.order) + ", requested order " +
                                 std::to_string(spec.order));
  if (schedule.n_steps != table.n_steps || schedule.rho != table.rho ||
      schedule.t_min != table.t_min || schedule.t_max != table.t_max)
    throw IncompatibleTableError(
        "sample_with_correction: schedule does not match the table's training schedule");
  for (const CorrectionEntry& e : table.entries) {
    if (e.step_index < 1 || e.step_index > table.n_steps)
      throw IncompatibleTableError("sample_with_correction: entry step index " +
                                   std::to_string(e.step_index) + " outside [1, " +
                                   std::to_string(table.n_steps) + "]");
    if (e.coords.size() < 1 || e.coords.size() > table.basis_k)
      throw IncompatibleTableError("sample_with_correction: entry at step " +
                                   std::to_string(e.step_index) + " stores " +
                                   std::to_string(e.coords.size()) + " coordinates, basis_k is " +
                                   std::to_string(table.basis_k));
  }

  std::function<Eigen::VectorXd(int, const Eigen::VectorXd&, const HistoryBuffer&)> adjust;
  if (!table.entries.empty()) {
    adjust = [&table](int step_index, const Eigen::VectorXd& d,
                      const HistoryBuffer& buffer) -> Eigen::VectorXd {
      const CorrectionEntry* entry = table.find(step_index);
      if (!entry) return d;
      const Eigen::MatrixXd basis = pca_basis(buffer, d, table.basis_k);
      const Eigen::Index k_use = std::min<Eigen::Index>(basis.cols(), entry->coords.size());
      const double scale =
          table.parameterization == CoordinateParam::relative ? d.norm() : 1.0;
      return basis.leftCols(k_use) * (scale * entry->coords.head(k_use));
    };
  }
  return detail::sample_with_adjustment(field, spec, schedule, x_terminal, adjust);
}

}  // namespace pas
