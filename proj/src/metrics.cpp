#include "pas/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "pas/errors.hpp"

namespace pas {

std::string to_string(NormKind kind) { return kind == NormKind::l1 ? "l1" : "l2"; }

NormKind norm_kind_from_string(const std::string& name) {
  if (name == "l1") return NormKind::l1;
  if (name == "l2") return NormKind::l2;
  throw ConfigError("unknown norm '" + name + "' (expected l1 or l2)");
}

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::l1: return "l1";
    case LossKind::l2: return "l2";
    case LossKind::pseudo_huber: return "pseudo-huber";
  }
  return "unknown";
}

LossKind loss_kind_from_string(const std::string& name) {
  if (name == "l1") return LossKind::l1;
  if (name == "l2") return LossKind::l2;
  if (name == "pseudo-huber" || name == "pseudo_huber") return LossKind::pseudo_huber;
  throw ConfigError("unknown loss '" + name + "' (expected l1, l2, or pseudo-huber)");
}

double loss_value(const LossOptions& options, const Eigen::VectorXd& residual) {
  double value = 0.0;
  switch (options.kind) {
    case LossKind::l1:
      value = residual.lpNorm<1>();
      break;
    case LossKind::l2:
      value = residual.squaredNorm();
      break;
    case LossKind::pseudo_huber: {
      const double c = options.huber_scale;
      value = std::sqrt(residual.squaredNorm() + c * c) - c;
      break;
    }
  }
  if (options.per_dimension) value /= static_cast<double>(residual.size());
  return value;
}

Eigen::VectorXd loss_gradient(const LossOptions& options, const Eigen::VectorXd& residual) {
  Eigen::VectorXd grad;
  switch (options.kind) {
    case LossKind::l1:
      grad = residual.array().sign().matrix();
      break;
    case LossKind::l2:
      grad = 2.0 * residual;
      break;
    case LossKind::pseudo_huber: {
      const double c = options.huber_scale;
      grad = residual / std::sqrt(residual.squaredNorm() + c * c);
      break;
    }
  }
  if (options.per_dimension) grad /= static_cast<double>(residual.size());
  return grad;
}

double state_distance(NormKind norm, const Eigen::VectorXd& residual, bool per_dimension) {
  const double dim = static_cast<double>(residual.size());
  if (norm == NormKind::l1) {
    const double v = residual.lpNorm<1>();
    return per_dimension ? v / dim : v;
  }
  const double v = residual.norm();
  return per_dimension ? v / std::sqrt(dim) : v;
}

ErrorCurve truncation_error_curve(const TrajectoryRecord& trajectory,
                                  const std::vector<Eigen::VectorXd>& reference, NormKind norm,
                                  bool per_dimension) {
  const int n = trajectory.schedule.n_steps;
  if (trajectory.states.size() != static_cast<size_t>(n) + 1)
    throw std::invalid_argument("truncation_error_curve: trajectory has no states");
  if (reference.size() != static_cast<size_t>(n) + 1)
    throw std::invalid_argument("truncation_error_curve: reference length " +
                                std::to_string(reference.size()) + " does not match grid of " +
                                std::to_string(n + 1) + " points");
  ErrorCurve curve;
  curve.step_indices.reserve(static_cast<size_t>(n) + 1);
  curve.times.reserve(static_cast<size_t>(n) + 1);
  curve.values.reserve(static_cast<size_t>(n) + 1);
  for (int i = n; i >= 0; --i) {
    curve.step_indices.push_back(i);
    curve.times.push_back(trajectory.schedule.times[static_cast<size_t>(i)]);
    curve.values.push_back(
        state_distance(norm, trajectory.state(i) - reference[static_cast<size_t>(i)],
                       per_dimension));
  }
  return curve;
}

ErrorCurve average_error_curves(const std::vector<ErrorCurve>& curves) {
  if (curves.empty()) throw std::invalid_argument("average_error_curves: empty batch");
  ErrorCurve mean = curves.front();
  for (size_t c = 1; c < curves.size(); ++c) {
    const ErrorCurve& cur = curves[c];
    if (cur.step_indices != mean.step_indices || cur.times != mean.times)
      throw std::invalid_argument("average_error_curves: curves use different grids");
    for (size_t j = 0; j < mean.values.size(); ++j) mean.values[j] += cur.values[j];
  }
  const double scale = 1.0 / static_cast<double>(curves.size());
  for (double& v : mean.values) v *= scale;
  return mean;
}

GrowthProfile error_growth_profile(const ErrorCurve& curve) {
  const int n = static_cast<int>(curve.values.size()) - 1;
  if (n < 3)
    throw std::invalid_argument("error_growth_profile: need at least 3 steps, got " +
                                std::to_string(n));
  GrowthProfile profile;
  profile.positions = n;
  double best = -std::numeric_limits<double>::infinity();
  for (int j = 1; j <= n; ++j) {
    const double inc = curve.values[static_cast<size_t>(j)] - curve.values[static_cast<size_t>(j) - 1];
    if (inc > best) {
      best = inc;
      profile.argmax_position = j;
      profile.argmax_step_index = curve.step_indices[static_cast<size_t>(j)];
    }
  }
  const int third = n / 3;
  auto mean_over = [&](int first, int last) {  // positions, inclusive
    double sum = 0.0;
    for (int j = first; j <= last; ++j)
      sum += curve.values[static_cast<size_t>(j)] - curve.values[static_cast<size_t>(j) - 1];
    return sum / static_cast<double>(last - first + 1);
  };
  profile.head_mean = mean_over(1, third);
  profile.mid_mean = mean_over(third + 1, n - third);
  profile.tail_mean = mean_over(n - third + 1, n);
  return profile;
}

double final_state_error(const std::vector<Eigen::VectorXd>& finals,
                         const std::vector<Eigen::VectorXd>& references, NormKind norm,
                         bool per_dimension) {
  if (finals.empty() || finals.size() != references.size())
    throw std::invalid_argument("final_state_error: batch sizes differ or are empty");
  double sum = 0.0;
  for (size_t s = 0; s < finals.size(); ++s) {
    const Eigen::VectorXd residual = finals[s] - references[s];
    if (norm == NormKind::l2) {
      LossOptions squared{LossKind::l2, 0.0, per_dimension};
      sum += loss_value(squared, residual);
    } else {
      LossOptions absolute{LossKind::l1, 0.0, per_dimension};
      sum += loss_value(absolute, residual);
    }
  }
  return sum / static_cast<double>(finals.size());
}

}  // namespace pas
