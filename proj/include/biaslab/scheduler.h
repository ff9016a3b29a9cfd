#pragma once

#include <cstddef>
#include <string>

namespace biaslab {

enum class ScheduleKind { kMultiplicative, kInverseLinear };

/// Piecewise temperature schedule clamped to [t_min, t_max].
struct TemperatureSchedule {
  ScheduleKind kind = ScheduleKind::kMultiplicative;
  double start = 1.0;
  double scale = 5.0;             // multiplicative factor, > 1
  std::size_t interval_epochs = 5;
  double t_min = 1.0;
  double t_max = 1000.0;
  std::size_t horizon_epochs = 20;  // inverse-linear: epochs from t_max down to t_min

  void validate() const;
};

/// multiplicative: clamp(start * scale^floor(epoch / interval)).
/// inverse-linear: t_max at epoch 0 falling linearly to t_min at the horizon.
double temperature_at(const TemperatureSchedule& schedule, std::size_t epoch);

ScheduleKind parse_schedule_kind(const std::string& name);
std::string to_string(ScheduleKind kind);

}  // namespace biaslab
