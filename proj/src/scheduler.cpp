#include "biaslab/scheduler.h"

#include <algorithm>
#include <cmath>

#include "biaslab/error.h"

namespace biaslab {

void TemperatureSchedule::validate() const {
  if (!(t_min >= 1.0 && t_max <= 1000.0 && t_min <= t_max)) {
    throw InvalidParameter("temperature bounds must satisfy 1 <= t_min <= t_max <= 1000");
  }
  if (kind == ScheduleKind::kMultiplicative) {
    if (!(scale > 1.0) || !std::isfinite(scale)) throw InvalidParameter("temperature scale must be > 1");
    if (!(start > 0.0) || !std::isfinite(start)) throw InvalidParameter("start temperature must be positive");
    if (interval_epochs == 0) throw InvalidParameter("temperature interval must be at least 1 epoch");
  } else if (horizon_epochs == 0) {
    throw InvalidParameter("inverse-linear horizon must be at least 1 epoch");
  }
}

double temperature_at(const TemperatureSchedule& schedule, std::size_t epoch) {
  const double lo = std::max(1.0, schedule.t_min);
  const double hi = std::max(lo, std::min(1000.0, schedule.t_max));
  double t = lo;
  if (schedule.kind == ScheduleKind::kMultiplicative) {
    const std::size_t interval = std::max<std::size_t>(1, schedule.interval_epochs);
    const auto steps = static_cast<double>(epoch / interval);
    t = schedule.start * std::pow(schedule.scale, steps);
  } else {
    const std::size_t horizon = std::max<std::size_t>(1, schedule.horizon_epochs);
    const double frac =
        static_cast<double>(std::min(epoch, horizon)) / static_cast<double>(horizon);
    t = hi - (hi - lo) * frac;
  }
  if (std::isnan(t)) t = lo;
  return std::clamp(t, lo, hi);
}

ScheduleKind parse_schedule_kind(const std::string& name) {
  if (name == "multiplicative") return ScheduleKind::kMultiplicative;
  if (name == "inverse-linear") return ScheduleKind::kInverseLinear;
  throw ConfigError("unknown temperature schedule kind '" + name + "'");
}

std::string to_string(ScheduleKind kind) {
  return kind == ScheduleKind::kMultiplicative ? "multiplicative" : "inverse-linear";
}

}  // namespace biaslab
