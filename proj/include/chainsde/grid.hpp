#pragma once

#include <cmath>
#include <cstddef>

#include "chainsde/errors.hpp"

namespace chainsde {

// Uniform time grid t0, t0+dt, ..., t0+n_steps*dt.
struct TimeGrid {
  double t0 = 0.0;
  double dt = 1e-3;
  int n_steps = 1000;

  TimeGrid() = default;
  TimeGrid(double t0_, double dt_, int n_steps_)
      : t0(t0_), dt(dt_), n_steps(n_steps_) {
    if (dt <= 0.0 || n_steps < 1)
      throw Error(ErrorCode::InvalidArgument, "TimeGrid requires dt > 0 and n_steps >= 1");
  }

  double time(int step) const { return t0 + dt * step; }
  double final_time() const { return time(n_steps); }
  int n_points() const { return n_steps + 1; }

  // Index of the grid point at time t; t must lie on the grid.
  int step_of(double t) const {
    double s = (t - t0) / dt;
    int m = static_cast<int>(std::lround(s));
    if (m < 0 || m > n_steps || std::abs(s - m) > 1e-9 * (std::abs(s) + 1.0))
      throw Error(ErrorCode::GridMismatch, "time not on grid");
    return m;
  }

  bool operator==(const TimeGrid& o) const {
    return t0 == o.t0 && dt == o.dt && n_steps == o.n_steps;
  }
};

}  // namespace chainsde
