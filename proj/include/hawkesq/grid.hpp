#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "errors.hpp"

namespace hawkesq {

using cplx = std::complex<double>;

// Uniform grid 0 = u_0 < ... < u_n = horizon.
class TimeGrid {
 public:
  TimeGrid() = default;
  TimeGrid(double horizon, std::size_t intervals) : horizon_(horizon), intervals_(intervals) {
    if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw config_error("grid horizon must be finite and >= 0");
    if (intervals == 0) throw config_error("grid needs at least one interval");
  }

  // Grid with step as close as possible to (and not above) `step`.
  static TimeGrid with_step(double horizon, double step) {
    if (!(step > 0.0)) throw config_error("grid step must be > 0");
    const double n = std::ceil(horizon / step - 1e-9);
    return TimeGrid(horizon, static_cast<std::size_t>(std::max(1.0, n)));
  }

  double horizon() const { return horizon_; }
  std::size_t intervals() const { return intervals_; }
  std::size_t size() const { return intervals_ + 1; }
  double step() const { return horizon_ / static_cast<double>(intervals_); }
  double point(std::size_t i) const { return horizon_ * static_cast<double>(i) / static_cast<double>(intervals_); }

  bool operator==(const TimeGrid& o) const { return horizon_ == o.horizon_ && intervals_ == o.intervals_; }
  bool operator!=(const TimeGrid& o) const { return !(*this == o); }

 private:
  double horizon_ = 0.0;
  std::size_t intervals_ = 1;
};

template <class T>
struct GridFunction {
  TimeGrid grid;
  std::vector<T> values;

  GridFunction() = default;
  GridFunction(const TimeGrid& g, T fill) : grid(g), values(g.size(), fill) {}
};

// Composite trapezoid rule over the whole grid.
template <class T>
T trapezoid(const TimeGrid& grid, const std::vector<T>& v) {
  if (v.size() != grid.size()) throw precondition_error("sample count does not match grid");
  T acc = 0.5 * (v.front() + v.back());
  for (std::size_t i = 1; i + 1 < v.size(); ++i) acc += v[i];
  return acc * grid.step();
}

// Running trapezoid integral: out[i] = integral over [0, u_i].
template <class T>
std::vector<T> cumulative_trapezoid(const TimeGrid& grid, const std::vector<T>& v) {
  if (v.size() != grid.size()) throw precondition_error("sample count does not match grid");
  std::vector<T> out(v.size());
  out[0] = T(0);
  const double h = grid.step();
  for (std::size_t i = 1; i < v.size(); ++i) out[i] = out[i - 1] + 0.5 * h * (v[i - 1] + v[i]);
  return out;
}

}  // namespace hawkesq
