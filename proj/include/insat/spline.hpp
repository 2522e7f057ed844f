#pragma once

#include <vector>

#include "insat/types.hpp"

namespace insat {

enum class Interpolation { ZeroOrder, Linear, Cubic };

/// Piecewise control trajectory through knots. The cubic variant is monotone
/// (Fritsch-Carlson), so every interpolant stays inside the range of its knots.
struct ControlSpline {
  std::vector<double> knot_times;
  std::vector<Vector> knot_values;
  Interpolation interpolation = Interpolation::Linear;

  static ControlSpline constant(int knots, double spacing, const Vector& value,
                                Interpolation kind = Interpolation::Linear);

  int knot_count() const { return static_cast<int>(knot_times.size()); }
  int dim() const { return knot_values.empty() ? 0 : static_cast<int>(knot_values.front().size()); }
  double duration() const { return knot_times.back() - knot_times.front(); }

  /// Interval containing t (clamped to the knot range) and the local fraction in [0, 1].
  struct Segment {
    int index;
    double s;
  };
  Segment locate(double t) const;

  Vector evaluate(double t) const;
  void clamp(const Vector& limit);
  bool within(const Vector& limit) const;
  void validate() const;
};

}  // namespace insat
