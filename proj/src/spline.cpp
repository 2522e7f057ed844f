#include "insat/spline.hpp"

#include <algorithm>
#include <cmath>

namespace insat {

ControlSpline ControlSpline::constant(int knots, double spacing, const Vector& value, Interpolation kind) {
  require(knots >= 2, "control spline needs at least 2 knots");
  ControlSpline s;
  s.interpolation = kind;
  for (int k = 0; k < knots; ++k) {
    s.knot_times.push_back(static_cast<double>(k) * spacing);
    s.knot_values.push_back(value);
  }
  return s;
}

ControlSpline::Segment ControlSpline::locate(double t) const {
  const int last = knot_count() - 1;
  if (t <= knot_times.front()) return {0, 0.0};
  if (t >= knot_times.back()) return {last - 1, 1.0};
  const auto it = std::upper_bound(knot_times.begin(), knot_times.end(), t);
  const int i = static_cast<int>(it - knot_times.begin()) - 1;
  return {i, (t - knot_times[i]) / (knot_times[i + 1] - knot_times[i])};
}

namespace {

// Fritsch-Carlson slope at knot k for one component.
double monotone_slope(const ControlSpline& sp, int k, int d) {
  const int last = sp.knot_count() - 1;
  auto secant = [&](int i) {
    return (sp.knot_values[i + 1][d] - sp.knot_values[i][d]) / (sp.knot_times[i + 1] - sp.knot_times[i]);
  };
  if (k == 0) return secant(0);
  if (k == last) return secant(last - 1);
  const double a = secant(k - 1), b = secant(k);
  if (a * b <= 0.0) return 0.0;
  return 2.0 * a * b / (a + b);
}

}  // namespace

Vector ControlSpline::evaluate(double t) const {
  const Segment seg = locate(t);
  const Vector& v0 = knot_values[seg.index];
  const Vector& v1 = knot_values[seg.index + 1];
  switch (interpolation) {
    case Interpolation::ZeroOrder:
      return seg.s >= 1.0 ? v1 : v0;
    case Interpolation::Linear:
      // rounding may leave the blend an ulp outside its knots
      return ((1.0 - seg.s) * v0 + seg.s * v1).cwiseMax(v0.cwiseMin(v1)).cwiseMin(v0.cwiseMax(v1));
    case Interpolation::Cubic: {
      const double h = knot_times[seg.index + 1] - knot_times[seg.index];
      const double s = seg.s, s2 = s * s, s3 = s2 * s;
      const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s, h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
      Vector out(v0.size());
      for (Eigen::Index d = 0; d < v0.size(); ++d) {
        const double m0 = monotone_slope(*this, seg.index, static_cast<int>(d));
        const double m1 = monotone_slope(*this, seg.index + 1, static_cast<int>(d));
        out[d] = h00 * v0[d] + h10 * h * m0 + h01 * v1[d] + h11 * h * m1;
      }
      return out;
    }
  }
  return v0;
}

void ControlSpline::clamp(const Vector& limit) {
  for (Vector& v : knot_values) v = v.cwiseMax(-limit).cwiseMin(limit);
}

bool ControlSpline::within(const Vector& limit) const {
  return std::all_of(knot_values.begin(), knot_values.end(),
                     [&](const Vector& v) { return (v.cwiseAbs().array() <= limit.array()).all(); });
}

void ControlSpline::validate() const {
  require(knot_count() >= 2, "control spline needs at least 2 knots");
  require(knot_values.size() == knot_times.size(), "control spline: knot times and values differ in count");
  for (int k = 0; k + 1 < knot_count(); ++k)
    require(knot_times[k + 1] > knot_times[k], "control spline: knot times must increase strictly");
  for (const Vector& v : knot_values) {
    require(v.size() == knot_values.front().size(), "control spline: knot dimension mismatch");
    require(v.allFinite(), "control spline: non-finite knot value");
  }
}

}  // namespace insat
