#include "insat/box_qp.hpp"

#include <cmath>

namespace insat {
namespace {

Vector select(const Vector& v, const std::vector<bool>& mask, bool value) {
  Vector out(v.size());
  int n = 0;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (mask[i] == value) out[n++] = v[i];
  return out.head(n);
}

Matrix select(const Matrix& m, const std::vector<bool>& rows, const std::vector<bool>& cols) {
  std::vector<Eigen::Index> r, c;
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (rows[i]) r.push_back(static_cast<Eigen::Index>(i));
  for (std::size_t i = 0; i < cols.size(); ++i)
    if (cols[i]) c.push_back(static_cast<Eigen::Index>(i));
  return m(r, c);
}

double quadratic(const Matrix& H, const Vector& g, const Vector& x) { return x.dot(g) + 0.5 * x.dot(H * x); }

// Active set and free-block factor at the returned point.
BoxQpResult& finish(BoxQpResult& r, BoxQpResult::Status status, const Matrix& H, const Vector& g,
                    const Vector& lower, const Vector& upper) {
  const Vector grad = g + H * r.x;
  for (Eigen::Index i = 0; i < r.x.size(); ++i)
    r.free[i] = !((r.x[i] == lower[i] && grad[i] > 0.0) || (r.x[i] == upper[i] && grad[i] < 0.0));
  if (r.free_count() > 0) {
    r.free_factor.compute(select(H, r.free, r.free));
    if (r.free_factor.info() != Eigen::Success) status = BoxQpResult::Status::Failed;
  }
  r.status = status;
  return r;
}

}  // namespace

int BoxQpResult::free_count() const {
  int n = 0;
  for (bool f : free) n += f ? 1 : 0;
  return n;
}

BoxQpResult box_qp(const Matrix& H, const Vector& g, const Vector& lower, const Vector& upper,
                   const Vector& x0, int max_iterations) {
  const auto n = g.size();
  require(H.rows() == n && H.cols() == n && lower.size() == n && upper.size() == n && x0.size() == n,
          "box_qp: dimension mismatch");
  require((lower.array() <= upper.array()).all(), "box_qp: lower bound above upper bound");

  BoxQpResult r;
  r.x = x0.cwiseMax(lower).cwiseMin(upper);
  r.free.assign(n, true);
  std::vector<bool> clamped(n, false), old_clamped(n, false);
  double value = quadratic(H, g, r.x);

  for (int iter = 0; iter < max_iterations; ++iter) {
    r.iterations = iter + 1;
    const Vector grad = g + H * r.x;
    bool any_free = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      clamped[i] = (r.x[i] == lower[i] && grad[i] > 0.0) || (r.x[i] == upper[i] && grad[i] < 0.0);
      r.free[i] = !clamped[i];
      any_free = any_free || r.free[i];
    }
    if (!any_free) return finish(r, BoxQpResult::Status::AllClamped, H, g, lower, upper);
    if (iter == 0 || clamped != old_clamped) {
      r.free_factor.compute(select(H, r.free, r.free));
      if (r.free_factor.info() != Eigen::Success) {
        r.status = BoxQpResult::Status::Failed;
        return r;
      }
    }
    old_clamped = clamped;

    const Vector grad_free = select(grad, r.free, true);
    if (grad_free.norm() < 1e-8) return finish(r, BoxQpResult::Status::SmallGradient, H, g, lower, upper);

    // Newton step on the free set, clamped components held fixed
    const Vector rhs = select(g, r.free, true) + select(H, r.free, clamped) * select(r.x, r.free, false);
    const Vector xf_new = -r.free_factor.solve(rhs);
    Vector dir = Vector::Zero(n);
    for (Eigen::Index i = 0, k = 0; i < n; ++i)
      if (r.free[i]) dir[i] = xf_new[k++] - r.x[i];

    const double sdotg = dir.dot(grad);
    if (sdotg >= 0.0) return finish(r, BoxQpResult::Status::NoDescent, H, g, lower, upper);

    double step = 1.0, candidate_value = 0.0;
    Vector candidate;
    while (true) {
      candidate = (r.x + step * dir).cwiseMax(lower).cwiseMin(upper);
      candidate_value = quadratic(H, g, candidate);
      if ((candidate_value - value) / (step * sdotg) >= 0.1) break;
      step *= 0.6;
      if (step < 1e-22) return finish(r, BoxQpResult::Status::NoDescent, H, g, lower, upper);
    }
    const double improvement = value - candidate_value;
    r.x = candidate;
    value = candidate_value;
    if (improvement < 1e-12 * std::max(1.0, std::abs(value)))
      return finish(r, BoxQpResult::Status::SmallImprovement, H, g, lower, upper);
  }
  return finish(r, BoxQpResult::Status::MaxIterations, H, g, lower, upper);
}

}  // namespace insat
