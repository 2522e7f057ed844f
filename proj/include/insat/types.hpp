#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace insat {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Vec2 = Eigen::Vector2d;

/// Raised when a caller breaks a documented precondition (sizes, signs, finiteness).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised by the integrator when the state leaves the configured blow-up bound.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Full planning state x = [q, qdot].
struct JointState {
  Vector q;
  Vector qdot;

  JointState() = default;
  JointState(Vector q_, Vector qdot_) : q(std::move(q_)), qdot(std::move(qdot_)) {}

  static JointState at_rest(const Vector& q) { return {q, Vector::Zero(q.size())}; }

  int dof() const { return static_cast<int>(q.size()); }
  Vector stacked() const;
  static JointState from_stacked(const Vector& x);
  bool finite() const { return q.allFinite() && qdot.allFinite(); }
};

inline Vector JointState::stacked() const {
  Vector x(q.size() + qdot.size());
  x << q, qdot;
  return x;
}

inline JointState JointState::from_stacked(const Vector& x) {
  const auto n = x.size() / 2;
  return {x.head(n), x.tail(n)};
}

/// Rotate a planar vector by +90 degrees.
inline Vec2 perp(const Vec2& v) { return {-v.y(), v.x()}; }

inline double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

inline void require(bool condition, const std::string& what) {
  if (!condition) throw ContractViolation(what);
}

}  // namespace insat
