#pragma once

#include "insat/contact_model.hpp"

namespace insat {

/// How each residual enters the cost. Euclidean is the smoothed norm
/// sqrt(|r|^2 + eps^2) - eps; Quadratic is |r|^2 / 2 (used for LQR checks).
enum class NormKind { Euclidean, Quadratic };

struct CostWeights {
  double w1 = 10.0;   // terminal joint error
  double w2 = 0.01;   // control effort, per step
  double w3 = 0.05;   // joint velocity, per step
  double w4 = 0.05;   // |k|
  double w5 = 0.05;   // |b|
  double w6 = 0.5;    // |mu|
  double R = 0.0;     // risk sensitivity
  NormKind norm = NormKind::Euclidean;
  double epsilon = 1e-8;

  void validate() const;
};

double residual_norm(const Vector& r, const CostWeights& w);

/// w2 |u| + w3 |qdot| for one step.
double running_cost(const JointState& x, const Vector& u, const CostWeights& w);

/// w1 |q - q_target| + w4 |k| + w5 |b| + w6 |mu|, applied once at the end.
double terminal_cost(const JointState& x, const Vector& q_target, const ContactParams& p, const CostWeights& w);

/// (exp(R l) - 1) / R, identity for R = 0. Saturates (and flags) when R l > 500.
double risk_transform(double l, double R, bool* saturated = nullptr);

/// d risk / d l = exp(R l), saturated like risk_transform.
double risk_slope(double l, double R);

/// Value, gradient and Gauss-Newton Hessian of the risk-transformed cost with
/// respect to (x, u). Blocks follow x = [q, qdot]; u blocks are empty for the terminal cost.
struct CostDerivatives {
  double c = 0.0;
  Vector cx, cu;
  Matrix cxx, cuu, cux;
};

CostDerivatives running_cost_derivatives(const JointState& x, const Vector& u, const CostWeights& w);
CostDerivatives terminal_cost_derivatives(const JointState& x, const Vector& q_target, const ContactParams& p,
                                          const CostWeights& w);

}  // namespace insat
