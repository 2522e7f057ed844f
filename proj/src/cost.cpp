#include "insat/cost.hpp"

#include <cmath>

namespace insat {
namespace {

constexpr double kRiskCap = 500.0;

// Gradient factor g (so that d|r|/dr = g^T) and GN curvature P of one residual norm.
struct NormLocal {
  double value;
  Vector g;
  Matrix P;
};

NormLocal norm_local(const Vector& r, const CostWeights& w) {
  const auto n = r.size();
  if (w.norm == NormKind::Quadratic) return {0.5 * r.squaredNorm(), r, Matrix::Identity(n, n)};
  const double s = std::sqrt(r.squaredNorm() + w.epsilon * w.epsilon);
  Matrix P = Matrix::Identity(n, n) / s - (r * r.transpose()) / (s * s * s);
  return {s - w.epsilon, r / s, std::move(P)};
}

// Risk transform of l with gradient l_z and GN Hessian l_zz over stacked z.
void apply_risk(double l, const Vector& lz, const Matrix& lzz, double R, double& c, Vector& cz, Matrix& czz) {
  c = risk_transform(l, R);
  const double slope = risk_slope(l, R);
  cz = slope * lz;
  czz = slope * (lzz + R * lz * lz.transpose());
}

}  // namespace

void CostWeights::validate() const {
  for (double v : {w1, w2, w3, w4, w5, w6}) require(v >= 0.0 && std::isfinite(v), "weights: w1..w6 must be >= 0");
  require(w1 > 0.0 || w2 > 0.0 || w3 > 0.0, "weights: at least one of w1, w2, w3 must be positive");
  require(std::isfinite(R), "weights.R must be finite");
  require(epsilon > 0.0, "weights.epsilon must be positive");
}

double residual_norm(const Vector& r, const CostWeights& w) {
  if (w.norm == NormKind::Quadratic) return 0.5 * r.squaredNorm();
  return std::sqrt(r.squaredNorm() + w.epsilon * w.epsilon) - w.epsilon;
}

double running_cost(const JointState& x, const Vector& u, const CostWeights& w) {
  return w.w2 * residual_norm(u, w) + w.w3 * residual_norm(x.qdot, w);
}

double terminal_cost(const JointState& x, const Vector& q_target, const ContactParams& p, const CostWeights& w) {
  double l = w.w1 * residual_norm(x.q - q_target, w);
  if (p.pair_count() > 0) l += w.w4 * residual_norm(p.k, w) + w.w5 * residual_norm(p.b, w) + w.w6 * residual_norm(p.mu, w);
  return l;
}

double risk_transform(double l, double R, bool* saturated) {
  if (saturated) *saturated = false;
  if (std::abs(R) < 1e-12) return l;
  if (R * l > kRiskCap) {
    if (saturated) *saturated = true;
    // exp(cap) / R, evaluated through logs
    return std::exp(kRiskCap - std::log(R));
  }
  return std::expm1(R * l) / R;
}

double risk_slope(double l, double R) {
  if (std::abs(R) < 1e-12) return 1.0;
  return std::exp(std::min(R * l, kRiskCap));
}

CostDerivatives running_cost_derivatives(const JointState& x, const Vector& u, const CostWeights& w) {
  const int n = x.dof();
  const int nz = 3 * n;  // [q, qdot, u]
  Vector lz = Vector::Zero(nz);
  Matrix lzz = Matrix::Zero(nz, nz);
  const NormLocal ru = norm_local(u, w);
  const NormLocal rv = norm_local(x.qdot, w);
  const double l = w.w2 * ru.value + w.w3 * rv.value;
  lz.segment(2 * n, n) = w.w2 * ru.g;
  lz.segment(n, n) = w.w3 * rv.g;
  lzz.block(2 * n, 2 * n, n, n) = w.w2 * ru.P;
  lzz.block(n, n, n, n) = w.w3 * rv.P;

  CostDerivatives d;
  Vector cz;
  Matrix czz;
  apply_risk(l, lz, lzz, w.R, d.c, cz, czz);
  d.cx = cz.head(2 * n);
  d.cu = cz.tail(n);
  d.cxx = czz.topLeftCorner(2 * n, 2 * n);
  d.cuu = czz.bottomRightCorner(n, n);
  d.cux = czz.bottomLeftCorner(n, 2 * n);
  return d;
}

CostDerivatives terminal_cost_derivatives(const JointState& x, const Vector& q_target, const ContactParams& p,
                                          const CostWeights& w) {
  const int n = x.dof();
  const NormLocal rq = norm_local(x.q - q_target, w);
  Vector lz = Vector::Zero(2 * n);
  Matrix lzz = Matrix::Zero(2 * n, 2 * n);
  lz.head(n) = w.w1 * rq.g;
  lzz.topLeftCorner(n, n) = w.w1 * rq.P;
  const double l = terminal_cost(x, q_target, p, w);

  CostDerivatives d;
  apply_risk(l, lz, lzz, w.R, d.c, d.cx, d.cxx);
  d.cu = Vector::Zero(0);
  d.cuu = Matrix::Zero(0, 0);
  d.cux = Matrix::Zero(0, 2 * n);
  return d;
}

}  // namespace insat
