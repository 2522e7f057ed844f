#include "insat/trajopt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "insat/box_qp.hpp"

namespace insat {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Weight of the knots on either side of a sample, matching ControlSpline::evaluate.
std::pair<double, double> knot_weights(const ControlSpline& s, double t) {
  const ControlSpline::Segment seg = s.locate(t);
  if (s.interpolation == Interpolation::ZeroOrder) return seg.s >= 1.0 ? std::pair{0.0, 1.0} : std::pair{1.0, 0.0};
  return {1.0 - seg.s, seg.s};
}

std::vector<int> steps_of(const ControlSpline& s, double dt) {
  std::vector<int> out;
  for (double t : s.knot_times) {
    const auto i = static_cast<int>(std::llround(t / dt));
    require(step_time(i, dt) == t, "trajopt: knot times must lie on step boundaries");
    out.push_back(i);
  }
  for (std::size_t k = 1; k < out.size(); ++k) require(out[k] > out[k - 1], "trajopt: knots must span >= 1 step");
  return out;
}

// Linearized segment from knot k to knot k+1 over y = [x_k, v_k, w_k] (v: knot k, w: knot k+1).
struct Stage {
  Matrix Fz;  // d z_{k+1} / d z_k with z = [x, v]
  Matrix Fw;  // d z_{k+1} / d w_k
  Vector ly;
  Matrix lyy;
};

struct Policy {
  std::vector<Vector> k;  // one per stage, plus k_pre for the first knot
  std::vector<Matrix> K;
  Vector k_pre;
  double dv1 = 0.0, dv2 = 0.0;  // expected change: alpha dv1 + alpha^2 dv2
};

}  // namespace

int SolveSettings::steps() const { return static_cast<int>(std::llround(horizon / dt)); }

void SolveSettings::validate() const {
  require(dt > 0.0, "settings.dt must be positive");
  require(horizon > 0.0, "settings.horizon must be positive");
  require(steps() >= 1, "settings: horizon shorter than one step");
  require(knots >= 2 && knots <= steps() + 1, "settings.knots must be in [2, steps + 1]");
  require(alpha_min > 0.0 && alpha_min < 1.0, "settings.alpha_min must be in (0, 1)");
  require(max_iterations >= 0, "settings.max_iterations must be >= 0");
  require(reg_init >= 0.0 && reg_increase > 1.0 && reg_decrease > 0.0 && reg_decrease < 1.0,
          "settings: regularization factors out of range");
  require(tolerance >= 0.0, "settings.tolerance must be >= 0");
  require(k_max >= 0.0 && b_max >= 0.0 && mu_max >= 0.0, "settings: contact parameter bounds must be >= 0");
  require(fd_step > 0.0, "settings.fd_step must be positive");
}

bool Target::reached(const Vector& q_final) const {
  return (q_final - center).cwiseAbs().maxCoeff() < half_width;
}

std::vector<int> knot_steps(int steps, int knots) {
  require(knots >= 2 && steps >= knots - 1, "knot_steps: need at least one step per segment");
  std::vector<int> out(knots);
  for (int k = 0; k < knots; ++k)
    out[k] = static_cast<int>(std::llround(static_cast<double>(k) * steps / (knots - 1)));
  return out;
}

ControlSpline concatenate(const ControlSpline& prefix, const ControlSpline& suffix, double dt) {
  const std::vector<int> a = steps_of(prefix, dt), b = steps_of(suffix, dt);
  ControlSpline out = prefix;
  for (std::size_t k = 1; k < b.size(); ++k) {
    out.knot_times.push_back(step_time(a.back() + b[k] - b.front(), dt));
    out.knot_values.push_back(suffix.knot_values[k]);
  }
  return out;
}

TrajectoryOptimizer::TrajectoryOptimizer(ArmModel model, World world, CostWeights weights, SolveSettings settings,
                                         ContactConstants constants)
    : model_(std::move(model)),
      world_(std::move(world)),
      weights_(weights),
      settings_(settings),
      constants_(constants) {
  model_.validate();
  world_.validate(model_);
  weights_.validate();
  settings_.validate();
  constants_.validate();
}

double TrajectoryOptimizer::total_cost(const Trajectory& traj, const Vector& q_target) const {
  double J = 0.0;
  for (int i = 0; i < traj.steps(); ++i)
    J += traj.dt * risk_transform(running_cost(traj.states[i], traj.control_at(i), weights_), weights_.R);
  return J + risk_transform(terminal_cost(traj.terminal_state(), q_target, traj.contact_params, weights_), weights_.R);
}

Trajectory TrajectoryOptimizer::simulate(const JointState& x0, const ControlSpline& controls,
                                         const ContactParams& params, const Target& target) const {
  const int steps = steps_of(controls, settings_.dt).back();
  Trajectory t = rollout(model_, world_, params, x0, controls, settings_.dt, steps);
  t.total_cost = total_cost(t, target.q);
  t.converged = target.reached(t.terminal_state().q);
  return t;
}

ControlSpline TrajectoryOptimizer::initial_guess(const JointState& start, const Target& target) const {
  const int T = settings_.steps();
  const std::vector<int> I = knot_steps(T, settings_.knots);
  ControlSpline s;
  s.interpolation = settings_.interpolation;
  for (int i : I) {
    const double f = static_cast<double>(i) / T;
    const Vector q = (1.0 - f) * start.q + f * target.q;
    s.knot_times.push_back(step_time(i, settings_.dt));
    s.knot_values.push_back(gravity_torque(model_, q));
  }
  s.clamp(model_.torque_limits);
  return s;
}

namespace {

class Solver {
 public:
  Solver(const TrajectoryOptimizer& opt, const JointState& x0, const Target& target, ControlSpline spline,
         ContactParams params, SolveStats& stats)
      : opt_(opt),
        m_(opt.model()),
        w_(opt.world()),
        cw_(opt.weights()),
        s_(opt.settings()),
        x0_(x0),
        target_(target),
        spline_(std::move(spline)),
        params_(std::move(params)),
        stats_(stats) {
    I_ = steps_of(spline_, s_.dt);
    n_ = m_.dof();
    lim_ = m_.torque_limits;
    spline_.clamp(lim_);
    reg_ = s_.reg_init;
  }

  Trajectory run() {
    cost_ = evaluate(spline_, params_, &states_);
    if (!std::isfinite(cost_)) throw DivergenceError("solve: initial rollout diverged");
    stats_.cost_history.push_back(cost_);
    for (int outer = 0; outer < std::max(1, s_.outer_iterations); ++outer) {
      ilqr();
      if (outer + 1 >= s_.outer_iterations || !tune_contact_params()) break;
    }
    Trajectory t = opt_.simulate(x0_, spline_, params_, target_);
    ++stats_.rollouts;
    return t;
  }

 private:
  int stages() const { return static_cast<int>(I_.size()) - 1; }

  // Rolls out and returns J_total; states are stored when requested. Divergence costs infinity.
  double evaluate(const ControlSpline& spline, const ContactParams& params, std::vector<JointState>* states) {
    ++stats_.rollouts;
    const int T = I_.back();
    JointState x = x0_;
    if (states) {
      states->clear();
      states->reserve(T + 1);
      states->push_back(x);
    }
    double J = 0.0;
    try {
      for (int i = 0; i < T; ++i) {
        const Vector u = spline.evaluate(step_time(i, s_.dt));
        J += s_.dt * risk_transform(running_cost(x, u, cw_), cw_.R);
        x = step(m_, w_, params, x, u, s_.dt);
        if (states) states->push_back(x);
      }
    } catch (const DivergenceError&) {
      return kInf;
    }
    return J + risk_transform(terminal_cost(x, target_.q, params, cw_), cw_.R);
  }

  // Forward-difference Jacobians of one integrator step.
  void step_jacobians(const JointState& x, const Vector& u, const JointState& next, Matrix& A, Matrix& B) const {
    const Vector x_s = x.stacked(), f0 = next.stacked();
    const int nx = 2 * n_;
    A.resize(nx, nx);
    B.resize(nx, n_);
    for (int j = 0; j < nx; ++j) {
      Vector xp = x_s;
      const double h = s_.fd_step * std::max(1.0, std::abs(xp[j]));
      xp[j] += h;
      A.col(j) = (step(m_, w_, params_, JointState::from_stacked(xp), u, s_.dt).stacked() - f0) / h;
    }
    for (int j = 0; j < n_; ++j) {
      Vector up = u;
      // perturb towards the interior so the step never saturates
      const double h = (u[j] > 0.0 ? -1.0 : 1.0) * s_.fd_step * std::max(1.0, std::abs(u[j]));
      up[j] += h;
      B.col(j) = (step(m_, w_, params_, x, up, s_.dt).stacked() - f0) / h;
    }
  }

  std::vector<Stage> linearize() const {
    const int nx = 2 * n_, ny = 4 * n_;
    std::vector<Stage> out(stages());
    Matrix A, B;
    for (int k = 0; k < stages(); ++k) {
      Matrix Phi = Matrix::Identity(nx, nx), Psi = Matrix::Zero(nx, n_), Lam = Matrix::Zero(nx, n_);
      Vector ly = Vector::Zero(ny);
      Matrix lyy = Matrix::Zero(ny, ny);
      Matrix E = Matrix::Zero(3 * n_, ny);  // d [x_i, u_i] / d y
      for (int i = I_[k]; i < I_[k + 1]; ++i) {
        const double t = step_time(i, s_.dt);
        const Vector u = spline_.evaluate(t);
        const auto [a, b] = knot_weights(spline_, t);
        E.setZero();
        E.topLeftCorner(nx, nx) = Phi;
        E.block(0, nx, nx, n_) = Psi;
        E.block(0, nx + n_, nx, n_) = Lam;
        E.block(nx, nx, n_, n_).diagonal().setConstant(a);
        E.block(nx, nx + n_, n_, n_).diagonal().setConstant(b);
        const CostDerivatives d = running_cost_derivatives(states_[i], u, cw_);
        Vector g(3 * n_);
        g << d.cx, d.cu;
        Matrix H(3 * n_, 3 * n_);
        H.topLeftCorner(nx, nx) = d.cxx;
        H.bottomRightCorner(n_, n_) = d.cuu;
        H.bottomLeftCorner(n_, nx) = d.cux;
        H.topRightCorner(nx, n_) = d.cux.transpose();
        ly.noalias() += s_.dt * E.transpose() * g;
        lyy.noalias() += s_.dt * E.transpose() * H * E;

        step_jacobians(states_[i], u, states_[i + 1], A, B);
        Phi = A * Phi;
        Psi = A * Psi + a * B;
        Lam = A * Lam + b * B;
      }
      Stage& st = out[k];
      st.Fz = Matrix::Zero(3 * n_, 3 * n_);
      st.Fz.topLeftCorner(nx, nx) = Phi;
      st.Fz.topRightCorner(nx, n_) = Psi;
      st.Fw = Matrix::Zero(3 * n_, n_);
      st.Fw.topRows(nx) = Lam;
      st.Fw.bottomRows(n_).setIdentity();
      st.ly = std::move(ly);
      st.lyy = std::move(lyy);
    }
    return out;
  }

  bool backward(const std::vector<Stage>& stages_lin, Policy& p) const {
    const int nz = 3 * n_;
    const CostDerivatives term = terminal_cost_derivatives(states_.back(), target_.q, params_, cw_);
    Vector Vz = Vector::Zero(nz);
    Matrix Vzz = Matrix::Zero(nz, nz);
    Vz.head(2 * n_) = term.cx;
    Vzz.topLeftCorner(2 * n_, 2 * n_) = term.cxx;
    p.k.assign(stages(), Vector());
    p.K.assign(stages(), Matrix());
    p.dv1 = p.dv2 = 0.0;
    const Matrix reg = reg_ * Matrix::Identity(n_, n_);

    for (int k = stages() - 1; k >= 0; --k) {
      const Stage& st = stages_lin[k];
      const Vector Qz = st.ly.head(nz) + st.Fz.transpose() * Vz;
      const Vector Qw = st.ly.tail(n_) + st.Fw.transpose() * Vz;
      const Matrix VzzFz = Vzz * st.Fz, VzzFw = Vzz * st.Fw;
      const Matrix Qzz = st.lyy.topLeftCorner(nz, nz) + st.Fz.transpose() * VzzFz;
      const Matrix Qww = st.lyy.bottomRightCorner(n_, n_) + st.Fw.transpose() * VzzFw;
      const Matrix Qwz = st.lyy.bottomLeftCorner(n_, nz) + st.Fw.transpose() * VzzFz;

      const Vector& wbar = spline_.knot_values[k + 1];
      const Vector warm = previous_.k.empty() ? Vector::Zero(n_) : previous_.k[k];
      const BoxQpResult qp = box_qp(Qww + reg, Qw, -lim_ - wbar, lim_ - wbar, warm);
      if (!qp.ok()) return false;
      Matrix K = Matrix::Zero(n_, nz);
      if (qp.free_count() > 0) {
        std::vector<Eigen::Index> rows;
        for (int i = 0; i < n_; ++i)
          if (qp.free[i]) rows.push_back(i);
        const Matrix Kf = -qp.free_factor.solve(Qwz(rows, Eigen::indexing::all));
        K(rows, Eigen::indexing::all) = Kf;
      }
      const Vector& kk = qp.x;
      p.dv1 += kk.dot(Qw);
      p.dv2 += 0.5 * kk.dot(Qww * kk);
      Vz = Qz + K.transpose() * (Qww * kk) + K.transpose() * Qw + Qwz.transpose() * kk;
      Vzz = Qzz + K.transpose() * Qww * K + K.transpose() * Qwz + Qwz.transpose() * K;
      Vzz = 0.5 * (Vzz + Vzz.transpose()).eval();
      p.k[k] = kk;
      p.K[k] = std::move(K);
    }

    // the first knot is a free decision with the initial state fixed
    const Vector gv = Vz.tail(n_);
    const Matrix Hv = Vzz.bottomRightCorner(n_, n_);
    const Vector& v0 = spline_.knot_values[0];
    const Vector warm = previous_.k_pre.size() == n_ ? previous_.k_pre : Vector::Zero(n_);
    const BoxQpResult qp = box_qp(Hv + reg, gv, -lim_ - v0, lim_ - v0, warm);
    if (!qp.ok()) return false;
    p.k_pre = qp.x;
    p.dv1 += qp.x.dot(gv);
    p.dv2 += 0.5 * qp.x.dot(Hv * qp.x);
    return true;
  }

  // Closed-loop forward pass; returns the new spline and its cost.
  double forward(const Policy& p, double alpha, ControlSpline& out, std::vector<JointState>& states) {
    ++stats_.rollouts;
    out = spline_;
    out.knot_values[0] = (spline_.knot_values[0] + alpha * p.k_pre).cwiseMax(-lim_).cwiseMin(lim_);
    states.clear();
    states.reserve(I_.back() + 1);
    JointState x = x0_;
    states.push_back(x);
    double J = 0.0;
    Vector dz(3 * n_);
    try {
      for (int k = 0; k < stages(); ++k) {
        dz << x.q - states_[I_[k]].q, x.qdot - states_[I_[k]].qdot, out.knot_values[k] - spline_.knot_values[k];
        out.knot_values[k + 1] =
            (spline_.knot_values[k + 1] + alpha * p.k[k] + p.K[k] * dz).cwiseMax(-lim_).cwiseMin(lim_);
        for (int i = I_[k]; i < I_[k + 1]; ++i) {
          const Vector u = out.evaluate(step_time(i, s_.dt));
          J += s_.dt * risk_transform(running_cost(x, u, cw_), cw_.R);
          x = step(m_, w_, params_, x, u, s_.dt);
          states.push_back(x);
        }
      }
    } catch (const DivergenceError&) {
      return kInf;
    }
    return J + risk_transform(terminal_cost(x, target_.q, params_, cw_), cw_.R);
  }

  void ilqr() {
    for (int iter = 0; iter < s_.max_iterations; ++iter) {
      std::vector<Stage> lin;
      try {
        lin = linearize();
      } catch (const DivergenceError&) {
        return;
      }
      Policy p;
      bool accepted = false;
      while (!accepted) {
        if (!backward(lin, p)) {
          if (!raise_regularization()) return;
          continue;
        }
        if (-(p.dv1 + p.dv2) <= s_.tolerance * std::max(std::abs(cost_), 1e-12)) return;

        // every alpha on the grid is tried; the lowest cost wins, ties go to the larger step
        double best = kInf;
        ControlSpline best_spline, candidate;
        std::vector<JointState> best_states, candidate_states;
        for (double alpha = 1.0; alpha >= s_.alpha_min * (1.0 - 1e-12); alpha *= 0.5) {
          const double J = forward(p, alpha, candidate, candidate_states);
          if (J < best) {
            best = J;
            best_spline = candidate;
            best_states.swap(candidate_states);
          }
        }
        if (best < cost_) {
          const double decrease = cost_ - best;
          const double previous_cost = cost_;
          spline_ = std::move(best_spline);
          states_ = std::move(best_states);
          cost_ = best;
          previous_ = p;
          ++stats_.iterations;
          stats_.cost_history.push_back(cost_);
          reg_ *= s_.reg_decrease;
          if (reg_ < s_.reg_min) reg_ = 0.0;
          accepted = true;
          if (decrease <= s_.tolerance * std::abs(previous_cost)) return;
        } else if (!raise_regularization()) {
          return;
        }
      }
    }
  }

  bool raise_regularization() {
    reg_ = std::max(reg_ * s_.reg_increase, std::max(s_.reg_min, s_.reg_init));
    return reg_ <= s_.reg_max;
  }

  std::vector<int> active_pairs() const {
    std::vector<int> out;
    if (!w_.contact_enabled || params_.pair_count() == 0) return out;
    std::vector<double> gap(params_.pair_count(), kInf);
    for (const JointState& x : states_) {
      const std::vector<ContactQuery> q = query_contacts(m_, w_, x);
      for (std::size_t i = 0; i < q.size(); ++i) gap[i] = std::min(gap[i], q[i].psi);
    }
    for (int i = 0; i < params_.pair_count(); ++i)
      if (gap[i] < s_.active_gap) out.push_back(i);
    return out;
  }

  // Golden-section coordinate descent on (k, b, mu) of the active pairs, controls held fixed.
  bool tune_contact_params() {
    const std::vector<int> active = active_pairs();
    if (active.empty()) return false;
    bool changed = false;
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int sweep = 0; sweep < s_.contact_sweeps; ++sweep) {
      bool sweep_changed = false;
      for (int pair : active) {
        for (int field = 0; field < 3; ++field) {
          Vector& v = field == 0 ? params_.k : field == 1 ? params_.b : params_.mu;
          const double hi_bound = field == 0 ? s_.k_max : field == 1 ? s_.b_max : s_.mu_max;
          if (hi_bound <= 0.0) continue;
          const double current = v[pair];
          auto cost_at = [&](double value) {
            ContactParams trial = params_;
            Vector& tv = field == 0 ? trial.k : field == 1 ? trial.b : trial.mu;
            tv[pair] = value;
            return evaluate(spline_, trial, nullptr);
          };
          double lo = 0.0, hi = hi_bound;
          double c = hi - phi * (hi - lo), d = lo + phi * (hi - lo);
          double fc = cost_at(c), fd = cost_at(d);
          for (int it = 0; it < s_.golden_iterations; ++it) {
            if (fc <= fd) {
              hi = d;
              d = c;
              fd = fc;
              c = hi - phi * (hi - lo);
              fc = cost_at(c);
            } else {
              lo = c;
              c = d;
              fc = fd;
              d = lo + phi * (hi - lo);
              fd = cost_at(d);
            }
          }
          double best_value = current, best_cost = cost_;
          for (const auto& [value, J] : {std::pair{c, fc}, std::pair{d, fd}, std::pair{0.0, cost_at(0.0)}}) {
            if (J < best_cost) {
              best_cost = J;
              best_value = value;
            }
          }
          if (best_value != current) {
            v[pair] = best_value;
            cost_ = evaluate(spline_, params_, &states_);
            stats_.cost_history.push_back(cost_);
            sweep_changed = changed = true;
          }
        }
      }
      if (!sweep_changed) break;
    }
    if (changed) previous_ = Policy{};
    return changed;
  }

  const TrajectoryOptimizer& opt_;
  const ArmModel& m_;
  const World& w_;
  const CostWeights& cw_;
  const SolveSettings& s_;
  JointState x0_;
  Target target_;
  ControlSpline spline_;
  ContactParams params_;
  SolveStats& stats_;
  std::vector<int> I_;
  int n_ = 0;
  Vector lim_;
  double reg_ = 0.0;
  double cost_ = kInf;
  std::vector<JointState> states_;
  Policy previous_;
};

}  // namespace

Trajectory TrajectoryOptimizer::solve(const JointState& start, const Target& target, const Trajectory* init,
                                      SolveStats* stats) const {
  require(start.dof() == model_.dof() && start.finite(), "solve: start state must be finite with one entry per joint");
  require(target.q.size() == model_.dof() && target.center.size() == model_.dof(), "solve: target size mismatch");
  ControlSpline spline;
  ContactParams params = ContactParams::zeros(static_cast<int>(world_.contact_pairs.size()), constants_);
  if (init) {
    require(!init->empty() && init->initial_state().q == start.q && init->initial_state().qdot == start.qdot,
            "solve: warm-start trajectory must begin at the start state");
    spline = init->controls;
    if (init->contact_params.pair_count() == params.pair_count()) {
      params.k = init->contact_params.k;
      params.b = init->contact_params.b;
      params.mu = init->contact_params.mu;
    }
  } else {
    spline = initial_guess(start, target);
  }
  spline.validate();
  require(spline.interpolation != Interpolation::Cubic, "solve: iLQR supports zero-order and linear control splines");
  require(spline.dim() == model_.dof(), "solve: control spline dimension mismatch");
  if (!world_.contact_enabled) params = ContactParams::zeros(params.pair_count(), constants_);

  SolveStats local;
  SolveStats& st = stats ? *stats : local;
  Solver solver(*this, start, target, std::move(spline), std::move(params), st);
  Trajectory t = solver.run();
  if (!std::isfinite(t.total_cost)) throw DivergenceError("solve: rollout diverged");
  return t;
}

Trajectory TrajectoryOptimizer::warm_start(const Trajectory& prefix, const Trajectory& suffix, const Target& target,
                                           SolveStats* stats) const {
  require(!prefix.empty(), "warm_start: prefix trajectory is empty");
  Trajectory init;
  init.states = {prefix.initial_state()};
  init.contact_params = prefix.contact_params;
  if (suffix.steps() <= 0) {
    init.controls = prefix.controls;
  } else {
    init.controls = concatenate(prefix.controls, suffix.controls, settings_.dt);
    init.contact_params = suffix.contact_params;
  }
  return solve(prefix.initial_state(), target, &init, stats);
}

}  // namespace insat
