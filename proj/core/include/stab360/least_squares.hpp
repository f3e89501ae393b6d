#pragma once

// Damped Gauss-Newton (Levenberg-Marquardt) over sparse residual blocks.
//
// Two block kinds are supported:
//   squared: w * |r|^2
//   norm:    w * (sqrt(|r|^2 + eps^2) - eps), a smoothed |r| handled by
//            iteratively reweighted normal equations.
// Parameters live in a flat vector of local increments; the caller maps an
// increment back onto its own state through a retraction, so manifold
// parameters (rotations) are handled outside this file.

#include <map>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "stab360/jet.hpp"

namespace stab360 {

struct LsqOptions {
  int max_iterations = 100;
  double initial_lambda = 1e-4;
  double lambda_factor = 10.0;
  double max_lambda = 1e16;
  double function_tolerance = 1e-12;  // relative cost decrease
  double step_tolerance = 1e-12;
  double norm_epsilon = 1e-6;
};

struct LsqSummary {
  double initial_cost = 0.0;
  double final_cost = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> cost_trace;  // cost after each accepted step, starting with the initial one
};

class Linearization {
 public:
  Linearization(int num_params, bool with_jacobian, double norm_epsilon);

  bool with_jacobian() const { return with_jacobian_; }
  double cost() const { return cost_; }
  int num_params() const { return num_params_; }

  /// vars[k] is the global index of Jacobian column k, or -1 for a column
  /// that is not optimized. J may be empty when with_jacobian() is false.
  void add_squared(std::span<const int> vars, const Eigen::VectorXd& r, const Eigen::MatrixXd& j,
                   double weight = 1.0);
  void add_norm(std::span<const int> vars, const Eigen::VectorXd& r, const Eigen::MatrixXd& j,
                double weight = 1.0);

  /// Same as above for residuals computed with Jets (or plain doubles when
  /// no Jacobian is requested).
  template <int N, int M>
  void add_jets(bool norm, std::span<const int> vars, const Jet<N> (&r)[M], double weight = 1.0) {
    Eigen::VectorXd rv(M);
    Eigen::MatrixXd j;
    if (with_jacobian_) j.resize(M, static_cast<Eigen::Index>(vars.size()));
    for (int i = 0; i < M; ++i) {
      rv[i] = r[i].a;
      if (with_jacobian_) j.row(i) = r[i].v.head(static_cast<Eigen::Index>(vars.size())).transpose();
    }
    norm ? add_norm(vars, rv, j, weight) : add_squared(vars, rv, j, weight);
  }
  template <int M>
  void add_values(bool norm, const double (&r)[M], double weight = 1.0) {
    Eigen::VectorXd rv(M);
    for (int i = 0; i < M; ++i) rv[i] = r[i];
    norm ? add_norm({}, rv, {}, weight) : add_squared({}, rv, {}, weight);
  }

  /// Solves (H + lambda D) delta = -g. Returns false if the factorization fails.
  bool solve(double lambda, Eigen::VectorXd& delta) const;

  double gradient_max() const { return gradient_.cwiseAbs().maxCoeff(); }

 private:
  void accumulate(std::span<const int> vars, const Eigen::VectorXd& r, const Eigen::MatrixXd& j,
                  double scale);

  int num_params_;
  bool with_jacobian_;
  double eps_;
  double cost_ = 0.0;
  Eigen::VectorXd gradient_;
  std::map<std::vector<int>, Eigen::MatrixXd> hessian_blocks_;
};

/// Levenberg-Marquardt loop. `evaluate(state, lin)` adds every residual
/// block of the objective at `state`; `retract(state, delta)` returns the
/// state moved by a local increment. Only steps that strictly decrease the
/// cost are accepted, so the cost trace is monotone.
template <class State, class Evaluate, class Retract>
LsqSummary solve_least_squares(State& state, int num_params, Evaluate&& evaluate,
                               Retract&& retract, const LsqOptions& options) {
  LsqSummary summary;
  Linearization lin(num_params, true, options.norm_epsilon);
  evaluate(state, lin);
  summary.initial_cost = lin.cost();
  summary.cost_trace.push_back(lin.cost());
  double lambda = options.initial_lambda;
  if (num_params == 0 || lin.cost() == 0.0) {
    summary.final_cost = lin.cost();
    summary.converged = true;
    return summary;
  }
  for (int it = 0; it < options.max_iterations; ++it) {
    summary.iterations = it + 1;
    Eigen::VectorXd delta;
    bool accepted = false;
    while (lambda <= options.max_lambda) {
      if (!lin.solve(lambda, delta) || !delta.allFinite()) {
        lambda *= options.lambda_factor;
        continue;
      }
      State candidate = retract(state, delta);
      Linearization probe(num_params, false, options.norm_epsilon);
      evaluate(candidate, probe);
      if (std::isfinite(probe.cost()) && probe.cost() < lin.cost()) {
        const double previous = lin.cost();
        state = std::move(candidate);
        Linearization next(num_params, true, options.norm_epsilon);
        evaluate(state, next);
        lin = std::move(next);
        summary.cost_trace.push_back(lin.cost());
        lambda = std::max(lambda / options.lambda_factor, 1e-12);
        accepted = true;
        if (previous - lin.cost() <= options.function_tolerance * previous ||
            delta.norm() < options.step_tolerance || lin.cost() == 0.0) {
          summary.converged = true;
        }
        break;
      }
      if (delta.norm() < options.step_tolerance) {
        summary.converged = true;
        break;
      }
      lambda *= options.lambda_factor;
    }
    if (!accepted) {
      if (lambda > options.max_lambda) summary.converged = true;  // no descent direction left
      break;
    }
    if (summary.converged) break;
  }
  summary.final_cost = lin.cost();
  return summary;
}

}  // namespace stab360
