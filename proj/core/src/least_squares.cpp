#include "stab360/least_squares.hpp"

#include <cmath>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

namespace stab360 {

Linearization::Linearization(int num_params, bool with_jacobian, double norm_epsilon)
    : num_params_(num_params),
      with_jacobian_(with_jacobian),
      eps_(norm_epsilon),
      gradient_(Eigen::VectorXd::Zero(num_params)) {}

void Linearization::add_squared(std::span<const int> vars, const Eigen::VectorXd& r,
                                const Eigen::MatrixXd& j, double weight) {
  cost_ += weight * r.squaredNorm();
  if (with_jacobian_) accumulate(vars, r, j, 2.0 * weight);
}

void Linearization::add_norm(std::span<const int> vars, const Eigen::VectorXd& r,
                             const Eigen::MatrixXd& j, double weight) {
  const double s = std::sqrt(r.squaredNorm() + eps_ * eps_);
  cost_ += weight * (s - eps_);
  if (with_jacobian_) accumulate(vars, r, j, weight / s);
}

void Linearization::accumulate(std::span<const int> vars, const Eigen::VectorXd& r,
                               const Eigen::MatrixXd& j, double scale) {
  std::vector<int> live;
  std::vector<Eigen::Index> cols;
  for (std::size_t k = 0; k < vars.size(); ++k) {
    if (vars[k] >= 0) {
      live.push_back(vars[k]);
      cols.push_back(static_cast<Eigen::Index>(k));
    }
  }
  if (live.empty()) return;
  Eigen::MatrixXd jl(j.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) jl.col(static_cast<Eigen::Index>(k)) = j.col(cols[k]);
  const Eigen::VectorXd g = scale * (jl.transpose() * r);
  for (std::size_t k = 0; k < live.size(); ++k) gradient_[live[k]] += g[static_cast<Eigen::Index>(k)];
  auto [it, inserted] = hessian_blocks_.try_emplace(live);
  if (inserted) it->second = Eigen::MatrixXd::Zero(jl.cols(), jl.cols());
  it->second.noalias() += scale * (jl.transpose() * jl);
}

bool Linearization::solve(double lambda, Eigen::VectorXd& delta) const {
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(num_params_);
  std::vector<Eigen::Triplet<double>> triplets;
  for (const auto& [vars, h] : hessian_blocks_) {
    for (std::size_t a = 0; a < vars.size(); ++a) {
      diag[vars[a]] += h(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(a));
      for (std::size_t b = 0; b < vars.size(); ++b) {
        triplets.emplace_back(vars[a], vars[b],
                              h(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)));
      }
    }
  }
  const double floor = std::max(1e-9 * (num_params_ > 0 ? diag.maxCoeff() : 0.0), 1e-12);
  for (int i = 0; i < num_params_; ++i) {
    triplets.emplace_back(i, i, lambda * std::max(diag[i], floor));
  }
  Eigen::SparseMatrix<double> h(num_params_, num_params_);
  h.setFromTriplets(triplets.begin(), triplets.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(h);
  if (ldlt.info() != Eigen::Success) return false;
  delta = ldlt.solve(-gradient_);
  return ldlt.info() == Eigen::Success;
}

}  // namespace stab360
