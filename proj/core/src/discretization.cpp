#include "thermident/discretization.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "thermident/error.hpp"

namespace thermident {
namespace {

// G * M, skipping the all-zero columns of M (the bilinear input matrices
// touch a single room column).
Eigen::MatrixXd times_sparse_columns(const Eigen::MatrixXd& G, const Eigen::MatrixXd& M) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(G.rows(), M.cols());
  for (Eigen::Index c = 0; c < M.cols(); ++c) {
    if (!M.col(c).isZero(0.0)) out.col(c).noalias() = G * M.col(c);
  }
  return out;
}

// (e^w - 1) / w, continuous at 0.
double expm1_ratio(double w) {
  if (std::abs(w) < 1e-8) return 1.0 + 0.5 * w;
  return std::expm1(w) / w;
}

}  // namespace

namespace {

// Column index if M has at most one nonzero column, else -1.
Eigen::Index single_column(const Eigen::MatrixXd& M) {
  Eigen::Index found = -1;
  for (Eigen::Index c = 0; c < M.cols(); ++c) {
    if (M.col(c).isZero(0.0)) continue;
    if (found >= 0) return -1;
    found = c;
  }
  return found < 0 ? 0 : found;
}

}  // namespace

void DiscreteModel::index_columns() {
  xu_column.clear();
  vu_column.clear();
  for (const auto& M : B_xu) xu_column.push_back(single_column(M));
  for (const auto& M : B_vu) vu_column.push_back(single_column(M));
}

Eigen::MatrixXd DiscreteModel::transition(const Eigen::VectorXd& u) const {
  Eigen::MatrixXd F = A;
  const bool indexed = xu_column.size() == B_xu.size();
  for (Eigen::Index j = 0; j < u.size(); ++j) {
    if (u[j] == 0.0) continue;
    const auto ju = static_cast<std::size_t>(j);
    if (indexed && xu_column[ju] >= 0) {
      F.col(xu_column[ju]) += u[j] * B_xu[ju].col(xu_column[ju]);
    } else {
      F.noalias() += u[j] * B_xu[ju];
    }
  }
  return F;
}

Eigen::VectorXd DiscreteModel::bilinear_term(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                             const Disturbance& v) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(A.rows());
  const bool xu_indexed = xu_column.size() == B_xu.size();
  const bool vu_indexed = vu_column.size() == B_vu.size();
  for (Eigen::Index j = 0; j < u.size(); ++j) {
    const double q = u[j];
    if (q == 0.0) continue;
    const auto ju = static_cast<std::size_t>(j);
    if (xu_indexed && xu_column[ju] >= 0) {
      out.noalias() += (q * x[xu_column[ju]]) * B_xu[ju].col(xu_column[ju]);
    } else {
      out.noalias() += q * (B_xu[ju] * x);
    }
    if (vu_indexed && vu_column[ju] >= 0) {
      out.noalias() += (q * v[vu_column[ju]]) * B_vu[ju].col(vu_column[ju]);
    } else {
      out.noalias() += q * (B_vu[ju] * v);
    }
  }
  return out;
}

Eigen::VectorXd DiscreteModel::affine_input(const Eigen::VectorXd& u, const Disturbance& v) const {
  return B_v * v + B_ig * c_ig + bilinear_term(Eigen::VectorXd::Zero(A.rows()), u, v);
}

Propagators rc_propagators(const Eigen::MatrixXd& A, const Eigen::VectorXd& capacitance,
                           double dt) {
  const Eigen::Index n = A.rows();
  if (A.cols() != n || capacitance.size() != n) {
    throw Error(ErrorCode::kDimension, "propagator inputs disagree in size");
  }
  // S = D^{1/2} (-A) D^{-1/2} = D^{-1/2} K D^{-1/2} is symmetric.
  const Eigen::VectorXd sqrt_cap = capacitance.cwiseSqrt();
  const Eigen::VectorXd inv_sqrt_cap = sqrt_cap.cwiseInverse();
  Eigen::MatrixXd S = -(sqrt_cap.asDiagonal() * A * inv_sqrt_cap.asDiagonal());
  const double asym = (S - S.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-9 * std::max(1.0, S.cwiseAbs().maxCoeff())) {
    throw Error(ErrorCode::kNumeric, "system matrix is not a capacitance-scaled symmetric network");
  }
  S = 0.5 * (S + S.transpose());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S);
  if (eig.info() != Eigen::Success) {
    throw Error(ErrorCode::kNumeric, "eigendecomposition failed");
  }
  const Eigen::VectorXd mu = -eig.eigenvalues();  // eigenvalues of A
  Eigen::VectorXd e_mu(n);
  Eigen::VectorXd phi_mu(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    e_mu[i] = std::exp(mu[i] * dt);
    phi_mu[i] = dt * expm1_ratio(mu[i] * dt);
  }
  // A = W diag(mu) W^{-1}, W = D^{-1/2} Q, W^{-1} = Q^T D^{1/2}.
  const Eigen::MatrixXd W = inv_sqrt_cap.asDiagonal() * eig.eigenvectors();
  const Eigen::MatrixXd W_inv = eig.eigenvectors().transpose() * sqrt_cap.asDiagonal();
  Propagators out;
  out.phi = W * e_mu.asDiagonal() * W_inv;
  out.gamma = W * phi_mu.asDiagonal() * W_inv;
  out.eigenvalues = mu;
  return out;
}

double spectral_radius(const Eigen::MatrixXd& M) {
  Eigen::EigenSolver<Eigen::MatrixXd> eig(M, false);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

DiscreteModel discretize(const RCStateSpaceModel& model, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw Error(ErrorCode::kInvalid, "time step must be positive");
  }
  if (!model.assembled) throw Error(ErrorCode::kInvalid, "model is not assembled");

  const Propagators prop = rc_propagators(model.A, model.layout.capacitance, dt);

  DiscreteModel dm;
  dm.layout = model.layout;
  dm.dt = dt;
  dm.A = prop.phi;
  dm.B_v = prop.gamma * model.B_v;
  dm.B_ig = prop.gamma * model.B_ig;
  dm.C = model.C;
  dm.c_ig = model.params.c_ig;
  dm.B_xu.reserve(model.B_xu.size());
  dm.B_vu.reserve(model.B_vu.size());
  for (std::size_t j = 0; j < model.B_xu.size(); ++j) {
    dm.B_xu.push_back(times_sparse_columns(prop.gamma, model.B_xu[j]));
    dm.B_vu.push_back(times_sparse_columns(prop.gamma, model.B_vu[j]));
  }
  dm.index_columns();

  // The u = 0 part of an RC network with losses is contractive; anything
  // else means the step or the network is broken.
  const double rho = (prop.eigenvalues * dt).array().exp().abs().maxCoeff();
  if (!std::isfinite(rho) || rho > 1.0 + 1e-12) {
    throw Error(ErrorCode::kUnstable, "discrete transition has spectral radius " +
                                          std::to_string(rho) + " > 1");
  }
  return dm;
}

}  // namespace thermident
