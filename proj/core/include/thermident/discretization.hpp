#pragma once

#include <vector>

#include <Eigen/Core>

#include "thermident/rc_model.hpp"

namespace thermident {

inline constexpr double kDefaultStep = 900.0;  // s

/// Discrete bilinear model
///   x(k+1) = A x(k) + B_v v(k) + B_IG (c_IG + f_IG(k))
///          + sum_j (B_xu[j] x(k) + B_vu[j] v(k)) u_j(k)
///   y(k)   = C x(k)
struct DiscreteModel {
  ModelLayout layout;
  double dt = kDefaultStep;
  Eigen::MatrixXd A;
  Eigen::MatrixXd B_v;
  Eigen::MatrixXd B_ig;
  std::vector<Eigen::MatrixXd> B_xu;
  std::vector<Eigen::MatrixXd> B_vu;
  Eigen::MatrixXd C;
  Eigen::VectorXd c_ig;
  // Single nonzero column of B_xu[j] / B_vu[j], or -1 when it has more
  // (filled by discretize; products fall back to dense when absent).
  std::vector<Eigen::Index> xu_column;
  std::vector<Eigen::Index> vu_column;

  Eigen::Index state_count() const { return A.rows(); }
  Eigen::Index zone_count() const { return C.rows(); }
  Eigen::Index box_count() const { return static_cast<Eigen::Index>(B_xu.size()); }

  /// A + sum_j u_j B_xu[j]: the state transition for known airflows.
  Eigen::MatrixXd transition(const Eigen::VectorXd& u) const;
  /// Everything except the state and f_IG terms.
  Eigen::VectorXd affine_input(const Eigen::VectorXd& u, const Disturbance& v) const;
  /// sum_j u_j (B_xu[j] x + B_vu[j] v).
  Eigen::VectorXd bilinear_term(const Eigen::VectorXd& x, const Eigen::VectorXd& u, const Disturbance& v) const;
  /// Recomputes xu_column / vu_column from the matrices.
  void index_columns();
};

/// e^{A dt} and its integral int_0^dt e^{A s} ds.
struct Propagators {
  Eigen::MatrixXd phi;
  Eigen::MatrixXd gamma;
  Eigen::VectorXd eigenvalues;  // of A, all real
};

/// Propagators for A = -diag(capacitance)^{-1} K with K symmetric, computed
/// through the symmetric eigenproblem of the capacitance-scaled K.
/// Throws Error(kNumeric) if A is not of that form.
Propagators rc_propagators(const Eigen::MatrixXd& A, const Eigen::VectorXd& capacitance,
                           double dt);

double spectral_radius(const Eigen::MatrixXd& M);

/// Zero-order hold on v, f_IG and u: the linear part is propagated exactly
/// and each bilinear term is held at its start-of-step value and integrated
/// through the same exponential (exponential Euler). Throws Error(kInvalid)
/// for dt <= 0 and Error(kUnstable) when the u = 0 transition has spectral
/// radius above one.
DiscreteModel discretize(const RCStateSpaceModel& model, double dt = kDefaultStep);

}  // namespace thermident
