#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Cholesky>

#include "thermident/error.hpp"
#include "thermident/identification.hpp"

namespace thermident {
namespace {

Eigen::VectorXd project(const Eigen::VectorXd& x, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  return x.cwiseMax(lo).cwiseMin(hi);
}

double sum_squares(const Eigen::VectorXd& r) {
  if (!r.allFinite()) return std::numeric_limits<double>::infinity();
  return r.squaredNorm();
}

void check_box(const Eigen::VectorXd& x0, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  if (lo.size() != x0.size() || hi.size() != x0.size()) {
    throw Error(ErrorCode::kDimension, "bounds do not match the parameter count");
  }
  if ((lo.array() > hi.array()).any()) throw Error(ErrorCode::kInvalid, "lower bound above upper bound");
}

}  // namespace

MinimizerResult minimize_levenberg_marquardt(const ResidualFunction& residual, Eigen::VectorXd x0,
                                             const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                                             const MinimizerOptions& opt) {
  check_box(x0, lower, upper);
  const Eigen::Index n = x0.size();
  MinimizerResult res;
  res.x = project(x0, lower, upper);
  Eigen::VectorXd r = residual(res.x);
  ++res.evaluations;
  res.value = sum_squares(r);
  if (!std::isfinite(res.value)) {
    res.message = "objective is not finite at the starting point";
    return res;
  }

  double lambda = 1e-3;
  int stalled = 0;
  for (res.iterations = 0; res.iterations < opt.max_iterations;) {
    if (res.value == 0.0) {
      res.converged = true;
      res.message = "zero residual";
      break;
    }
    // Forward differences, stepping inward at the upper bound.
    Eigen::MatrixXd J(r.size(), n);
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::VectorXd xp = res.x;
      double h = opt.finite_difference_step * std::max(1.0, std::abs(res.x[i]));
      if (xp[i] + h > upper[i]) h = -h;
      xp[i] += h;
      const Eigen::VectorXd rp = residual(xp);
      ++res.evaluations;
      J.col(i) = rp.allFinite() ? Eigen::VectorXd((rp - r) / h) : Eigen::VectorXd::Zero(r.size());
    }
    const Eigen::VectorXd g = J.transpose() * r;
    const Eigen::MatrixXd H = J.transpose() * J;

    // Variables pinned at a bound by the gradient stay fixed this iteration.
    std::vector<Eigen::Index> free;
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool at_lo = res.x[i] <= lower[i] && g[i] > 0.0;
      const bool at_hi = res.x[i] >= upper[i] && g[i] < 0.0;
      if (!at_lo && !at_hi) free.push_back(i);
    }
    double pg = 0.0;
    for (auto i : free) pg = std::max(pg, std::abs(g[i]));
    if (free.empty() || pg <= 1e-14 * std::max(1.0, res.value)) {
      res.converged = true;
      res.message = "projected gradient vanished";
      break;
    }
    const auto nf = static_cast<Eigen::Index>(free.size());
    Eigen::MatrixXd Hf(nf, nf);
    Eigen::VectorXd gf(nf);
    for (Eigen::Index a = 0; a < nf; ++a) {
      gf[a] = g[free[static_cast<std::size_t>(a)]];
      for (Eigen::Index b = 0; b < nf; ++b) Hf(a, b) = H(free[static_cast<std::size_t>(a)], free[static_cast<std::size_t>(b)]);
    }

    bool accepted = false;
    Eigen::VectorXd x_new;
    Eigen::VectorXd r_new;
    double f_new = 0.0;
    while (lambda < 1e12) {
      Eigen::MatrixXd A = Hf;
      for (Eigen::Index a = 0; a < nf; ++a) A(a, a) += lambda * std::max(Hf(a, a), 1e-12);
      const Eigen::VectorXd d = A.ldlt().solve(-gf);
      x_new = res.x;
      for (Eigen::Index a = 0; a < nf; ++a) x_new[free[static_cast<std::size_t>(a)]] += d[a];
      x_new = project(x_new, lower, upper);
      r_new = residual(x_new);
      ++res.evaluations;
      f_new = sum_squares(r_new);
      if (f_new < res.value) {
        accepted = true;
        lambda = std::max(lambda / 3.0, 1e-12);
        break;
      }
      lambda *= 4.0;
    }
    ++res.iterations;
    if (!accepted) {
      res.history.push_back(res.value);
      res.converged = true;
      res.message = "no further decrease possible";
      break;
    }
    const double decrease = res.value - f_new;
    const double step = (x_new - res.x).norm();
    res.x = x_new;
    r = r_new;
    res.value = f_new;
    res.history.push_back(res.value);
    if (opt.on_iteration) opt.on_iteration(res.iterations, res.value, res.x);
    if (decrease <= opt.objective_tolerance * res.value || step <= opt.step_tolerance) {
      if (++stalled >= 2) {
        res.converged = true;
        res.message = "relative decrease below tolerance";
        break;
      }
    } else {
      stalled = 0;
    }
  }
  if (!res.converged && res.message.empty()) res.message = "iteration limit reached";
  return res;
}

MinimizerResult minimize_nelder_mead(const ScalarFunction& f, Eigen::VectorXd x0,
                                     const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                                     const MinimizerOptions& opt) {
  check_box(x0, lower, upper);
  const Eigen::Index n = x0.size();
  MinimizerResult res;
  auto eval = [&](const Eigen::VectorXd& x) {
    ++res.evaluations;
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  std::vector<Eigen::VectorXd> simplex(static_cast<std::size_t>(n + 1));
  std::vector<double> values(static_cast<std::size_t>(n + 1));
  simplex[0] = project(x0, lower, upper);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd v = simplex[0];
    const double span = upper[i] - lower[i];
    double h = 0.1 * std::max(std::abs(v[i]), 0.1 * span);
    if (v[i] + h > upper[i]) h = -h;
    v[i] += h;
    simplex[static_cast<std::size_t>(i + 1)] = project(v, lower, upper);
  }
  for (std::size_t i = 0; i < simplex.size(); ++i) values[i] = eval(simplex[i]);

  std::vector<std::size_t> order(simplex.size());
  for (res.iterations = 0; res.iterations < opt.max_iterations; ++res.iterations) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[order.size() - 2];
    res.history.push_back(values[best]);
    if (opt.on_iteration) opt.on_iteration(res.iterations + 1, values[best], simplex[best]);

    double diameter = 0.0;
    for (const auto& v : simplex) diameter = std::max(diameter, (v - simplex[best]).norm());
    const double spread = values[worst] - values[best];
    if (diameter <= opt.step_tolerance ||
        (std::isfinite(spread) && spread <= opt.objective_tolerance * std::max(values[best], 1e-300))) {
      res.converged = true;
      res.message = "simplex collapsed";
      break;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i < simplex.size(); ++i) {
      if (i != worst) centroid += simplex[i];
    }
    centroid /= static_cast<double>(n);

    const Eigen::VectorXd xr = project(centroid + (centroid - simplex[worst]), lower, upper);
    const double fr = eval(xr);
    if (fr < values[best]) {
      const Eigen::VectorXd xe = project(centroid + 2.0 * (centroid - simplex[worst]), lower, upper);
      const double fe = eval(xe);
      if (fe < fr) {
        simplex[worst] = xe;
        values[worst] = fe;
      } else {
        simplex[worst] = xr;
        values[worst] = fr;
      }
      continue;
    }
    if (fr < values[second]) {
      simplex[worst] = xr;
      values[worst] = fr;
      continue;
    }
    const bool outside = fr < values[worst];
    const Eigen::VectorXd xc = outside ? Eigen::VectorXd(centroid + 0.5 * (xr - centroid))
                                       : Eigen::VectorXd(centroid + 0.5 * (simplex[worst] - centroid));
    const double fc = eval(xc);
    if (fc < (outside ? fr : values[worst])) {
      simplex[worst] = xc;
      values[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i < simplex.size(); ++i) {
      if (i == best) continue;
      simplex[i] = simplex[best] + 0.5 * (simplex[i] - simplex[best]);
      values[i] = eval(simplex[i]);
    }
  }
  const auto it = std::min_element(values.begin(), values.end());
  res.x = simplex[static_cast<std::size_t>(it - values.begin())];
  res.value = *it;
  if (!res.converged) res.message = "iteration limit reached";
  return res;
}

}  // namespace thermident
