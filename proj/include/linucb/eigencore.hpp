#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "linucb/rng.hpp"

namespace linucb {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Signals breakdown of the secular root finder; callers fall back to a full
// re-factorization.
class SecularError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Full eigendecomposition of a symmetric positive-definite matrix.
//
// values are sorted non-increasing and strictly positive; vectors.col(i) is
// the unit eigenvector paired with values[i]. Every eigenvector is normalized
// so that its largest-magnitude coordinate is non-negative, which makes the
// decomposition a deterministic function of the input.
struct EigenPairs {
  Vector values;
  Matrix vectors;

  Eigen::Index dim() const { return values.size(); }

  Matrix reconstruct() const {
    return vectors * values.asDiagonal() * vectors.transpose();
  }
};

namespace detail {

inline void apply_sign_convention(Matrix& vectors) {
  for (Eigen::Index j = 0; j < vectors.cols(); ++j) {
    Eigen::Index k = 0;
    vectors.col(j).cwiseAbs().maxCoeff(&k);
    if (vectors(k, j) < 0.0) vectors.col(j) = -vectors.col(j);
  }
}

// One root of the secular equation f(x) = 1 + sum_i weights2[i]/(poles[i]-x)
// on the open interval (lo, hi), where poles are strictly decreasing, lo is
// poles[k] and hi is either poles[k-1] or poles[0] + rho for the top root.
// f is strictly increasing on the interval, with f(lo+) = -inf.
//
// The root is returned as (shift, tau): shift is one of the interval
// endpoints and x = shift + tau. Keeping the offset avoids cancellation when
// later forming pole-minus-root differences.
struct SecularRoot {
  double shift;
  double tau;
  double value() const { return shift + tau; }
};

inline SecularRoot solve_secular_interval(const std::vector<double>& poles,
                                          const std::vector<double>& weights2,
                                          double lo, double hi) {
  const std::size_t m = poles.size();
  const auto eval = [&](double shift, double tau, double& f, double& df) {
    f = 1.0;
    df = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double denom = (poles[j] - shift) - tau;
      const double r = weights2[j] / denom;
      f += r;
      df += r / denom;
    }
  };

  // Pick the endpoint closer to the root as the shift. f is increasing, so a
  // non-negative midpoint value puts the root in the lower half.
  const double mid = 0.5 * (lo + hi);
  double f_mid, df_mid;
  eval(0.0, mid, f_mid, df_mid);
  const double shift = (f_mid >= 0.0) ? lo : hi;

  double tau_lo = lo - shift;
  double tau_hi = hi - shift;
  if (f_mid >= 0.0) {
    tau_hi = mid - shift;
  } else {
    tau_lo = mid - shift;
  }

  // Converge to the double-precision floor of the bracket (well inside the
  // documented 1e-13 relative tolerance); the composed updates inherit this
  // accuracy, which keeps long refactor-free stretches honest.
  const double eps = std::numeric_limits<double>::epsilon();
  const double scale = std::max({std::abs(lo), std::abs(hi), 1.0});
  double tau = 0.5 * (tau_lo + tau_hi);
  double f, df;
  for (int iter = 0; iter < 200; ++iter) {
    eval(shift, tau, f, df);
    if (f == 0.0) return {shift, tau};
    if (f > 0.0) {
      tau_hi = tau;
    } else {
      tau_lo = tau;
    }
    // Newton step, clipped back into the bracket when it escapes.
    double next = tau - f / df;
    if (!(next > tau_lo && next < tau_hi)) next = 0.5 * (tau_lo + tau_hi);
    const double step = std::abs(next - tau);
    tau = next;
    if (step <= 2.0 * eps * (std::abs(shift) + std::abs(tau)) ||
        tau_hi - tau_lo <= 2.0 * eps * scale) {
      return {shift, tau};
    }
  }
  throw SecularError("secular root finder failed to converge");
}

}  // namespace detail

// Eigendecomposition of a symmetric positive-definite matrix (d >= 2).
// Throws std::invalid_argument when the input is not symmetric within 1e-10
// and std::runtime_error when a non-positive eigenvalue shows up.
inline EigenPairs eig_sym(const Matrix& matrix) {
  const Eigen::Index d = matrix.rows();
  if (d < 2 || matrix.cols() != d) {
    throw std::invalid_argument("eig_sym: matrix must be square with d >= 2");
  }
  const double asym = (matrix - matrix.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10) {
    throw std::invalid_argument("eig_sym: matrix is not symmetric within 1e-10");
  }

  Eigen::SelfAdjointEigenSolver<Matrix> solver(
      0.5 * (matrix + matrix.transpose()));
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("eig_sym: eigensolver did not converge");
  }

  EigenPairs pairs;
  pairs.values = solver.eigenvalues().reverse();
  pairs.vectors = solver.eigenvectors().rowwise().reverse();
  if (pairs.values[d - 1] <= 0.0) {
    throw std::runtime_error("eig_sym: non-positive eigenvalue detected");
  }
  detail::apply_sign_convention(pairs.vectors);
  return pairs;
}

// Eigendecomposition of A + u u^T given the decomposition of A.
//
// New eigenvalues are the roots of the secular equation
//   f(x) = 1 + sum_i alpha_i^2 / (values[i] - x) = 0,  alpha = vectors^T u,
// one per bracketing interval; eigenvectors follow from the resolvent
// formula with Gu-Eisenstat corrected weights so the returned basis stays
// orthonormal to machine precision even for clustered spectra.
//
// Coordinates with |alpha_i| < 1e-12*||u|| and eigenvalue groups equal within
// 1e-12 relative are deflated: the eigenvalue carries over unchanged and the
// eigenvector is reused (after an in-group rotation concentrating the update
// weight on one column).
inline EigenPairs rank_one_update(const EigenPairs& pairs, const Vector& u) {
  const Eigen::Index d = pairs.dim();
  if (u.size() != d) {
    throw std::invalid_argument("rank_one_update: dimension mismatch");
  }
  const double u_norm = u.norm();
  if (u_norm == 0.0) return pairs;

  Vector alpha = pairs.vectors.transpose() * u;
  Matrix vectors = pairs.vectors;
  const Vector& values = pairs.values;
  const double alpha_tol = 1e-12 * u_norm;

  // Group eigenvalues equal within 1e-12 relative (chained over neighbours)
  // and rotate each group so a single column carries the group's weight.
  std::vector<Eigen::Index> group_start;
  group_start.push_back(0);
  for (Eigen::Index i = 1; i < d; ++i) {
    const double gap = values[i - 1] - values[i];
    if (gap > 1e-12 * std::max(std::abs(values[i - 1]), std::abs(values[i]))) {
      group_start.push_back(i);
    }
  }
  group_start.push_back(d);

  std::vector<Eigen::Index> active;          // representative column per group
  std::vector<double> poles, weights2;
  for (std::size_t g = 0; g + 1 < group_start.size(); ++g) {
    const Eigen::Index begin = group_start[g];
    const Eigen::Index size = group_start[g + 1] - begin;
    double group_norm2 = alpha.segment(begin, size).squaredNorm();
    if (size > 1) {
      // Householder rotation inside the group: alpha -> (±||alpha_g||, 0, ...).
      Vector w = alpha.segment(begin, size);
      const double norm = std::sqrt(group_norm2);
      if (norm > 0.0) {
        const double sign = (w[0] >= 0.0) ? 1.0 : -1.0;
        w[0] += sign * norm;
        const double w2 = w.squaredNorm();
        if (w2 > 0.0) {
          auto block = vectors.middleCols(begin, size);
          block -= (block * w) * (2.0 / w2) * w.transpose();
          alpha.segment(begin, size).setZero();
          alpha[begin] = -sign * norm;
        }
      }
    }
    if (std::sqrt(group_norm2) > alpha_tol) {
      active.push_back(begin);
      poles.push_back(values[begin]);
      weights2.push_back(group_norm2);
    }
  }

  const std::size_t m = active.size();
  EigenPairs out;
  out.values = values;
  out.vectors = vectors;
  if (m == 0) {
    detail::apply_sign_convention(out.vectors);
    return out;
  }

  const double rho = std::accumulate(weights2.begin(), weights2.end(), 0.0);

  // One root per interval (poles[k], upper_k); intervals are disjoint and the
  // roots come out in decreasing order.
  std::vector<detail::SecularRoot> roots(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double lo = poles[k];
    const double hi = (k == 0) ? poles[0] + rho : poles[k - 1];
    roots[k] = detail::solve_secular_interval(poles, weights2, lo, hi);
  }

  // Corrected weights (Gu & Eisenstat): the unique weight vector for which
  // the computed roots are exact. Keeping the (shift, tau) representation of
  // each root makes every difference below cancellation-free.
  const auto root_minus_pole = [&](std::size_t k, std::size_t i) {
    return (roots[k].shift - poles[i]) + roots[k].tau;
  };
  std::vector<double> corrected(m);
  for (std::size_t i = 0; i < m; ++i) {
    double w2 = root_minus_pole(i, i);
    for (std::size_t k = 0; k < m; ++k) {
      if (k == i) continue;
      w2 *= root_minus_pole(k, i) / (poles[k] - poles[i]);
    }
    const double sign = (alpha[active[i]] >= 0.0) ? 1.0 : -1.0;
    corrected[i] = sign * std::sqrt(std::abs(w2));
  }

  // Eigenvectors of the active block: column k is
  //   normalize( sum_i corrected[i] / (poles[i] - mu_k) * v_i ).
  Matrix coeff(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t i = 0; i < m; ++i) {
      coeff(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          corrected[i] / (-root_minus_pole(k, i));
    }
    coeff.col(static_cast<Eigen::Index>(k)).normalize();
  }

  Matrix active_vectors(d, static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) {
    active_vectors.col(static_cast<Eigen::Index>(i)) = vectors.col(active[i]);
  }
  const Matrix new_active = active_vectors * coeff;

  for (std::size_t k = 0; k < m; ++k) {
    out.values[active[k]] = roots[k].value();
    out.vectors.col(active[k]) = new_active.col(static_cast<Eigen::Index>(k));
  }

  // Merge active roots with untouched deflated values, restoring the
  // non-increasing order.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return out.values[a] > out.values[b];
  });
  EigenPairs sorted;
  sorted.values.resize(d);
  sorted.vectors.resize(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    sorted.values[j] = out.values[order[static_cast<std::size_t>(j)]];
    sorted.vectors.col(j) = out.vectors.col(order[static_cast<std::size_t>(j)]);
  }
  detail::apply_sign_convention(sorted.vectors);
  return sorted;
}

// Radial projection onto the unit sphere. Inputs with norm below 1e-12 map
// to a direction drawn from the supplied generator, so the degenerate case
// stays reproducible under a fixed seed.
inline Vector project_sphere(const Vector& x, Rng& rng) {
  const double norm = x.norm();
  if (norm < 1e-12) return rng.unit_vector(x.size());
  return x / norm;
}

// Column-orthonormal basis of the hyperplane orthogonal to a unit vector v,
// built from the Householder reflector that maps v onto ±e_1. Deterministic
// in v.
inline Matrix orthonormal_complement(const Vector& v) {
  const Eigen::Index d = v.size();
  if (d < 2) {
    throw std::invalid_argument("orthonormal_complement: need d >= 2");
  }
  if (std::abs(v.norm() - 1.0) > 1e-10) {
    throw std::invalid_argument("orthonormal_complement: input must be unit norm");
  }
  Vector w = v;
  w[0] += (v[0] >= 0.0) ? 1.0 : -1.0;
  const double w2 = w.squaredNorm();
  Matrix h = Matrix::Identity(d, d) - (2.0 / w2) * (w * w.transpose());
  return h.rightCols(d - 1);
}

}  // namespace linucb
