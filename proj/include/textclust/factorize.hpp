#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <Eigen/SparseCore>

#include "textclust/matrix.hpp"

// Alternating non-negative least squares factorization X ~= W*H with
// projected-gradient subproblem solves and NNDSVD initialization.

namespace textclust {

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class InitMethod { Nndsvd, Random };

struct FactorConfig {
  std::size_t k = 2;
  std::size_t max_iter = 8000;
  double tol = 1e-5;
  InitMethod init = InitMethod::Nndsvd;
  std::size_t runs = 1;
  std::uint64_t seed = 0;
  double entry_bound = std::numeric_limits<double>::infinity();

  void validate(std::size_t m, std::size_t n) const {
    if (k < 1 || k > std::min(m, n))
      throw std::invalid_argument("k must satisfy 1 <= k <= min(m, n); got k=" +
                                  std::to_string(k));
    if (tol <= 0) throw std::invalid_argument("tol must be positive");
    if (runs < 1) throw std::invalid_argument("runs must be >= 1");
  }
};

struct FactorStats {
  std::size_t n_iter = 0;
  double dist = 0;
  double evar = 0;
  double w_sparseness = 0;
  double h_sparseness = 0;
  bool converged = false;
  std::vector<double> objective_trace;
};

struct Factorization {
  Eigen::MatrixXd w;  // m x k basis
  Eigen::MatrixXd h;  // k x n mixture
  FactorStats stats;
};

// || X - W*H ||_F^2 expanded as ||X||^2 - 2<X, WH> + <W'W, HH'>,
// so the sparse input is never densified.
inline double objective(const CollationMatrix& x, const Eigen::MatrixXd& w,
                        const Eigen::MatrixXd& h) {
  if (static_cast<std::size_t>(w.rows()) != x.rows() ||
      static_cast<std::size_t>(h.cols()) != x.cols() || w.cols() != h.rows())
    throw std::invalid_argument("objective: factor dimensions do not match X");
  double cross = 0;
  const auto& s = x.sparse();
  for (int kk = 0; kk < s.outerSize(); ++kk)
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(s, kk);
         it; ++it)
      cross += it.value() * w.row(it.row()).dot(h.col(it.col()));
  const Eigen::MatrixXd wtw = w.transpose() * w;
  const Eigen::MatrixXd hht = h * h.transpose();
  return x.squared_frobenius() - 2.0 * cross + wtw.cwiseProduct(hht).sum();
}

inline double explained_variance(const CollationMatrix& x,
                                 const Eigen::MatrixXd& w,
                                 const Eigen::MatrixXd& h) {
  const double total = x.squared_frobenius();
  if (total <= 0)
    throw std::invalid_argument("explained variance undefined for a zero matrix");
  return 1.0 - objective(x, w, h) / total;
}

// Hoyer sparseness (sqrt(d) - l1/l2) / (sqrt(d) - 1), in [0, 1];
// matrices are flattened to one vector of all their entries.
template <typename Derived>
double hoyer_sparseness(const Eigen::DenseBase<Derived>& expr) {
  const Eigen::MatrixXd m = expr.derived();
  const auto d = static_cast<std::size_t>(m.size());
  if (d < 2) throw std::invalid_argument("sparseness needs at least 2 elements");
  const double l2 = m.norm();
  if (l2 == 0) throw std::invalid_argument("sparseness undefined for a zero vector");
  const double l1 = m.cwiseAbs().sum();
  const double sd = std::sqrt(static_cast<double>(d));
  const double s = (sd - l1 / l2) / (sd - 1.0);
  return std::clamp(s, 0.0, 1.0);
}

// NNDSVD, plain variant: zeros stay exact zeros.
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> nndsvd_init(
    const CollationMatrix& x, std::size_t k) {
  const auto m = static_cast<Eigen::Index>(x.rows());
  const auto n = static_cast<Eigen::Index>(x.cols());
  if (k < 1 || static_cast<Eigen::Index>(k) > std::min(m, n))
    throw std::invalid_argument("nndsvd: k out of range");

  Eigen::BDCSVD<Eigen::MatrixXd> svd(x.dense(),
                                     Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success)
    throw NumericError("SVD failed to converge");
  const Eigen::MatrixXd& u = svd.matrixU();
  const Eigen::MatrixXd& v = svd.matrixV();
  const Eigen::VectorXd& sig = svd.singularValues();

  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(m, static_cast<Eigen::Index>(k));
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), n);

  // Leading pair of a non-negative matrix is sign-normalizable to >= 0.
  {
    Eigen::VectorXd u0 = u.col(0);
    Eigen::VectorXd v0 = v.col(0);
    if (u0.sum() < 0) {
      u0 = -u0;
      v0 = -v0;
    }
    const double root = std::sqrt(sig(0));
    w.col(0) = root * u0.cwiseMax(0.0);
    h.row(0) = root * v0.cwiseMax(0.0).transpose();
  }

  for (Eigen::Index j = 1; j < static_cast<Eigen::Index>(k); ++j) {
    const Eigen::VectorXd uj = u.col(j);
    const Eigen::VectorXd vj = v.col(j);
    const Eigen::VectorXd up = uj.cwiseMax(0.0);
    const Eigen::VectorXd un = (-uj).cwiseMax(0.0);
    const Eigen::VectorXd vp = vj.cwiseMax(0.0);
    const Eigen::VectorXd vn = (-vj).cwiseMax(0.0);
    const double mp = up.norm() * vp.norm();
    const double mn = un.norm() * vn.norm();
    if (std::max(mp, mn) == 0) continue;  // degenerate pair, leave zero
    const Eigen::VectorXd& uu = mp >= mn ? up : un;
    const Eigen::VectorXd& vv = mp >= mn ? vp : vn;
    const double sigma = mp >= mn ? mp : mn;
    const double scale = std::sqrt(sig(j) * sigma);
    w.col(j) = (scale / uu.norm()) * uu;
    h.row(j) = (scale / vv.norm()) * vv.transpose();
  }
  return {w, h};
}

namespace detail {

// Max KKT violation for min f(Z) s.t. Z >= 0: |grad| on the support,
// max(-grad, 0) on the active set.
inline double kkt_violation(const Eigen::MatrixXd& grad,
                            const Eigen::MatrixXd& z) {
  double worst = 0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double g = grad(i);
    const double v = z(i) > 0 ? std::abs(g) : std::max(-g, 0.0);
    worst = std::max(worst, v);
  }
  return worst;
}

inline double projected_gradient_sqnorm(const Eigen::MatrixXd& grad,
                                        const Eigen::MatrixXd& z) {
  double s = 0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double g = grad(i);
    if (g < 0 || z(i) > 0) s += g * g;
  }
  return s;
}

struct SubproblemResult {
  Eigen::MatrixXd z;
  Eigen::MatrixXd grad;
  std::size_t iterations = 0;
};

// Projected gradient descent with backtracking along the projection arc
// for min_{Z>=0} 0.5*||V - A*Z||_F^2, parameterized by the Gram matrix
// AtA and the product AtV. Stops when the subproblem's projected
// gradient norm drops below tol.
inline SubproblemResult nls_subproblem(const Eigen::MatrixXd& atv,
                                       const Eigen::MatrixXd& ata,
                                       Eigen::MatrixXd z, double tol,
                                       std::size_t max_inner) {
  constexpr double kBeta = 0.1;
  constexpr double kSigma = 0.01;
  double alpha = 1.0;
  Eigen::MatrixXd grad = ata * z - atv;
  std::size_t iter = 0;
  for (; iter < max_inner; ++iter) {
    grad = ata * z - atv;
    if (!grad.allFinite())
      throw NumericError("non-finite gradient in NNLS subproblem at iteration " +
                         std::to_string(iter));
    if (std::sqrt(projected_gradient_sqnorm(grad, z)) < tol) break;

    Eigen::MatrixXd zn, d;
    bool decr_alpha = true;
    Eigen::MatrixXd zp = z;
    for (int inner = 0; inner < 24; ++inner) {
      zn = (z - alpha * grad).cwiseMax(0.0);
      d = zn - z;
      const double gradd = grad.cwiseProduct(d).sum();
      const double dqd = (ata * d).cwiseProduct(d).sum();
      const bool suff_decr = (1 - kSigma) * gradd + 0.5 * dqd < 0;
      if (inner == 0) decr_alpha = !suff_decr;
      if (decr_alpha) {
        if (suff_decr) {
          z = zn;
          break;
        }
        alpha *= kBeta;
      } else {
        if (!suff_decr || (zp - zn).cwiseAbs().maxCoeff() == 0) {
          z = zp;
          break;
        }
        alpha /= kBeta;
        zp = zn;
      }
    }
    if (d.size() > 0 && d.cwiseAbs().maxCoeff() == 0) break;  // stalled
  }
  grad = ata * z - atv;
  return {std::move(z), std::move(grad), iter};
}

}  // namespace detail

// One Eq.-(4)-style solve: H <- argmin_{H>=0} ||X - W*H||_F^2 started
// from the current H.
inline Eigen::MatrixXd update_mixture(const CollationMatrix& x,
                                      const Eigen::MatrixXd& w,
                                      Eigen::MatrixXd h, double tol,
                                      std::size_t max_inner = 1000) {
  const Eigen::MatrixXd wtv = w.transpose() * x.sparse();
  const Eigen::MatrixXd wtw = w.transpose() * w;
  return detail::nls_subproblem(wtv, wtw, std::move(h), tol, max_inner).z;
}

// One Eq.-(3)-style solve for W, via the transposed system.
inline Eigen::MatrixXd update_basis(const CollationMatrix& x,
                                    Eigen::MatrixXd w,
                                    const Eigen::MatrixXd& h, double tol,
                                    std::size_t max_inner = 1000) {
  const Eigen::MatrixXd hvt = (x.sparse() * h.transpose()).transpose();
  const Eigen::MatrixXd hht = h * h.transpose();
  Eigen::MatrixXd wt = w.transpose();
  auto r = detail::nls_subproblem(hvt, hht, std::move(wt), tol, max_inner);
  return r.z.transpose();
}

// Dense NNLS for a single right-hand side: argmin_{h>=0} ||b - A*h||^2.
inline Eigen::VectorXd nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                            double tol = 1e-10, std::size_t max_inner = 10000) {
  const Eigen::MatrixXd atv = a.transpose() * b;
  const Eigen::MatrixXd ata = a.transpose() * a;
  Eigen::MatrixXd h0 = Eigen::MatrixXd::Zero(a.cols(), 1);
  const double scale = 1.0 + b.norm();
  auto r = detail::nls_subproblem(atv, ata, std::move(h0), tol * scale, max_inner);
  return r.z.col(0);
}

namespace detail {

inline Factorization factorize_single(const CollationMatrix& x,
                                      const FactorConfig& cfg,
                                      Eigen::MatrixXd w, Eigen::MatrixXd h) {
  const Eigen::SparseMatrix<double, Eigen::RowMajor>& xs = x.sparse();
  const double tol_kkt = cfg.tol * (1.0 + std::sqrt(x.squared_frobenius()));
  const bool bounded = std::isfinite(cfg.entry_bound);
  auto clamp = [&](Eigen::MatrixXd& z) {
    if (bounded) z = z.cwiseMin(cfg.entry_bound);
  };
  clamp(w);
  clamp(h);

  Factorization out;
  out.stats.objective_trace.push_back(objective(x, w, h));

  // Run-level projected-gradient norm at the initial point.
  auto grad_w = [&]() -> Eigen::MatrixXd {
    return w * (h * h.transpose()) - Eigen::MatrixXd(xs * h.transpose());
  };
  auto grad_h = [&]() -> Eigen::MatrixXd {
    return (w.transpose() * w) * h - Eigen::MatrixXd(w.transpose() * xs);
  };
  const double initgrad =
      std::sqrt(grad_w().squaredNorm() + grad_h().squaredNorm());
  double tol_w = std::max(1e-3, cfg.tol) * initgrad;
  double tol_h = tol_w;

  std::size_t iter = 0;
  for (; iter < cfg.max_iter; ++iter) {
    {
      const Eigen::MatrixXd hvt = (xs * h.transpose()).transpose();
      const Eigen::MatrixXd hht = h * h.transpose();
      Eigen::MatrixXd wt = w.transpose();
      auto r = nls_subproblem(hvt, hht, std::move(wt), tol_w, 1000);
      w = r.z.transpose();
      if (r.iterations <= 1) tol_w *= 0.1;
    }
    clamp(w);
    {
      const Eigen::MatrixXd wtv = w.transpose() * xs;
      const Eigen::MatrixXd wtw = w.transpose() * w;
      auto r = nls_subproblem(wtv, wtw, std::move(h), tol_h, 1000);
      h = std::move(r.z);
      if (r.iterations <= 1) tol_h *= 0.1;
    }
    clamp(h);
    out.stats.objective_trace.push_back(objective(x, w, h));

    const Eigen::MatrixXd gw = grad_w();
    const Eigen::MatrixXd gh = grad_h();
    const double projnorm = std::sqrt(projected_gradient_sqnorm(gw, w) +
                                      projected_gradient_sqnorm(gh, h));
    const double kkt = std::max(kkt_violation(gw, w), kkt_violation(gh, h));
    if (projnorm <= cfg.tol * initgrad && kkt <= tol_kkt) {
      out.stats.converged = true;
      ++iter;
      break;
    }
  }

  out.w = std::move(w);
  out.h = std::move(h);
  out.stats.n_iter = iter;
  out.stats.dist = out.stats.objective_trace.back();
  out.stats.evar = explained_variance(x, out.w, out.h);
  out.stats.w_sparseness = hoyer_sparseness(out.w);
  out.stats.h_sparseness = hoyer_sparseness(out.h);
  return out;
}

inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> random_init(
    const CollationMatrix& x, std::size_t k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::MatrixXd w(x.rows(), k);
  Eigen::MatrixXd h(k, x.cols());
  for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = unif(rng);
  for (Eigen::Index i = 0; i < h.size(); ++i) h(i) = unif(rng);
  return {w, h};
}

}  // namespace detail

inline Factorization factorize(const CollationMatrix& x,
                               const FactorConfig& cfg) {
  cfg.validate(x.rows(), x.cols());
  if (cfg.init == InitMethod::Nndsvd) {
    auto [w, h] = nndsvd_init(x, cfg.k);
    return detail::factorize_single(x, cfg, std::move(w), std::move(h));
  }
  Factorization best;
  for (std::size_t r = 0; r < cfg.runs; ++r) {
    auto [w, h] = detail::random_init(x, cfg.k, cfg.seed + r);
    auto run = detail::factorize_single(x, cfg, std::move(w), std::move(h));
    if (r == 0 || run.stats.dist < best.stats.dist) best = std::move(run);
  }
  return best;
}

}  // namespace textclust
