#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gaitkit/core.hpp"

namespace gaitkit {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class ModelKind {
  LogisticL1,
  LogisticL2,
  Ridge,
  ElasticNet,
  Lasso,
  LinearSvm,
  LinearSvr,
};

inline const char* model_name(ModelKind k) {
  switch (k) {
    case ModelKind::LogisticL1: return "logistic_l1";
    case ModelKind::LogisticL2: return "logistic_l2";
    case ModelKind::Ridge: return "ridge";
    case ModelKind::ElasticNet: return "elastic_net";
    case ModelKind::Lasso: return "lasso";
    case ModelKind::LinearSvm: return "linear_svm";
    case ModelKind::LinearSvr: return "linear_svr";
  }
  return "?";
}

inline ModelKind model_from_name(const std::string& s) {
  for (ModelKind k : {ModelKind::LogisticL1, ModelKind::LogisticL2,
                      ModelKind::Ridge, ModelKind::ElasticNet, ModelKind::Lasso,
                      ModelKind::LinearSvm, ModelKind::LinearSvr})
    if (s == model_name(k)) return k;
  throw Error("unknown model kind: " + s);
}

struct LinearModelSpec {
  ModelKind kind = ModelKind::Ridge;
  double strength = 1.0;   // alpha for penalized LS, C for logistic/SVM/SVR
  double epsilon = 0.1;    // SVR tube half-width
  double l1_ratio = 0.5;   // elastic net mix

  bool is_classifier() const {
    return kind == ModelKind::LogisticL1 || kind == ModelKind::LogisticL2 ||
           kind == ModelKind::LinearSvm;
  }
  void check() const {
    if (strength <= 0.0) throw Error("regularization strength must be > 0");
  }
};

struct LinearModel {
  VectorXd w;
  double b = 0.0;
  VectorXd decision(const MatrixXd& X) const {
    return (X * w).array() + b;
  }
};

// ---------------------------------------------------------------------------
// convex solvers
// ---------------------------------------------------------------------------

namespace detail {

inline constexpr double kSolveTol = 1e-10;
inline constexpr int kSolveMaxIter = 200000;

// objective values; classification labels are +/-1
inline double objective(const LinearModelSpec& spec, const MatrixXd& X,
                        const VectorXd& y, const VectorXd& w, double b) {
  const double n = static_cast<double>(X.rows());
  VectorXd f = (X * w).array() + b;
  switch (spec.kind) {
    case ModelKind::Ridge:
      return (f - y).squaredNorm() / (2.0 * n) +
             0.5 * spec.strength * w.squaredNorm();
    case ModelKind::Lasso:
      return (f - y).squaredNorm() / (2.0 * n) +
             spec.strength * w.lpNorm<1>();
    case ModelKind::ElasticNet:
      return (f - y).squaredNorm() / (2.0 * n) +
             spec.strength * (spec.l1_ratio * w.lpNorm<1>() +
                              0.5 * (1.0 - spec.l1_ratio) * w.squaredNorm());
    case ModelKind::LogisticL2: {
      double loss = 0.0;
      for (int i = 0; i < f.size(); ++i)
        loss += std::log1p(std::exp(-std::abs(y[i] * f[i]))) +
                std::max(0.0, -y[i] * f[i]);
      return loss / n + 0.5 / spec.strength * w.squaredNorm();
    }
    case ModelKind::LogisticL1: {
      double loss = 0.0;
      for (int i = 0; i < f.size(); ++i)
        loss += std::log1p(std::exp(-std::abs(y[i] * f[i]))) +
                std::max(0.0, -y[i] * f[i]);
      return loss / n + (1.0 / spec.strength) * w.lpNorm<1>();
    }
    case ModelKind::LinearSvm: {
      // L2-loss (squared hinge) SVM
      double loss = 0.0;
      for (int i = 0; i < f.size(); ++i) {
        double m = std::max(0.0, 1.0 - y[i] * f[i]);
        loss += m * m;
      }
      return 0.5 * w.squaredNorm() + spec.strength * loss;
    }
    case ModelKind::LinearSvr: {
      // L2-loss epsilon-insensitive SVR
      double loss = 0.0;
      for (int i = 0; i < f.size(); ++i) {
        double m = std::max(0.0, std::abs(f[i] - y[i]) - spec.epsilon);
        loss += m * m;
      }
      return 0.5 * w.squaredNorm() + spec.strength * loss;
    }
  }
  return 0.0;
}

inline double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

// Coordinate descent for ridge / lasso / elastic net (bias unpenalized).
inline LinearModel fit_coordinate_descent(const LinearModelSpec& spec,
                                          const MatrixXd& X, const VectorXd& y) {
  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());
  double l1 = 0.0, l2 = 0.0;
  switch (spec.kind) {
    case ModelKind::Ridge: l2 = spec.strength; break;
    case ModelKind::Lasso: l1 = spec.strength; break;
    case ModelKind::ElasticNet:
      l1 = spec.strength * spec.l1_ratio;
      l2 = spec.strength * (1.0 - spec.l1_ratio);
      break;
    default: throw Error("coordinate descent: unsupported model");
  }
  Eigen::RowVectorXd xmean = X.colwise().mean();
  MatrixXd Xc = X.rowwise() - xmean;
  double ymean = y.mean();
  VectorXd yc = y.array() - ymean;

  VectorXd colsq(p);
  for (int j = 0; j < p; ++j) colsq[j] = Xc.col(j).squaredNorm() / n;
  VectorXd w = VectorXd::Zero(p);
  VectorXd resid = yc;  // yc - Xc w
  for (int it = 0; it < kSolveMaxIter; ++it) {
    double max_delta = 0.0;
    for (int j = 0; j < p; ++j) {
      if (colsq[j] <= 0.0) continue;
      double rho = Xc.col(j).dot(resid) / n + colsq[j] * w[j];
      double wj = soft_threshold(rho, l1) / (colsq[j] + l2);
      double delta = wj - w[j];
      if (delta != 0.0) {
        resid -= delta * Xc.col(j);
        w[j] = wj;
        max_delta = std::max(max_delta, std::abs(delta));
      }
    }
    if (max_delta < kSolveTol) break;
  }
  LinearModel m;
  m.w = w;
  m.b = ymean - xmean.dot(w);
  return m;
}

// Newton with backtracking for smooth objectives (logistic L2, squared
// hinge SVM, squared epsilon-insensitive SVR). Optimizes [w; b] jointly.
template <class LossGradHess>
inline LinearModel fit_newton(int p, LossGradHess lgh) {
  VectorXd wb = VectorXd::Zero(p + 1);
  double obj = 0.0;
  VectorXd grad(p + 1);
  MatrixXd hess(p + 1, p + 1);
  for (int it = 0; it < 200; ++it) {
    lgh(wb, &obj, &grad, &hess);
    if (grad.norm() < 1e-10) break;
    hess.diagonal().array() += 1e-12;
    VectorXd step = hess.ldlt().solve(grad);
    double t = 1.0;
    double g_dot_s = grad.dot(step);
    for (int ls = 0; ls < 60; ++ls) {
      VectorXd cand = wb - t * step;
      double cobj;
      lgh(cand, &cobj, nullptr, nullptr);
      if (cobj <= obj - 1e-4 * t * g_dot_s) {
        wb = cand;
        break;
      }
      t *= 0.5;
    }
  }
  LinearModel m;
  m.w = wb.head(p);
  m.b = wb[p];
  return m;
}

inline LinearModel fit_logistic_l2(const LinearModelSpec& spec,
                                   const MatrixXd& X, const VectorXd& y) {
  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());
  double lambda = 1.0 / spec.strength;
  auto lgh = [&](const VectorXd& wb, double* obj, VectorXd* g, MatrixXd* h) {
    VectorXd f = (X * wb.head(p)).array() + wb[p];
    double loss = 0.0;
    VectorXd d(n), s(n);
    for (int i = 0; i < n; ++i) {
      double m = y[i] * f[i];
      loss += std::log1p(std::exp(-std::abs(m))) + std::max(0.0, -m);
      double sig = 1.0 / (1.0 + std::exp(-m));
      d[i] = -y[i] * (1.0 - sig) / n;
      s[i] = sig * (1.0 - sig) / n;
    }
    if (obj)
      *obj = loss / n + 0.5 * lambda * wb.head(p).squaredNorm();
    if (g) {
      g->head(p) = X.transpose() * d + lambda * wb.head(p);
      (*g)[p] = d.sum();
    }
    if (h) {
      MatrixXd Xa(n, p + 1);
      Xa.leftCols(p) = X;
      Xa.col(p).setOnes();
      *h = Xa.transpose() * s.asDiagonal() * Xa;
      h->topLeftCorner(p, p).diagonal().array() += lambda;
    }
  };
  return fit_newton(p, lgh);
}

inline LinearModel fit_squared_hinge(const LinearModelSpec& spec,
                                     const MatrixXd& X, const VectorXd& y,
                                     bool svr) {
  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());
  double C = spec.strength, eps = spec.epsilon;
  auto lgh = [&](const VectorXd& wb, double* obj, VectorXd* g, MatrixXd* h) {
    VectorXd f = (X * wb.head(p)).array() + wb[p];
    double loss = 0.0;
    VectorXd d = VectorXd::Zero(n), s = VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
      if (!svr) {
        double m = 1.0 - y[i] * f[i];
        if (m > 0.0) {
          loss += m * m;
          d[i] = -2.0 * C * y[i] * m;
          s[i] = 2.0 * C;
        }
      } else {
        double r = f[i] - y[i];
        double m = std::abs(r) - eps;
        if (m > 0.0) {
          loss += m * m;
          d[i] = 2.0 * C * m * (r > 0 ? 1.0 : -1.0);
          s[i] = 2.0 * C;
        }
      }
    }
    if (obj) *obj = 0.5 * wb.head(p).squaredNorm() + C * loss;
    if (g) {
      g->head(p) = X.transpose() * d + wb.head(p);
      (*g)[p] = d.sum();
    }
    if (h) {
      MatrixXd Xa(n, p + 1);
      Xa.leftCols(p) = X;
      Xa.col(p).setOnes();
      *h = Xa.transpose() * s.asDiagonal() * Xa;
      h->topLeftCorner(p, p).diagonal().array() += 1.0;
    }
  };
  return fit_newton(p, lgh);
}

// FISTA with backtracking for L1 logistic (bias unpenalized).
inline LinearModel fit_logistic_l1(const LinearModelSpec& spec,
                                   const MatrixXd& X, const VectorXd& y) {
  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());
  double lambda = 1.0 / spec.strength;
  auto smooth = [&](const VectorXd& wb, VectorXd* g) {
    VectorXd f = (X * wb.head(p)).array() + wb[p];
    double loss = 0.0;
    VectorXd d(n);
    for (int i = 0; i < n; ++i) {
      double m = y[i] * f[i];
      loss += std::log1p(std::exp(-std::abs(m))) + std::max(0.0, -m);
      double sig = 1.0 / (1.0 + std::exp(-m));
      d[i] = -y[i] * (1.0 - sig) / n;
    }
    if (g) {
      g->head(p) = X.transpose() * d;
      (*g)[p] = d.sum();
    }
    return loss / n;
  };
  VectorXd wb = VectorXd::Zero(p + 1), z = wb, wb_prev = wb;
  double L = 1.0;
  double theta = 1.0;
  VectorXd g(p + 1);
  for (int it = 0; it < 20000; ++it) {
    double fz = smooth(z, &g);
    // backtracking on the smooth majorizer
    VectorXd next;
    for (int bt = 0; bt < 60; ++bt) {
      next = z - g / L;
      for (int j = 0; j < p; ++j)
        next[j] = soft_threshold(next[j], lambda / L);
      double fn = smooth(next, nullptr);
      VectorXd diff = next - z;
      if (fn <= fz + g.dot(diff) + 0.5 * L * diff.squaredNorm() + 1e-15) break;
      L *= 2.0;
    }
    wb_prev = wb;
    wb = next;
    double theta_next = (1.0 + std::sqrt(1.0 + 4.0 * theta * theta)) / 2.0;
    z = wb + ((theta - 1.0) / theta_next) * (wb - wb_prev);
    theta = theta_next;
    if ((wb - wb_prev).lpNorm<Eigen::Infinity>() < kSolveTol && it > 10) break;
  }
  LinearModel m;
  m.w = wb.head(p);
  m.b = wb[p];
  return m;
}

}  // namespace detail

// Deterministic fit of any supported linear model.
inline LinearModel fit_model(const LinearModelSpec& spec, const MatrixXd& X,
                             const VectorXd& y) {
  spec.check();
  if (X.rows() != y.size()) throw Error("fit_model: X/y size mismatch");
  switch (spec.kind) {
    case ModelKind::Ridge:
    case ModelKind::Lasso:
    case ModelKind::ElasticNet:
      return detail::fit_coordinate_descent(spec, X, y);
    case ModelKind::LogisticL2:
      return detail::fit_logistic_l2(spec, X, y);
    case ModelKind::LogisticL1:
      return detail::fit_logistic_l1(spec, X, y);
    case ModelKind::LinearSvm:
      return detail::fit_squared_hinge(spec, X, y, false);
    case ModelKind::LinearSvr:
      return detail::fit_squared_hinge(spec, X, y, true);
  }
  throw Error("unreachable");
}

inline double model_objective(const LinearModelSpec& spec, const MatrixXd& X,
                              const VectorXd& y, const LinearModel& m) {
  return detail::objective(spec, X, y, m.w, m.b);
}

// ---------------------------------------------------------------------------
// scaling, imputation
// ---------------------------------------------------------------------------

// Robust scaler: (x - median) / IQR, fitted on training data only.
struct RobustScaler {
  VectorXd median_;
  VectorXd scale_;

  static double quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    double pos = q * static_cast<double>(v.size() - 1);
    size_t lo = static_cast<size_t>(std::floor(pos));
    size_t hi = std::min(lo + 1, v.size() - 1);
    double frac = pos - static_cast<double>(lo);
    return v[lo] * (1 - frac) + v[hi] * frac;
  }

  void fit(const MatrixXd& X) {
    const int p = static_cast<int>(X.cols());
    median_.resize(p);
    scale_.resize(p);
    for (int j = 0; j < p; ++j) {
      std::vector<double> col(X.col(j).data(), X.col(j).data() + X.rows());
      median_[j] = quantile(col, 0.5);
      double iqr = quantile(col, 0.75) - quantile(col, 0.25);
      scale_[j] = iqr > 1e-12 ? iqr : 1.0;
    }
  }
  MatrixXd transform(const MatrixXd& X) const {
    return (X.rowwise() - median_.transpose()).array().rowwise() /
           scale_.transpose().array();
  }
};

// Median imputation of NaN entries, fitted per training fold.
struct MedianImputer {
  VectorXd median_;
  void fit(const MatrixXd& X) {
    const int p = static_cast<int>(X.cols());
    median_.resize(p);
    for (int j = 0; j < p; ++j) {
      std::vector<double> col;
      for (int i = 0; i < X.rows(); ++i)
        if (std::isfinite(X(i, j))) col.push_back(X(i, j));
      median_[j] = col.empty() ? 0.0 : RobustScaler::quantile(col, 0.5);
    }
  }
  MatrixXd transform(MatrixXd X) const {
    for (int j = 0; j < X.cols(); ++j)
      for (int i = 0; i < X.rows(); ++i)
        if (!std::isfinite(X(i, j))) X(i, j) = median_[j];
    return X;
  }
};

// Scale on train, fit, predict decision values on test.
inline VectorXd fit_predict(const LinearModelSpec& spec, const MatrixXd& X_train,
                            const VectorXd& y_train, const MatrixXd& X_test) {
  RobustScaler sc;
  sc.fit(X_train);
  LinearModel m = fit_model(spec, sc.transform(X_train), y_train);
  return m.decision(sc.transform(X_test));
}

// ---------------------------------------------------------------------------
// correlation utilities, collinearity filter
// ---------------------------------------------------------------------------

inline double pearson(const VectorXd& a, const VectorXd& b) {
  double ma = a.mean(), mb = b.mean();
  VectorXd da = a.array() - ma, db = b.array() - mb;
  double na = da.norm(), nb = db.norm();
  if (na < 1e-12 || nb < 1e-12) return 0.0;  // zero-variance: correlation 0
  return da.dot(db) / (na * nb);
}

// Target-aware collinearity filter: of each pair with |rho| above threshold,
// the feature less correlated with y is dropped; iterated to a fixed point.
inline std::vector<int> collinearity_filter(const MatrixXd& X, const VectorXd& y,
                                            double threshold = 0.9) {
  const int p = static_cast<int>(X.cols());
  if (p < 2) {
    std::vector<int> all(p);
    std::iota(all.begin(), all.end(), 0);
    return all;
  }
  std::vector<int> alive(p);
  std::iota(alive.begin(), alive.end(), 0);
  VectorXd ycorr(p);
  std::vector<bool> constant(p, false);
  for (int j = 0; j < p; ++j) {
    constant[j] = (X.col(j).array() - X.col(j).mean()).matrix().norm() < 1e-12;
    ycorr[j] = std::abs(pearson(X.col(j), y));
  }
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t a = 0; a < alive.size() && !changed; ++a) {
      for (size_t b = a + 1; b < alive.size() && !changed; ++b) {
        int i = alive[a], j = alive[b];
        double rho;
        if (constant[i] && constant[j]) rho = 1.0;  // both flat: duplicates
        else rho = std::abs(pearson(X.col(i), X.col(j)));
        if (rho > threshold) {
          // drop the one with the weaker target correlation; ties keep the
          // lower index
          int drop = ycorr[i] < ycorr[j] ? i : (ycorr[j] < ycorr[i] ? j : j);
          alive.erase(std::find(alive.begin(), alive.end(), drop));
          changed = true;
        }
      }
    }
  }
  return alive;
}

// ---------------------------------------------------------------------------
// cross-validation machinery
// ---------------------------------------------------------------------------

inline std::vector<int> fold_assignment(const VectorXd& y, int k, bool stratify,
                                        uint64_t seed) {
  const int n = static_cast<int>(y.size());
  if (n < k) throw Error("fewer samples than folds");
  std::mt19937_64 rng(seed);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> fold(n, 0);
  if (!stratify) {
    for (int i = 0; i < n; ++i) fold[order[i]] = i % k;
  } else {
    // round-robin within each class so every training split sees both
    std::map<int, int> counter;
    for (int idx : order) {
      int cls = y[idx] > 0 ? 1 : 0;
      fold[idx] = counter[cls]++ % k;
    }
  }
  return fold;
}

struct Metrics {
  double accuracy = std::numeric_limits<double>::quiet_NaN();
  double auc = std::numeric_limits<double>::quiet_NaN();
  double r2 = std::numeric_limits<double>::quiet_NaN();
  double rmse = std::numeric_limits<double>::quiet_NaN();
};

inline double auc_score(const VectorXd& y, const VectorXd& score) {
  // rank-based Mann-Whitney AUC with tie correction
  std::vector<int> idx(score.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](int a, int b) { return score[a] < score[b]; });
  double n_pos = 0, n_neg = 0, rank_sum = 0;
  size_t i = 0;
  double rank = 1;
  while (i < idx.size()) {
    size_t j = i;
    while (j + 1 < idx.size() && score[idx[j + 1]] == score[idx[i]]) ++j;
    double avg_rank = (rank + rank + static_cast<double>(j - i)) / 2.0;
    for (size_t t = i; t <= j; ++t) {
      if (y[idx[t]] > 0) {
        rank_sum += avg_rank;
        n_pos += 1;
      } else {
        n_neg += 1;
      }
    }
    rank += static_cast<double>(j - i + 1);
    i = j + 1;
  }
  if (n_pos == 0 || n_neg == 0)
    return std::numeric_limits<double>::quiet_NaN();
  return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg);
}

inline Metrics score_predictions(const VectorXd& y, const VectorXd& pred,
                                 bool classification) {
  Metrics m;
  if (classification) {
    double correct = 0;
    for (int i = 0; i < y.size(); ++i)
      if ((pred[i] > 0) == (y[i] > 0)) correct += 1;
    m.accuracy = correct / static_cast<double>(y.size());
    m.auc = auc_score(y, pred);
  } else {
    double ss_res = (y - pred).squaredNorm();
    double ss_tot = (y.array() - y.mean()).matrix().squaredNorm();
    m.rmse = std::sqrt(ss_res / static_cast<double>(y.size()));
    if (ss_tot > 1e-24) m.r2 = 1.0 - ss_res / ss_tot;
  }
  return m;
}

enum class CvScheme { Loocv, Kfold };

// Out-of-fold evaluation on a fixed feature subset. Imputation and scaling
// are fitted inside each training fold.
inline Metrics evaluate(const MatrixXd& X, const VectorXd& y,
                        const std::vector<int>& features,
                        const LinearModelSpec& spec, CvScheme scheme,
                        int k = 10, uint64_t seed = 7) {
  if (features.empty()) throw Error("evaluate: empty feature subset");
  const int n = static_cast<int>(X.rows());
  bool cls = spec.is_classifier();
  if (cls) {
    bool has_pos = false, has_neg = false;
    for (int i = 0; i < n; ++i) (y[i] > 0 ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg)
      throw Error("classification target has a single class");
  }
  MatrixXd Xs(n, features.size());
  for (size_t j = 0; j < features.size(); ++j) Xs.col(j) = X.col(features[j]);

  int folds = scheme == CvScheme::Loocv ? n : k;
  std::vector<int> fold =
      scheme == CvScheme::Loocv
          ? [&] {
              std::vector<int> f(n);
              std::iota(f.begin(), f.end(), 0);
              return f;
            }()
          : fold_assignment(y, k, cls, seed);

  VectorXd pred(n);
  for (int f = 0; f < folds; ++f) {
    std::vector<int> tr, te;
    for (int i = 0; i < n; ++i) (fold[i] == f ? te : tr).push_back(i);
    if (te.empty()) continue;
    MatrixXd Xtr(tr.size(), Xs.cols()), Xte(te.size(), Xs.cols());
    VectorXd ytr(tr.size());
    for (size_t i = 0; i < tr.size(); ++i) {
      Xtr.row(i) = Xs.row(tr[i]);
      ytr[i] = y[tr[i]];
    }
    for (size_t i = 0; i < te.size(); ++i) Xte.row(i) = Xs.row(te[i]);
    MedianImputer imp;
    imp.fit(Xtr);
    VectorXd p = fit_predict(spec, imp.transform(Xtr), ytr, imp.transform(Xte));
    for (size_t i = 0; i < te.size(); ++i) pred[te[i]] = p[i];
  }
  return score_predictions(y, pred, cls);
}

// ---------------------------------------------------------------------------
// sequential backward selection
// ---------------------------------------------------------------------------

namespace detail {

// Inner-CV error of a feature subset: error rate (classification) or MSE.
inline double inner_cv_error(const MatrixXd& X, const VectorXd& y,
                             const std::vector<int>& features,
                             const LinearModelSpec& spec, int folds,
                             uint64_t seed) {
  Metrics m = evaluate(X, y, features, spec, CvScheme::Kfold, folds, seed);
  if (spec.is_classifier()) return 1.0 - m.accuracy;
  double mse = m.rmse * m.rmse;
  return mse;
}

// Fast ridge-specific SBS evaluator: per inner fold it caches centered
// Gram matrices and applies rank-1 downdates when a candidate feature is
// removed (Sherman-Morrison on the regularized inverse).
struct RidgeSbsFold {
  MatrixXd Xc_tr;   // centered training columns (full feature set)
  MatrixXd Xc_te;   // test columns centered by training means
  VectorXd yc_tr;
  VectorXd y_te;
  double ymean;
  MatrixXd Minv;    // (G + n*alpha*I)^-1 over the active set
  MatrixXd K;       // Xc_te * Xc_tr^T over the active set
  double n_alpha;

  void init(const MatrixXd& X, const VectorXd& y, const std::vector<int>& tr,
            const std::vector<int>& te, const std::vector<int>& features,
            double alpha) {
    const int ntr = static_cast<int>(tr.size());
    Xc_tr.resize(ntr, features.size());
    Xc_te.resize(te.size(), features.size());
    yc_tr.resize(ntr);
    y_te.resize(te.size());
    for (size_t j = 0; j < features.size(); ++j) {
      double m = 0;
      for (int i : tr) m += X(i, features[j]);
      m /= ntr;
      for (int i = 0; i < ntr; ++i) Xc_tr(i, j) = X(tr[i], features[j]) - m;
      for (size_t i = 0; i < te.size(); ++i)
        Xc_te(i, j) = X(te[i], features[j]) - m;
    }
    ymean = 0;
    for (int i : tr) ymean += y[i];
    ymean /= ntr;
    for (int i = 0; i < ntr; ++i) yc_tr[i] = y[tr[i]] - ymean;
    for (size_t i = 0; i < te.size(); ++i) y_te[i] = y[te[i]];
    n_alpha = alpha * ntr;
    MatrixXd G = Xc_tr * Xc_tr.transpose();
    G.diagonal().array() += n_alpha;
    Minv = G.inverse();
    K = Xc_te * Xc_tr.transpose();
  }

  // squared error on the fold if column `local_j` (index into the current
  // active layout) were removed; pass -1 to evaluate the current set
  double error_without(int local_j) const {
    VectorXd alpha_d;
    VectorXd pred;
    if (local_j < 0) {
      alpha_d = Minv * yc_tr;
      pred = K * alpha_d;
    } else {
      const VectorXd c = Xc_tr.col(local_j);
      VectorXd Mc = Minv * c;
      double denom = 1.0 - c.dot(Mc);
      VectorXd My = Minv * yc_tr;
      alpha_d = My + Mc * (c.dot(My) / denom);
      pred = K * alpha_d - Xc_te.col(local_j) * (c.dot(alpha_d));
    }
    double err = 0.0;
    for (int i = 0; i < y_te.size(); ++i) {
      double e = pred[i] + ymean - y_te[i];
      err += e * e;
    }
    return err;
  }

  void commit_removal(int local_j) {
    const VectorXd c = Xc_tr.col(local_j);
    VectorXd Mc = Minv * c;
    double denom = 1.0 - c.dot(Mc);
    Minv += (Mc * Mc.transpose()) / denom;
    K -= Xc_te.col(local_j) * c.transpose();
    // drop the column from the layouts
    int last = static_cast<int>(Xc_tr.cols()) - 1;
    if (local_j != last) {
      Xc_tr.col(local_j) = Xc_tr.col(last);
      Xc_te.col(local_j) = Xc_te.col(last);
    }
    Xc_tr.conservativeResize(Eigen::NoChange, last);
    Xc_te.conservativeResize(Eigen::NoChange, last);
  }

  void rebuild() {
    MatrixXd G = Xc_tr * Xc_tr.transpose();
    G.diagonal().array() += n_alpha;
    Minv = G.inverse();
    K = Xc_te * Xc_tr.transpose();
  }
};

}  // namespace detail

// Wrapper-based backward elimination. The greedy removal order is driven by
// CV error over the training rows; the kept subset is the smallest one on the
// optimal plateau of the elimination path, scored on an evaluation split the
// greedy loop never sees. The honest split matters: after hundreds of greedy
// decisions the training-side CV error is wildly optimistic and its minimum
// sits at large subset sizes even on pure noise, so it cannot arbitrate
// subset size on its own. Callers with held-out rows (e.g. the out-of-bag
// half of a stability run) pass them as X_eval/y_eval; otherwise the last
// ~40% of the inner folds are sacrificed to form the evaluation split.
inline constexpr double kSbsSelectionShrink = 0.1;
inline std::vector<int> sbs_select(const MatrixXd& X, const VectorXd& y,
                                   const LinearModelSpec& spec,
                                   int inner_folds = 5, uint64_t seed = 13,
                                   const MatrixXd* X_eval = nullptr,
                                   const VectorXd* y_eval = nullptr) {
  const int p = static_cast<int>(X.cols());
  const int n = static_cast<int>(X.rows());
  std::vector<int> current(p);
  std::iota(current.begin(), current.end(), 0);
  if (p < 2) return current;

  const bool fast_ridge = spec.kind == ModelKind::Ridge;
  const bool external_eval = X_eval != nullptr && X_eval->rows() > 0;
  std::vector<int> fold = fold_assignment(y, inner_folds, spec.is_classifier(),
                                          seed);
  int n_sel_folds = inner_folds;
  std::vector<int> sel_rows, eval_rows;
  if (external_eval) {
    sel_rows.resize(n);
    std::iota(sel_rows.begin(), sel_rows.end(), 0);
  } else {
    n_sel_folds = inner_folds - std::max(1, (2 * inner_folds) / 5);
    for (int i = 0; i < n; ++i)
      (fold[i] < n_sel_folds ? sel_rows : eval_rows).push_back(i);
  }
  const int m_eval =
      external_eval ? static_cast<int>(X_eval->rows())
                    : static_cast<int>(eval_rows.size());

  // selection-side CV folds train within sel_rows only; the eval fold trains
  // on all of sel_rows and tests on the evaluation rows
  std::vector<detail::RidgeSbsFold> folds;
  detail::RidgeSbsFold eval_fold;
  MatrixXd Xsel, Xeval;
  VectorXd ysel, yeval;
  Xsel.resize(sel_rows.size(), p);
  ysel.resize(sel_rows.size());
  for (size_t i = 0; i < sel_rows.size(); ++i) {
    Xsel.row(i) = X.row(sel_rows[i]);
    ysel[i] = y[sel_rows[i]];
  }
  if (external_eval) {
    Xeval = *X_eval;
    yeval = *y_eval;
  } else {
    Xeval.resize(eval_rows.size(), p);
    yeval.resize(eval_rows.size());
    for (size_t i = 0; i < eval_rows.size(); ++i) {
      Xeval.row(i) = X.row(eval_rows[i]);
      yeval[i] = y[eval_rows[i]];
    }
  }

  // z-score on the training rows so the shared ridge penalty is comparable
  // across raw feature scales (cadence in steps/min sits next to timing
  // dispersions of a few milliseconds); the eval split reuses the training
  // statistics
  for (int j = 0; j < p; ++j) {
    double mu = Xsel.col(j).mean();
    double sd = std::sqrt((Xsel.col(j).array() - mu).square().sum() /
                          std::max<int>(1, static_cast<int>(Xsel.rows()) - 1));
    if (sd < 1e-12) sd = 1.0;
    Xsel.col(j) = (Xsel.col(j).array() - mu) / sd;
    if (Xeval.rows() > 0) Xeval.col(j) = (Xeval.col(j).array() - mu) / sd;
  }

  // marginal screen ahead of the wrapper: with p far beyond the training
  // rows the shrunk ridge spreads a real coefficient over many chance-
  // correlated columns and the greedy criterion can no longer tell a
  // predictor from noise, so elimination starts from the top marginal
  // candidates instead of the full set
  const int n_sel = static_cast<int>(sel_rows.size());
  const int screen_cap = std::max(15, (3 * n_sel) / 2);
  if (p > screen_cap) {
    std::vector<std::pair<double, int>> rank(p);
    for (int j = 0; j < p; ++j)
      rank[j] = {-std::abs(pearson(Xsel.col(j), ysel)), j};
    std::sort(rank.begin(), rank.end());
    current.clear();
    for (int j = 0; j < screen_cap; ++j) current.push_back(rank[j].second);
    std::sort(current.begin(), current.end());
  }
  if (fast_ridge) {
    std::vector<int> fold_sel = external_eval
        ? fold
        : fold_assignment(ysel, n_sel_folds, spec.is_classifier(), seed);
    for (int f = 0; f < n_sel_folds; ++f) {
      std::vector<int> tr, te;
      for (int i = 0; i < static_cast<int>(Xsel.rows()); ++i)
        (fold_sel[i] == f ? te : tr).push_back(i);
      if (te.empty() || tr.empty()) continue;
      folds.emplace_back();
      // lighter penalty than the final model: at p > n the full-strength
      // ridge shrinks fits so hard that removing a true predictor barely
      // moves the criterion
      folds.back().init(Xsel, ysel, tr, te, current,
                        spec.strength * kSbsSelectionShrink);
    }
    // stacked layout lets the eval fold reuse the rank-1 downdate machinery
    MatrixXd Xall(Xsel.rows() + Xeval.rows(), p);
    Xall << Xsel, Xeval;
    VectorXd yall(ysel.size() + yeval.size());
    yall << ysel, yeval;
    std::vector<int> tr(Xsel.rows()), te(Xeval.rows());
    std::iota(tr.begin(), tr.end(), 0);
    std::iota(te.begin(), te.end(), static_cast<int>(Xsel.rows()));
    eval_fold.init(Xall, yall, tr, te, current,
                   spec.strength * kSbsSelectionShrink);
  }

  auto selection_error = [&](int remove_local) {
    if (fast_ridge) {
      double err = 0.0;
      for (const auto& f : folds) err += f.error_without(remove_local);
      return err;
    }
    std::vector<int> sub = current;
    if (remove_local >= 0) sub.erase(sub.begin() + remove_local);
    return detail::inner_cv_error(Xsel, ysel, sub, spec, n_sel_folds, seed);
  };
  auto eval_error = [&]() {
    if (fast_ridge) return eval_fold.error_without(-1);
    MatrixXd A(Xsel.rows(), current.size()), B(Xeval.rows(), current.size());
    for (size_t j = 0; j < current.size(); ++j) {
      A.col(j) = Xsel.col(current[j]);
      B.col(j) = Xeval.col(current[j]);
    }
    VectorXd pred = fit_predict(spec, A, ysel, B);
    double err = 0.0;
    if (spec.is_classifier()) {
      for (int i = 0; i < pred.size(); ++i)
        err += ((pred[i] > 0) != (yeval[i] > 0)) ? 1.0 : 0.0;
    } else {
      err = (pred - yeval).squaredNorm();
    }
    return err;
  };

  // walk the path to the end, recording the removal order and honest errors
  std::vector<double> path_err;
  std::vector<int> removed;
  path_err.push_back(eval_error());
  int commits_since_rebuild = 0;

  while (current.size() > 1) {
    int best_local = -1;
    double best_step = std::numeric_limits<double>::infinity();
    for (size_t j = 0; j < current.size(); ++j) {
      double e = selection_error(static_cast<int>(j));
      if (e < best_step) {
        best_step = e;
        best_local = static_cast<int>(j);
      }
    }
    if (best_local < 0) break;
    // commit the removal (swap-with-last layout, mirrored in the fold caches)
    int last = static_cast<int>(current.size()) - 1;
    if (fast_ridge) {
      for (auto& f : folds) f.commit_removal(best_local);
      eval_fold.commit_removal(best_local);
    }
    removed.push_back(current[best_local]);
    if (best_local != last) std::swap(current[best_local], current[last]);
    current.pop_back();
    if (fast_ridge && ++commits_since_rebuild >= 25) {
      for (auto& f : folds) f.rebuild();
      eval_fold.rebuild();
      commits_since_rebuild = 0;
    }
    path_err.push_back(eval_error());
  }

  // one-SE plateau: for an SSE over m rows sd(SSE) ~ sigma^2*sqrt(2m), so a
  // relative band of sqrt(2/m) around the minimum is one standard error of
  // the estimate itself; on a flat noise path nearly every size falls inside
  // it, while losing a real predictor jumps far outside
  double best_err = *std::min_element(path_err.begin(), path_err.end());
  const double tol = std::sqrt(2.0 / std::max(1, m_eval));
  size_t chosen = 0;  // number of removals kept; larger means smaller subset
  for (size_t t = 0; t < path_err.size(); ++t)
    if (path_err[t] <= best_err * (1.0 + tol) + 1e-12) chosen = t;

  std::vector<int> best_set(removed.begin() + chosen, removed.end());
  for (int f : current) best_set.push_back(f);
  std::sort(best_set.begin(), best_set.end());
  return best_set;
}

// ---------------------------------------------------------------------------
// stability selection (the consensus protocol)
// ---------------------------------------------------------------------------

struct StabilityReport {
  std::vector<double> frequencies;      // pi_j per feature
  std::vector<int> consensus;           // feature indices, capped at 10
  std::vector<int> fold_of_sample;
  Metrics metrics;
  double permutation_p = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> null_distribution;
  std::string model;
  uint64_t seed = 0;
};

inline constexpr int kConsensusCap = 10;     // EPV cap
inline constexpr double kConsensusFreq = 0.5;

// One selection run trains on a seeded 2/3-subsample. Subsampling (rather
// than leave-one-fold-out, whose training sets share 90% of the rows) is what
// makes the frequencies informative: spurious noise selections decorrelate
// across runs while a real signal keeps reappearing. Two thirds keeps enough
// rows for the marginal screen to rank a true predictor reliably while the
// out-of-bag third still scores the elimination path honestly.
inline std::vector<int> selection_subsample(const VectorXd& y, bool stratify,
                                            uint64_t seed) {
  const int n = static_cast<int>(y.size());
  std::mt19937_64 rng(seed);
  std::vector<int> tr;
  if (!stratify) {
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    tr.assign(order.begin(), order.begin() + (2 * n + 2) / 3);
  } else {
    std::vector<int> pos, neg;
    for (int i = 0; i < n; ++i) (y[i] > 0 ? pos : neg).push_back(i);
    for (std::vector<int>* cls : {&pos, &neg}) {
      std::shuffle(cls->begin(), cls->end(), rng);
      size_t keep = std::max<size_t>(1, (2 * cls->size() + 2) / 3);
      tr.insert(tr.end(), cls->begin(), cls->begin() + keep);
    }
  }
  std::sort(tr.begin(), tr.end());
  return tr;
}

inline StabilityReport stability_select(const MatrixXd& X, const VectorXd& y,
                                        const LinearModelSpec& spec, int k = 10,
                                        uint64_t seed = 42) {
  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());
  if (n < k) throw Error("stability_select: need at least K samples");

  StabilityReport rep;
  rep.model = model_name(spec.kind);
  rep.seed = seed;
  rep.fold_of_sample = fold_assignment(y, k, spec.is_classifier(), seed);
  rep.frequencies.assign(p, 0.0);

  for (int f = 0; f < k; ++f) {
    std::vector<int> tr =
        selection_subsample(y, spec.is_classifier(), seed * 7919ULL + f);
    MatrixXd Xtr(tr.size(), p);
    VectorXd ytr(tr.size());
    for (size_t i = 0; i < tr.size(); ++i) {
      Xtr.row(i) = X.row(tr[i]);
      ytr[i] = y[tr[i]];
    }
    if (spec.is_classifier()) {
      bool pos = false, neg = false;
      for (int i = 0; i < ytr.size(); ++i) (ytr[i] > 0 ? pos : neg) = true;
      if (!pos || !neg)
        throw Error("degenerate training fold: single class after split");
    }
    MedianImputer imp;
    imp.fit(Xtr);
    MatrixXd Xtr_f = imp.transform(Xtr);
    std::vector<int> kept = collinearity_filter(Xtr_f, ytr);
    MatrixXd Xsub(tr.size(), kept.size());
    for (size_t j = 0; j < kept.size(); ++j) Xsub.col(j) = Xtr_f.col(kept[j]);
    // out-of-bag rows give the elimination path an honest evaluation split
    std::vector<int> oob;
    {
      std::vector<char> in_tr(n, 0);
      for (int i : tr) in_tr[i] = 1;
      for (int i = 0; i < n; ++i)
        if (!in_tr[i]) oob.push_back(i);
    }
    MatrixXd Xoob_raw(oob.size(), p);
    VectorXd yoob(oob.size());
    for (size_t i = 0; i < oob.size(); ++i) {
      Xoob_raw.row(i) = X.row(oob[i]);
      yoob[i] = y[oob[i]];
    }
    MatrixXd Xoob_f = imp.transform(Xoob_raw);
    MatrixXd Xoob(oob.size(), kept.size());
    for (size_t j = 0; j < kept.size(); ++j) Xoob.col(j) = Xoob_f.col(kept[j]);
    std::vector<int> sel = sbs_select(Xsub, ytr, spec, 5,
                                      seed * 1000003ULL + f, &Xoob, &yoob);
    for (int j : sel) rep.frequencies[kept[j]] += 1.0 / k;
  }

  // consensus: frequency > 0.5 capped to the 10 highest; ties broken by
  // |corr(j, y)| then feature index
  MedianImputer imp_all;
  imp_all.fit(X);
  MatrixXd Xf = imp_all.transform(X);
  std::vector<int> over;
  for (int j = 0; j < p; ++j)
    if (rep.frequencies[j] > kConsensusFreq) over.push_back(j);
  std::sort(over.begin(), over.end(), [&](int a, int b) {
    if (rep.frequencies[a] != rep.frequencies[b])
      return rep.frequencies[a] > rep.frequencies[b];
    double ca = std::abs(pearson(Xf.col(a), y));
    double cb = std::abs(pearson(Xf.col(b), y));
    if (ca != cb) return ca > cb;
    return a < b;
  });
  if (over.size() > kConsensusCap) over.resize(kConsensusCap);
  std::sort(over.begin(), over.end());
  rep.consensus = over;
  return rep;
}

// Permutation test: selection held fixed, evaluation re-run on shuffled
// targets; p = (1 + #{null >= observed}) / (N + 1).
struct PermutationResult {
  double p_value = std::numeric_limits<double>::quiet_NaN();
  double observed = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> null_distribution;
};

inline PermutationResult permutation_test(const MatrixXd& X, const VectorXd& y,
                                          const std::vector<int>& consensus,
                                          const LinearModelSpec& spec,
                                          CvScheme scheme, int n_shuffles = 1000,
                                          uint64_t seed = 99) {
  PermutationResult res;
  auto metric_of = [&](const VectorXd& target) {
    Metrics m = evaluate(X, target, consensus, spec, scheme, 10, seed);
    return spec.is_classifier() ? m.accuracy : m.r2;
  };
  res.observed = metric_of(y);
  if (n_shuffles <= 0) return res;
  std::mt19937_64 rng(seed);
  VectorXd yp = y;
  int count_ge = 0;
  res.null_distribution.reserve(n_shuffles);
  for (int s = 0; s < n_shuffles; ++s) {
    for (int i = static_cast<int>(yp.size()) - 1; i > 0; --i) {
      std::uniform_int_distribution<int> d(0, i);
      std::swap(yp[i], yp[d(rng)]);
    }
    double v;
    try {
      v = metric_of(yp);
    } catch (const Error&) {
      v = -std::numeric_limits<double>::infinity();
    }
    res.null_distribution.push_back(v);
    if (v >= res.observed) ++count_ge;
  }
  res.p_value = (1.0 + count_ge) / (static_cast<double>(n_shuffles) + 1.0);
  return res;
}

}  // namespace gaitkit
