#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "gaitkit/core.hpp"

namespace gaitkit {

struct RefineConfig {
  bool enable_loop_closure = true;
  bool enable_velocity_term = true;
  bool enable_pca_alignment = true;
  double loop_weight = 1.0;
  double smooth_weight = 1.0;

  void check() const {
    if (loop_weight < 0.0 || smooth_weight < 0.0)
      throw Error("refine weights must be >= 0");
  }
};

struct RefineReport {
  double endpoint_error_before = 0.0;  // meters
  double endpoint_error_after = 0.0;   // meters
  double yaw_applied = 0.0;            // radians
  double residual_norm = 0.0;          // max per-axis gradient norm at solution
};

inline Eigen::Matrix3d rot_y(double theta) {
  Eigen::Matrix3d r;
  r << std::cos(theta), 0.0, std::sin(theta),
       0.0,             1.0, 0.0,
      -std::sin(theta), 0.0, std::cos(theta);
  return r;
}

// Rigid global rotation about the world Y axis. Rotates joint positions,
// root translations and left-composes into root orientations.
inline SkeletonSequence rotate_y(const SkeletonSequence& seq, double yaw) {
  Eigen::Matrix3d r = rot_y(yaw);
  SkeletonSequence out = seq;
  for (JointFrame& f : out.frames) {
    for (Vec3& p : f.positions) p = r * p;
    f.root_translation = r * f.root_translation;
    Eigen::AngleAxisd aa(f.root_orientation.norm() > 0
                             ? Eigen::AngleAxisd(f.root_orientation.norm(),
                                                 f.root_orientation.normalized())
                             : Eigen::AngleAxisd::Identity());
    Eigen::AngleAxisd composed(r * aa.toRotationMatrix());
    f.root_orientation = composed.angle() * composed.axis();
  }
  return out;
}

namespace detail {

// Solves the tridiagonal system a_i x_{i-1} + b_i x_i + c_i x_{i+1} = d_i
// in place (Thomas algorithm).
inline std::vector<double> solve_tridiagonal(std::vector<double> a,
                                             std::vector<double> b,
                                             std::vector<double> c,
                                             std::vector<double> d) {
  const size_t n = b.size();
  for (size_t i = 1; i < n; ++i) {
    double m = a[i] / b[i - 1];
    b[i] -= m * c[i - 1];
    d[i] -= m * d[i - 1];
  }
  std::vector<double> x(n);
  x[n - 1] = d[n - 1] / b[n - 1];
  for (size_t i = n - 1; i-- > 0;) x[i] = (d[i] - c[i] * x[i + 1]) / b[i];
  return x;
}

// One spatial axis of the anchored loop-closure objective:
//   ws * sum_t (x*_{t+1} - x*_t - dx_t)^2 + wl * (x*_{T-1} - x*_0)^2,
// with x*_0 = x_0 fixed. The normal equations are tridiagonal in the
// T-1 free unknowns.
inline std::vector<double> refine_axis(const std::vector<double>& x, double ws,
                                       double wl) {
  const size_t T = x.size();
  const size_t n = T - 1;  // unknowns x_1 .. x_{T-1}
  std::vector<double> dx(T - 1);
  for (size_t t = 0; t + 1 < T; ++t) dx[t] = x[t + 1] - x[t];

  std::vector<double> a(n, 0.0), b(n, 0.0), c(n, 0.0), d(n, 0.0);
  if (ws <= 0.0) {
    // Limit ws -> 0+: interior equations keep the smoothness structure
    // (ws cancels), the endpoint is pinned to x_0.
    ws = 1.0;
    wl = std::numeric_limits<double>::infinity();
  }
  for (size_t i = 0; i < n; ++i) {
    size_t t = i + 1;  // trajectory index of unknown i
    if (t < T - 1) {
      a[i] = -ws;
      b[i] = 2.0 * ws;
      c[i] = -ws;
      d[i] = ws * (dx[t - 1] - dx[t]);
      if (t == 1) {
        a[i] = 0.0;
        d[i] += ws * x[0];
      }
    } else {
      // last unknown carries the loop term
      if (std::isinf(wl)) {
        a[i] = 0.0;
        b[i] = 1.0;
        d[i] = x[0];
      } else {
        a[i] = -ws;
        b[i] = ws + wl;
        d[i] = ws * dx[t - 1] + wl * x[0];
        if (t == 1) {
          a[i] = 0.0;
          d[i] += ws * x[0];
        }
      }
    }
  }
  // When T == 2 there is a single unknown; handled by the branches above.
  std::vector<double> sol = solve_tridiagonal(std::move(a), std::move(b),
                                              std::move(c), std::move(d));
  std::vector<double> out(T);
  out[0] = x[0];
  for (size_t i = 0; i < n; ++i) out[i + 1] = sol[i];
  return out;
}

// Gradient norm of the per-axis objective at a candidate solution.
inline double axis_gradient_norm(const std::vector<double>& x0,
                                 const std::vector<double>& x, double ws,
                                 double wl) {
  const size_t T = x.size();
  double sq = 0.0;
  for (size_t t = 1; t < T; ++t) {
    double g = 0.0;
    if (t < T - 1)
      g += 2.0 * ws * ((x[t] - x[t - 1] - (x0[t] - x0[t - 1])) -
                       (x[t + 1] - x[t] - (x0[t + 1] - x0[t])));
    else
      g += 2.0 * ws * (x[t] - x[t - 1] - (x0[t] - x0[t - 1]));
    if (t == T - 1) g += 2.0 * wl * (x[t] - x[0]);
    sq += g * g;
  }
  return std::sqrt(sq);
}

}  // namespace detail

// Drift correction of the pelvis track by anchored least squares.
// Each spatial dimension is solved independently.
inline std::vector<Vec3> refine_loop_closure(const std::vector<Vec3>& track,
                                             const RefineConfig& cfg,
                                             RefineReport* report = nullptr) {
  cfg.check();
  if (track.size() < 3)
    throw Error("loop closure needs at least 3 frames, got " +
                std::to_string(track.size()));
  const size_t T = track.size();
  double err_before = (track[T - 1] - track[0]).norm();
  if (!cfg.enable_loop_closure) {
    if (report) {
      report->endpoint_error_before = err_before;
      report->endpoint_error_after = err_before;
    }
    return track;
  }
  double ws = cfg.enable_velocity_term ? cfg.smooth_weight : 0.0;
  double wl = cfg.loop_weight;
  std::vector<Vec3> out(T);
  double max_grad = 0.0;
  for (int axis = 0; axis < 3; ++axis) {
    std::vector<double> x(T);
    for (size_t t = 0; t < T; ++t) x[t] = track[t][axis];
    std::vector<double> sol = detail::refine_axis(x, ws, wl);
    if (ws > 0.0)
      max_grad = std::max(max_grad,
                          detail::axis_gradient_norm(x, sol, ws, wl));
    for (size_t t = 0; t < T; ++t) out[t][axis] = sol[t];
  }
  if (report) {
    report->endpoint_error_before = err_before;
    report->endpoint_error_after = (out[T - 1] - out[0]).norm();
    report->residual_norm = max_grad;
  }
  return out;
}

// Translates every joint of frame t by (corrected_pelvis_t - pelvis_t).
// Articulated pose and root orientation are untouched.
inline SkeletonSequence propagate_correction(const SkeletonSequence& seq,
                                             const std::vector<Vec3>& corrected) {
  validate(seq);
  if (corrected.size() != seq.frames.size())
    throw Error("corrected track length " + std::to_string(corrected.size()) +
                " != sequence length " + std::to_string(seq.frames.size()));
  SkeletonSequence out = seq;
  for (size_t t = 0; t < out.frames.size(); ++t) {
    Vec3 delta = corrected[t] - seq.frames[t].pos(JointId::Pelvis);
    for (Vec3& p : out.frames[t].positions) p += delta;
    out.frames[t].root_translation += delta;
  }
  return out;
}

// Yaw-aligns the walkway with the global Z axis. The heading is the first
// eigenvector of the pelvis-trajectory covariance projected onto XZ; the
// +/-Z sign is chosen so the first walking bout progresses toward +Z.
inline SkeletonSequence align_principal_axis(const SkeletonSequence& seq,
                                             double* yaw_out = nullptr) {
  validate(seq);
  std::vector<Vec3> track = pelvis_track(seq);
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const Vec3& p : track) mean += Eigen::Vector2d(p.x(), p.z());
  mean /= static_cast<double>(track.size());
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const Vec3& p : track) {
    Eigen::Vector2d d = Eigen::Vector2d(p.x(), p.z()) - mean;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(track.size());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
  double lead = es.eigenvalues()(1);
  if (lead < 1e-12)
    throw Error("degenerate trajectory covariance: subject appears stationary, "
                "cannot determine walking direction");
  Eigen::Vector2d v = es.eigenvectors().col(1);  // (v_x, v_z)
  double yaw = -std::atan2(v.x(), v.y());

  // Resolve the eigenvector sign: the most distant point from the start
  // (the apex of the first leg) must land at positive Z after rotation.
  Eigen::Matrix3d r = rot_y(yaw);
  size_t apex = 0;
  double best = -1.0;
  for (size_t t = 0; t < track.size(); ++t) {
    Vec3 d = track[t] - track[0];
    d.y() = 0.0;
    if (d.norm() > best) {
      best = d.norm();
      apex = t;
    }
  }
  if ((r * (track[apex] - track[0])).z() < 0.0) {
    yaw += M_PI;
    if (yaw > M_PI) yaw -= 2.0 * M_PI;
  }
  if (yaw_out) *yaw_out = yaw;
  return rotate_y(seq, yaw);
}

}  // namespace gaitkit
