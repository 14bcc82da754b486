#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "gaitkit/core.hpp"

namespace gaitkit {

// Gram-matrix shape encoding of a single pose: the 45x3 centered landmark
// matrix Z factors (polar decomposition) into an orthonormal frame U and an
// SPD part P = R^2; the pair (span(U), P) is the rotation-invariant state.
struct GramPose {
  Eigen::Matrix<double, kNumJoints, 3> U;  // orthonormal, Grassmann component
  Eigen::Matrix3d P;                       // SPD component
  bool degenerate = false;                 // landmarks (near) coplanar-collinear
};

inline constexpr double kSpdWeight = 0.25;  // k in the split metric

inline GramPose gram_encode(const JointFrame& frame) {
  Eigen::MatrixXd Z(kNumJoints, 3);
  Vec3 centroid = Vec3::Zero();
  for (int j = 0; j < kNumJoints; ++j) centroid += frame.positions[j];
  centroid /= kNumJoints;
  for (int j = 0; j < kNumJoints; ++j)
    Z.row(j) = (frame.positions[j] - centroid).transpose();

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      Z, Eigen::ComputeThinU | Eigen::ComputeThinV);
  GramPose g;
  g.degenerate = svd.singularValues().minCoeff() < 1e-12;
  g.U = svd.matrixU() * svd.matrixV().transpose();
  Eigen::Matrix3d R = svd.matrixV() *
                      svd.singularValues().asDiagonal() *
                      svd.matrixV().transpose();
  g.P = R * R;  // equals Z^T Z
  return g;
}

namespace detail {

inline double grassmann_distance(const Eigen::Matrix<double, kNumJoints, 3>& U1,
                                 const Eigen::Matrix<double, kNumJoints, 3>& U2) {
  Eigen::Matrix3d M = U1.transpose() * U2;
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(M);
  double d2 = 0.0;
  for (int i = 0; i < 3; ++i) {
    double c = std::clamp(svd.singularValues()[i], -1.0, 1.0);
    double theta = std::acos(c);
    d2 += theta * theta;
  }
  return std::sqrt(d2);
}

inline double spd_distance(const Eigen::Matrix3d& P1, const Eigen::Matrix3d& P2) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es1(P1);
  Eigen::Vector3d inv_sqrt = es1.eigenvalues().cwiseSqrt().cwiseInverse();
  Eigen::Matrix3d S = es1.eigenvectors() * inv_sqrt.asDiagonal() *
                      es1.eigenvectors().transpose();
  Eigen::Matrix3d A = S * P2 * S;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es2(
      0.5 * (A + A.transpose()));
  double d2 = 0.0;
  for (int i = 0; i < 3; ++i) {
    double l = std::log(std::max(es2.eigenvalues()[i], 1e-300));
    d2 += l * l;
  }
  return std::sqrt(d2);
}

}  // namespace detail

// Split pose metric: d^2 = d_Grassmann^2 + k * d_SPD^2 (affine-invariant).
inline double pose_distance(const GramPose& a, const GramPose& b,
                            double k = kSpdWeight) {
  if (a.degenerate || b.degenerate)
    throw Error("pose_distance: degenerate frame (rank-deficient landmarks)");
  double dg = detail::grassmann_distance(a.U, b.U);
  double ds = detail::spd_distance(a.P, b.P);
  return std::sqrt(dg * dg + k * ds * ds);
}

// Encode a whole sequence, resampled to a fixed length by nearest index.
inline std::vector<GramPose> gram_trajectory(const SkeletonSequence& seq,
                                             int target_len = 100) {
  validate(seq);
  const int n = static_cast<int>(seq.frames.size());
  std::vector<GramPose> traj;
  traj.reserve(target_len);
  for (int i = 0; i < target_len; ++i) {
    double pos = target_len == 1
                     ? 0.0
                     : static_cast<double>(i) * (n - 1) / (target_len - 1);
    int idx = static_cast<int>(std::lround(pos));
    traj.push_back(gram_encode(seq.frames[idx]));
  }
  return traj;
}

// Dynamic time warping over pose trajectories; standard unit-slope steps,
// band-free, returns the accumulated cost of the optimal alignment path.
inline double dtw_distance(const std::vector<GramPose>& a,
                           const std::vector<GramPose>& b,
                           double k = kSpdWeight) {
  const size_t n = a.size(), m = b.size();
  if (n == 0 || m == 0) throw Error("dtw_distance: empty trajectory");
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> prev(m + 1, inf), cur(m + 1, inf);
  prev[0] = 0.0;
  for (size_t i = 1; i <= n; ++i) {
    cur[0] = inf;
    for (size_t j = 1; j <= m; ++j) {
      double c = pose_distance(a[i - 1], b[j - 1], k);
      cur[j] = c + std::min({prev[j], cur[j - 1], prev[j - 1]});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

// Pairwise DTW distance matrix across a cohort of sequences.
inline Eigen::MatrixXd
distance_matrix(const std::vector<std::vector<GramPose>>& trajs,
                double k = kSpdWeight) {
  const int n = static_cast<int>(trajs.size());
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      double d = dtw_distance(trajs[i], trajs[j], k);
      D(i, j) = d;
      D(j, i) = d;
    }
  return D;
}

// Proximity encoding: subject i is represented by its DTW distances to every
// training subject, turning the metric space into a feature space for a
// linear model.
inline Eigen::MatrixXd proximity_features(const Eigen::MatrixXd& dist,
                                          const std::vector<int>& train_idx) {
  Eigen::MatrixXd F(dist.rows(), train_idx.size());
  for (int i = 0; i < dist.rows(); ++i)
    for (size_t j = 0; j < train_idx.size(); ++j)
      F(i, j) = dist(i, train_idx[j]);
  return F;
}

}  // namespace gaitkit
