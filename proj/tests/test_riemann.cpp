#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Geometry>

#include "gaitkit/riemann.hpp"
#include "gaitkit/synth.hpp"

using namespace gaitkit;

namespace {

JointFrame random_frame(uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.3);
  JointFrame f;
  for (int j = 0; j < kNumJoints; ++j)
    f.positions[j] = Vec3(g(rng), 1.0 + g(rng), g(rng));
  return f;
}

Eigen::MatrixXd centered(const JointFrame& f) {
  Eigen::MatrixXd Z(kNumJoints, 3);
  Vec3 c = Vec3::Zero();
  for (int j = 0; j < kNumJoints; ++j) c += f.positions[j];
  c /= kNumJoints;
  for (int j = 0; j < kNumJoints; ++j)
    Z.row(j) = (f.positions[j] - c).transpose();
  return Z;
}

JointFrame transformed(const JointFrame& f, const Eigen::Matrix3d& R,
                       const Vec3& t) {
  JointFrame out = f;
  for (int j = 0; j < kNumJoints; ++j) out.positions[j] = R * f.positions[j] + t;
  return out;
}

// exhaustive DTW oracle by recursive path enumeration
double dtw_oracle(const Eigen::MatrixXd& cost, int i, int j) {
  if (i == 0 && j == 0) return cost(0, 0);
  double best = std::numeric_limits<double>::infinity();
  if (i > 0) best = std::min(best, dtw_oracle(cost, i - 1, j));
  if (j > 0) best = std::min(best, dtw_oracle(cost, i, j - 1));
  if (i > 0 && j > 0) best = std::min(best, dtw_oracle(cost, i - 1, j - 1));
  return cost(i, j) + best;
}

}  // namespace

TEST_CASE("the polar factors reconstruct the centered landmark matrix") {
  JointFrame f = random_frame(201);
  GramPose g = gram_encode(f);
  CHECK_FALSE(g.degenerate);

  // U has orthonormal columns
  Eigen::Matrix3d UtU = g.U.transpose() * g.U;
  CHECK((UtU - Eigen::Matrix3d::Identity()).norm() < 1e-10);

  Eigen::MatrixXd Z = centered(f);
  // P is the Gram matrix of the pose
  CHECK((g.P - Z.transpose() * Z).norm() < 1e-9);
  // Z = U * sqrt(P): the polar decomposition
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(g.P);
  Eigen::Matrix3d sqrtP = es.eigenvectors() *
                          es.eigenvalues().cwiseSqrt().asDiagonal() *
                          es.eigenvectors().transpose();
  CHECK((g.U * sqrtP - Z).norm() < 1e-9);
}

TEST_CASE("the pose metric is rigid-motion invariant") {
  JointFrame a = random_frame(202);
  JointFrame b = random_frame(203);
  double d = pose_distance(gram_encode(a), gram_encode(b));
  CHECK(d > 0.0);

  Eigen::Matrix3d R =
      (Eigen::AngleAxisd(0.7, Vec3(1, 2, -1).normalized())).toRotationMatrix();
  Vec3 t(3.0, -1.0, 5.5);
  double d_moved = pose_distance(gram_encode(transformed(a, R, t)),
                                 gram_encode(transformed(b, R, t)));
  CHECK(d_moved == doctest::Approx(d).epsilon(1e-9));

  // translating one pose alone costs nothing: the encoding is centered
  CHECK(pose_distance(gram_encode(a),
                      gram_encode(transformed(
                          a, Eigen::Matrix3d::Identity(), t))) ==
        doctest::Approx(0.0).epsilon(1e-9));
  // the metric is symmetric
  CHECK(pose_distance(gram_encode(b), gram_encode(a)) ==
        doctest::Approx(d).epsilon(1e-9));
}

TEST_CASE("uniform scaling has the closed-form split-metric distance") {
  JointFrame a = random_frame(204);
  JointFrame scaled = a;
  Vec3 c = Vec3::Zero();
  for (int j = 0; j < kNumJoints; ++j) c += a.positions[j];
  c /= kNumJoints;
  for (int j = 0; j < kNumJoints; ++j)
    scaled.positions[j] = c + 2.0 * (a.positions[j] - c);

  GramPose ga = gram_encode(a), gs = gram_encode(scaled);
  // same shape subspace, P scaled by 4: d = sqrt(k * 3 * ln(4)^2)
  double expected = std::sqrt(kSpdWeight * 3.0) * std::log(4.0);
  CHECK(pose_distance(ga, gs) == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("rank-deficient poses are flagged and rejected at distance time") {
  JointFrame flat;
  std::mt19937_64 rng(205);
  std::normal_distribution<double> g(0.0, 0.3);
  for (int j = 0; j < kNumJoints; ++j)
    flat.positions[j] = Vec3(g(rng), g(rng), 0.0);  // coplanar
  GramPose gp = gram_encode(flat);
  CHECK(gp.degenerate);
  GramPose ok = gram_encode(random_frame(206));
  CHECK_THROWS_AS(pose_distance(gp, ok), Error);
  CHECK_THROWS_AS(pose_distance(ok, gp), Error);
}

TEST_CASE("trajectory encoding resamples by nearest frame index") {
  WalkerSpec spec;
  spec.seed = 207;
  auto [seq, gt] = generate_walker(spec);
  const int n = static_cast<int>(seq.frames.size());

  std::vector<GramPose> traj = gram_trajectory(seq, 5);
  REQUIRE(traj.size() == 5);
  for (int i = 0; i < 5; ++i) {
    int idx = static_cast<int>(std::lround(i * (n - 1) / 4.0));
    GramPose direct = gram_encode(seq.frames[idx]);
    CHECK((traj[i].U - direct.U).norm() == doctest::Approx(0.0));
    CHECK((traj[i].P - direct.P).norm() == doctest::Approx(0.0));
  }
  CHECK(gram_trajectory(seq).size() == 100);
  CHECK(gram_trajectory(seq, 1).size() == 1);
}

TEST_CASE("dtw equals the exhaustive path oracle on small trajectories") {
  std::vector<GramPose> a, b;
  for (int i = 0; i < 4; ++i) a.push_back(gram_encode(random_frame(300 + i)));
  for (int i = 0; i < 5; ++i) b.push_back(gram_encode(random_frame(400 + i)));

  Eigen::MatrixXd cost(4, 5);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 5; ++j) cost(i, j) = pose_distance(a[i], b[j]);
  CHECK(dtw_distance(a, b) ==
        doctest::Approx(dtw_oracle(cost, 3, 4)).epsilon(1e-12));

  // self distance is zero; duplicated poses (time dilation) cost nothing
  CHECK(dtw_distance(a, a) == doctest::Approx(0.0));
  std::vector<GramPose> dilated;
  for (const GramPose& g : a) {
    dilated.push_back(g);
    dilated.push_back(g);
  }
  CHECK(dtw_distance(a, dilated) == doctest::Approx(0.0).epsilon(1e-12));

  CHECK_THROWS_AS(dtw_distance({}, a), Error);
}

TEST_CASE("cohort distance matrix is symmetric with zero diagonal") {
  std::vector<std::vector<GramPose>> trajs;
  for (int s = 0; s < 4; ++s) {
    std::vector<GramPose> t;
    for (int i = 0; i < 6; ++i)
      t.push_back(gram_encode(random_frame(500 + 10 * s + i)));
    trajs.push_back(std::move(t));
  }
  Eigen::MatrixXd D = distance_matrix(trajs);
  REQUIRE(D.rows() == 4);
  for (int i = 0; i < 4; ++i) {
    CHECK(D(i, i) == 0.0);
    for (int j = 0; j < 4; ++j) {
      CHECK(D(i, j) == D(j, i));
      if (i != j) CHECK(D(i, j) > 0.0);
    }
  }
  // triangle inequality spot check (DTW is not a metric in general, but
  // holds easily for well-separated random trajectories)
  CHECK(D(0, 2) <= D(0, 1) + D(1, 2) + 1e-9);

  Eigen::MatrixXd F = proximity_features(D, {1, 3});
  REQUIRE(F.cols() == 2);
  for (int i = 0; i < 4; ++i) {
    CHECK(F(i, 0) == D(i, 1));
    CHECK(F(i, 1) == D(i, 3));
  }
}

TEST_CASE("nearby gait cycles are closer than different walkers") {
  WalkerSpec spec;
  spec.seed = 208;
  auto [seq_a, gt_a] = generate_walker(spec);
  spec.seed = 209;
  spec.noise_sigma = 0.001;
  auto [seq_b, gt_b] = generate_walker(spec);  // same walker, tiny noise
  spec.noise_sigma = 0.0;
  spec.cadence = 70.0;
  spec.step_length = 0.45;
  auto [seq_c, gt_c] = generate_walker(spec);  // different gait

  std::vector<GramPose> ta = gram_trajectory(seq_a, 40);
  std::vector<GramPose> tb = gram_trajectory(seq_b, 40);
  std::vector<GramPose> tc = gram_trajectory(seq_c, 40);
  CHECK(dtw_distance(ta, tb) < dtw_distance(ta, tc));
}
