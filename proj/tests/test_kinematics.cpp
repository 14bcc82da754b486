#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <Eigen/Geometry>

#include "gaitkit/kinematics.hpp"

using namespace gaitkit;

namespace {

// Neutral standing pose facing +Z: pelvis frame u=+Y, s=+X, f=+Z,
// straight legs, feet flat and perpendicular to the shanks.
JointFrame neutral_pose() {
  JointFrame f;
  for (int j = 0; j < kNumJoints; ++j) f.positions[j] = Vec3(0, 1.0, 0);
  f.pos(JointId::Pelvis) = Vec3(0, 1.0, 0);
  f.pos(JointId::Spine3) = Vec3(0, 1.5, 0);
  f.pos(JointId::LeftShoulder) = Vec3(0.2, 1.45, 0);
  f.pos(JointId::RightShoulder) = Vec3(-0.2, 1.45, 0);
  for (Side side : {Side::Left, Side::Right}) {
    double sx = side == Side::Left ? 1.0 : -1.0;
    f.pos(hip_joint(side)) = Vec3(0.1 * sx, 0.9, 0);
    f.pos(knee_joint(side)) = Vec3(0.1 * sx, 0.5, 0);
    f.pos(ankle_joint(side)) = Vec3(0.1 * sx, 0.1, 0);
    f.pos(heel_joint(side)) = Vec3(0.1 * sx, 0.02, -0.05);
    f.pos(toe_joint(side)) = Vec3(0.1 * sx, 0.02, 0.15);
  }
  f.root_translation = f.pos(JointId::Pelvis);
  return f;
}

SkeletonSequence two_frames(const JointFrame& pose) {
  SkeletonSequence seq;
  seq.frame_rate = 30.0;
  seq.frames = {pose, pose};
  return seq;
}

double value_of(const std::vector<AngleSeries>& all, AngleChannel c,
                std::optional<Side> side = std::nullopt) {
  for (const AngleSeries& s : all)
    if (s.channel == c && s.side == side) return s.values[0];
  FAIL("channel not found");
  return 0;
}

// rotate every joint of the pose about an axis through the pelvis
JointFrame rotated(const JointFrame& pose, const Vec3& axis, double angle_deg) {
  Eigen::AngleAxisd rot(rad(angle_deg), axis.normalized());
  JointFrame out = pose;
  Vec3 c = pose.pos(JointId::Pelvis);
  for (int j = 0; j < kNumJoints; ++j)
    out.positions[j] = c + rot * (pose.positions[j] - c);
  out.root_translation = out.pos(JointId::Pelvis);
  return out;
}

}  // namespace

TEST_CASE("neutral standing pose scores zero on every channel") {
  std::vector<AngleSeries> all = joint_angles(two_frames(neutral_pose()));
  REQUIRE(all.size() == 14);  // 4 sided channels x 2 + 6 unsided
  for (const AngleSeries& s : all) {
    REQUIRE(s.values.size() == 2);
    CHECK(s.values[0] == doctest::Approx(0.0).epsilon(1e-9));
  }
}

TEST_CASE("bent knee reads the flexion angle directly") {
  JointFrame pose = neutral_pose();
  // shank swung backward 90 degrees: ankle behind the knee
  pose.pos(JointId::LeftAnkle) = Vec3(0.1, 0.5, -0.4);
  std::vector<AngleSeries> all = joint_angles(two_frames(pose));
  CHECK(value_of(all, AngleChannel::KneeFlexion, Side::Left) ==
        doctest::Approx(90.0).epsilon(1e-9));
  // 30-degree bend
  pose.pos(JointId::LeftAnkle) =
      Vec3(0.1, 0.5 - 0.4 * std::cos(rad(30)), -0.4 * std::sin(rad(30)));
  CHECK(value_of(joint_angles(two_frames(pose)), AngleChannel::KneeFlexion,
                 Side::Left) == doctest::Approx(30.0).epsilon(1e-9));
  // the contralateral knee stays straight
  CHECK(value_of(all, AngleChannel::KneeFlexion, Side::Right) ==
        doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("hip flexion and abduction are plane projections of the thigh") {
  JointFrame pose = neutral_pose();
  // thigh raised 30 degrees forward
  pose.pos(JointId::LeftKnee) =
      Vec3(0.1, 0.9 - 0.4 * std::cos(rad(30)), 0.4 * std::sin(rad(30)));
  std::vector<AngleSeries> all = joint_angles(two_frames(pose));
  CHECK(value_of(all, AngleChannel::HipFlexion, Side::Left) ==
        doctest::Approx(30.0).epsilon(1e-9));
  CHECK(value_of(all, AngleChannel::HipAbduction, Side::Left) ==
        doctest::Approx(0.0).epsilon(1e-9));

  // thigh swung 20 degrees away from the midline, both sides positive
  JointFrame ab = neutral_pose();
  ab.pos(JointId::LeftKnee) =
      Vec3(0.1 + 0.4 * std::sin(rad(20)), 0.9 - 0.4 * std::cos(rad(20)), 0);
  ab.pos(JointId::RightKnee) =
      Vec3(-0.1 - 0.4 * std::sin(rad(20)), 0.9 - 0.4 * std::cos(rad(20)), 0);
  std::vector<AngleSeries> ab_all = joint_angles(two_frames(ab));
  CHECK(value_of(ab_all, AngleChannel::HipAbduction, Side::Left) ==
        doctest::Approx(20.0).epsilon(1e-9));
  CHECK(value_of(ab_all, AngleChannel::HipAbduction, Side::Right) ==
        doctest::Approx(20.0).epsilon(1e-9));
}

TEST_CASE("ankle dorsiflexion is signed toe-up") {
  JointFrame pose = neutral_pose();
  // toes raised 15 degrees about the heel
  double a = rad(15);
  Vec3 heel = pose.pos(JointId::LeftHeel);
  Vec3 foot(0, 0.2 * std::sin(a), 0.2 * std::cos(a));
  pose.pos(JointId::LeftBigToe) = heel + foot;
  std::vector<AngleSeries> all = joint_angles(two_frames(pose));
  CHECK(value_of(all, AngleChannel::AnkleDorsiflexion, Side::Left) ==
        doctest::Approx(15.0).epsilon(1e-9));
  // toes dropped: plantarflexion is negative
  pose.pos(JointId::LeftBigToe) =
      heel + Vec3(0, -0.2 * std::sin(a), 0.2 * std::cos(a));
  CHECK(value_of(joint_angles(two_frames(pose)),
                 AngleChannel::AnkleDorsiflexion, Side::Left) ==
        doctest::Approx(-15.0).epsilon(1e-9));
}

TEST_CASE("whole-body rotations land on the pelvis and trunk channels") {
  JointFrame pose = neutral_pose();

  // anterior tilt: rotate about the side axis so forward tips down
  JointFrame tilted = rotated(pose, Vec3::UnitX(), 10.0);
  CHECK(value_of(joint_angles(two_frames(tilted)), AngleChannel::PelvisTilt) ==
        doctest::Approx(10.0).epsilon(1e-6));

  // left-up obliquity: roll about the forward axis
  JointFrame rolled = rotated(pose, Vec3::UnitZ(), 8.0);
  CHECK(value_of(joint_angles(two_frames(rolled)),
                 AngleChannel::PelvisObliquity) ==
        doctest::Approx(8.0).epsilon(1e-6));

  // left-forward yaw of the whole body
  JointFrame yawed = rotated(pose, Vec3::UnitY(), -12.0);
  CHECK(value_of(joint_angles(two_frames(yawed)),
                 AngleChannel::PelvisRotation) ==
        doctest::Approx(12.0).epsilon(1e-6));
}

TEST_CASE("trunk channels move independently of the pelvis") {
  JointFrame pose = neutral_pose();
  // lean the trunk forward 25 degrees, pelvis untouched
  double g = rad(25);
  pose.pos(JointId::Spine3) = Vec3(0, 1.0 + 0.5 * std::cos(g), 0.5 * std::sin(g));
  pose.pos(JointId::LeftShoulder) =
      Vec3(0.2, 1.0 + 0.45 * std::cos(g), 0.45 * std::sin(g));
  pose.pos(JointId::RightShoulder) =
      Vec3(-0.2, 1.0 + 0.45 * std::cos(g), 0.45 * std::sin(g));
  std::vector<AngleSeries> all = joint_angles(two_frames(pose));
  CHECK(value_of(all, AngleChannel::TrunkFlexion) ==
        doctest::Approx(25.0).epsilon(1e-6));
  CHECK(value_of(all, AngleChannel::TrunkLateral) ==
        doctest::Approx(0.0).epsilon(1e-6));

  // shoulders yawed left-forward relative to a neutral pelvis
  JointFrame twist = neutral_pose();
  Eigen::AngleAxisd yaw(rad(-14.0), Vec3::UnitY());
  for (JointId j : {JointId::LeftShoulder, JointId::RightShoulder}) {
    Vec3 c(0, twist.pos(j).y(), 0);
    twist.pos(j) = c + yaw * (twist.pos(j) - c);
  }
  CHECK(value_of(joint_angles(two_frames(twist)), AngleChannel::TrunkRotation) ==
        doctest::Approx(14.0).epsilon(1e-6));
}

TEST_CASE("return-segment reference flips pelvis rotation by half a turn") {
  JointFrame back = rotated(neutral_pose(), Vec3::UnitY(), 180.0);
  SkeletonSequence seq = two_frames(back);
  PhaseLabeling lab;
  lab.labels.assign(2, Phase::Walk);
  lab.walking_segments.push_back({0, 1, -1});
  CHECK(value_of(joint_angles(seq, &lab), AngleChannel::PelvisRotation) ==
        doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("degenerate pelvis produces NaN frame-dependent channels only") {
  JointFrame pose = neutral_pose();
  pose.pos(JointId::Spine3) = pose.pos(JointId::Pelvis);  // no up axis
  std::vector<AngleSeries> all = joint_angles(two_frames(pose));
  CHECK(std::isnan(value_of(all, AngleChannel::HipFlexion, Side::Left)));
  CHECK(std::isnan(value_of(all, AngleChannel::PelvisTilt)));
  // the knee angle needs no pelvis frame
  CHECK(value_of(all, AngleChannel::KneeFlexion, Side::Left) ==
        doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("cycle normalization resamples linearly in cycle percent") {
  AngleSeries series;
  series.channel = AngleChannel::KneeFlexion;
  series.side = Side::Left;
  for (int t = 0; t < 40; ++t) series.values.push_back(2.0 * t);

  std::vector<GaitCycle> cycles = {{10, 16, 30, +1, Side::Left}};
  NormalizedCycleCurve c = normalize_cycles(series, cycles);
  REQUIRE(c.per_cycle.size() == 1);
  REQUIRE(c.per_cycle[0].size() == kCycleSamples);
  for (int k = 0; k < kCycleSamples; ++k) {
    double expected = 2.0 * (10.0 + 20.0 * k / 100.0);
    CHECK(c.per_cycle[0][k] == doctest::Approx(expected).epsilon(1e-9));
    CHECK(c.mean_curve[k] == doctest::Approx(expected).epsilon(1e-9));
    CHECK(c.sd_curve[k] == 0.0);
  }
  CHECK(c.stance_fraction[0] == doctest::Approx(0.3));
  CHECK(c.skipped_cycles == 0);
}

TEST_CASE("mean and sd curves aggregate across cycles of unequal length") {
  AngleSeries series;
  series.channel = AngleChannel::HipFlexion;
  series.side = Side::Left;
  for (int t = 0; t < 40; ++t) series.values.push_back(1.0 * t);

  // both cycles are linear ramps, so curve_i[k] = hs0_i + span_i * k / 100
  std::vector<GaitCycle> cycles = {{0, 3, 10, +1, Side::Left},
                                   {10, 16, 30, +1, Side::Left}};
  NormalizedCycleCurve c = normalize_cycles(series, cycles);
  REQUIRE(c.per_cycle.size() == 2);
  for (int k = 0; k < kCycleSamples; ++k) {
    double a = 0.0 + 10.0 * k / 100.0;
    double b = 10.0 + 20.0 * k / 100.0;
    CHECK(c.mean_curve[k] == doctest::Approx(0.5 * (a + b)).epsilon(1e-9));
    CHECK(c.sd_curve[k] ==
          doctest::Approx(std::abs(b - a) / std::sqrt(2.0)).epsilon(1e-9));
  }
}

TEST_CASE("short and out-of-range cycles are rejected") {
  AngleSeries series;
  series.channel = AngleChannel::KneeFlexion;
  series.side = Side::Left;
  series.values.assign(20, 1.0);

  std::vector<GaitCycle> cycles = {{5, 6, 7, +1, Side::Left},  // span 2: skip
                                   {8, 10, 15, +1, Side::Left}};
  NormalizedCycleCurve c = normalize_cycles(series, cycles);
  CHECK(c.skipped_cycles == 1);
  CHECK(c.per_cycle.size() == 1);

  std::vector<GaitCycle> oob = {{10, 15, 25, +1, Side::Left}};
  CHECK_THROWS_AS(normalize_cycles(series, oob), Error);
}
