#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gaitkit/synth.hpp"

using namespace gaitkit;

TEST_CASE("generation is deterministic in the spec and seed") {
  WalkerSpec spec;
  spec.noise_sigma = 0.004;
  spec.seed = 61;
  auto a = generate_walker(spec);
  auto b = generate_walker(spec);
  REQUIRE(a.first.frames.size() == b.first.frames.size());
  for (size_t t = 0; t < a.first.frames.size(); ++t)
    for (int j = 0; j < kNumJoints; ++j)
      CHECK(a.first.frames[t].positions[j] == b.first.frames[t].positions[j]);
  CHECK(a.second.hs_left == b.second.hs_left);

  spec.seed = 62;
  auto c = generate_walker(spec);
  bool differs = false;
  for (size_t t = 0; t < a.first.frames.size() && !differs; ++t)
    differs = a.first.frames[t].pos(JointId::Pelvis) !=
              c.first.frames[t].pos(JointId::Pelvis);
  CHECK(differs);
}

TEST_CASE("the programmed loop closes") {
  for (bool hesitate : {false, true}) {
    WalkerSpec spec;
    spec.seed = 63;
    if (hesitate) spec.hesitation_times = {0.8, 2.0};
    auto [seq, gt] = generate_walker(spec);
    Vec3 err = seq.frames.back().pos(JointId::Pelvis) -
               seq.frames.front().pos(JointId::Pelvis);
    // hesitation windows are quantized to the frame grid, which can open
    // the loop by up to a frame of travel per hesitation
    CHECK(err.norm() < (hesitate ? 0.07 : 0.02));
  }
}

TEST_CASE("ground truth is internally consistent") {
  WalkerSpec spec;
  spec.cadence = 48.0;
  spec.step_length = 0.55;
  spec.seed = 64;
  auto [seq, gt] = generate_walker(spec);

  CHECK(gt.cadence == spec.cadence);
  CHECK(gt.step_length == spec.step_length);
  CHECK(gt.stride_time == doctest::Approx(60.0 / spec.cadence));
  CHECK(gt.walking_speed ==
        doctest::Approx(2.0 * spec.cadence / 60.0 * spec.step_length));

  // consecutive ipsilateral strikes inside a leg are one stride apart
  double stride_frames = gt.stride_time * spec.frame_rate;
  size_t regular = 0;
  for (size_t i = 0; i + 1 < gt.hs_left.size(); ++i) {
    double gap = static_cast<double>(gt.hs_left[i + 1] - gt.hs_left[i]);
    if (std::abs(gap - stride_frames) <= 2.0) ++regular;
  }
  CHECK(regular + 2 >= gt.hs_left.size() - 1);  // only turn gaps deviate

  // alternation: a toe-off falls between consecutive ipsilateral strikes
  REQUIRE(gt.to_left.size() >= 4);
  size_t bracketed = 0;
  for (size_t i = 0; i + 1 < gt.hs_left.size(); ++i)
    for (size_t to : gt.to_left)
      if (to > gt.hs_left[i] && to < gt.hs_left[i + 1]) {
        ++bracketed;
        break;
      }
  CHECK(bracketed >= gt.hs_left.size() - 3);

  // programmed pelvis path is the rendered pelvis for a noiseless walker
  REQUIRE(gt.pelvis_path.size() == seq.frames.size());
  for (size_t t = 0; t < seq.frames.size(); t += 29)
    CHECK((gt.pelvis_path[t] - seq.frames[t].pos(JointId::Pelvis)).norm() ==
          doctest::Approx(0.0));
}

TEST_CASE("heading rotates the walkway") {
  WalkerSpec spec;
  spec.seed = 65;
  spec.heading_deg = 90.0;
  auto [seq, gt] = generate_walker(spec);
  // displacement during the out leg is along +/-X, not +/-Z
  Vec3 mid = seq.frames[seq.frames.size() / 3].pos(JointId::Pelvis);
  Vec3 start = seq.frames.front().pos(JointId::Pelvis);
  Vec3 d = mid - start;
  CHECK(std::abs(d.x()) > 1.0);
  CHECK(std::abs(d.z()) < 0.3);
}

TEST_CASE("linear drift opens the loop by the requested magnitude") {
  WalkerSpec spec;
  spec.seed = 66;
  auto [clean, gt] = generate_walker(spec);
  SkeletonSequence drifted = inject_drift(clean, DriftModel::Linear, 0.5, 7);

  Vec3 closed = clean.frames.back().pos(JointId::Pelvis) -
                clean.frames.front().pos(JointId::Pelvis);
  Vec3 open = drifted.frames.back().pos(JointId::Pelvis) -
              drifted.frames.front().pos(JointId::Pelvis);
  CHECK((open - closed).norm() == doctest::Approx(0.5).epsilon(1e-9));
  // linear drift is horizontal
  CHECK((open - closed).y() == doctest::Approx(0.0));
  // the first frame is untouched and articulation is rigid per frame
  CHECK(drifted.frames[0].pos(JointId::Pelvis) ==
        clean.frames[0].pos(JointId::Pelvis));
  size_t t = drifted.frames.size() / 2;
  double before = (clean.frames[t].pos(JointId::LeftAnkle) -
                   clean.frames[t].pos(JointId::RightWrist))
                      .norm();
  double after = (drifted.frames[t].pos(JointId::LeftAnkle) -
                  drifted.frames[t].pos(JointId::RightWrist))
                     .norm();
  CHECK(after == doctest::Approx(before).epsilon(1e-12));
  CHECK((drifted.frames[t].root_translation - clean.frames[t].root_translation)
            .norm() > 0.0);
}

TEST_CASE("random-walk drift accumulates and is seed-reproducible") {
  WalkerSpec spec;
  spec.seed = 67;
  auto [clean, gt] = generate_walker(spec);
  SkeletonSequence a = inject_drift(clean, DriftModel::RandomWalk, 0.4, 9);
  SkeletonSequence b = inject_drift(clean, DriftModel::RandomWalk, 0.4, 9);
  SkeletonSequence c = inject_drift(clean, DriftModel::RandomWalk, 0.4, 10);

  double moved = 0.0, differs = 0.0;
  for (size_t t = 0; t < clean.frames.size(); ++t) {
    CHECK(a.frames[t].pos(JointId::Pelvis) == b.frames[t].pos(JointId::Pelvis));
    moved = std::max(moved, (a.frames[t].pos(JointId::Pelvis) -
                             clean.frames[t].pos(JointId::Pelvis))
                                .norm());
    differs = std::max(differs, (a.frames[t].pos(JointId::Pelvis) -
                                 c.frames[t].pos(JointId::Pelvis))
                                    .norm());
  }
  CHECK(moved > 0.05);
  CHECK(differs > 0.01);
  // a zero magnitude or None model is the identity
  SkeletonSequence same = inject_drift(clean, DriftModel::RandomWalk, 0.0);
  CHECK(same.frames[40].pos(JointId::Pelvis) ==
        clean.frames[40].pos(JointId::Pelvis));
}

TEST_CASE("noise perturbs the render but keeps it valid") {
  WalkerSpec spec;
  spec.seed = 68;
  auto clean = generate_walker(spec);
  spec.noise_sigma = 0.003;
  auto noisy = generate_walker(spec);
  CHECK_NOTHROW(validate(noisy.first));
  double max_dev = 0.0;
  for (size_t t = 0; t < clean.first.frames.size(); ++t)
    max_dev = std::max(max_dev, (noisy.first.frames[t].pos(JointId::LeftWrist) -
                                 clean.first.frames[t].pos(JointId::LeftWrist))
                                    .norm());
  CHECK(max_dev > 0.001);
  CHECK(max_dev < 0.05);
}

TEST_CASE("infeasible specs are rejected") {
  WalkerSpec spec;
  spec.cadence = 0.0;
  CHECK_THROWS_AS(generate_walker(spec), Error);
  spec = WalkerSpec{};
  spec.step_length = 1.8;  // beyond leg reach
  CHECK_THROWS_AS(generate_walker(spec), Error);
  spec = WalkerSpec{};
  spec.noise_sigma = -0.1;
  CHECK_THROWS_AS(generate_walker(spec), Error);
}

TEST_CASE("events and turns stay inside the frame range") {
  WalkerSpec spec;
  spec.seed = 69;
  spec.hesitation_times = {1.0};
  auto [seq, gt] = generate_walker(spec);
  size_t n = seq.frames.size();
  for (size_t f : gt.hs_left) CHECK(f < n);
  for (size_t f : gt.hs_right) CHECK(f < n);
  for (size_t f : gt.to_left) CHECK(f < n);
  for (size_t f : gt.to_right) CHECK(f < n);
  for (const auto& ti : gt.turn_intervals) {
    CHECK(ti[0] <= ti[1]);
    CHECK(ti[1] <= ti[2]);
    CHECK(ti[2] < n);
  }
}
