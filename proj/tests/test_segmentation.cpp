#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "gaitkit/segmentation.hpp"
#include "gaitkit/synth.hpp"

using namespace gaitkit;

namespace {

// Progression built by integrating a piecewise-linear velocity profile.
// Sections are (duration_s, v_start, v_end) triples; reversals are smooth,
// as they are for a walking subject.
std::vector<double> from_velocity(
    const std::vector<std::array<double, 3>>& sec, double fps) {
  std::vector<double> s;
  double x = 0.0;
  for (const auto& [dur, v0, v1] : sec) {
    int n = static_cast<int>(std::lround(dur * fps));
    for (int i = 0; i < n; ++i) {
      s.push_back(x);
      double v = v0 + (v1 - v0) * (i + 0.5) / n;
      x += v / fps;
    }
  }
  s.push_back(x);
  return s;
}

// idle, accelerate, cruise out, reverse over `turn_s`, cruise back, stop
std::vector<std::array<double, 3>> out_and_back(double turn_s) {
  return {{1.5, 0, 0},  {0.5, 0, 1},  {2.5, 1, 1}, {turn_s, 1, -1},
          {2.5, -1, -1}, {0.5, -1, 0}, {1.5, 0, 0}};
}

}  // namespace

TEST_CASE("out-and-back track yields one turn and two walks") {
  const double fps = 30.0;
  TurnConfig cfg;
  cfg.enable_velocity_filter = false;  // keep the derivative exact
  std::vector<double> s = from_velocity(out_and_back(2.0), fps);
  PhaseLabeling lab = detect_turns(s, cfg, fps);

  REQUIRE(lab.turn_intervals.size() == 1);
  const TurnInterval& ti = lab.turn_intervals[0];
  // apex of the reversal sits at t = 5.5 s (frame 165)
  CHECK(ti.center_frame >= 160);
  CHECK(ti.center_frame <= 170);
  CHECK(ti.start_frame < ti.center_frame);
  CHECK(ti.end_frame > ti.center_frame);

  REQUIRE(lab.walking_segments.size() == 2);
  CHECK(lab.walking_segments[0].direction == +1);
  CHECK(lab.walking_segments[1].direction == -1);
  CHECK(lab.walking_segments[0].end_frame < ti.start_frame);
  CHECK(lab.walking_segments[1].start_frame > ti.end_frame);

  // boundary pauses become idle once a turn exists
  CHECK(lab.labels.front() == Phase::Idle);
  CHECK(lab.labels.back() == Phase::Idle);
  CHECK(lab.labels[ti.center_frame] == Phase::Turn);
  CHECK(lab.labels[(lab.walking_segments[0].start_frame +
                    lab.walking_segments[0].end_frame) /
                   2] == Phase::Walk);
}

TEST_CASE("threshold is the smaller of the absolute and percentile rules") {
  const double fps = 30.0;
  TurnConfig cfg;
  cfg.enable_velocity_filter = false;

  // slow walker: v95 = 0.3 m/s, so tau = 0.5 * 0.3 < 0.4
  std::vector<double> slow = from_velocity({{1.0, 0, 0},
                                            {6.0, 0.3, 0.3},
                                            {2.0, 0.3, -0.3},
                                            {6.0, -0.3, -0.3},
                                            {1.0, 0, 0}},
                                           fps);
  PhaseLabeling lab_slow = detect_turns(slow, cfg, fps);
  CHECK(lab_slow.threshold == doctest::Approx(0.15).epsilon(1e-6));

  // brisk walker: percentile rule would give ~0.75, capped at 0.4
  std::vector<double> fast = from_velocity({{1.0, 0, 0},
                                            {3.0, 1.5, 1.5},
                                            {1.5, 1.5, -1.5},
                                            {3.0, -1.5, -1.5},
                                            {1.0, 0, 0}},
                                           fps);
  PhaseLabeling lab_fast = detect_turns(fast, cfg, fps);
  CHECK(lab_fast.threshold == doctest::Approx(0.4));
}

TEST_CASE("sub-threshold runs shorter than 500 ms are not turns") {
  const double fps = 30.0;
  TurnConfig cfg;
  cfg.enable_velocity_filter = false;
  // a 0.8 s reversal spends only 0.32 s under the 0.4 m/s threshold
  PhaseLabeling quick = detect_turns(from_velocity(out_and_back(0.8), fps),
                                     cfg, fps);
  CHECK(quick.turn_intervals.empty());
  // a 1.6 s reversal spends 0.64 s under it
  PhaseLabeling slow = detect_turns(from_velocity(out_and_back(1.6), fps),
                                    cfg, fps);
  CHECK(slow.turn_intervals.size() == 1);
}

TEST_CASE("a long pause without a reversal is neither turn nor idle") {
  const double fps = 30.0;
  TurnConfig cfg;
  cfg.enable_velocity_filter = false;
  std::vector<double> s = from_velocity({{1.0, 0, 0},
                                         {2.0, 1, 1},
                                         {0.3, 1, 0},
                                         {1.0, 0, 0},  // hesitation, no reversal
                                         {0.3, 0, 1},
                                         {2.0, 1, 1},
                                         {2.0, 1, -1},  // true turn
                                         {4.5, -1, -1},
                                         {0.3, -1, 0},
                                         {1.0, 0, 0}},
                                        fps);
  PhaseLabeling lab = detect_turns(s, cfg, fps);
  REQUIRE(lab.turn_intervals.size() == 1);
  // hesitation frames stay part of a walk segment
  size_t hes_mid = static_cast<size_t>(std::lround(3.8 * fps));
  CHECK(lab.labels[hes_mid] == Phase::Walk);
  // and the detected turn is the far apex, past the 4 m mark
  CHECK(s[lab.turn_intervals[0].center_frame] > 3.5);
}

TEST_CASE("without any turn nothing is relabeled idle") {
  const double fps = 30.0;
  std::vector<double> s = from_velocity(
      {{1.5, 0, 0}, {0.5, 0, 1}, {4.0, 1, 1}, {0.5, 1, 0}, {1.5, 0, 0}}, fps);
  PhaseLabeling lab = detect_turns(s, {}, fps);
  CHECK(lab.turn_intervals.empty());
  for (Phase p : lab.labels) CHECK(p != Phase::Idle);
  REQUIRE(lab.walking_segments.size() == 1);
  CHECK(lab.walking_segments[0].direction == +1);
}

TEST_CASE("synthetic walker turns match the programmed schedule") {
  WalkerSpec spec;
  spec.seed = 31;
  auto [seq, gt] = generate_walker(spec);
  PhaseLabeling lab = detect_turns(seq, {});

  REQUIRE(gt.turn_intervals.size() == 1);
  REQUIRE(lab.turn_intervals.size() == 1);
  const auto& truth = gt.turn_intervals[0];
  const TurnInterval& found = lab.turn_intervals[0];
  CHECK(found.center_frame >= truth[0]);
  CHECK(found.center_frame <= truth[2]);

  REQUIRE(lab.walking_segments.size() >= 2);
  CHECK(lab.walking_segments[0].direction == +1);
  CHECK(lab.walking_segments[1].direction == -1);
  CHECK(lab.labels.front() == Phase::Idle);
}

TEST_CASE("hesitations do not split the programmed turn count") {
  WalkerSpec spec;
  spec.seed = 32;
  spec.hesitation_times = {1.2};
  auto [seq, gt] = generate_walker(spec);
  PhaseLabeling lab = detect_turns(seq, {});
  CHECK(lab.turn_intervals.size() == 1);
}

TEST_CASE("velocity filter is skipped when the record is too short to pad") {
  // 7 samples at 3.5 Hz: exactly 2 s of data, below the filtfilt padding need
  std::vector<double> s = {0, 0.4, 0.8, 1.2, 0.8, 0.4, 0};
  PhaseLabeling lab = detect_turns(s, {}, 3.5);
  CHECK(lab.filter_skipped);
}

TEST_CASE("preconditions") {
  std::vector<double> s(30, 0.0);
  CHECK_THROWS_AS(detect_turns(s, {}, 30.0), Error);  // under 2 s
  TurnConfig bad;
  bad.min_turn_ms = 0.0;
  std::vector<double> ok(90, 0.0);
  CHECK_THROWS_AS(detect_turns(ok, bad, 30.0), Error);
}
