#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "gaitkit/biomarkers.hpp"
#include "gaitkit/pipeline.hpp"
#include "gaitkit/synth.hpp"

using namespace gaitkit;

TEST_CASE("feature dictionary enumerates exactly 297 well-formed entries") {
  const auto& dict = feature_dictionary();
  REQUIRE(dict.size() == 297);

  std::set<std::string> names;
  size_t n_mean = 0, n_sd = 0, n_cv = 0, singles = 0;
  auto ends_with = [](const std::string& s, const std::string& suf) {
    return s.size() >= suf.size() &&
           s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
  };
  for (const FeatureDef& f : dict) {
    CHECK(names.insert(f.name).second);  // unique
    CHECK(!f.unit.empty());
    if (ends_with(f.name, "_mean")) ++n_mean;
    else if (ends_with(f.name, "_sd")) ++n_sd;
    else if (ends_with(f.name, "_cv")) ++n_cv;
    else ++singles;
    if (ends_with(f.name, "_cv")) CHECK(f.unit == "%");
    else if (f.name.find("timing_") != std::string::npos)
      CHECK(f.unit == "%GC");
  }
  // 96 aggregated bases plus 9 singletons
  CHECK(n_mean == 96);
  CHECK(n_sd == 96);
  CHECK(n_cv == 96);
  CHECK(singles == 9);
  // the kinematic block alone contributes 10 x 7 x 3 entries
  size_t kin = 0;
  for (const FeatureDef& f : dict)
    for (AngleChannel c : all_channels())
      if (f.name.rfind(channel_name(c), 0) == 0 &&
          !ends_with(f.name, "_norm") && f.name.find("hip_") != 1) {
        ++kin;
        break;
      }
  CHECK(kin >= 210);
}

TEST_CASE("aggregation ignores NaN and needs two samples for dispersion") {
  using detail::aggregate;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  detail::Agg a = aggregate({2.0, nan, 4.0, nan});
  CHECK(a.n == 2);
  CHECK(a.mean == doctest::Approx(3.0));
  CHECK(a.sd == doctest::Approx(std::sqrt(2.0)));
  CHECK(a.cv == doctest::Approx(100.0 * std::sqrt(2.0) / 3.0));

  detail::Agg single = aggregate({5.0, nan});
  CHECK(single.n == 1);
  CHECK(single.mean == 5.0);
  CHECK(std::isnan(single.sd));
  CHECK(std::isnan(single.cv));

  CHECK(aggregate({nan, nan}).n == 0);
  CHECK(std::isnan(aggregate({}).mean));
}

TEST_CASE("bilateral aggregation degrades gracefully to one side") {
  using detail::aggregate;
  using detail::bilateral;
  detail::Agg l = aggregate({1.0, 3.0});
  detail::Agg r = aggregate({});
  detail::Agg b = bilateral(l, r);
  CHECK(b.mean == doctest::Approx(2.0));  // left only
  CHECK(b.n == 2);
  detail::Agg both = bilateral(aggregate({1.0, 3.0}), aggregate({5.0, 7.0}));
  CHECK(both.mean == doctest::Approx(0.5 * (2.0 + 6.0)));
}

TEST_CASE("stance mask runs from each heel strike to the next toe-off") {
  GaitEvents ev;
  ev.heel_strikes = {5, 20, 35};
  ev.toe_offs = {12, 40};  // the TO after HS 20 was dropped
  std::vector<bool> m = detail::stance_mask(ev, 50);
  CHECK(m[4] == false);
  CHECK(m[5] == true);
  CHECK(m[12] == true);
  CHECK(m[13] == false);
  // dropped TO: stance from 20 stops at the next HS (35)
  CHECK(m[20] == true);
  CHECK(m[34] == true);
  CHECK(m[36] == true);  // stance of HS 35 runs to TO 40
  CHECK(m[41] == false);
}

TEST_CASE("step records reproduce a scripted two-step walk exactly") {
  const double fps = 30.0;
  SkeletonSequence seq;
  seq.frame_rate = fps;
  const size_t n = 60;
  for (size_t t = 0; t < n; ++t) {
    JointFrame f;
    for (int j = 0; j < kNumJoints; ++j) f.positions[j] = Vec3(0, 1.0, 0);
    f.pos(JointId::Pelvis) = Vec3(0, 1.0, t / fps);  // 1 m/s along +Z
    f.pos(JointId::LeftHeel) = Vec3(0.1, 0.02, 0.0);
    f.pos(JointId::RightHeel) = Vec3(-0.1, 0.02, 0.0);
    f.root_translation = f.pos(JointId::Pelvis);
    seq.frames.push_back(f);
  }
  // freeze heel placements at the strike frames
  for (size_t t = 0; t < n; ++t) {
    seq.frames[t].pos(JointId::LeftHeel).z() = t <= 25 ? 0.4 : 0.9;
    seq.frames[t].pos(JointId::RightHeel).z() = 1.0;
    // swing bump of the landing (right) foot between the strikes
    if (t == 18) seq.frames[t].pos(JointId::RightHeel).y() = 0.12;
  }
  PhaseLabeling lab;
  lab.labels.assign(n, Phase::Walk);
  lab.walking_segments.push_back({0, n - 1, +1});
  GaitEvents left, right;
  left.side = Side::Left;
  right.side = Side::Right;
  left.heel_strikes = {10, 40};
  right.heel_strikes = {25};

  std::vector<StepRecord> steps = step_records(seq, left, right, lab);
  REQUIRE(steps.size() == 2);
  const StepRecord& s0 = steps[0];  // left@10 -> right@25
  CHECK(s0.landing_side == Side::Right);
  CHECK(s0.step_length == doctest::Approx(0.6).epsilon(1e-9));   // 1.0 - 0.4
  CHECK(s0.step_width == doctest::Approx(0.2).epsilon(1e-9));
  CHECK(s0.step_time == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(s0.step_velocity == doctest::Approx(1.2).epsilon(1e-9));
  CHECK(s0.step_height == doctest::Approx(0.10).epsilon(1e-9));  // 0.12 - 0.02
  CHECK(s0.pelvis_progression == doctest::Approx(0.5).epsilon(1e-9));
  const StepRecord& s1 = steps[1];  // right@25 -> left@40
  CHECK(s1.landing_side == Side::Left);
  CHECK(s1.step_length == doctest::Approx(0.1).epsilon(1e-9));   // 1.0 - 0.9
}

TEST_CASE("extraction matches the programmed walker ground truth") {
  WalkerSpec spec;
  spec.seed = 51;
  auto [seq, gt] = generate_walker(spec);
  PipelineOutput out = run_pipeline(seq, {}, {});
  const FeatureVector& fv = out.features;

  REQUIRE(fv.values.size() == 297);
  CHECK(fv.get("cadence_mean") == doctest::Approx(gt.cadence).epsilon(0.03));
  CHECK(fv.get("step_length_mean") ==
        doctest::Approx(gt.step_length).epsilon(0.05));
  CHECK(fv.get("walking_speed_mean") ==
        doctest::Approx(gt.walking_speed).epsilon(0.03));
  CHECK(fv.get("stride_time_mean") ==
        doctest::Approx(gt.stride_time).epsilon(0.05));
  CHECK(fv.get("turn_count") == 1.0);
  CHECK(fv.get("step_count") >= 8.0);
  CHECK(fv.get("arm_class_normal") == 1.0);
  CHECK(fv.get("arm_class_rigid") == 0.0);
  CHECK(fv.get("turn_duration_mean") ==
        doctest::Approx(gt.turn_duration).epsilon(0.5));
  // knee flexion peaks in swing, with a nonzero range of motion
  CHECK(fv.get("knee_flexion_rom_mean") > 10.0);
  CHECK(fv.get("knee_flexion_peak_swing_mean") >
        fv.get("knee_flexion_peak_stance_mean"));
  CHECK_THROWS_AS(fv.get("not_a_feature"), Error);
}

TEST_CASE("extraction is invariant to the capture heading") {
  WalkerSpec spec;
  spec.seed = 52;
  auto straight = generate_walker(spec);
  spec.heading_deg = 117.0;
  auto rotated = generate_walker(spec);
  FeatureVector a = run_pipeline(straight.first, {}, {}).features;
  FeatureVector b = run_pipeline(rotated.first, {}, {}).features;
  // channels that are identically zero for the ideal walker have their
  // peak timings decided by 1e-12 alignment noise, so compare only the
  // features that carry real signal
  for (const char* name :
       {"step_length_mean", "step_width_mean", "step_time_mean",
        "step_velocity_mean", "stride_length_mean", "stride_time_mean",
        "cadence_mean", "walking_speed_mean", "stance_pct_mean",
        "swing_pct_mean", "double_support_pct_mean", "turn_count",
        "step_count", "total_walk_duration", "tug_active_time",
        "arm_fwd_amplitude_mean", "arm_frequency_mean", "arm_period_mean",
        "knee_flexion_rom_mean", "hip_flexion_rom_mean",
        "ankle_dorsiflexion_rom_mean", "turn_duration_mean"}) {
    CHECK_MESSAGE(a.get(name) ==
                      doctest::Approx(b.get(name)).epsilon(1e-7).scale(1.0),
                  name);
  }
}

TEST_CASE("a rigid arm flips the swing class flags") {
  WalkerSpec spec;
  spec.seed = 53;
  spec.arm_amplitude = 0.01;  // under the 0.05 m half-amplitude threshold
  auto [seq, gt] = generate_walker(spec);
  FeatureVector fv = run_pipeline(seq, {}, {}).features;
  CHECK(fv.get("arm_class_rigid") == 1.0);
  CHECK(fv.get("arm_class_normal") == 0.0);
}

TEST_CASE("an excluded arm leaves its features missing but keeps the shape") {
  WalkerSpec spec;
  spec.seed = 54;
  auto [seq, gt] = generate_walker(spec);
  PhaseLabeling lab = detect_turns(seq, {});
  GaitEvents left = detect_foot_events(seq, Side::Left, lab);
  GaitEvents right = detect_foot_events(seq, Side::Right, lab);
  ArmSwingCycles arm_l = detect_arm_swing(seq, Side::Left, lab);
  ArmSwingCycles arm_r;
  arm_r.side = Side::Right;
  arm_r.excluded = true;
  arm_r.exclusion_reason = "wrist occluded in 80% of walking frames";
  FeatureVector fv = extract_all(seq, lab, left, right, arm_l, arm_r);
  REQUIRE(fv.values.size() == 297);
  // the left arm alone still populates the bilateral aggregates
  CHECK(std::isfinite(fv.get("arm_fwd_amplitude_mean")));
  CHECK(fv.provenance.count("arm_right") == 1);
  CHECK(fv.provenance.at("arm_right").find("occluded") != std::string::npos);
  CHECK(fv.missing_count() < 297);
}

TEST_CASE("parasite lateral swing is detected from the cycle signals") {
  WalkerSpec spec;
  spec.seed = 55;
  auto [seq, gt] = generate_walker(spec);
  PhaseLabeling lab = detect_turns(seq, {});
  GaitEvents left = detect_foot_events(seq, Side::Left, lab);
  GaitEvents right = detect_foot_events(seq, Side::Right, lab);
  ArmSwingCycles arm_l = detect_arm_swing(seq, Side::Left, lab);
  ArmSwingCycles arm_r = detect_arm_swing(seq, Side::Right, lab);
  // inject a lateral component larger than half the forward amplitude
  for (size_t t = 0; t < arm_l.d_lat.size(); ++t)
    arm_l.d_lat[t] = 0.8 * arm_l.d_fwd[t];
  FeatureVector fv = extract_all(seq, lab, left, right, arm_l, arm_r);
  CHECK(fv.get("arm_class_parasite") == doctest::Approx(0.5));  // left arm only
  CHECK(fv.get("arm_lat_fwd_ratio_mean") > 0.3);
}

TEST_CASE("missing-value bookkeeping is self-consistent") {
  WalkerSpec spec;
  spec.seed = 56;
  auto [seq, gt] = generate_walker(spec);
  FeatureVector fv = run_pipeline(seq, {}, {}).features;
  size_t counted = 0;
  for (size_t i = 0; i < fv.values.size(); ++i)
    if (fv.is_missing(i)) ++counted;
  CHECK(counted == fv.missing_count());
  // a clean synthetic walk leaves the vast majority of features present
  CHECK(fv.missing_count() < 40);
}
