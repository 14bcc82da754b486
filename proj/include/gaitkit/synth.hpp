#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Geometry>

#include "gaitkit/core.hpp"

namespace gaitkit {

enum class DriftModel { None, Linear, RandomWalk };

struct WalkerSpec {
  double frame_rate = 30.0;       // Hz
  double cadence = 50.0;          // strides/min
  double step_length = 0.60;      // m
  double step_width = 0.10;       // m
  double arm_amplitude = 0.12;    // m, half peak-to-peak forward swing
  double arm_lateral = 0.02;      // m, half peak-to-peak lateral swing
  double walk_distance = 3.5;     // m per leg
  double turn_duration = 1.5;     // s per 180-degree turn
  double idle_duration = 1.2;     // s chair phase at each end
  double heading_deg = 0.0;       // initial walkway heading vs +Z
  double noise_sigma = 0.0;       // m, i.i.d. per joint coordinate
  double leg_length = 0.90;       // m
  DriftModel drift = DriftModel::None;
  double drift_magnitude = 0.0;   // m endpoint error (linear) / step scale
  // optional mid-walk hesitations (speed drops to zero, no reversal)
  std::vector<double> hesitation_times;  // s into the walk-out phase
  double hesitation_duration = 0.3;      // s
  uint64_t seed = 1;
  std::string subject_id = "synth";

  void check() const {
    if (cadence <= 0 || frame_rate <= 0) throw Error("cadence/frame_rate must be positive");
    if (step_length < 0 || step_width < 0 || arm_amplitude < 0 ||
        drift_magnitude < 0 || noise_sigma < 0)
      throw Error("walker magnitudes must be >= 0");
    if (step_length > 1.6 * leg_length)
      throw Error("infeasible spec: step_length exceeds leg reach");
  }
};

struct GroundTruth {
  std::vector<size_t> hs_left, hs_right, to_left, to_right;
  std::vector<std::array<size_t, 3>> turn_intervals;  // start, center, end
  double cadence;            // strides/min
  double step_length;        // m
  double step_width;         // m
  double walking_speed;      // m/s
  double stride_time;        // s
  double peak_yaw_velocity;  // deg/s
  double arm_half_amplitude; // m
  double turn_duration;      // s
  std::vector<Vec3> pelvis_path;  // clean programmed pelvis track
};

namespace detail {

struct WalkerState {
  double dist = 0.0;     // progressed distance within current leg
  double phi = 0.0;      // gait phase, HS_left at pi/2 + 2k pi
  double chi = 0.0;      // heading angle about Y, walkway frame
};

}  // namespace detail

// Parametric TUG walker: idle, walk out, 180-degree turn, walk back,
// 180-degree turn, idle. Limb motion is phase-locked sinusoids; the
// returned ground truth carries every programmed event and metric.
inline std::pair<SkeletonSequence, GroundTruth> generate_walker(
    const WalkerSpec& spec) {
  spec.check();
  const double fps = spec.frame_rate;
  const double dt = 1.0 / fps;
  const double stride_hz = spec.cadence / 60.0;
  const double speed = 2.0 * stride_hz * spec.step_length;  // two steps/stride
  const double foot_amp = spec.step_length / 2.0;
  // quantize all phase durations to the frame grid so that the out and back
  // legs cover the same distance and the loop closes exactly
  auto quant = [&](double seconds) {
    return std::max(1.0, std::round(seconds * fps)) / fps;
  };
  const double walk_time = quant(spec.walk_distance / speed);
  const double idle_time = quant(spec.idle_duration);
  const double turn_time = quant(spec.turn_duration);
  const double hes_time = quant(spec.hesitation_duration);

  // timeline: phase changes at these times
  struct Window { double start, end; int kind; };  // 0 idle 1 walk 2 turn
  std::vector<Window> windows;
  double t = 0.0;
  windows.push_back({t, t += idle_time, 0});
  double hes_total = spec.hesitation_times.size() * hes_time;
  windows.push_back({t, t += walk_time + hes_total, 1});  // walk out
  windows.push_back({t, t += turn_time, 2});
  windows.push_back({t, t += walk_time, 1});  // walk back
  windows.push_back({t, t += turn_time, 2});
  windows.push_back({t, t += idle_time, 0});
  const double total_time = t;
  const size_t n_frames = static_cast<size_t>(std::floor(total_time * fps)) + 1;

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  SkeletonSequence seq;
  seq.frame_rate = fps;
  seq.subject_id = spec.subject_id;
  seq.leg_length = spec.leg_length;
  seq.frames.resize(n_frames);

  GroundTruth gt;
  gt.cadence = spec.cadence;
  gt.step_length = spec.step_length;
  gt.step_width = spec.step_width;
  gt.walking_speed = speed;
  gt.stride_time = 1.0 / stride_hz;
  gt.peak_yaw_velocity = 180.0 / turn_time;
  gt.arm_half_amplitude = spec.arm_amplitude;
  gt.turn_duration = turn_time;

  detail::WalkerState st;
  double leg_sign = +1.0;  // walk-out progresses +Z in walkway frame
  double z = 0.0;          // walkway-frame progression
  int turns_done = 0;
  const double heading0 = rad(spec.heading_deg);
  const Eigen::Matrix3d world_rot = [&] {
    Eigen::Matrix3d r;
    r << std::cos(heading0), 0, std::sin(heading0), 0, 1, 0,
        -std::sin(heading0), 0, std::cos(heading0);
    return r;
  }();

  const double hip_y = spec.leg_length;
  const double pelvis_y = hip_y + 0.05;

  std::vector<double> sin_phi_walking(n_frames,
                                      std::numeric_limits<double>::quiet_NaN());

  for (size_t fi = 0; fi < n_frames; ++fi) {
    double time = fi * dt;
    int kind = 0;
    double wstart = 0, wend = 0;
    int widx = -1;
    for (size_t w = 0; w < windows.size(); ++w)
      if (time >= windows[w].start && time < windows[w].end + 1e-12) {
        kind = windows[w].kind;
        wstart = windows[w].start;
        wend = windows[w].end;
        widx = static_cast<int>(w);
      }
    (void)widx;

    double v_eff = 0.0;
    if (kind == 1) {
      v_eff = speed;
      // hesitations only within the walk-out window
      if (wstart < idle_time + 1e-9) {
        double tw = time - wstart;
        double consumed = 0.0;
        for (double h : spec.hesitation_times) {
          if (tw >= h + consumed && tw < h + consumed + hes_time) v_eff = 0.0;
          consumed += hes_time;
        }
      }
    }

    if (kind == 1 && v_eff > 0.0) {
      z += leg_sign * v_eff * dt;
      st.phi += 2.0 * M_PI * stride_hz * dt;
      sin_phi_walking[fi] = std::sin(st.phi);
    } else if (kind == 2) {
      double tau = (time - wstart) / (wend - wstart);  // 0..1
      int turn_index =
          (wstart < idle_time + walk_time + hes_total + 0.5 * turn_time) ? 0 : 1;
      st.chi = (turn_index == 0 ? 0.0 : M_PI) + tau * M_PI;
    }
    if (kind == 2 && turns_done == 0 && time + dt >= wend - 1e-9) {
      turns_done = 1;
      leg_sign = -1.0;
    }

    double chi = st.chi;

    // progression with a small bump at the turn apex so the reversal is a
    // strict extremum
    double prog = z;
    if (kind == 2) {
      double tau = (time - wstart) / (wend - wstart);
      double bump = 0.01 * std::sin(M_PI * tau);
      prog = z + (z > spec.walk_distance / 2.0 ? bump : -bump);
    }

    double phi = st.phi;
    double sphi = std::sin(phi), cphi = std::cos(phi);
    double bob = 0.02 * std::sin(2.0 * phi);

    Vec3 pelvis = Vec3(0, pelvis_y + bob, prog);
    // express walkway coordinates in the world frame (initial heading)
    auto to_world = [&](const Vec3& p) { return world_rot * p; };

    JointFrame& f = seq.frames[fi];
    auto put = [&](JointId id, const Vec3& p) { f.pos(id) = to_world(p); };

    Vec3 body_fwd(std::sin(chi), 0.0, std::cos(chi));
    Vec3 body_left = Vec3::UnitY().cross(body_fwd);

    put(JointId::Pelvis, pelvis);
    Vec3 lhip = pelvis + 0.10 * body_left - Vec3(0, 0.10, 0);
    Vec3 rhip = pelvis - 0.10 * body_left - Vec3(0, 0.10, 0);
    put(JointId::LeftHip, lhip);
    put(JointId::RightHip, rhip);

    for (Side side : {Side::Left, Side::Right}) {
      double s = side == Side::Left ? +1.0 : -1.0;
      double rel = foot_amp * (side == Side::Left ? sphi : -sphi);
      double lift_arg = side == Side::Left ? cphi : -cphi;
      double heel_y = 0.03 + 0.06 * std::max(0.0, lift_arg);
      Vec3 lateral = s * (spec.step_width / 2.0) * body_left;
      Vec3 heel = Vec3(0, heel_y, prog) + rel * body_fwd + lateral;
      Vec3 toe = heel + 0.22 * body_fwd + Vec3(0, -0.01, 0);
      Vec3 ankle = heel + Vec3(0, 0.07, 0) + 0.04 * body_fwd;
      Vec3 hip = side == Side::Left ? lhip : rhip;
      Vec3 knee = 0.5 * (hip + ankle) +
                  (0.03 + 0.05 * std::abs(side == Side::Left ? sphi : -sphi)) *
                      body_fwd;
      put(heel_joint(side), heel);
      put(toe_joint(side), toe);
      put(ankle_joint(side), ankle);
      put(knee_joint(side), knee);
      put(side == Side::Left ? JointId::LeftSmallToe : JointId::RightSmallToe,
          toe + 0.04 * s * body_left);
      put(side == Side::Left ? JointId::LeftMidFoot : JointId::RightMidFoot,
          0.5 * (heel + toe));
      put(side == Side::Left ? JointId::LeftFoot : JointId::RightFoot,
          0.5 * (heel + toe) + Vec3(0, 0.02, 0));
    }

    Vec3 spine1 = pelvis + Vec3(0, 0.12, 0);
    Vec3 spine2 = pelvis + Vec3(0, 0.27, 0);
    Vec3 spine3 = pelvis + Vec3(0, 0.42, 0);
    Vec3 neck = pelvis + Vec3(0, 0.52, 0);
    Vec3 head = pelvis + Vec3(0, 0.62, 0);
    put(JointId::Spine1, spine1);
    put(JointId::Spine2, spine2);
    put(JointId::Spine3, spine3);
    put(JointId::Neck, neck);
    put(JointId::Head, head);
    put(JointId::HeadTop, head + Vec3(0, 0.10, 0));
    put(JointId::Nose, head + 0.09 * body_fwd);
    put(JointId::Jaw, head + 0.08 * body_fwd - Vec3(0, 0.05, 0));
    put(JointId::Chin, head + 0.07 * body_fwd - Vec3(0, 0.07, 0));
    put(JointId::Forehead, head + 0.07 * body_fwd + Vec3(0, 0.05, 0));
    put(JointId::LeftEye, head + 0.08 * body_fwd + 0.03 * body_left + Vec3(0, 0.02, 0));
    put(JointId::RightEye, head + 0.08 * body_fwd - 0.03 * body_left + Vec3(0, 0.02, 0));
    put(JointId::LeftEyeOuter, head + 0.07 * body_fwd + 0.05 * body_left + Vec3(0, 0.02, 0));
    put(JointId::RightEyeOuter, head + 0.07 * body_fwd - 0.05 * body_left + Vec3(0, 0.02, 0));
    put(JointId::LeftEar, head + 0.07 * body_left);
    put(JointId::RightEar, head - 0.07 * body_left);
    put(JointId::LeftCheek, head + 0.07 * body_fwd + 0.045 * body_left - Vec3(0, 0.03, 0));
    put(JointId::RightCheek, head + 0.07 * body_fwd - 0.045 * body_left - Vec3(0, 0.03, 0));

    for (Side side : {Side::Left, Side::Right}) {
      double s = side == Side::Left ? +1.0 : -1.0;
      // arm swings anti-phase with the ipsilateral leg
      double arm_phase = side == Side::Left ? phi + M_PI : phi;
      double dfwd = spec.arm_amplitude * std::sin(arm_phase);
      double dlat = spec.arm_lateral * std::sin(arm_phase);
      Vec3 shoulder = spine3 + 0.18 * s * body_left + Vec3(0, 0.08, 0);
      Vec3 wrist = shoulder - Vec3(0, 0.55, 0) + dfwd * body_fwd +
                   s * dlat * body_left;
      Vec3 elbow = 0.5 * (shoulder + wrist) + 0.02 * body_fwd;
      put(shoulder_joint(side), shoulder);
      put(side == Side::Left ? JointId::LeftCollar : JointId::RightCollar,
          neck + 0.08 * s * body_left);
      put(side == Side::Left ? JointId::LeftElbow : JointId::RightElbow, elbow);
      put(wrist_joint(side), wrist);
      put(side == Side::Left ? JointId::LeftHand : JointId::RightHand,
          wrist - Vec3(0, 0.08, 0));
    }

    f.root_translation = f.pos(JointId::Pelvis);
    f.root_orientation = Vec3(0, 1, 0) * (heading0 + chi);

    if (spec.noise_sigma > 0.0)
      for (Vec3& p : f.positions)
        p += spec.noise_sigma * Vec3(noise(rng), noise(rng), noise(rng));

    gt.pelvis_path.push_back(f.pos(JointId::Pelvis));
  }

  // programmed events: discrete extrema of sin(phi) over walking frames
  auto record_events = [&](bool left_side) {
    std::vector<size_t>& hs = left_side ? gt.hs_left : gt.hs_right;
    std::vector<size_t>& to = left_side ? gt.to_left : gt.to_right;
    double sign = left_side ? +1.0 : -1.0;
    for (size_t i = 1; i + 1 < n_frames; ++i) {
      double a = sign * sin_phi_walking[i - 1];
      double b = sign * sin_phi_walking[i];
      double c = sign * sin_phi_walking[i + 1];
      if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c)) continue;
      if (b > a && b >= c) hs.push_back(i);   // heel forward extremum
      if (b < a && b <= c) to.push_back(i);   // toe backward extremum
    }
  };
  record_events(true);
  record_events(false);

  // Only the mid-course reversal turn is recorded: the terminal turn-to-sit
  // has no progression reversal and is indistinguishable from sitting idle
  // for any progression-based detector.
  bool first_turn = true;
  for (size_t w = 0; w < windows.size(); ++w) {
    if (windows[w].kind != 2) continue;
    if (!first_turn) break;
    first_turn = false;
    auto fr = [&](double time) {
      return static_cast<size_t>(std::lround(time * fps));
    };
    size_t t0 = fr(windows[w].start);
    size_t t1 = std::min(fr(windows[w].end), n_frames - 1);
    // center = progression apex: the frame farthest along the outbound
    // walkway direction, i.e. where forward motion actually reverses (the
    // window midpoint lags it when the pelvis track is asymmetric in time)
    const Vec3 out_dir(std::sin(heading0), 0.0, std::cos(heading0));
    size_t apex = t0;
    for (size_t i = t0; i <= t1 && i < gt.pelvis_path.size(); ++i)
      if (gt.pelvis_path[i].dot(out_dir) > gt.pelvis_path[apex].dot(out_dir))
        apex = i;
    gt.turn_intervals.push_back({t0, apex, t1});
  }

  validate(seq);
  return {std::move(seq), std::move(gt)};
}

// Adds cumulative root-translation drift; articulated pose untouched
// (every joint of a frame is shifted by the same vector).
inline SkeletonSequence inject_drift(const SkeletonSequence& seq,
                                     DriftModel model, double magnitude,
                                     uint64_t seed = 1) {
  validate(seq);
  if (model == DriftModel::None || magnitude == 0.0) return seq;
  const size_t T = seq.frames.size();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<Vec3> offset(T, Vec3::Zero());
  if (model == DriftModel::Linear) {
    double az = 2.0 * M_PI * std::uniform_real_distribution<double>(0, 1)(rng);
    Vec3 dir(std::sin(az), 0.0, std::cos(az));
    for (size_t t = 0; t < T; ++t)
      offset[t] = dir * (magnitude * static_cast<double>(t) /
                         static_cast<double>(T - 1));
  } else {
    double step = magnitude / std::sqrt(static_cast<double>(T));
    Vec3 acc = Vec3::Zero();
    for (size_t t = 1; t < T; ++t) {
      acc += step * Vec3(gauss(rng), 0.2 * gauss(rng), gauss(rng));
      offset[t] = acc;
    }
  }
  SkeletonSequence out = seq;
  for (size_t t = 0; t < T; ++t) {
    for (Vec3& p : out.frames[t].positions) p += offset[t];
    out.frames[t].root_translation += offset[t];
  }
  return out;
}

}  // namespace gaitkit
