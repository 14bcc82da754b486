#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "gaitkit/core.hpp"
#include "gaitkit/events.hpp"
#include "gaitkit/filters.hpp"
#include "gaitkit/pelvis_frame.hpp"

namespace gaitkit {

enum class AngleChannel {
  KneeFlexion,
  HipFlexion,
  HipAbduction,
  AnkleDorsiflexion,
  PelvisTilt,
  PelvisObliquity,
  PelvisRotation,
  TrunkFlexion,
  TrunkLateral,
  TrunkRotation,  // trunk-pelvis dissociation in the transverse plane
};

inline const char* channel_name(AngleChannel c) {
  switch (c) {
    case AngleChannel::KneeFlexion: return "knee_flexion";
    case AngleChannel::HipFlexion: return "hip_flexion";
    case AngleChannel::HipAbduction: return "hip_abduction";
    case AngleChannel::AnkleDorsiflexion: return "ankle_dorsiflexion";
    case AngleChannel::PelvisTilt: return "pelvis_tilt";
    case AngleChannel::PelvisObliquity: return "pelvis_obliquity";
    case AngleChannel::PelvisRotation: return "pelvis_rotation";
    case AngleChannel::TrunkFlexion: return "trunk_flexion";
    case AngleChannel::TrunkLateral: return "trunk_lateral";
    default: return "trunk_rotation";
  }
}

inline bool channel_is_sided(AngleChannel c) {
  switch (c) {
    case AngleChannel::KneeFlexion:
    case AngleChannel::HipFlexion:
    case AngleChannel::HipAbduction:
    case AngleChannel::AnkleDorsiflexion:
      return true;
    default:
      return false;
  }
}

inline const std::vector<AngleChannel>& all_channels() {
  static const std::vector<AngleChannel> chans = {
      AngleChannel::KneeFlexion,     AngleChannel::HipFlexion,
      AngleChannel::HipAbduction,    AngleChannel::AnkleDorsiflexion,
      AngleChannel::PelvisTilt,      AngleChannel::PelvisObliquity,
      AngleChannel::PelvisRotation,  AngleChannel::TrunkFlexion,
      AngleChannel::TrunkLateral,    AngleChannel::TrunkRotation};
  return chans;
}

struct AngleSeries {
  AngleChannel channel;
  std::optional<Side> side;            // empty for pelvis/trunk channels
  std::vector<double> values;          // degrees; NaN where not computable
};

namespace detail {

inline double clamp1(double x) { return std::max(-1.0, std::min(1.0, x)); }

// Signed angle (rad) from 2D vector a to b.
inline double signed_angle_2d(double ax, double ay, double bx, double by) {
  return std::atan2(ax * by - ay * bx, ax * bx + ay * by);
}

// Yaw of a horizontal side vector: for a body yawed by psi about Y the
// side axis is (cos psi, 0, -sin psi).
inline double yaw_of_side(const Vec3& s) {
  Vec3 h(s.x(), 0.0, s.z());
  if (h.norm() < 1e-9) return std::numeric_limits<double>::quiet_NaN();
  return std::atan2(-h.z(), h.x());
}

inline double wrap_pi(double a) {
  while (a > M_PI) a -= 2.0 * M_PI;
  while (a < -M_PI) a += 2.0 * M_PI;
  return a;
}

}  // namespace detail

// All ten angle channels, degrees per frame. Sided channels are emitted
// once per side. Segment conventions (see docs/features.md):
//   knee:   full extension 0, flexion positive
//   ankle:  dorsiflexion positive, plantarflexion negative
//   pelvis: tilt anterior+, obliquity left-up+, rotation left-forward+
//   trunk:  flexion lean+, lateral left+, rotation = trunk-pelvis dissociation
inline std::vector<AngleSeries> joint_angles(
    const SkeletonSequence& seq,
    const PhaseLabeling* labeling = nullptr) {
  validate(seq);
  const size_t n = seq.frames.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<PelvisFrame> pf = pelvis_frames(seq);

  std::vector<AngleSeries> out;
  auto make = [&](AngleChannel c, std::optional<Side> side) -> AngleSeries& {
    out.push_back({c, side, std::vector<double>(n, nan)});
    return out.back();
  };

  for (Side side : {Side::Left, Side::Right}) {
    AngleSeries& knee = make(AngleChannel::KneeFlexion, side);
    AngleSeries& hipf = make(AngleChannel::HipFlexion, side);
    AngleSeries& hipa = make(AngleChannel::HipAbduction, side);
    AngleSeries& ankle = make(AngleChannel::AnkleDorsiflexion, side);
    double side_sign = side == Side::Left ? 1.0 : -1.0;
    for (size_t t = 0; t < n; ++t) {
      const JointFrame& f = seq.frames[t];
      Vec3 hip = f.pos(hip_joint(side));
      Vec3 kneep = f.pos(knee_joint(side));
      Vec3 anklep = f.pos(ankle_joint(side));
      Vec3 thigh = kneep - hip;
      Vec3 shank = anklep - kneep;
      if (thigh.norm() > 1e-9 && shank.norm() > 1e-9) {
        double interior = std::acos(detail::clamp1(
            (-thigh).normalized().dot(shank.normalized())));
        knee.values[t] = deg(M_PI - interior);
      }
      if (pf[t].valid && thigh.norm() > 1e-9) {
        hipf.values[t] =
            deg(std::atan2(thigh.dot(pf[t].f), -thigh.dot(pf[t].u)));
        hipa.values[t] =
            deg(std::atan2(side_sign * thigh.dot(pf[t].s), -thigh.dot(pf[t].u)));
      }
      if (pf[t].valid) {
        // foot vs shank in the pelvis sagittal plane; neutral foot is
        // perpendicular to the shank
        Vec3 foot = f.pos(toe_joint(side)) - f.pos(heel_joint(side));
        double sa = shank.dot(pf[t].f), sb = shank.dot(pf[t].u);
        double fa = foot.dot(pf[t].f), fb = foot.dot(pf[t].u);
        if (std::hypot(sa, sb) > 1e-9 && std::hypot(fa, fb) > 1e-9) {
          double na = -sb, nb = sa;  // shank rotated +90 deg toward forward
          ankle.values[t] = deg(detail::signed_angle_2d(na, nb, fa, fb));
        }
      }
    }
  }

  AngleSeries& tilt = make(AngleChannel::PelvisTilt, std::nullopt);
  AngleSeries& obli = make(AngleChannel::PelvisObliquity, std::nullopt);
  AngleSeries& prot = make(AngleChannel::PelvisRotation, std::nullopt);
  AngleSeries& tflex = make(AngleChannel::TrunkFlexion, std::nullopt);
  AngleSeries& tlat = make(AngleChannel::TrunkLateral, std::nullopt);
  AngleSeries& trot = make(AngleChannel::TrunkRotation, std::nullopt);

  // reference heading per frame: walking-segment direction when available
  std::vector<double> ref_yaw(n, 0.0);
  if (labeling) {
    for (const WalkingSegment& seg : labeling->walking_segments)
      if (seg.direction < 0)
        for (size_t t = seg.start_frame; t <= seg.end_frame && t < n; ++t)
          ref_yaw[t] = M_PI;
  }

  std::vector<double> prot_rad(n, nan), trot_rad(n, nan);
  for (size_t t = 0; t < n; ++t) {
    if (!pf[t].valid) continue;
    const JointFrame& f = seq.frames[t];
    tilt.values[t] = deg(-std::asin(detail::clamp1(pf[t].f.y())));
    obli.values[t] = deg(std::asin(detail::clamp1(pf[t].s.y())));

    double psi = std::atan2(pf[t].f.x(), pf[t].f.z());
    prot_rad[t] = -detail::wrap_pi(psi - ref_yaw[t]);

    Vec3 trunk = f.pos(JointId::Spine3) - f.pos(JointId::Pelvis);
    Vec3 fh(pf[t].f.x(), 0.0, pf[t].f.z());
    Vec3 sh(pf[t].s.x(), 0.0, pf[t].s.z());
    if (trunk.norm() > 1e-9 && fh.norm() > 1e-9) {
      tflex.values[t] =
          deg(std::atan2(trunk.dot(fh.normalized()), trunk.y()));
      tlat.values[t] = deg(std::atan2(trunk.dot(sh.normalized()), trunk.y()));
    }
    Vec3 shoulder_line =
        f.pos(JointId::LeftShoulder) - f.pos(JointId::RightShoulder);
    double psi_trunk = detail::yaw_of_side(shoulder_line);
    double psi_pelvis = detail::yaw_of_side(pf[t].s);
    if (std::isfinite(psi_trunk) && std::isfinite(psi_pelvis))
      trot_rad[t] = -detail::wrap_pi(psi_trunk - psi_pelvis);
  }

  // transverse channels: unwrap within each walking segment
  auto unwrap_segments = [&](std::vector<double>& rad_series,
                             std::vector<double>& deg_out) {
    deg_out.assign(n, nan);
    auto emit = [&](size_t a, size_t b) {
      std::vector<double> chunk(rad_series.begin() + a, rad_series.begin() + b + 1);
      bool ok = true;
      for (double v : chunk) ok = ok && std::isfinite(v);
      if (ok) chunk = unwrap(chunk);
      for (size_t t = a; t <= b; ++t) deg_out[t] = deg(chunk[t - a]);
    };
    if (labeling && !labeling->walking_segments.empty()) {
      std::vector<bool> covered(n, false);
      for (const WalkingSegment& seg : labeling->walking_segments) {
        emit(seg.start_frame, std::min(seg.end_frame, n - 1));
        for (size_t t = seg.start_frame; t <= seg.end_frame && t < n; ++t)
          covered[t] = true;
      }
      for (size_t t = 0; t < n; ++t)
        if (!covered[t]) deg_out[t] = deg(rad_series[t]);
    } else {
      emit(0, n - 1);
    }
  };
  unwrap_segments(prot_rad, prot.values);
  unwrap_segments(trot_rad, trot.values);

  return out;
}

// Angle curves resampled to 101 points (0..100% of the gait cycle).
struct NormalizedCycleCurve {
  AngleChannel channel;
  std::optional<Side> side;
  std::vector<std::vector<double>> per_cycle;  // each of length 101
  std::vector<double> stance_fraction;          // per cycle, (to-hs)/(hs1-hs0)
  std::vector<double> mean_curve;
  std::vector<double> sd_curve;
  size_t skipped_cycles = 0;
};

inline constexpr int kCycleSamples = 101;

inline NormalizedCycleCurve normalize_cycles(const AngleSeries& series,
                                             const std::vector<GaitCycle>& cycles) {
  NormalizedCycleCurve out;
  out.channel = series.channel;
  out.side = series.side;
  for (const GaitCycle& c : cycles) {
    if (c.hs_end >= series.values.size())
      throw Error("cycle exceeds series bounds");
    if (c.hs_end - c.hs_start < 3) {
      ++out.skipped_cycles;
      continue;
    }
    std::vector<double> curve(kCycleSamples);
    double span = static_cast<double>(c.hs_end - c.hs_start);
    for (int k = 0; k < kCycleSamples; ++k) {
      double t = static_cast<double>(c.hs_start) + span * k / 100.0;
      size_t lo = static_cast<size_t>(std::floor(t));
      size_t hi = std::min(lo + 1, c.hs_end);
      double frac = t - static_cast<double>(lo);
      curve[k] = series.values[lo] * (1.0 - frac) + series.values[hi] * frac;
    }
    out.per_cycle.push_back(std::move(curve));
    out.stance_fraction.push_back(static_cast<double>(c.to - c.hs_start) / span);
  }
  out.mean_curve.assign(kCycleSamples, std::numeric_limits<double>::quiet_NaN());
  out.sd_curve.assign(kCycleSamples, std::numeric_limits<double>::quiet_NaN());
  if (!out.per_cycle.empty()) {
    for (int k = 0; k < kCycleSamples; ++k) {
      std::vector<double> vals;
      vals.reserve(out.per_cycle.size());
      for (const auto& c : out.per_cycle) vals.push_back(c[k]);
      out.mean_curve[k] = mean(vals);
      out.sd_curve[k] = vals.size() < 2 ? 0.0 : sample_sd(vals);
    }
  }
  return out;
}

}  // namespace gaitkit
