#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "gaitkit/core.hpp"
#include "gaitkit/filters.hpp"
#include "gaitkit/pelvis_frame.hpp"
#include "gaitkit/segmentation.hpp"

namespace gaitkit {

// Minimum prominence (m) on relative foot / wrist signals for event extrema.
inline constexpr double kFootProminence = 0.02;
inline constexpr double kArmProminence = 0.01;
inline constexpr double kWristConfidenceFloor = 0.85;

struct GaitCycle {
  size_t hs_start;
  size_t to;
  size_t hs_end;
  int segment_direction;
  Side side;
};

struct GaitEvents {
  Side side = Side::Left;
  std::vector<size_t> heel_strikes;
  std::vector<size_t> toe_offs;
  std::vector<GaitCycle> cycles;
};

namespace detail {

struct FootEvent {
  size_t frame;
  bool is_hs;
  double strength;  // |relative displacement| at the event
};

// Alternation: between two consecutive same-type events keep the stronger one.
inline std::vector<FootEvent> enforce_alternation(std::vector<FootEvent> ev) {
  std::sort(ev.begin(), ev.end(),
            [](const FootEvent& a, const FootEvent& b) { return a.frame < b.frame; });
  std::vector<FootEvent> out;
  for (const FootEvent& e : ev) {
    if (!out.empty() && out.back().is_hs == e.is_hs) {
      if (e.strength > out.back().strength) out.back() = e;
    } else {
      out.push_back(e);
    }
  }
  return out;
}

inline std::vector<double> relative_forward(const SkeletonSequence& seq,
                                            JointId joint) {
  std::vector<double> r;
  r.reserve(seq.frames.size());
  for (const JointFrame& f : seq.frames)
    r.push_back(f.pos(joint).z() - f.pos(JointId::Pelvis).z());
  return r;
}

inline std::vector<Peak> segment_extrema(const std::vector<double>& sig,
                                         size_t start, size_t end, bool maxima,
                                         double prominence) {
  std::vector<double> sub(sig.begin() + start, sig.begin() + end + 1);
  std::vector<Peak> p =
      maxima ? find_peaks(sub, prominence) : find_troughs(sub, prominence);
  for (Peak& pk : p) pk.index += start;
  return p;
}

}  // namespace detail

// Heel strikes and toe-offs from relative foot displacements, per side.
// Forward segments: HS = maxima of z_heel,rel, TO = minima of z_toe,rel.
// Return segments invert both criteria.
inline GaitEvents detect_foot_events(const SkeletonSequence& seq, Side side,
                                     const PhaseLabeling& labeling) {
  validate(seq);
  if (labeling.walking_segments.empty())
    throw Error("no walking segments: cannot detect foot events");
  std::vector<double> heel = detail::relative_forward(seq, heel_joint(side));
  std::vector<double> toe = detail::relative_forward(seq, toe_joint(side));

  std::vector<detail::FootEvent> raw;
  for (const WalkingSegment& seg : labeling.walking_segments) {
    bool fwd = seg.direction > 0;
    for (const Peak& p : detail::segment_extrema(heel, seg.start_frame,
                                                 seg.end_frame, fwd,
                                                 kFootProminence))
      raw.push_back({p.index, true, std::abs(heel[p.index])});
    for (const Peak& p : detail::segment_extrema(toe, seg.start_frame,
                                                 seg.end_frame, !fwd,
                                                 kFootProminence))
      raw.push_back({p.index, false, std::abs(toe[p.index])});
  }
  std::vector<detail::FootEvent> ev = detail::enforce_alternation(std::move(raw));

  GaitEvents out;
  out.side = side;
  for (const detail::FootEvent& e : ev)
    (e.is_hs ? out.heel_strikes : out.toe_offs).push_back(e.frame);
  return out;
}

// One cycle per consecutive ipsilateral heel-strike pair containing exactly
// one toe-off; pairs spanning different walking segments are discarded.
inline std::vector<GaitCycle> build_cycles(const GaitEvents& events,
                                           const PhaseLabeling& labeling) {
  std::vector<GaitCycle> cycles;
  auto segment_of = [&](size_t frame) -> int {
    for (size_t i = 0; i < labeling.walking_segments.size(); ++i) {
      const WalkingSegment& s = labeling.walking_segments[i];
      if (frame >= s.start_frame && frame <= s.end_frame)
        return static_cast<int>(i);
    }
    return -1;
  };
  for (size_t i = 0; i + 1 < events.heel_strikes.size(); ++i) {
    size_t hs0 = events.heel_strikes[i];
    size_t hs1 = events.heel_strikes[i + 1];
    int seg0 = segment_of(hs0);
    if (seg0 < 0 || seg0 != segment_of(hs1)) continue;
    size_t to = 0;
    int count = 0;
    for (size_t t : events.toe_offs)
      if (t > hs0 && t < hs1) {
        to = t;
        ++count;
      }
    if (count != 1) continue;
    cycles.push_back(
        {hs0, to, hs1, labeling.walking_segments[seg0].direction, events.side});
  }
  return cycles;
}

struct ArmSwingCycle {
  size_t min_start;
  size_t peak;  // peak forward extension
  size_t min_end;
};

struct ArmSwingCycles {
  Side side = Side::Left;
  std::vector<ArmSwingCycle> cycles;
  bool excluded = false;
  std::string exclusion_reason;
  std::vector<double> d_fwd;  // wrist-pelvis projection on the forward axis
  std::vector<double> d_lat;  // projection on the side axis
};

// Wrist swing cycles in the pelvis frame. The arm is excluded when
// low-confidence wrist frames exceed half of the walking duration.
inline ArmSwingCycles detect_arm_swing(const SkeletonSequence& seq, Side side,
                                       const PhaseLabeling& labeling) {
  validate(seq);
  ArmSwingCycles out;
  out.side = side;
  std::vector<PelvisFrame> frames = pelvis_frames(seq);
  out.d_fwd.resize(seq.frames.size(), 0.0);
  out.d_lat.resize(seq.frames.size(), 0.0);
  for (size_t t = 0; t < seq.frames.size(); ++t) {
    Vec3 rel = seq.frames[t].pos(wrist_joint(side)) -
               seq.frames[t].pos(JointId::Pelvis);
    out.d_fwd[t] = rel.dot(frames[t].f);
    out.d_lat[t] = rel.dot(frames[t].s);
  }

  size_t walking = 0, low_conf = 0;
  for (const WalkingSegment& seg : labeling.walking_segments) {
    for (size_t t = seg.start_frame; t <= seg.end_frame; ++t) {
      ++walking;
      if (seq.frames[t].conf(wrist_joint(side)) < kWristConfidenceFloor)
        ++low_conf;
    }
  }
  if (walking > 0 && low_conf * 2 > walking) {
    out.excluded = true;
    out.exclusion_reason =
        "wrist occluded in " +
        std::to_string(100 * low_conf / walking) + "% of walking frames";
    return out;
  }

  for (const WalkingSegment& seg : labeling.walking_segments) {
    std::vector<Peak> mins = detail::segment_extrema(
        out.d_fwd, seg.start_frame, seg.end_frame, false, kArmProminence);
    for (size_t i = 0; i + 1 < mins.size(); ++i) {
      size_t a = mins[i].index, b = mins[i + 1].index;
      size_t peak = a;
      for (size_t t = a; t <= b; ++t)
        if (out.d_fwd[t] > out.d_fwd[peak]) peak = t;
      out.cycles.push_back({a, peak, b});
    }
  }
  return out;
}

}  // namespace gaitkit
