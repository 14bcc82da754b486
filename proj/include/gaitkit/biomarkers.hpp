#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gaitkit/core.hpp"
#include "gaitkit/events.hpp"
#include "gaitkit/filters.hpp"
#include "gaitkit/kinematics.hpp"
#include "gaitkit/segmentation.hpp"

namespace gaitkit {

inline constexpr int kFeatureCount = 297;
inline constexpr double kArmRigidThreshold = 0.05;      // m, half amplitude
inline constexpr double kArmParasiteRatio = 0.5;        // lat/fwd

struct FeatureDef {
  std::string name;
  std::string unit;
};

// The published feature dictionary: a deterministic enumeration of
// channels x metrics x aggregations plus singletons (docs/features.md).
inline const std::vector<FeatureDef>& feature_dictionary() {
  static const std::vector<FeatureDef> dict = [] {
    std::vector<FeatureDef> d;
    auto agg = [&](const std::string& base, const std::string& unit) {
      d.push_back({base + "_mean", unit});
      d.push_back({base + "_sd", unit});
      d.push_back({base + "_cv", "%"});
    };
    // spatiotemporal, step level
    agg("step_length", "m");
    agg("step_width", "m");
    agg("step_time", "s");
    agg("step_velocity", "m/s");
    agg("step_height", "m");
    agg("step_pelvis_progression", "m");
    // stride level
    agg("stride_length", "m");
    agg("stride_time", "s");
    agg("cadence", "strides/min");
    // normalized
    agg("step_length_norm", "-");
    agg("froude", "-");
    // per-segment walking speed
    agg("walking_speed", "m/s");
    // temporal phases
    agg("stance_time", "s");
    agg("swing_time", "s");
    agg("stance_pct", "%GC");
    agg("swing_pct", "%GC");
    agg("double_support_pct", "%GC");
    // joint kinematics: 10 channels x 7 metrics x 3 aggregations
    static const char* metrics[] = {"value_hs",          "value_to",
                                    "peak_stance",       "peak_swing",
                                    "peak_stance_timing","peak_swing_timing",
                                    "rom"};
    for (AngleChannel c : all_channels())
      for (const char* m : metrics) {
        std::string mm = m;
        std::string unit = (mm == "peak_stance_timing" || mm == "peak_swing_timing")
                               ? "%GC" : "deg";
        agg(std::string(channel_name(c)) + "_" + m, unit);
      }
    // arm swing
    agg("arm_fwd_amplitude", "m");
    agg("arm_bwd_amplitude", "m");
    agg("arm_lat_amplitude", "m");
    agg("arm_half_cycle_duration", "s");
    agg("arm_period", "s");
    agg("arm_frequency", "Hz");
    agg("arm_lat_fwd_ratio", "-");
    d.push_back({"arm_class_normal", "flag"});
    d.push_back({"arm_class_rigid", "flag"});
    d.push_back({"arm_class_parasite", "flag"});
    // functional / TUG
    agg("turn_duration", "s");
    agg("turn_peak_yaw_velocity", "deg/s");
    d.push_back({"turn_count", "count"});
    d.push_back({"step_count", "count"});
    d.push_back({"total_walk_duration", "s"});
    d.push_back({"walk_out_duration", "s"});
    d.push_back({"walk_back_duration", "s"});
    d.push_back({"tug_active_time", "s"});
    return d;
  }();
  return dict;
}

struct FeatureVector {
  std::string subject_id;
  std::vector<double> values;  // NaN = missing, indexed by dictionary order
  std::map<std::string, std::string> provenance;

  bool is_missing(size_t i) const { return !std::isfinite(values[i]); }
  size_t missing_count() const {
    size_t n = 0;
    for (double v : values)
      if (!std::isfinite(v)) ++n;
    return n;
  }
  double get(const std::string& name) const {
    const auto& dict = feature_dictionary();
    for (size_t i = 0; i < dict.size(); ++i)
      if (dict[i].name == name) return values[i];
    throw Error("unknown feature: " + name);
  }
};

struct StepRecord {
  Side landing_side;
  double step_length;
  double step_width;
  double step_time;
  double step_velocity;
  double step_height;
  double pelvis_progression;
};

namespace detail {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

struct Agg {
  double mean = kNan;
  double sd = kNan;
  double cv = kNan;
  size_t n = 0;
};

inline Agg aggregate(const std::vector<double>& raw) {
  std::vector<double> v;
  for (double x : raw)
    if (std::isfinite(x)) v.push_back(x);
  Agg a;
  a.n = v.size();
  if (v.empty()) return a;
  a.mean = gaitkit::mean(v);
  if (v.size() >= 2) {
    a.sd = sample_sd(v);
    a.cv = coeff_variation(v);
  }
  return a;
}

inline double avg2(double a, double b) {
  bool fa = std::isfinite(a), fb = std::isfinite(b);
  if (fa && fb) return 0.5 * (a + b);
  if (fa) return a;
  if (fb) return b;
  return kNan;
}

inline Agg bilateral(const Agg& l, const Agg& r) {
  Agg out;
  out.mean = avg2(l.mean, r.mean);
  out.sd = avg2(l.sd, r.sd);
  out.cv = avg2(l.cv, r.cv);
  out.n = l.n + r.n;
  return out;
}

// Per-side stance mask from alternating HS/TO events.
inline std::vector<bool> stance_mask(const GaitEvents& ev, size_t n_frames) {
  std::vector<bool> stance(n_frames, false);
  for (size_t hs : ev.heel_strikes) {
    size_t to = n_frames;  // stance until the first TO after this HS
    for (size_t t : ev.toe_offs)
      if (t > hs) {
        to = t;
        break;
      }
    // a following HS before that TO means the TO was dropped; stop there
    for (size_t h2 : ev.heel_strikes)
      if (h2 > hs && h2 < to) {
        to = h2;
        break;
      }
    for (size_t t = hs; t <= to && t < n_frames; ++t) stance[t] = true;
  }
  return stance;
}

}  // namespace detail

// Consecutive heel strikes of opposite sides within one walking segment.
// Lengths are projections onto the instantaneous walking direction (unit
// pelvis displacement between the two strikes).
inline std::vector<StepRecord> step_records(const SkeletonSequence& seq,
                                            const GaitEvents& left,
                                            const GaitEvents& right,
                                            const PhaseLabeling& labeling) {
  struct HS {
    size_t frame;
    Side side;
  };
  std::vector<HS> all;
  for (size_t f : left.heel_strikes) all.push_back({f, Side::Left});
  for (size_t f : right.heel_strikes) all.push_back({f, Side::Right});
  std::sort(all.begin(), all.end(),
            [](const HS& a, const HS& b) { return a.frame < b.frame; });

  auto same_segment = [&](size_t a, size_t b) {
    for (const WalkingSegment& s : labeling.walking_segments)
      if (a >= s.start_frame && b <= s.end_frame && a <= b) return true;
    return false;
  };

  std::vector<StepRecord> steps;
  for (size_t i = 0; i + 1 < all.size(); ++i) {
    const HS& trail = all[i];
    const HS& land = all[i + 1];
    if (trail.side == land.side) continue;
    if (!same_segment(trail.frame, land.frame)) continue;
    Vec3 disp = seq.frames[land.frame].pos(JointId::Pelvis) -
                seq.frames[trail.frame].pos(JointId::Pelvis);
    disp.y() = 0.0;
    if (disp.norm() < 1e-9) continue;
    Vec3 d = disp.normalized();
    Vec3 dperp = Vec3::UnitY().cross(d);
    Vec3 h_land = seq.frames[land.frame].pos(heel_joint(land.side));
    Vec3 h_trail = seq.frames[land.frame].pos(heel_joint(trail.side));
    StepRecord r{};
    r.landing_side = land.side;
    r.step_length = std::abs((h_land - h_trail).dot(d));
    r.step_width = std::abs((h_land - h_trail).dot(dperp));
    r.step_time = static_cast<double>(land.frame - trail.frame) / seq.frame_rate;
    r.step_velocity = r.step_length / r.step_time;
    double ymax = -1e300, ymin = 1e300;
    for (size_t t = trail.frame; t <= land.frame; ++t) {
      double y = seq.frames[t].pos(heel_joint(land.side)).y();
      ymax = std::max(ymax, y);
      ymin = std::min(ymin, y);
    }
    r.step_height = ymax - ymin;
    r.pelvis_progression = std::abs(disp.dot(d));
    if (r.step_length <= 0.0 || r.step_time <= 0.0) continue;
    steps.push_back(r);
  }
  return steps;
}

// Full extraction: emits the exact 297-entry vector or refuses.
inline FeatureVector extract_all(const SkeletonSequence& seq,
                                 const PhaseLabeling& labeling,
                                 const GaitEvents& left, const GaitEvents& right,
                                 const ArmSwingCycles& arm_left,
                                 const ArmSwingCycles& arm_right) {
  using detail::Agg;
  using detail::aggregate;
  using detail::bilateral;
  using detail::kNan;

  validate(seq);
  const double fps = seq.frame_rate;
  const size_t n = seq.frames.size();

  FeatureVector fv;
  fv.subject_id = seq.subject_id;
  const auto& dict = feature_dictionary();
  if (dict.size() != kFeatureCount)
    throw Error("feature dictionary size " + std::to_string(dict.size()) +
                " != " + std::to_string(kFeatureCount) + "; refusing to emit");
  fv.values.assign(dict.size(), kNan);
  std::map<std::string, size_t> index;
  for (size_t i = 0; i < dict.size(); ++i) index[dict[i].name] = i;
  auto set = [&](const std::string& name, double v) {
    auto it = index.find(name);
    if (it == index.end()) throw Error("feature not in dictionary: " + name);
    fv.values[it->second] = v;
  };
  auto set_agg = [&](const std::string& base, const Agg& a) {
    set(base + "_mean", a.mean);
    set(base + "_sd", a.sd);
    set(base + "_cv", a.cv);
  };

  // ---- spatiotemporal --------------------------------------------------
  std::vector<StepRecord> steps = step_records(seq, left, right, labeling);
  double leg = effective_leg_length(seq);
  auto per_side_agg = [&](auto getter) {
    std::vector<double> l, r;
    for (const StepRecord& s : steps)
      (s.landing_side == Side::Left ? l : r).push_back(getter(s));
    return bilateral(aggregate(l), aggregate(r));
  };
  set_agg("step_length", per_side_agg([](const StepRecord& s) { return s.step_length; }));
  set_agg("step_width", per_side_agg([](const StepRecord& s) { return s.step_width; }));
  set_agg("step_time", per_side_agg([](const StepRecord& s) { return s.step_time; }));
  set_agg("step_velocity", per_side_agg([](const StepRecord& s) { return s.step_velocity; }));
  set_agg("step_height", per_side_agg([](const StepRecord& s) { return s.step_height; }));
  set_agg("step_pelvis_progression",
          per_side_agg([](const StepRecord& s) { return s.pelvis_progression; }));
  if (leg > 0.0) {
    set_agg("step_length_norm",
            per_side_agg([&](const StepRecord& s) { return s.step_length / leg; }));
    set_agg("froude", per_side_agg([&](const StepRecord& s) {
              return s.step_velocity / std::sqrt(kGravity * leg);
            }));
  } else {
    fv.provenance["normalized"] = "leg length unavailable";
  }

  std::vector<GaitCycle> cyc_l = build_cycles(left, labeling);
  std::vector<GaitCycle> cyc_r = build_cycles(right, labeling);
  auto stride_aggs = [&](const GaitEvents& ev) {
    std::vector<double> len, time, cad;
    auto same_segment = [&](size_t a, size_t b) {
      for (const WalkingSegment& s : labeling.walking_segments)
        if (a >= s.start_frame && b <= s.end_frame) return true;
      return false;
    };
    for (size_t i = 0; i + 1 < ev.heel_strikes.size(); ++i) {
      size_t f0 = ev.heel_strikes[i], f1 = ev.heel_strikes[i + 1];
      if (!same_segment(f0, f1)) continue;
      Vec3 disp = seq.frames[f1].pos(JointId::Pelvis) -
                  seq.frames[f0].pos(JointId::Pelvis);
      disp.y() = 0.0;
      if (disp.norm() < 1e-9) continue;
      Vec3 d = disp.normalized();
      Vec3 hd = seq.frames[f1].pos(heel_joint(ev.side)) -
                seq.frames[f0].pos(heel_joint(ev.side));
      len.push_back(std::abs(hd.dot(d)));
      double st = static_cast<double>(f1 - f0) / fps;
      time.push_back(st);
      cad.push_back(60.0 / st);
    }
    return std::array<Agg, 3>{aggregate(len), aggregate(time), aggregate(cad)};
  };
  auto sl = stride_aggs(left), sr = stride_aggs(right);
  set_agg("stride_length", bilateral(sl[0], sr[0]));
  set_agg("stride_time", bilateral(sl[1], sr[1]));
  set_agg("cadence", bilateral(sl[2], sr[2]));

  {
    std::vector<double> speeds;
    for (const WalkingSegment& s : labeling.walking_segments) {
      if (s.end_frame <= s.start_frame) continue;
      Vec3 disp = seq.frames[s.end_frame].pos(JointId::Pelvis) -
                  seq.frames[s.start_frame].pos(JointId::Pelvis);
      disp.y() = 0.0;
      speeds.push_back(disp.norm() /
                       (static_cast<double>(s.end_frame - s.start_frame) / fps));
    }
    set_agg("walking_speed", aggregate(speeds));
  }

  // ---- temporal phases -------------------------------------------------
  {
    std::vector<bool> stance_l = detail::stance_mask(left, n);
    std::vector<bool> stance_r = detail::stance_mask(right, n);
    std::vector<double> st_l, st_r, sw_l, sw_r, stp_l, stp_r, swp_l, swp_r,
        ds_l, ds_r;
    auto phase_vals = [&](const std::vector<GaitCycle>& cycles,
                          std::vector<double>& st, std::vector<double>& sw,
                          std::vector<double>& stp, std::vector<double>& swp,
                          std::vector<double>& ds) {
      for (const GaitCycle& c : cycles) {
        double cycle_frames = static_cast<double>(c.hs_end - c.hs_start);
        st.push_back(static_cast<double>(c.to - c.hs_start) / fps);
        sw.push_back(static_cast<double>(c.hs_end - c.to) / fps);
        stp.push_back(100.0 * static_cast<double>(c.to - c.hs_start) / cycle_frames);
        swp.push_back(100.0 * static_cast<double>(c.hs_end - c.to) / cycle_frames);
        size_t both = 0;
        for (size_t t = c.hs_start; t < c.hs_end; ++t)
          if (stance_l[t] && stance_r[t]) ++both;
        ds.push_back(100.0 * static_cast<double>(both) / cycle_frames);
      }
    };
    phase_vals(cyc_l, st_l, sw_l, stp_l, swp_l, ds_l);
    phase_vals(cyc_r, st_r, sw_r, stp_r, swp_r, ds_r);
    set_agg("stance_time", bilateral(aggregate(st_l), aggregate(st_r)));
    set_agg("swing_time", bilateral(aggregate(sw_l), aggregate(sw_r)));
    set_agg("stance_pct", bilateral(aggregate(stp_l), aggregate(stp_r)));
    set_agg("swing_pct", bilateral(aggregate(swp_l), aggregate(swp_r)));
    set_agg("double_support_pct", bilateral(aggregate(ds_l), aggregate(ds_r)));
  }

  // ---- joint kinematics ------------------------------------------------
  {
    std::vector<AngleSeries> angles = joint_angles(seq, &labeling);
    auto series_for = [&](AngleChannel c, std::optional<Side> side)
        -> const AngleSeries* {
      for (const AngleSeries& a : angles)
        if (a.channel == c && a.side == side) return &a;
      return nullptr;
    };
    for (AngleChannel c : all_channels()) {
      // per side: sided channels use that side's series, unsided channels
      // share one series but are cycled per side
      std::array<Agg, 7> agg_l{}, agg_r{};
      for (int si = 0; si < 2; ++si) {
        Side side = si == 0 ? Side::Left : Side::Right;
        const AngleSeries* s = channel_is_sided(c)
                                   ? series_for(c, side)
                                   : series_for(c, std::nullopt);
        std::array<Agg, 7>& dst = si == 0 ? agg_l : agg_r;
        if (!s) continue;
        NormalizedCycleCurve curve =
            normalize_cycles(*s, side == Side::Left ? cyc_l : cyc_r);
        std::array<std::vector<double>, 7> vals;
        for (size_t ci = 0; ci < curve.per_cycle.size(); ++ci) {
          const std::vector<double>& v = curve.per_cycle[ci];
          bool finite = true;
          for (double x : v) finite = finite && std::isfinite(x);
          if (!finite) continue;
          int to_idx = static_cast<int>(std::lround(100.0 * curve.stance_fraction[ci]));
          to_idx = std::max(0, std::min(100, to_idx));
          auto peak_in = [&](int a, int b, int* where) {
            int best = a;
            for (int k = a; k <= b; ++k)
              if (v[k] > v[best]) best = k;
            if (where) *where = best;
            return v[best];
          };
          int tst = 0, tsw = 0;
          double ps = peak_in(0, to_idx, &tst);
          double pw = peak_in(to_idx, 100, &tsw);
          double mx = *std::max_element(v.begin(), v.end());
          double mn = *std::min_element(v.begin(), v.end());
          vals[0].push_back(v[0]);
          vals[1].push_back(v[to_idx]);
          vals[2].push_back(ps);
          vals[3].push_back(pw);
          vals[4].push_back(static_cast<double>(tst));
          vals[5].push_back(static_cast<double>(tsw));
          vals[6].push_back(mx - mn);
        }
        for (int m = 0; m < 7; ++m) dst[m] = aggregate(vals[m]);
      }
      static const char* metrics[] = {"value_hs",           "value_to",
                                      "peak_stance",        "peak_swing",
                                      "peak_stance_timing", "peak_swing_timing",
                                      "rom"};
      for (int m = 0; m < 7; ++m)
        set_agg(std::string(channel_name(c)) + "_" + metrics[m],
                bilateral(agg_l[m], agg_r[m]));
    }
  }

  // ---- arm swing -------------------------------------------------------
  {
    struct ArmAggs {
      std::array<Agg, 7> a{};
      double normal = kNan, rigid = kNan, parasite = kNan;
      bool present = false;
    };
    auto arm_features = [&](const ArmSwingCycles& arm) {
      ArmAggs out;
      if (arm.excluded) return out;
      out.present = true;
      std::array<std::vector<double>, 7> vals;
      std::vector<double> half_amps, ratios;
      for (const ArmSwingCycle& c : arm.cycles) {
        double fmax = -1e300, fmin = 1e300, lmax = -1e300, lmin = 1e300,
               fsum = 0.0;
        for (size_t t = c.min_start; t <= c.min_end; ++t) {
          fmax = std::max(fmax, arm.d_fwd[t]);
          fmin = std::min(fmin, arm.d_fwd[t]);
          lmax = std::max(lmax, arm.d_lat[t]);
          lmin = std::min(lmin, arm.d_lat[t]);
          fsum += arm.d_fwd[t];
        }
        double midline = fsum / static_cast<double>(c.min_end - c.min_start + 1);
        double half_amp = 0.5 * (fmax - fmin);
        double lat_amp = 0.5 * (lmax - lmin);
        double period = static_cast<double>(c.min_end - c.min_start) / fps;
        vals[0].push_back(fmax - midline);
        vals[1].push_back(midline - fmin);
        vals[2].push_back(lat_amp);
        vals[3].push_back(static_cast<double>(c.peak - c.min_start) / fps);
        vals[4].push_back(period);
        vals[5].push_back(period > 0 ? 1.0 / period : kNan);
        vals[6].push_back(half_amp > 1e-9 ? lat_amp / half_amp : kNan);
        half_amps.push_back(half_amp);
        if (half_amp > 1e-9) ratios.push_back(lat_amp / half_amp);
      }
      for (int m = 0; m < 7; ++m) out.a[m] = aggregate(vals[m]);
      double amp;
      if (!half_amps.empty()) {
        amp = gaitkit::mean(half_amps);
      } else {
        // rigid arm: no swing cycles at all; use the raw signal range
        double fmax = -1e300, fmin = 1e300;
        bool any = false;
        for (const WalkingSegment& s : labeling.walking_segments)
          for (size_t t = s.start_frame; t <= s.end_frame; ++t) {
            fmax = std::max(fmax, arm.d_fwd[t]);
            fmin = std::min(fmin, arm.d_fwd[t]);
            any = true;
          }
        amp = any ? 0.5 * (fmax - fmin) : 0.0;
      }
      out.normal = amp >= kArmRigidThreshold ? 1.0 : 0.0;
      out.rigid = amp < kArmRigidThreshold ? 1.0 : 0.0;
      out.parasite =
          (!ratios.empty() && gaitkit::mean(ratios) > kArmParasiteRatio) ? 1.0 : 0.0;
      return out;
    };
    ArmAggs al = arm_features(arm_left);
    ArmAggs ar = arm_features(arm_right);
    if (!al.present)
      fv.provenance["arm_left"] = "excluded: " + arm_left.exclusion_reason;
    if (!ar.present)
      fv.provenance["arm_right"] = "excluded: " + arm_right.exclusion_reason;
    static const char* arm_names[] = {
        "arm_fwd_amplitude", "arm_bwd_amplitude",      "arm_lat_amplitude",
        "arm_half_cycle_duration", "arm_period",       "arm_frequency",
        "arm_lat_fwd_ratio"};
    for (int m = 0; m < 7; ++m)
      set_agg(arm_names[m], bilateral(al.a[m], ar.a[m]));
    set("arm_class_normal", detail::avg2(al.normal, ar.normal));
    set("arm_class_rigid", detail::avg2(al.rigid, ar.rigid));
    set("arm_class_parasite", detail::avg2(al.parasite, ar.parasite));
  }

  // ---- functional / TUG ------------------------------------------------
  {
    std::vector<double> durations, peak_vels;
    std::vector<PelvisFrame> pfs = pelvis_frames(seq);
    std::vector<double> yaw(n, 0.0);
    for (size_t t = 0; t < n; ++t)
      yaw[t] = pfs[t].valid ? std::atan2(pfs[t].f.x(), pfs[t].f.z()) : 0.0;
    yaw = unwrap(yaw);
    std::vector<double> yaw_rate = derivative(yaw, fps);
    for (const TurnInterval& ti : labeling.turn_intervals) {
      durations.push_back(
          static_cast<double>(ti.end_frame - ti.start_frame + 1) / fps);
      double peak = 0.0;
      for (size_t t = ti.start_frame; t <= ti.end_frame && t < n; ++t)
        peak = std::max(peak, std::abs(yaw_rate[t]));
      peak_vels.push_back(deg(peak));
    }
    set_agg("turn_duration", aggregate(durations));
    set_agg("turn_peak_yaw_velocity", aggregate(peak_vels));
    set("turn_count", static_cast<double>(labeling.turn_intervals.size()));
    set("step_count", static_cast<double>(steps.size()));
    double total = 0.0;
    for (const WalkingSegment& s : labeling.walking_segments)
      total += static_cast<double>(s.end_frame - s.start_frame + 1) / fps;
    set("total_walk_duration", total);
    if (!labeling.walking_segments.empty()) {
      const WalkingSegment& first = labeling.walking_segments.front();
      set("walk_out_duration",
          static_cast<double>(first.end_frame - first.start_frame + 1) / fps);
      if (labeling.walking_segments.size() > 1) {
        const WalkingSegment& second = labeling.walking_segments[1];
        set("walk_back_duration",
            static_cast<double>(second.end_frame - second.start_frame + 1) / fps);
      }
      const WalkingSegment& last = labeling.walking_segments.back();
      set("tug_active_time",
          static_cast<double>(last.end_frame - first.start_frame + 1) / fps);
    }
  }

  fv.provenance["cycles_left"] = std::to_string(cyc_l.size());
  fv.provenance["cycles_right"] = std::to_string(cyc_r.size());
  if (fv.values.size() != kFeatureCount)
    throw Error("feature count mismatch after extraction");
  return fv;
}

}  // namespace gaitkit
