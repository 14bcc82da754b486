#pragma once

#include <vector>

#include "gaitkit/core.hpp"
#include "gaitkit/filters.hpp"

namespace gaitkit {

enum class Phase { Walk, Turn, Idle };

inline const char* phase_name(Phase p) {
  switch (p) {
    case Phase::Walk: return "walk";
    case Phase::Turn: return "turn";
    default: return "idle";
  }
}

struct TurnInterval {
  size_t start_frame;
  size_t center_frame;
  size_t end_frame;  // inclusive
};

struct WalkingSegment {
  size_t start_frame;
  size_t end_frame;  // inclusive
  int direction;     // +1 progresses toward +Z, -1 toward -Z
};

struct PhaseLabeling {
  std::vector<Phase> labels;
  std::vector<TurnInterval> turn_intervals;
  std::vector<WalkingSegment> walking_segments;
  bool filter_skipped = false;  // velocity filter warm-up not possible
  double threshold = 0.0;       // the tau actually used, m/s
};

struct TurnConfig {
  double cutoff_hz = 1.5;
  double abs_threshold = 0.4;   // m/s
  double pct_factor = 0.5;
  double min_turn_ms = 500.0;
  double min_prominence_m = 0.3;  // progression prominence for turn candidates
  bool enable_velocity_filter = true;

  void check() const {
    if (cutoff_hz <= 0 || abs_threshold <= 0 || pct_factor <= 0 ||
        min_turn_ms <= 0 || min_prominence_m <= 0)
      throw Error("turn-detection parameters must be positive");
  }
};

// Progression signal: pelvis coordinate along the standardized forward axis.
// The sequence must already be principal-axis aligned.
inline std::vector<double> progression_signal(const SkeletonSequence& seq) {
  validate(seq);
  std::vector<double> s;
  s.reserve(seq.frames.size());
  for (const JointFrame& f : seq.frames) s.push_back(f.pos(JointId::Pelvis).z());
  return s;
}

inline PhaseLabeling detect_turns(const std::vector<double>& s,
                                  const TurnConfig& cfg, double frame_rate) {
  cfg.check();
  const size_t n = s.size();
  if (static_cast<double>(n) / frame_rate < 2.0)
    throw Error("turn detection needs at least 2 s of data");

  PhaseLabeling out;
  out.labels.assign(n, Phase::Walk);

  // Candidate turn centers: progression reversals.
  std::vector<size_t> candidates;
  for (const Peak& p : find_peaks(s, cfg.min_prominence_m))
    candidates.push_back(p.index);
  for (const Peak& p : find_troughs(s, cfg.min_prominence_m))
    candidates.push_back(p.index);
  std::sort(candidates.begin(), candidates.end());

  // Velocity magnitude, optionally smoothed with a zero-phase Butterworth.
  std::vector<double> v = derivative(s, frame_rate);
  for (double& x : v) x = std::abs(x);
  if (cfg.enable_velocity_filter)
    v = filtfilt_lowpass(v, cfg.cutoff_hz, frame_rate, &out.filter_skipped);

  double tau = std::min(cfg.abs_threshold, cfg.pct_factor * percentile(v, 95.0));
  out.threshold = tau;

  // Maximal contiguous sub-threshold runs.
  struct Run { size_t start, end; };  // inclusive
  std::vector<Run> runs;
  for (size_t i = 0; i < n;) {
    if (v[i] < tau) {
      size_t j = i;
      while (j + 1 < n && v[j + 1] < tau) ++j;
      runs.push_back({i, j});
      i = j + 1;
    } else {
      ++i;
    }
  }

  const size_t min_frames =
      static_cast<size_t>(std::ceil(cfg.min_turn_ms / 1000.0 * frame_rate));
  for (const Run& r : runs) {
    // A run is a turn if it is long enough and contains a reversal candidate.
    size_t len = r.end - r.start + 1;
    size_t center = 0;
    bool has_candidate = false;
    for (size_t c : candidates) {
      if (c >= r.start && c <= r.end) {
        // among multiple candidates keep the one closest to the run midpoint
        size_t mid = (r.start + r.end) / 2;
        if (!has_candidate ||
            (c > mid ? c - mid : mid - c) < (center > mid ? center - mid : mid - center))
          center = c;
        has_candidate = true;
      }
    }
    if (!has_candidate || len < min_frames) continue;
    out.turn_intervals.push_back({r.start, center, r.end});
    for (size_t t = r.start; t <= r.end; ++t) out.labels[t] = Phase::Turn;
  }

  // Boundary-touching sub-threshold runs without a validated turn are chair
  // phases (idle), but only once at least one turn exists in the record.
  if (!out.turn_intervals.empty()) {
    for (const Run& r : runs) {
      bool is_turn = false;
      for (const TurnInterval& ti : out.turn_intervals)
        if (ti.start_frame == r.start) is_turn = true;
      if (is_turn) continue;
      if (r.start == 0 || r.end == n - 1)
        for (size_t t = r.start; t <= r.end; ++t) out.labels[t] = Phase::Idle;
    }
  }

  // Remaining maximal walk regions become walking segments.
  for (size_t i = 0; i < n;) {
    if (out.labels[i] == Phase::Walk) {
      size_t j = i;
      while (j + 1 < n && out.labels[j + 1] == Phase::Walk) ++j;
      int dir = (s[j] - s[i]) >= 0.0 ? +1 : -1;
      out.walking_segments.push_back({i, j, dir});
      i = j + 1;
    } else {
      ++i;
    }
  }
  return out;
}

inline PhaseLabeling detect_turns(const SkeletonSequence& seq,
                                  const TurnConfig& cfg) {
  return detect_turns(progression_signal(seq), cfg, seq.frame_rate);
}

}  // namespace gaitkit
