#pragma once

// Single-subject pipeline: refine -> segment -> events -> features.
// Shared by the command-line front end and the test harness.

#include "gaitkit/biomarkers.hpp"
#include "gaitkit/core.hpp"
#include "gaitkit/events.hpp"
#include "gaitkit/kinematics.hpp"
#include "gaitkit/segmentation.hpp"
#include "gaitkit/trajectory.hpp"

namespace gaitkit {

struct PipelineOutput {
  SkeletonSequence seq;  // refined and axis-aligned
  RefineReport refine;
  PhaseLabeling labeling;
  GaitEvents left, right;
  ArmSwingCycles arm_left, arm_right;
  FeatureVector features;
};

inline PipelineOutput run_pipeline(const SkeletonSequence& input,
                                   const RefineConfig& rc = {},
                                   const TurnConfig& tc = {}) {
  PipelineOutput out;
  SkeletonSequence seq = input;

  std::vector<Vec3> corrected =
      refine_loop_closure(pelvis_track(seq), rc, &out.refine);
  seq = propagate_correction(seq, corrected);
  if (rc.enable_pca_alignment)
    seq = align_principal_axis(seq, &out.refine.yaw_applied);

  out.labeling = detect_turns(seq, tc);
  out.left = detect_foot_events(seq, Side::Left, out.labeling);
  out.right = detect_foot_events(seq, Side::Right, out.labeling);
  out.left.cycles = build_cycles(out.left, out.labeling);
  out.right.cycles = build_cycles(out.right, out.labeling);
  out.arm_left = detect_arm_swing(seq, Side::Left, out.labeling);
  out.arm_right = detect_arm_swing(seq, Side::Right, out.labeling);
  out.features = extract_all(seq, out.labeling, out.left, out.right,
                             out.arm_left, out.arm_right);
  out.seq = std::move(seq);
  return out;
}

}  // namespace gaitkit
