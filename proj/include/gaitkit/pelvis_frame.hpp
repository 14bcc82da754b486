#pragma once

#include <vector>

#include <Eigen/Geometry>

#include "gaitkit/core.hpp"

namespace gaitkit {

// Pelvis-attached body frame built by Gram-Schmidt:
//   u: pelvis -> spine3 (up)
//   s: right hip -> left hip, orthogonalized against u (side)
//   f: s x u (forward)
struct PelvisFrame {
  Vec3 u = Vec3::UnitY();
  Vec3 s = Vec3::UnitX();
  Vec3 f = Vec3::UnitZ();
  bool valid = false;
};

inline PelvisFrame pelvis_frame(const JointFrame& frame) {
  PelvisFrame pf;
  Vec3 up = frame.pos(JointId::Spine3) - frame.pos(JointId::Pelvis);
  Vec3 side = frame.pos(JointId::LeftHip) - frame.pos(JointId::RightHip);
  if (up.norm() < 1e-9 || side.norm() < 1e-9) return pf;  // degenerate
  pf.u = up.normalized();
  Vec3 s = side - side.dot(pf.u) * pf.u;
  if (s.norm() < 1e-9) return pf;
  pf.s = s.normalized();
  pf.f = pf.s.cross(pf.u);
  pf.valid = true;
  return pf;
}

inline std::vector<PelvisFrame> pelvis_frames(const SkeletonSequence& seq) {
  validate(seq);
  std::vector<PelvisFrame> out;
  out.reserve(seq.frames.size());
  for (const JointFrame& f : seq.frames) out.push_back(pelvis_frame(f));
  return out;
}

}  // namespace gaitkit
