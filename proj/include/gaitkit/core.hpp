#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace gaitkit {

using Vec3 = Eigen::Vector3d;

inline constexpr int kNumJoints = 45;

// Thrown on malformed inputs, schema mismatches and violated preconditions.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& msg) : Error(msg) {}
};

class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& msg) : Error(msg) {}
};

// Joint index registry. Indices 0..23 follow the SMPL joint order,
// 24..44 the extended face/foot landmark block (see docs/joints.md).
enum class JointId : int {
  Pelvis = 0,
  LeftHip = 1,
  RightHip = 2,
  Spine1 = 3,
  LeftKnee = 4,
  RightKnee = 5,
  Spine2 = 6,
  LeftAnkle = 7,
  RightAnkle = 8,
  Spine3 = 9,
  LeftFoot = 10,
  RightFoot = 11,
  Neck = 12,
  LeftCollar = 13,
  RightCollar = 14,
  Head = 15,
  LeftShoulder = 16,
  RightShoulder = 17,
  LeftElbow = 18,
  RightElbow = 19,
  LeftWrist = 20,
  RightWrist = 21,
  LeftHand = 22,
  RightHand = 23,
  Nose = 24,
  RightEye = 25,
  LeftEye = 26,
  RightEar = 27,
  LeftEar = 28,
  LeftBigToe = 29,
  LeftSmallToe = 30,
  LeftHeel = 31,
  RightBigToe = 32,
  RightSmallToe = 33,
  RightHeel = 34,
  Jaw = 35,
  Forehead = 36,
  Chin = 37,
  LeftCheek = 38,
  RightCheek = 39,
  LeftEyeOuter = 40,
  RightEyeOuter = 41,
  HeadTop = 42,
  LeftMidFoot = 43,
  RightMidFoot = 44,
};

inline const std::array<const char*, kNumJoints>& joint_names() {
  static const std::array<const char*, kNumJoints> names = {
      "pelvis",         "left_hip",       "right_hip",      "spine1",
      "left_knee",      "right_knee",     "spine2",         "left_ankle",
      "right_ankle",    "spine3",         "left_foot",      "right_foot",
      "neck",           "left_collar",    "right_collar",   "head",
      "left_shoulder",  "right_shoulder", "left_elbow",     "right_elbow",
      "left_wrist",     "right_wrist",    "left_hand",      "right_hand",
      "nose",           "right_eye",      "left_eye",       "right_ear",
      "left_ear",       "left_big_toe",   "left_small_toe", "left_heel",
      "right_big_toe",  "right_small_toe","right_heel",     "jaw",
      "forehead",       "chin",           "left_cheek",     "right_cheek",
      "left_eye_outer", "right_eye_outer","head_top",       "left_mid_foot",
      "right_mid_foot"};
  return names;
}

inline const char* joint_name(JointId id) {
  return joint_names()[static_cast<int>(id)];
}

// Returns -1 for unknown names.
inline int joint_index(const std::string& name) {
  const auto& names = joint_names();
  for (int i = 0; i < kNumJoints; ++i)
    if (name == names[i]) return i;
  return -1;
}

enum class Side { Left, Right };

inline const char* side_name(Side s) { return s == Side::Left ? "left" : "right"; }

inline JointId heel_joint(Side s) {
  return s == Side::Left ? JointId::LeftHeel : JointId::RightHeel;
}
inline JointId toe_joint(Side s) {
  return s == Side::Left ? JointId::LeftBigToe : JointId::RightBigToe;
}
inline JointId wrist_joint(Side s) {
  return s == Side::Left ? JointId::LeftWrist : JointId::RightWrist;
}
inline JointId hip_joint(Side s) {
  return s == Side::Left ? JointId::LeftHip : JointId::RightHip;
}
inline JointId knee_joint(Side s) {
  return s == Side::Left ? JointId::LeftKnee : JointId::RightKnee;
}
inline JointId ankle_joint(Side s) {
  return s == Side::Left ? JointId::LeftAnkle : JointId::RightAnkle;
}
inline JointId shoulder_joint(Side s) {
  return s == Side::Left ? JointId::LeftShoulder : JointId::RightShoulder;
}

// One frame of world-grounded skeleton data. Y is up (gravity-aligned),
// positions are meters.
struct JointFrame {
  std::array<Vec3, kNumJoints> positions{};
  std::array<double, kNumJoints> confidences{};
  Vec3 root_orientation = Vec3::Zero();  // axis-angle
  Vec3 root_translation = Vec3::Zero();

  JointFrame() { confidences.fill(1.0); }

  const Vec3& pos(JointId id) const { return positions[static_cast<int>(id)]; }
  Vec3& pos(JointId id) { return positions[static_cast<int>(id)]; }
  double conf(JointId id) const { return confidences[static_cast<int>(id)]; }
};

struct SkeletonSequence {
  double frame_rate = 0.0;  // Hz
  std::string subject_id;
  std::optional<double> leg_length;  // meters
  std::vector<JointFrame> frames;

  size_t size() const { return frames.size(); }
  double duration() const {
    return frames.empty() ? 0.0 : (frames.size() - 1) / frame_rate;
  }
};

// Validates the type invariants. Every operation consuming a sequence calls
// this before computing.
inline void validate(const SkeletonSequence& seq) {
  if (seq.frame_rate <= 0.0)
    throw SchemaError("frame_rate must be positive, got " +
                      std::to_string(seq.frame_rate));
  if (seq.frames.size() < 2)
    throw SchemaError("sequence needs at least 2 frames, got " +
                      std::to_string(seq.frames.size()));
  for (size_t t = 0; t < seq.frames.size(); ++t) {
    const JointFrame& f = seq.frames[t];
    for (int j = 0; j < kNumJoints; ++j) {
      if (!f.positions[j].allFinite())
        throw SchemaError("non-finite joint position at frame " +
                          std::to_string(t) + ", joint " + joint_names()[j]);
      if (f.confidences[j] < 0.0 || f.confidences[j] > 1.0)
        throw SchemaError("confidence out of [0,1] at frame " +
                          std::to_string(t) + ", joint " + joint_names()[j]);
    }
  }
  if (seq.leg_length && *seq.leg_length <= 0.0)
    throw SchemaError("leg_length must be positive");
}

// Pelvis position per frame.
inline std::vector<Vec3> pelvis_track(const SkeletonSequence& seq) {
  validate(seq);
  std::vector<Vec3> track;
  track.reserve(seq.frames.size());
  for (const JointFrame& f : seq.frames) track.push_back(f.pos(JointId::Pelvis));
  return track;
}

// Mean straight-line hip-to-ankle distance over frames and sides.
// Used when the input does not declare a leg length.
inline double derive_leg_length(const SkeletonSequence& seq) {
  double sum = 0.0;
  size_t n = 0;
  for (const JointFrame& f : seq.frames) {
    for (Side s : {Side::Left, Side::Right}) {
      sum += (f.pos(hip_joint(s)) - f.pos(ankle_joint(s))).norm();
      ++n;
    }
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

inline double effective_leg_length(const SkeletonSequence& seq) {
  return seq.leg_length ? *seq.leg_length : derive_leg_length(seq);
}

inline constexpr double kGravity = 9.81;  // m/s^2

inline double deg(double radians) { return radians * 180.0 / M_PI; }
inline double rad(double degrees) { return degrees * M_PI / 180.0; }

}  // namespace gaitkit
