#pragma once

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include <json.hpp>

#include "gaitkit/core.hpp"

namespace gaitkit {

enum class FileFormat { Json, Csv };

inline FileFormat format_from_path(const std::string& path) {
  auto dot = path.find_last_of('.');
  std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
  if (ext == "json") return FileFormat::Json;
  if (ext == "csv") return FileFormat::Csv;
  throw ParseError("cannot infer format from path: " + path);
}

namespace detail {

inline nlohmann::json sequence_to_json(const SkeletonSequence& seq) {
  nlohmann::json j;
  j["subject_id"] = seq.subject_id;
  j["frame_rate"] = seq.frame_rate;
  if (seq.leg_length) j["leg_length"] = *seq.leg_length;
  j["joints"] = nlohmann::json::array();
  for (const char* name : joint_names()) j["joints"].push_back(name);
  j["frames"] = nlohmann::json::array();
  for (size_t t = 0; t < seq.frames.size(); ++t) {
    const JointFrame& f = seq.frames[t];
    nlohmann::json jf;
    jf["t"] = t;
    auto pos = nlohmann::json::array();
    auto conf = nlohmann::json::array();
    for (int i = 0; i < kNumJoints; ++i) {
      pos.push_back({f.positions[i].x(), f.positions[i].y(), f.positions[i].z()});
      conf.push_back(f.confidences[i]);
    }
    jf["pos"] = std::move(pos);
    jf["conf"] = std::move(conf);
    jf["root_rot"] = {f.root_orientation.x(), f.root_orientation.y(),
                      f.root_orientation.z()};
    jf["root_t"] = {f.root_translation.x(), f.root_translation.y(),
                    f.root_translation.z()};
    j["frames"].push_back(std::move(jf));
  }
  return j;
}

inline SkeletonSequence sequence_from_json(const nlohmann::json& j,
                                           const std::string& where) {
  SkeletonSequence seq;
  try {
    seq.subject_id = j.value("subject_id", std::string{});
    if (!j.contains("frame_rate"))
      throw ParseError(where + ": missing field 'frame_rate'");
    seq.frame_rate = j.at("frame_rate").get<double>();
    if (j.contains("leg_length")) seq.leg_length = j.at("leg_length").get<double>();
    if (!j.contains("frames"))
      throw ParseError(where + ": missing field 'frames'");
    // Optional joint-name list lets external orderings map onto the registry.
    std::array<int, kNumJoints> remap{};
    for (int i = 0; i < kNumJoints; ++i) remap[i] = i;
    if (j.contains("joints")) {
      const auto& names = j.at("joints");
      if (names.size() != kNumJoints)
        throw SchemaError(where + ": 'joints' lists " +
                          std::to_string(names.size()) + " names, expected 45");
      for (int i = 0; i < kNumJoints; ++i) {
        int idx = joint_index(names[i].get<std::string>());
        if (idx < 0)
          throw SchemaError(where + ": unknown joint name '" +
                            names[i].get<std::string>() + "'");
        remap[i] = idx;
      }
    }
    for (const auto& jf : j.at("frames")) {
      JointFrame f;
      const auto& pos = jf.at("pos");
      if (pos.size() != kNumJoints)
        throw SchemaError(where + ": frame " + std::to_string(seq.frames.size()) +
                          " has " + std::to_string(pos.size()) +
                          " joints, expected 45");
      for (int i = 0; i < kNumJoints; ++i) {
        const auto& p = pos[i];
        f.positions[remap[i]] =
            Vec3(p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>());
      }
      if (jf.contains("conf")) {
        const auto& conf = jf.at("conf");
        if (conf.size() != kNumJoints)
          throw SchemaError(where + ": 'conf' length mismatch in frame " +
                            std::to_string(seq.frames.size()));
        for (int i = 0; i < kNumJoints; ++i)
          f.confidences[remap[i]] = conf[i].get<double>();
      }
      if (jf.contains("root_rot")) {
        const auto& r = jf.at("root_rot");
        f.root_orientation = Vec3(r.at(0), r.at(1), r.at(2));
      }
      if (jf.contains("root_t")) {
        const auto& r = jf.at("root_t");
        f.root_translation = Vec3(r.at(0), r.at(1), r.at(2));
      } else {
        f.root_translation = f.pos(JointId::Pelvis);
      }
      seq.frames.push_back(std::move(f));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(where + ": " + e.what());
  }
  return seq;
}

// Flat CSV: two header lines (# key=value), then
// frame,joint_name,x,y,z,confidence rows. See docs/formats.md.
inline void sequence_to_csv(const SkeletonSequence& seq, std::ostream& out) {
  out << "# subject_id=" << seq.subject_id << "\n";
  out << "# frame_rate=" << std::setprecision(17) << seq.frame_rate;
  if (seq.leg_length) out << " leg_length=" << *seq.leg_length;
  out << "\n";
  out << "frame,joint,x,y,z,confidence\n";
  out << std::setprecision(17);
  for (size_t t = 0; t < seq.frames.size(); ++t) {
    const JointFrame& f = seq.frames[t];
    for (int i = 0; i < kNumJoints; ++i) {
      out << t << ',' << joint_names()[i] << ',' << f.positions[i].x() << ','
          << f.positions[i].y() << ',' << f.positions[i].z() << ','
          << f.confidences[i] << "\n";
    }
    // Root channels ride along as pseudo-joints.
    out << t << ",root_rot," << f.root_orientation.x() << ','
        << f.root_orientation.y() << ',' << f.root_orientation.z() << ",1\n";
    out << t << ",root_t," << f.root_translation.x() << ','
        << f.root_translation.y() << ',' << f.root_translation.z() << ",1\n";
  }
}

inline SkeletonSequence sequence_from_csv(std::istream& in,
                                          const std::string& where) {
  SkeletonSequence seq;
  std::string line;
  size_t lineno = 0;
  auto fail = [&](const std::string& msg) {
    throw ParseError(where + ":" + std::to_string(lineno) + ": " + msg);
  };
  // header comment lines
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ls(line.substr(1));
      std::string kv;
      while (ls >> kv) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) continue;
        std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
        if (key == "subject_id") seq.subject_id = val;
        else if (key == "frame_rate") seq.frame_rate = std::stod(val);
        else if (key == "leg_length") seq.leg_length = std::stod(val);
      }
      continue;
    }
    if (line.rfind("frame,", 0) == 0) break;  // column header
    fail("expected '# key=value' header or column header, got: " + line);
  }
  std::vector<bool> seen;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tok;
    std::array<std::string, 6> cols;
    int n = 0;
    while (std::getline(ls, tok, ',') && n < 6) cols[n++] = tok;
    if (n != 6) fail("expected 6 columns, got " + std::to_string(n));
    size_t t;
    double x, y, z, c;
    try {
      t = std::stoul(cols[0]);
      x = std::stod(cols[2]);
      y = std::stod(cols[3]);
      z = std::stod(cols[4]);
      c = std::stod(cols[5]);
    } catch (const std::exception&) {
      fail("non-numeric field in row");
      return seq;  // unreachable
    }
    while (seq.frames.size() <= t) seq.frames.emplace_back();
    JointFrame& f = seq.frames[t];
    if (cols[1] == "root_rot") {
      f.root_orientation = Vec3(x, y, z);
    } else if (cols[1] == "root_t") {
      f.root_translation = Vec3(x, y, z);
    } else {
      int idx = joint_index(cols[1]);
      if (idx < 0) fail("unknown joint name '" + cols[1] + "'");
      f.positions[idx] = Vec3(x, y, z);
      f.confidences[idx] = c;
    }
  }
  return seq;
}

}  // namespace detail

inline void save_sequence(const SkeletonSequence& seq, const std::string& path,
                          FileFormat format) {
  validate(seq);
  std::ofstream out(path);
  if (!out) throw Error("cannot open for writing: " + path);
  if (format == FileFormat::Json) {
    out << detail::sequence_to_json(seq).dump(1) << "\n";
  } else {
    detail::sequence_to_csv(seq, out);
  }
  if (!out) throw Error("write failed: " + path);
}

inline void save_sequence(const SkeletonSequence& seq, const std::string& path) {
  save_sequence(seq, path, format_from_path(path));
}

inline SkeletonSequence load_sequence(const std::string& path, FileFormat format) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open: " + path);
  SkeletonSequence seq;
  if (format == FileFormat::Json) {
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ": " + e.what());
    }
    seq = detail::sequence_from_json(j, path);
  } else {
    seq = detail::sequence_from_csv(in, path);
  }
  validate(seq);
  return seq;
}

inline SkeletonSequence load_sequence(const std::string& path) {
  return load_sequence(path, format_from_path(path));
}

}  // namespace gaitkit
