#pragma once

// Report and plot-data writers. Every writer is deterministic for fixed
// inputs; timestamps, when present, live in a single "generated_at" header
// field so reports stay byte-comparable after stripping it.

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gaitkit/biomarkers.hpp"
#include "gaitkit/core.hpp"
#include "gaitkit/events.hpp"
#include "gaitkit/kinematics.hpp"
#include "gaitkit/segmentation.hpp"
#include "gaitkit/stability.hpp"
#include "gaitkit/synth.hpp"
#include "gaitkit/trajectory.hpp"

namespace gaitkit {

using nlohmann::json;
using nlohmann::ordered_json;

namespace detail {

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  out << text;
  if (!out) throw Error("write failed: " + path);
}

// NaN is not representable in JSON; missing values serialize as null.
inline ordered_json num_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

inline std::string fmt(double v, int prec = 17) {
  std::ostringstream ss;
  ss << std::setprecision(prec) << v;
  return ss.str();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// segmentation
// ---------------------------------------------------------------------------

inline ordered_json labeling_to_json(const PhaseLabeling& lab) {
  ordered_json j;
  j["threshold_mps"] = lab.threshold;
  j["filter_skipped"] = lab.filter_skipped;
  j["turns"] = ordered_json::array();
  for (const TurnInterval& t : lab.turn_intervals)
    j["turns"].push_back({{"start", t.start_frame},
                          {"center", t.center_frame},
                          {"end", t.end_frame}});
  j["walking_segments"] = ordered_json::array();
  for (const WalkingSegment& s : lab.walking_segments)
    j["walking_segments"].push_back({{"start", s.start_frame},
                                     {"end", s.end_frame},
                                     {"direction", s.direction}});
  j["labels"] = ordered_json::array();
  for (Phase p : lab.labels) j["labels"].push_back(phase_name(p));
  return j;
}

// Per-frame phase column for plot overlays.
inline std::string labeling_to_csv(const PhaseLabeling& lab) {
  std::ostringstream out;
  out << "frame,phase\n";
  for (size_t t = 0; t < lab.labels.size(); ++t)
    out << t << ',' << phase_name(lab.labels[t]) << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// events and curves
// ---------------------------------------------------------------------------

inline ordered_json events_to_json(const GaitEvents& left,
                                   const GaitEvents& right) {
  ordered_json j;
  for (const GaitEvents* e : {&left, &right}) {
    std::string key = e->side == Side::Left ? "left" : "right";
    j[key]["heel_strikes"] = e->heel_strikes;
    j[key]["toe_offs"] = e->toe_offs;
    ordered_json cyc = ordered_json::array();
    for (const GaitCycle& c : e->cycles)
      cyc.push_back({{"hs_start", c.hs_start},
                     {"to", c.to},
                     {"hs_end", c.hs_end},
                     {"direction", c.segment_direction}});
    j[key]["cycles"] = cyc;
  }
  return j;
}

// Relative foot displacement traces with event markers (Fig. 4 style).
inline std::string events_to_csv(const SkeletonSequence& seq,
                                 const GaitEvents& left,
                                 const GaitEvents& right) {
  auto has = [](const std::vector<size_t>& v, size_t t) {
    return std::find(v.begin(), v.end(), t) != v.end();
  };
  std::ostringstream out;
  out << "frame,heel_rel_left,heel_rel_right,hs_left,to_left,hs_right,to_right\n";
  for (size_t t = 0; t < seq.frames.size(); ++t) {
    const JointFrame& f = seq.frames[t];
    double hl = f.pos(JointId::LeftHeel).z() - f.pos(JointId::Pelvis).z();
    double hr = f.pos(JointId::RightHeel).z() - f.pos(JointId::Pelvis).z();
    out << t << ',' << detail::fmt(hl, 9) << ',' << detail::fmt(hr, 9) << ','
        << has(left.heel_strikes, t) << ',' << has(left.toe_offs, t) << ','
        << has(right.heel_strikes, t) << ',' << has(right.toe_offs, t) << '\n';
  }
  return out.str();
}

// Normalized cycle curves as long-format CSV (Fig. 5 style).
inline std::string curve_to_csv(const NormalizedCycleCurve& curve) {
  std::ostringstream out;
  out << "cycle,percent,value\n";
  for (size_t c = 0; c < curve.per_cycle.size(); ++c)
    for (int s = 0; s < kCycleSamples; ++s)
      out << c << ',' << s << ',' << detail::fmt(curve.per_cycle[c][s], 9)
          << '\n';
  for (int s = 0; s < kCycleSamples; ++s)
    out << "mean," << s << ',' << detail::fmt(curve.mean_curve[s], 9) << '\n';
  for (int s = 0; s < kCycleSamples; ++s)
    out << "sd," << s << ',' << detail::fmt(curve.sd_curve[s], 9) << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// feature table
// ---------------------------------------------------------------------------

inline std::string feature_table_to_csv(const std::vector<FeatureVector>& rows) {
  const auto& dict = feature_dictionary();
  std::ostringstream out;
  out << "subject_id";
  for (const FeatureDef& d : dict) out << ',' << d.name;
  out << '\n';
  for (const FeatureVector& r : rows) {
    if (r.values.size() != dict.size())
      throw SchemaError("feature row width " + std::to_string(r.values.size()) +
                        " != dictionary size " + std::to_string(dict.size()));
    out << r.subject_id;
    for (double v : r.values) {
      out << ',';
      if (std::isfinite(v)) out << detail::fmt(v);
    }
    out << '\n';
  }
  return out.str();
}

// Sidecar: units per feature plus per-subject missing masks and provenance.
inline ordered_json feature_sidecar_json(const std::vector<FeatureVector>& rows) {
  const auto& dict = feature_dictionary();
  ordered_json j;
  j["feature_count"] = dict.size();
  ordered_json units = ordered_json::object();
  for (const FeatureDef& d : dict) units[d.name] = d.unit;
  j["units"] = units;
  j["subjects"] = ordered_json::array();
  for (const FeatureVector& r : rows) {
    ordered_json s;
    s["subject_id"] = r.subject_id;
    s["missing_count"] = r.missing_count();
    ordered_json missing = ordered_json::array();
    for (size_t i = 0; i < r.values.size(); ++i)
      if (r.is_missing(i)) missing.push_back(dict[i].name);
    s["missing"] = missing;
    ordered_json prov = ordered_json::object();
    for (const auto& [k, v] : r.provenance) prov[k] = v;
    s["provenance"] = prov;
    j["subjects"].push_back(s);
  }
  return j;
}

struct FeatureTable {
  std::vector<std::string> subject_ids;
  MatrixXd X;  // rows = subjects, 297 columns, NaN = missing
};

inline FeatureTable load_feature_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open feature table: " + path);
  const auto& dict = feature_dictionary();
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty file");
  // header check against the dictionary
  {
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    if (cell != "subject_id")
      throw SchemaError(path + ": first column must be subject_id");
    size_t i = 0;
    while (std::getline(ss, cell, ',')) {
      if (i >= dict.size() || cell != dict[i].name)
        throw SchemaError(path + ": header mismatch at feature column " +
                          std::to_string(i + 1));
      ++i;
    }
    if (i != dict.size())
      throw SchemaError(path + ": expected " + std::to_string(dict.size()) +
                        " feature columns, found " + std::to_string(i));
  }
  FeatureTable table;
  std::vector<std::vector<double>> data;
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    table.subject_ids.push_back(cell);
    std::vector<double> row;
    row.reserve(dict.size());
    while (std::getline(ss, cell, ','))
      row.push_back(cell.empty() ? std::numeric_limits<double>::quiet_NaN()
                                 : std::stod(cell));
    if (line.back() == ',') row.push_back(std::numeric_limits<double>::quiet_NaN());
    if (row.size() != dict.size())
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(dict.size()) + " values, got " +
                       std::to_string(row.size()));
    data.push_back(std::move(row));
  }
  table.X.resize(data.size(), dict.size());
  for (size_t i = 0; i < data.size(); ++i)
    for (size_t j = 0; j < dict.size(); ++j) table.X(i, j) = data[i][j];
  return table;
}

// Targets: CSV with subject_id,target rows (header optional).
inline std::vector<std::pair<std::string, double>>
load_targets(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open targets file: " + path);
  std::vector<std::pair<std::string, double>> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto comma = line.find(',');
    if (comma == std::string::npos)
      throw ParseError(path + ":" + std::to_string(lineno) +
                       ": expected subject_id,target");
    std::string id = line.substr(0, comma);
    std::string val = line.substr(comma + 1);
    if (lineno == 1 && (id == "subject_id" || id == "subject")) continue;
    try {
      out.emplace_back(id, std::stod(val));
    } catch (const std::exception&) {
      throw ParseError(path + ":" + std::to_string(lineno) +
                       ": bad target value '" + val + "'");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// refine / ground truth / stability reports
// ---------------------------------------------------------------------------

inline ordered_json refine_report_json(const RefineReport& r) {
  return ordered_json{{"endpoint_error_before_m", r.endpoint_error_before},
                      {"endpoint_error_after_m", r.endpoint_error_after},
                      {"yaw_applied_rad", r.yaw_applied},
                      {"residual_norm", r.residual_norm}};
}

inline ordered_json ground_truth_json(const GroundTruth& gt) {
  ordered_json j;
  j["hs_left"] = gt.hs_left;
  j["hs_right"] = gt.hs_right;
  j["to_left"] = gt.to_left;
  j["to_right"] = gt.to_right;
  j["turns"] = ordered_json::array();
  for (const auto& t : gt.turn_intervals)
    j["turns"].push_back({{"start", t[0]}, {"center", t[1]}, {"end", t[2]}});
  j["cadence_spm"] = gt.cadence;
  j["step_length_m"] = gt.step_length;
  j["step_width_m"] = gt.step_width;
  j["walking_speed_mps"] = gt.walking_speed;
  j["stride_time_s"] = gt.stride_time;
  j["peak_yaw_velocity_dps"] = gt.peak_yaw_velocity;
  j["arm_half_amplitude_m"] = gt.arm_half_amplitude;
  j["turn_duration_s"] = gt.turn_duration;
  return j;
}

inline ordered_json metrics_json(const Metrics& m, bool classification) {
  ordered_json j;
  if (classification) {
    j["accuracy"] = detail::num_or_null(m.accuracy);
    j["auc"] = detail::num_or_null(m.auc);
  } else {
    j["r2"] = detail::num_or_null(m.r2);
    j["rmse"] = detail::num_or_null(m.rmse);
  }
  return j;
}

inline ordered_json stability_report_json(
    const StabilityReport& rep, const std::vector<std::string>& feature_names,
    bool classification) {
  ordered_json j;
  j["model"] = rep.model;
  j["seed"] = rep.seed;
  ordered_json freq = ordered_json::object();
  for (size_t i = 0; i < rep.frequencies.size(); ++i)
    if (rep.frequencies[i] > 0.0)
      freq[feature_names[i]] = rep.frequencies[i];
  j["selection_frequencies"] = freq;
  ordered_json cons = ordered_json::array();
  for (int idx : rep.consensus) cons.push_back(feature_names[idx]);
  j["consensus"] = cons;
  j["metrics"] = metrics_json(rep.metrics, classification);
  j["permutation_p"] = detail::num_or_null(rep.permutation_p);
  return j;
}

inline std::string frequencies_to_csv(const StabilityReport& rep,
                                      const std::vector<std::string>& names) {
  std::ostringstream out;
  out << "feature,frequency\n";
  for (size_t i = 0; i < rep.frequencies.size(); ++i)
    if (rep.frequencies[i] > 0.0)
      out << names[i] << ',' << detail::fmt(rep.frequencies[i], 9) << '\n';
  return out.str();
}

inline std::string distance_matrix_to_csv(const MatrixXd& D,
                                          const std::vector<std::string>& ids) {
  std::ostringstream out;
  out << "subject_id";
  for (const std::string& id : ids) out << ',' << id;
  out << '\n';
  for (int i = 0; i < D.rows(); ++i) {
    out << ids[i];
    for (int j = 0; j < D.cols(); ++j) out << ',' << detail::fmt(D(i, j), 12);
    out << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// SVG plots
// ---------------------------------------------------------------------------

struct SvgSeries {
  std::string label;
  std::string color = "#1f77b4";
  std::vector<double> y;
};

// Minimal multi-series line plot; x axis is the sample index.
inline std::string svg_line_plot(const std::vector<SvgSeries>& series,
                                 const std::string& title,
                                 int width = 800, int height = 300) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  size_t n = 0;
  for (const SvgSeries& s : series) {
    n = std::max(n, s.y.size());
    for (double v : s.y)
      if (std::isfinite(v)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
  }
  if (!std::isfinite(lo)) {
    lo = 0.0;
    hi = 1.0;
  }
  if (hi - lo < 1e-12) hi = lo + 1.0;
  const double ml = 50, mr = 10, mt = 30, mb = 20;
  auto px = [&](size_t i) {
    return ml + (n > 1 ? (width - ml - mr) * static_cast<double>(i) / (n - 1)
                       : 0.0);
  };
  auto py = [&](double v) {
    return mt + (height - mt - mb) * (1.0 - (v - lo) / (hi - lo));
  };
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << ml << "\" y=\"18\" font-family=\"sans-serif\" "
         "font-size=\"13\">" << title << "</text>\n";
  // axis labels for the value range
  out << "<text x=\"4\" y=\"" << py(hi) + 4 << "\" font-family=\"sans-serif\" "
      << "font-size=\"10\">" << detail::fmt(hi, 4) << "</text>\n"
      << "<text x=\"4\" y=\"" << py(lo) + 4 << "\" font-family=\"sans-serif\" "
      << "font-size=\"10\">" << detail::fmt(lo, 4) << "</text>\n"
      << "<line x1=\"" << ml << "\" y1=\"" << py(lo) << "\" x2=\""
      << width - mr << "\" y2=\"" << py(lo)
      << "\" stroke=\"#888\" stroke-width=\"1\"/>\n";
  int legend_y = 18;
  for (const SvgSeries& s : series) {
    out << "<polyline fill=\"none\" stroke=\"" << s.color
        << "\" stroke-width=\"1.5\" points=\"";
    bool pen_up = true;
    for (size_t i = 0; i < s.y.size(); ++i) {
      if (!std::isfinite(s.y[i])) {
        pen_up = true;
        continue;
      }
      out << (pen_up ? "" : " ") << detail::fmt(px(i), 6) << ','
          << detail::fmt(py(s.y[i]), 6);
      pen_up = false;
    }
    out << "\"/>\n";
    if (!s.label.empty()) {
      out << "<text x=\"" << width - mr - 150 << "\" y=\"" << legend_y
          << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\""
          << s.color << "\">" << s.label << "</text>\n";
      legend_y += 14;
    }
  }
  out << "</svg>\n";
  return out.str();
}

inline void write_json(const std::string& path, const ordered_json& j) {
  detail::write_text(path, j.dump(2) + "\n");
}

inline void write_text_file(const std::string& path, const std::string& text) {
  detail::write_text(path, text);
}

}  // namespace gaitkit
