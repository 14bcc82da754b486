// gaitkit command-line front end:
//   synth    - generate oracle TUG walkers (optionally a planted-target cohort)
//   extract  - sequences -> refined trajectories, events, 297-feature table
//   analyze  - feature table + targets -> stability selection report
//   ablate   - compare refinement configurations on a cohort
//   baseline - Gram-matrix DTW distance baseline
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <thread>

#include <CLI11.hpp>

#include "gaitkit/exports.hpp"
#include "gaitkit/io.hpp"
#include "gaitkit/pipeline.hpp"
#include "gaitkit/riemann.hpp"
#include "gaitkit/stability.hpp"
#include "gaitkit/synth.hpp"

namespace fs = std::filesystem;
using namespace gaitkit;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string timestamp_utc() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

ordered_json report_header(uint64_t seed) {
  ordered_json h;
  h["tool"] = "gaitkit";
  h["version"] = kVersion;
  h["generated_at"] = timestamp_utc();  // the only nondeterministic field
  h["seed"] = seed;
  return h;
}

// Expand an input argument: a file, a directory (all .json/.csv inside), or
// a single-level glob with '*' in the filename part.
std::vector<std::string> expand_inputs(const std::vector<std::string>& args) {
  std::vector<std::string> out;
  auto is_seq = [](const fs::path& p) {
    return p.extension() == ".json" || p.extension() == ".csv";
  };
  for (const std::string& a : args) {
    fs::path p(a);
    if (a.find('*') != std::string::npos) {
      fs::path dir = p.parent_path().empty() ? "." : p.parent_path();
      std::string pat = p.filename().string();
      if (!fs::is_directory(dir)) continue;
      for (const auto& e : fs::directory_iterator(dir)) {
        std::string name = e.path().filename().string();
        // translate the glob to a greedy prefix/suffix match per '*'
        size_t pos = 0, npos = 0;
        bool ok = true;
        std::string rest = pat;
        bool first = true;
        while (!rest.empty()) {
          size_t star = rest.find('*');
          std::string lit = rest.substr(0, star);
          if (first) {
            if (name.compare(0, lit.size(), lit) != 0) { ok = false; break; }
            npos = lit.size();
            first = false;
          } else if (!lit.empty()) {
            size_t found = name.find(lit, npos);
            if (found == std::string::npos) { ok = false; break; }
            npos = found + lit.size();
          }
          if (star == std::string::npos) {
            if (npos != name.size()) ok = false;
            break;
          }
          rest = rest.substr(star + 1);
          if (rest.empty()) break;  // trailing '*' matches anything
        }
        (void)pos;
        if (ok && e.is_regular_file() && is_seq(e.path()))
          out.push_back(e.path().string());
      }
    } else if (fs::is_directory(p)) {
      for (const auto& e : fs::directory_iterator(p))
        if (e.is_regular_file() && is_seq(e.path()) &&
            e.path().filename().string().find("_truth") == std::string::npos &&
            e.path().filename() != "targets.csv")
          out.push_back(e.path().string());
    } else if (fs::is_regular_file(p)) {
      out.push_back(a);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void parallel_for(size_t n, int jobs, const std::function<void(size_t)>& fn) {
  jobs = std::max(1, jobs);
  if (jobs == 1 || n <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < jobs && w < static_cast<int>(n); ++w)
    pool.emplace_back([&] {
      for (size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  for (auto& t : pool) t.join();
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

struct SynthArgs {
  std::string out_dir;
  int subjects = 1;
  uint64_t seed = 1;
  std::string task;  // "", "regress", "classify"
  std::string drift = "none";
  double drift_magnitude = 0.0;
  double noise = 0.0;
  double frame_rate = 30.0;
  std::string format = "json";
};

int cmd_synth(const SynthArgs& a) {
  fs::create_directories(a.out_dir);
  std::mt19937_64 rng(a.seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<std::pair<std::string, double>> latents;
  for (int i = 0; i < a.subjects; ++i) {
    WalkerSpec spec;
    spec.frame_rate = a.frame_rate;
    spec.seed = a.seed * 7919 + i;
    spec.subject_id = "s" + std::string(i < 9 ? "00" : i < 99 ? "0" : "") +
                      std::to_string(i + 1);
    if (a.subjects > 1) {
      spec.cadence = 40.0 + 20.0 * u01(rng);
      spec.step_length = 0.46 + 0.24 * u01(rng);
      spec.step_width = 0.08 + 0.06 * u01(rng);
      spec.arm_amplitude = 0.03 + 0.13 * u01(rng);
      spec.turn_duration = 1.2 + 0.8 * u01(rng);
      spec.heading_deg = 360.0 * u01(rng);
    }
    spec.noise_sigma = a.noise;
    if (a.drift == "linear") spec.drift = DriftModel::Linear;
    else if (a.drift == "random-walk") spec.drift = DriftModel::RandomWalk;
    spec.drift_magnitude = a.drift_magnitude;

    auto [seq, gt] = generate_walker(spec);
    seq = inject_drift(seq, spec.drift, spec.drift_magnitude, spec.seed);
    std::string ext = a.format == "csv" ? ".csv" : ".json";
    save_sequence(seq, (fs::path(a.out_dir) / (spec.subject_id + ext)).string());
    write_json((fs::path(a.out_dir) / (spec.subject_id + "_truth.json")).string(),
               ground_truth_json(gt));
    // planted linear relation on two gait parameters plus mild noise
    double latent = 0.08 * (spec.cadence - 50.0) +
                    6.0 * (spec.step_length - 0.58) + 0.05 * gauss(rng);
    latents.emplace_back(spec.subject_id, latent);
  }

  if (!a.task.empty()) {
    std::vector<double> vals;
    for (auto& [id, v] : latents) vals.push_back(v);
    std::vector<double> sorted = vals;
    std::sort(sorted.begin(), sorted.end());
    double med = sorted[sorted.size() / 2];
    std::ostringstream t;
    t << "subject_id,target\n";
    for (size_t i = 0; i < latents.size(); ++i) {
      double y = a.task == "classify" ? (vals[i] > med ? 1.0 : -1.0) : vals[i];
      t << latents[i].first << ',' << std::setprecision(17) << y << '\n';
    }
    write_text_file((fs::path(a.out_dir) / "targets.csv").string(), t.str());
  }
  std::cout << "wrote " << a.subjects << " subject(s) to " << a.out_dir << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// extract
// ---------------------------------------------------------------------------

struct ExtractArgs {
  std::vector<std::string> inputs;
  std::string out_dir;
  bool no_loop_closure = false;
  bool no_velocity_term = false;
  bool no_pca = false;
  int jobs = 1;
};

RefineConfig refine_config(const ExtractArgs& a) {
  RefineConfig rc;
  rc.enable_loop_closure = !a.no_loop_closure;
  rc.enable_velocity_term = !a.no_velocity_term;
  rc.enable_pca_alignment = !a.no_pca;
  return rc;
}

void write_subject_artifacts(const std::string& dir, const std::string& id,
                             const PipelineOutput& p) {
  fs::path d(dir);
  write_json((d / (id + "_phases.json")).string(), labeling_to_json(p.labeling));
  write_text_file((d / (id + "_phases.csv")).string(),
                  labeling_to_csv(p.labeling));
  write_json((d / (id + "_events.json")).string(),
             events_to_json(p.left, p.right));
  write_text_file((d / (id + "_events.csv")).string(),
                  events_to_csv(p.seq, p.left, p.right));
  write_json((d / (id + "_refine.json")).string(),
             refine_report_json(p.refine));

  // Fig. 3-style: progression with turn shading stand-in (phase overlay CSV
  // carries the detail; SVG shows the trace)
  SvgSeries prog{"pelvis progression (m)", "#1f77b4",
                 progression_signal(p.seq)};
  write_text_file((d / (id + "_progression.svg")).string(),
                  svg_line_plot({prog}, id + " progression"));
  // Fig. 4-style: relative heel traces
  std::vector<double> hl, hr;
  for (const JointFrame& f : p.seq.frames) {
    hl.push_back(f.pos(JointId::LeftHeel).z() - f.pos(JointId::Pelvis).z());
    hr.push_back(f.pos(JointId::RightHeel).z() - f.pos(JointId::Pelvis).z());
  }
  write_text_file(
      (d / (id + "_feet.svg")).string(),
      svg_line_plot({{"left heel rel (m)", "#d62728", hl},
                     {"right heel rel (m)", "#2ca02c", hr}},
                    id + " relative heel displacement"));
  // Fig. 5-style: normalized knee flexion curves
  std::vector<AngleSeries> angles = joint_angles(p.seq, &p.labeling);
  for (const AngleSeries& s : angles) {
    if (s.channel != AngleChannel::KneeFlexion || s.side != Side::Left)
      continue;
    NormalizedCycleCurve c = normalize_cycles(s, p.left.cycles);
    if (c.per_cycle.empty()) continue;
    write_text_file((d / (id + "_knee_curve.csv")).string(), curve_to_csv(c));
    write_text_file(
        (d / (id + "_knee_curve.svg")).string(),
        svg_line_plot({{"mean knee flexion (deg)", "#1f77b4", c.mean_curve},
                       {"sd", "#aec7e8", c.sd_curve}},
                      id + " knee flexion, normalized cycle"));
  }
}

int cmd_extract(const ExtractArgs& a) {
  std::vector<std::string> files = expand_inputs(a.inputs);
  if (files.empty()) {
    std::cerr << "error: no input sequences matched\n";
    return 2;
  }
  fs::create_directories(a.out_dir);
  RefineConfig rc = refine_config(a);

  std::vector<FeatureVector> rows(files.size());
  std::vector<int> ok(files.size(), 0);
  std::mutex log_mutex;
  parallel_for(files.size(), a.jobs, [&](size_t i) {
    try {
      SkeletonSequence seq = load_sequence(files[i]);
      PipelineOutput p = run_pipeline(seq, rc);
      std::string id = seq.subject_id.empty()
                           ? fs::path(files[i]).stem().string()
                           : seq.subject_id;
      p.features.subject_id = id;
      write_subject_artifacts(a.out_dir, id, p);
      rows[i] = p.features;
      ok[i] = 1;
    } catch (const std::exception& e) {
      std::lock_guard<std::mutex> lock(log_mutex);
      std::cerr << "skipping " << files[i] << ": " << e.what() << "\n";
    }
  });

  std::vector<FeatureVector> kept;
  for (size_t i = 0; i < files.size(); ++i)
    if (ok[i]) kept.push_back(rows[i]);
  if (kept.empty()) {
    std::cerr << "error: all subjects failed\n";
    return 1;
  }
  std::sort(kept.begin(), kept.end(),
            [](const FeatureVector& x, const FeatureVector& y) {
              return x.subject_id < y.subject_id;
            });
  write_text_file((fs::path(a.out_dir) / "features.csv").string(),
                  feature_table_to_csv(kept));
  write_json((fs::path(a.out_dir) / "features_meta.json").string(),
             feature_sidecar_json(kept));
  std::cout << "extracted " << kept.size() << "/" << files.size()
            << " subject(s) -> " << a.out_dir << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

struct AnalyzeArgs {
  std::string features_path;
  std::string targets_path;
  std::string out_dir;
  std::string task;  // regress | classify
  std::string model;
  double strength = 1.0;
  uint64_t seed = 42;
  int permutations = 1000;
  std::string cv = "loocv";
  bool baseline = false;
  bool nested_permutation = false;  // re-run selection per shuffle
  std::vector<std::string> baseline_inputs;
  int jobs = 1;
};

// Align target rows with the feature table; errors name offending ids.
VectorXd match_targets(const FeatureTable& table,
                       const std::vector<std::pair<std::string, double>>& tg) {
  std::map<std::string, double> by_id(tg.begin(), tg.end());
  std::string missing;
  VectorXd y(table.subject_ids.size());
  for (size_t i = 0; i < table.subject_ids.size(); ++i) {
    auto it = by_id.find(table.subject_ids[i]);
    if (it == by_id.end()) {
      missing += (missing.empty() ? "" : ", ") + table.subject_ids[i];
      continue;
    }
    y[i] = it->second;
    by_id.erase(it);
  }
  if (!missing.empty())
    throw Error("subjects missing from targets file: " + missing);
  if (!by_id.empty()) {
    std::string extra;
    for (auto& [id, v] : by_id) extra += (extra.empty() ? "" : ", ") + id;
    throw Error("targets without feature rows: " + extra);
  }
  return y;
}

VectorXd to_signed_labels(const VectorXd& y) {
  double lo = y.minCoeff(), hi = y.maxCoeff();
  if (lo == hi) throw Error("classification target has a single class");
  VectorXd out(y.size());
  for (int i = 0; i < y.size(); ++i) out[i] = y[i] > (lo + hi) / 2 ? 1.0 : -1.0;
  return out;
}

ordered_json baseline_block(const AnalyzeArgs& a, const VectorXd& y,
                            const std::vector<std::string>& ids,
                            const LinearModelSpec& spec) {
  std::vector<std::string> files = expand_inputs(a.baseline_inputs);
  std::map<std::string, std::string> by_id;
  for (const std::string& f : files)
    by_id[fs::path(f).stem().string()] = f;
  std::vector<std::vector<GramPose>> trajs(ids.size());
  for (size_t i = 0; i < ids.size(); ++i) {
    auto it = by_id.find(ids[i]);
    if (it == by_id.end())
      throw Error("baseline: no sequence file for subject " + ids[i]);
    trajs[i] = gram_trajectory(load_sequence(it->second));
  }
  const int n = static_cast<int>(ids.size());
  MatrixXd D = MatrixXd::Zero(n, n);
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  parallel_for(pairs.size(), a.jobs, [&](size_t k) {
    auto [i, j] = pairs[k];
    double d = dtw_distance(trajs[i], trajs[j]);
    D(i, j) = d;
    D(j, i) = d;
  });
  write_text_file((fs::path(a.out_dir) / "distance_matrix.csv").string(),
                  distance_matrix_to_csv(D, ids));

  // ppf evaluation: leave one out, features = distances to training subjects
  VectorXd pred(n);
  for (int i = 0; i < n; ++i) {
    std::vector<int> tr;
    for (int j = 0; j < n; ++j)
      if (j != i) tr.push_back(j);
    MatrixXd Xtr(tr.size(), tr.size()), Xte(1, tr.size());
    VectorXd ytr(tr.size());
    for (size_t r = 0; r < tr.size(); ++r) {
      for (size_t c = 0; c < tr.size(); ++c) Xtr(r, c) = D(tr[r], tr[c]);
      ytr[r] = y[tr[r]];
      Xte(0, r) = D(i, tr[r]);
    }
    pred[i] = fit_predict(spec, Xtr, ytr, Xte)[0];
  }
  Metrics m = score_predictions(y, pred, spec.is_classifier());
  ordered_json j;
  j["distance_matrix"] = "distance_matrix.csv";
  j["metrics"] = metrics_json(m, spec.is_classifier());
  return j;
}

int cmd_analyze(const AnalyzeArgs& a) {
  fs::create_directories(a.out_dir);
  FeatureTable table = load_feature_table(a.features_path);
  VectorXd y = match_targets(table, load_targets(a.targets_path));
  bool classify = a.task == "classify";
  if (classify) y = to_signed_labels(y);

  LinearModelSpec spec;
  spec.kind = a.model.empty()
                  ? (classify ? ModelKind::LogisticL2 : ModelKind::Ridge)
                  : model_from_name(a.model);
  spec.strength = a.strength;
  if (classify != spec.is_classifier())
    throw Error(std::string("model ") + model_name(spec.kind) +
                " does not match task " + a.task);

  std::vector<std::string> names;
  for (const FeatureDef& d : feature_dictionary()) names.push_back(d.name);

  StabilityReport rep = stability_select(table.X, y, spec, 10, a.seed);
  if (rep.consensus.empty())
    throw Error("stability selection produced an empty consensus set");
  CvScheme scheme = a.cv == "kfold" ? CvScheme::Kfold : CvScheme::Loocv;
  rep.metrics = evaluate(table.X, y, rep.consensus, spec, scheme, 10, a.seed);

  PermutationResult perm;
  if (a.nested_permutation) {
    // nested variant: selection re-run per shuffle (slow, off by default)
    perm.observed = classify ? rep.metrics.accuracy : rep.metrics.r2;
    std::mt19937_64 rng(a.seed);
    int ge = 0;
    VectorXd yp = y;
    for (int s = 0; s < a.permutations; ++s) {
      for (int i = static_cast<int>(yp.size()) - 1; i > 0; --i) {
        std::uniform_int_distribution<int> d(0, i);
        std::swap(yp[i], yp[d(rng)]);
      }
      double v = -std::numeric_limits<double>::infinity();
      try {
        StabilityReport r2 = stability_select(table.X, yp, spec, 10, a.seed);
        if (!r2.consensus.empty()) {
          Metrics m = evaluate(table.X, yp, r2.consensus, spec, scheme, 10,
                               a.seed);
          v = classify ? m.accuracy : m.r2;
        }
      } catch (const Error&) {
      }
      perm.null_distribution.push_back(v);
      if (v >= perm.observed) ++ge;
    }
    perm.p_value = (1.0 + ge) / (a.permutations + 1.0);
  } else {
    perm = permutation_test(table.X, y, rep.consensus, spec, scheme,
                            a.permutations, a.seed);
  }
  rep.permutation_p = a.permutations > 0
                          ? perm.p_value
                          : std::numeric_limits<double>::quiet_NaN();

  ordered_json report;
  report["header"] = report_header(a.seed);
  report["task"] = a.task;
  report["cv"] = a.cv;
  report["n_subjects"] = table.subject_ids.size();
  report["stability"] = stability_report_json(rep, names, classify);
  report["permutation"] = {
      {"n_shuffles", a.permutations},
      {"observed", detail::num_or_null(perm.observed)},
      {"p_value", detail::num_or_null(rep.permutation_p)},
      {"nested_selection", a.nested_permutation}};
  if (a.baseline)
    report["gram_baseline"] = baseline_block(a, y, table.subject_ids, spec);
  write_json((fs::path(a.out_dir) / "analyze_report.json").string(), report);
  write_text_file((fs::path(a.out_dir) / "frequencies.csv").string(),
                  frequencies_to_csv(rep, names));

  // Table II-shaped summary
  std::ostringstream s;
  s << "model: " << rep.model << "  task: " << a.task << "  cv: " << a.cv
    << "  n=" << table.subject_ids.size() << "\n";
  s << "consensus (" << rep.consensus.size() << "):";
  for (int idx : rep.consensus)
    s << " " << names[idx] << " (pi=" << rep.frequencies[idx] << ")";
  s << "\n";
  if (classify)
    s << "accuracy: " << rep.metrics.accuracy << "  auc: " << rep.metrics.auc
      << "\n";
  else
    s << "r2: " << rep.metrics.r2 << "  rmse: " << rep.metrics.rmse << "\n";
  if (a.permutations > 0)
    s << "permutation p (" << a.permutations << " shuffles): "
      << rep.permutation_p << "\n";
  else
    s << "permutation p: not run\n";
  write_text_file((fs::path(a.out_dir) / "summary.txt").string(), s.str());
  std::cout << s.str();
  return 0;
}

// ---------------------------------------------------------------------------
// ablate
// ---------------------------------------------------------------------------

struct AblateArgs {
  std::vector<std::string> inputs;
  std::string out_dir;
  int jobs = 1;
};

int cmd_ablate(const AblateArgs& a) {
  std::vector<std::string> files = expand_inputs(a.inputs);
  if (files.empty()) {
    std::cerr << "error: no input sequences matched\n";
    return 2;
  }
  fs::create_directories(a.out_dir);

  struct Config {
    std::string name;
    RefineConfig rc;
  };
  std::vector<Config> configs = {
      {"full", {}},
      {"no_loop_closure", {false, true, true}},
      {"no_velocity_term", {true, false, true}},
      {"no_pca", {true, true, false}},
      {"raw", {false, true, false}},
  };

  // ground-truth recovery error on cadence / step length / walking speed
  auto recovery_error = [](const FeatureVector& fv, const ordered_json& gt) {
    double e = 0.0;
    int n = 0;
    auto add = [&](const char* feat, const char* key) {
      double got = fv.get(feat);
      double want = gt.at(key).get<double>();
      if (std::isfinite(got) && want != 0.0) {
        e += std::abs(got - want) / std::abs(want);
        ++n;
      } else {
        e += 1.0;  // missing recovery counts as full error
        ++n;
      }
    };
    add("cadence_mean", "cadence_spm");
    add("step_length_mean", "step_length_m");
    add("walking_speed_mean", "walking_speed_mps");
    return e / n;
  };

  ordered_json out;
  ordered_json table = ordered_json::array();
  std::vector<std::vector<double>> endpoint(configs.size()),
      recovery(configs.size());
  std::vector<std::string> ids;
  for (const std::string& file : files)
    ids.push_back(fs::path(file).stem().string());

  for (size_t c = 0; c < configs.size(); ++c) {
    endpoint[c].assign(files.size(),
                       std::numeric_limits<double>::quiet_NaN());
    recovery[c].assign(files.size(),
                       std::numeric_limits<double>::quiet_NaN());
  }
  std::mutex log_mutex;
  parallel_for(files.size(), a.jobs, [&](size_t i) {
    ordered_json gt;
    fs::path truth =
        fs::path(files[i]).parent_path() / (ids[i] + "_truth.json");
    if (fs::exists(truth)) {
      std::ifstream in(truth);
      gt = ordered_json::parse(in);
    }
    for (size_t c = 0; c < configs.size(); ++c) {
      try {
        SkeletonSequence seq = load_sequence(files[i]);
        PipelineOutput p = run_pipeline(seq, configs[c].rc);
        endpoint[c][i] = configs[c].rc.enable_loop_closure
                             ? p.refine.endpoint_error_after
                             : p.refine.endpoint_error_before;
        if (!gt.is_null()) recovery[c][i] = recovery_error(p.features, gt);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(log_mutex);
        std::cerr << configs[c].name << " failed on " << ids[i] << ": "
                  << e.what() << "\n";
      }
    }
  });

  std::ostringstream csv;
  csv << "config,endpoint_error_mean_m,recovery_error_mean\n";
  for (size_t c = 0; c < configs.size(); ++c) {
    double esum = 0, rsum = 0;
    int en = 0, rn = 0;
    ordered_json subjects = ordered_json::array();
    for (size_t i = 0; i < files.size(); ++i) {
      subjects.push_back({{"subject_id", ids[i]},
                          {"endpoint_error_m", detail::num_or_null(endpoint[c][i])},
                          {"recovery_error", detail::num_or_null(recovery[c][i])}});
      if (std::isfinite(endpoint[c][i])) { esum += endpoint[c][i]; ++en; }
      if (std::isfinite(recovery[c][i])) { rsum += recovery[c][i]; ++rn; }
    }
    double emean = en ? esum / en : std::numeric_limits<double>::quiet_NaN();
    double rmean = rn ? rsum / rn : std::numeric_limits<double>::quiet_NaN();
    table.push_back({{"config", configs[c].name},
                     {"endpoint_error_mean_m", detail::num_or_null(emean)},
                     {"recovery_error_mean", detail::num_or_null(rmean)},
                     {"subjects", subjects}});
    csv << configs[c].name << ',' << emean << ',' << rmean << '\n';
  }
  out["configs"] = table;
  write_json((fs::path(a.out_dir) / "ablation.json").string(), out);
  write_text_file((fs::path(a.out_dir) / "ablation.csv").string(), csv.str());
  std::cout << csv.str();
  return 0;
}

// ---------------------------------------------------------------------------
// baseline
// ---------------------------------------------------------------------------

struct BaselineArgs {
  std::vector<std::string> inputs;
  std::string out_dir;
  std::string targets_path;
  std::string task = "regress";
  int jobs = 1;
  uint64_t seed = 42;
};

int cmd_baseline(const BaselineArgs& a) {
  std::vector<std::string> files = expand_inputs(a.inputs);
  if (files.empty()) {
    std::cerr << "error: no input sequences matched\n";
    return 2;
  }
  fs::create_directories(a.out_dir);
  std::vector<std::string> ids;
  std::vector<std::vector<GramPose>> trajs(files.size());
  for (const std::string& f : files)
    ids.push_back(fs::path(f).stem().string());
  parallel_for(files.size(), a.jobs, [&](size_t i) {
    trajs[i] = gram_trajectory(load_sequence(files[i]));
  });
  const int n = static_cast<int>(files.size());
  MatrixXd D = MatrixXd::Zero(n, n);
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  parallel_for(pairs.size(), a.jobs, [&](size_t k) {
    auto [i, j] = pairs[k];
    double d = dtw_distance(trajs[i], trajs[j]);
    D(i, j) = d;
    D(j, i) = d;
  });
  write_text_file((fs::path(a.out_dir) / "distance_matrix.csv").string(),
                  distance_matrix_to_csv(D, ids));

  ordered_json report;
  report["header"] = report_header(a.seed);
  report["n_subjects"] = n;
  if (!a.targets_path.empty()) {
    auto tg = load_targets(a.targets_path);
    std::map<std::string, double> by_id(tg.begin(), tg.end());
    VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      auto it = by_id.find(ids[i]);
      if (it == by_id.end())
        throw Error("no target for subject " + ids[i]);
      y[i] = it->second;
    }
    bool classify = a.task == "classify";
    if (classify) y = to_signed_labels(y);
    LinearModelSpec spec;
    spec.kind = classify ? ModelKind::LinearSvm : ModelKind::LinearSvr;
    VectorXd pred(n);
    for (int i = 0; i < n; ++i) {
      std::vector<int> tr;
      for (int j = 0; j < n; ++j)
        if (j != i) tr.push_back(j);
      MatrixXd Xtr(tr.size(), tr.size()), Xte(1, tr.size());
      VectorXd ytr(tr.size());
      for (size_t r = 0; r < tr.size(); ++r) {
        for (size_t c = 0; c < tr.size(); ++c) Xtr(r, c) = D(tr[r], tr[c]);
        ytr[r] = y[tr[r]];
        Xte(0, r) = D(i, tr[r]);
      }
      pred[i] = fit_predict(spec, Xtr, ytr, Xte)[0];
    }
    Metrics m = score_predictions(y, pred, classify);
    report["model"] = model_name(spec.kind);
    report["metrics"] = metrics_json(m, classify);
  }
  write_json((fs::path(a.out_dir) / "baseline_report.json").string(), report);
  std::cout << "baseline distances for " << n << " subject(s) -> " << a.out_dir
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gaitkit: TUG skeleton sequences to gait biomarkers"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  SynthArgs sa;
  CLI::App* synth = app.add_subcommand("synth", "generate oracle TUG walkers");
  synth->add_option("--out", sa.out_dir, "output directory")->required();
  synth->add_option("--subjects", sa.subjects, "number of subjects");
  synth->add_option("--seed", sa.seed, "master seed");
  synth->add_option("--task", sa.task, "emit targets.csv for this task")
      ->check(CLI::IsMember({"regress", "classify"}));
  synth->add_option("--drift", sa.drift, "drift model")
      ->check(CLI::IsMember({"none", "linear", "random-walk"}));
  synth->add_option("--drift-magnitude", sa.drift_magnitude, "meters");
  synth->add_option("--noise", sa.noise, "joint noise sigma (m)");
  synth->add_option("--frame-rate", sa.frame_rate, "Hz");
  synth->add_option("--format", sa.format, "sequence file format")
      ->check(CLI::IsMember({"json", "csv"}));
  synth->set_config("--config");

  ExtractArgs ea;
  CLI::App* extract =
      app.add_subcommand("extract", "sequences -> feature table + plots");
  extract->add_option("--input", ea.inputs, "files, directories, or globs")
      ->required();
  extract->add_option("--out", ea.out_dir, "output directory")->required();
  extract->add_flag("--no-loop-closure", ea.no_loop_closure);
  extract->add_flag("--no-velocity-term", ea.no_velocity_term);
  extract->add_flag("--no-pca", ea.no_pca);
  extract->add_option("--jobs", ea.jobs, "parallel subjects");
  extract->set_config("--config");

  AnalyzeArgs aa;
  CLI::App* analyze =
      app.add_subcommand("analyze", "stability selection + evaluation");
  analyze->add_option("--features", aa.features_path, "features.csv")
      ->required();
  analyze->add_option("--targets", aa.targets_path, "targets.csv")->required();
  analyze->add_option("--out", aa.out_dir, "output directory")->required();
  analyze->add_option("--task", aa.task)->required()
      ->check(CLI::IsMember({"regress", "classify"}));
  analyze->add_option("--model", aa.model, "model kind");
  analyze->add_option("--strength", aa.strength, "regularization strength");
  analyze->add_option("--seed", aa.seed, "master seed");
  analyze->add_option("--permutations", aa.permutations, "shuffle count");
  analyze->add_option("--cv", aa.cv)->check(CLI::IsMember({"loocv", "kfold"}));
  analyze->add_flag("--baseline", aa.baseline,
                    "add Gram-matrix baseline block (needs --input)");
  analyze->add_flag("--nested-permutation", aa.nested_permutation,
                    "re-run selection inside each shuffle");
  analyze->add_option("--input", aa.baseline_inputs,
                      "sequence files for --baseline");
  analyze->add_option("--jobs", aa.jobs, "parallel workers");
  analyze->set_config("--config");

  AblateArgs ba;
  CLI::App* ablate =
      app.add_subcommand("ablate", "compare refinement configurations");
  ablate->add_option("--input", ba.inputs, "files, directories, or globs")
      ->required();
  ablate->add_option("--out", ba.out_dir, "output directory")->required();
  ablate->add_option("--jobs", ba.jobs, "parallel subjects");
  ablate->set_config("--config");

  BaselineArgs bla;
  CLI::App* baseline =
      app.add_subcommand("baseline", "Gram-matrix DTW distance baseline");
  baseline->add_option("--input", bla.inputs, "files, directories, or globs")
      ->required();
  baseline->add_option("--out", bla.out_dir, "output directory")->required();
  baseline->add_option("--targets", bla.targets_path, "optional targets.csv");
  baseline->add_option("--task", bla.task)
      ->check(CLI::IsMember({"regress", "classify"}));
  baseline->add_option("--jobs", bla.jobs, "parallel workers");
  baseline->add_option("--seed", bla.seed, "master seed");
  baseline->set_config("--config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*synth) return cmd_synth(sa);
    if (*extract) return cmd_extract(ea);
    if (*analyze) return cmd_analyze(aa);
    if (*ablate) return cmd_ablate(ba);
    if (*baseline) return cmd_baseline(bla);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
