#include "gaze360/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gaze360/annotation_http.hpp"
#include "gaze360/arff.hpp"
#include "gaze360/corpus.hpp"
#include "gaze360/detector.hpp"
#include "gaze360/evaluation.hpp"
#include "gaze360/formats.hpp"
#include "gaze360/optimizer.hpp"
#include "gaze360/synth.hpp"

namespace gaze360 {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// A failure attributable to the inputs rather than the command line.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string tool_id() { return "gaze360 " + std::string(kToolVersion); }

void require_exists(const fs::path& p, const std::string& what) {
  if (!fs::exists(p)) throw DataError(what + " not found: " + p.string());
}

// Files given directly, plus files with `ext` inside directories given.
std::vector<fs::path> expand_inputs(const std::vector<std::string>& inputs, std::string_view ext) {
  std::vector<fs::path> out;
  for (const auto& in : inputs) {
    const fs::path p(in);
    require_exists(p, "input");
    if (fs::is_directory(p)) {
      for (auto& f : list_files(p, ext)) out.push_back(f);
    } else {
      out.push_back(p);
    }
  }
  if (out.empty()) throw DataError("no input files with extension " + std::string(ext));
  return out;
}

ThresholdSet load_threshold_option(const std::string& spec) {
  if (spec.empty() || spec == "defaults") return {};
  require_exists(spec, "threshold file");
  try {
    return parse_thresholds(read_text_file(spec));
  } catch (const std::invalid_argument& e) {
    throw DataError(spec + ": " + e.what());
  }
}

Header provenance(std::string_view variant, const ThresholdSet& t, const std::string& id) {
  return {{"tool", tool_id()},
          {"variant", std::string(variant)},
          {"thresholds", describe(t)},
          {"recording", id}};
}

// ---------------------------------------------------------------- ingest

struct IngestArgs {
  std::string from = "canonical";
  std::vector<std::string> inputs;
  std::string out;
  bool validate_only = false;
  std::string gaze_frame = "world";
  double min_confidence = 0.5;
  double time_scale = 1.0;
  std::string observer;
};

int cmd_ingest(const IngestArgs& a, std::ostream& out) {
  if (a.out.empty() && !a.validate_only) throw DataError("ingest needs --out unless --validate");
  const std::string ext = a.from == "gin-arff" ? ".arff" : std::string(kRecordingExt);
  const auto files = expand_inputs(a.inputs, ext);
  if (!a.out.empty()) fs::create_directories(a.out);
  std::size_t failed = 0;
  for (const auto& f : files) {
    const std::string id = f.stem().string();
    try {
      Recording rec;
      std::optional<LabelTrack> labels;
      ValidationReport report;
      if (a.from == "gin-arff") {
        ArffOptions o;
        o.min_confidence = a.min_confidence;
        o.time_scale_to_us = a.time_scale;
        o.gaze_in_fov = a.gaze_frame == "fov";
        o.video_id = id;
        o.observer_id = a.observer;
        auto c = convert_arff(read_text_file(f), o);
        rec = std::move(c.recording);
        labels = std::move(c.labels);
        report = std::move(c.report);
      } else {
        auto p = load_recording(f);
        rec = std::move(p.recording);
        report = std::move(p.report);
      }
      out << f.string() << ": " << rec.samples.size() << " samples, " << report.to_text() << "\n";
      if (a.validate_only && a.out.empty()) continue;
      write_text_file_atomic(fs::path(a.out) / (id + std::string(kRecordingExt)),
                             serialize_recording(rec));
      if (labels) {
        write_text_file_atomic(fs::path(a.out) / (id + std::string(kLabelExt)),
                               serialize_labels(*labels, {{"tool", tool_id()},
                                                          {"source", f.filename().string()},
                                                          {"recording", id}}));
      }
    } catch (const std::exception& e) {
      ++failed;
      out << f.string() << ": FAILED " << e.what() << "\n";
    }
  }
  if (failed) throw DataError(std::to_string(failed) + " of " + std::to_string(files.size()) +
                              " input(s) failed to ingest");
  return 0;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::string phases;
  std::uint64_t seed = 1;
  double rate = 120.0;
  std::string out;
  std::string id = "synthetic";
  std::optional<double> noise_sd;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  std::vector<PhaseSpec> phases = standard_session();
  if (!a.phases.empty()) {
    require_exists(a.phases, "phase file");
    try {
      phases = parse_phases(read_text_file(a.phases));
    } catch (const std::invalid_argument& e) {
      throw DataError(a.phases + ": " + e.what());
    }
  }
  if (a.noise_sd) {
    for (auto& p : phases) p.noise_sd = *a.noise_sd;
  }
  if (!valid_id(a.id)) throw DataError("invalid id '" + a.id + "'");
  SyntheticTrace trace;
  try {
    trace = generate(phases, a.rate, a.seed);
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  trace.recording.meta.extra.emplace_back("tool", tool_id());
  fs::create_directories(a.out);
  const fs::path base = fs::path(a.out) / a.id;
  write_text_file_atomic(base.string() + std::string(kRecordingExt),
                         serialize_recording(trace.recording));
  write_text_file_atomic(base.string() + std::string(kLabelExt),
                         serialize_labels(trace.truth, {{"tool", tool_id()},
                                                        {"source", "synth"},
                                                        {"seed", std::to_string(a.seed)},
                                                        {"recording", a.id}}));
  out << "wrote " << base.string() << kRecordingExt << " and " << kLabelExt << " ("
      << trace.recording.samples.size() << " samples)\n";
  return 0;
}

// ---------------------------------------------------------------- classify

struct ClassifyArgs {
  std::vector<std::string> inputs;
  std::string variant = "combined";
  std::string thresholds = "defaults";
  std::string out;
  unsigned jobs = 0;
};

int cmd_classify(const ClassifyArgs& a, std::ostream& out) {
  const auto variant = variant_from_string(a.variant);
  if (!variant) throw DataError("unknown variant '" + a.variant + "'");
  const ThresholdSet th = load_threshold_option(a.thresholds);
  const auto files = expand_inputs(a.inputs, kRecordingExt);
  fs::create_directories(a.out);

  std::vector<std::string> lines(files.size());
  parallel_for(files.size(), a.jobs, [&](std::size_t i) {
    const auto& f = files[i];
    const std::string id = f.stem().string();
    const auto parsed = load_recording(f);
    const auto prepared = prepare(parsed.recording);
    const auto result = run_pipeline_detailed(prepared, *variant, th);
    const Header header = provenance(a.variant, th, id);
    write_text_file_atomic(fs::path(a.out) / (id + std::string(kLabelExt)),
                           serialize_labels(result.track, header));
    auto events = samples_to_events(result.track);
    annotate_event_stats(events.primary, parsed.recording);
    write_text_file_atomic(fs::path(a.out) / (id + std::string(kEventExt)),
                           serialize_events(events, header));
    std::ostringstream os;
    os << id << ": " << result.saccades.size() << " saccades (" << result.short_saccades
       << " single-sample), " << result.blinks.size() << " blinks, " << result.windows.size()
       << " windows (" << result.flagged_windows << " flagged), " << result.outside_fov_samples
       << " samples outside the field of view";
    lines[i] = os.str();
  });
  for (const auto& l : lines) out << l << "\n";
  return 0;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string gt;
  std::string pred;
  std::string report = "md";
  std::string out;
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  require_exists(a.gt, "ground truth");
  require_exists(a.pred, "predictions");
  std::vector<std::pair<fs::path, fs::path>> files;
  if (fs::is_directory(a.gt)) {
    for (const auto& g : list_files(a.gt, kLabelExt)) {
      const fs::path p = fs::is_directory(a.pred) ? fs::path(a.pred) / g.filename() : fs::path(a.pred);
      require_exists(p, "prediction for " + g.stem().string());
      files.emplace_back(g, p);
    }
  } else {
    const fs::path p = fs::is_directory(a.pred) ? fs::path(a.pred) / fs::path(a.gt).filename()
                                                : fs::path(a.pred);
    require_exists(p, "prediction");
    files.emplace_back(a.gt, p);
  }
  if (files.empty()) throw DataError("no ground-truth label files in " + a.gt);

  CorpusAccumulator acc;
  for (const auto& [g, p] : files) {
    try {
      acc.add(load_labels(g).track, load_labels(p).track);
    } catch (const std::invalid_argument& e) {
      throw DataError(g.stem().string() + ": " + e.what());
    }
  }
  const auto report = acc.report();
  const std::string text = a.report == "csv" ? report_csv(report) : report_markdown(report);
  if (a.out.empty()) out << text;
  else write_text_file_atomic(a.out, text);
  return 0;
}

// ---------------------------------------------------------------- optimize

struct OptimizeArgs {
  std::string train;
  std::string stage = "saccade";
  std::string grid;
  std::string base = "defaults";
  std::string out;
  unsigned jobs = 0;
};

int cmd_optimize(const OptimizeArgs& a, std::ostream& out) {
  require_exists(a.train, "manifest");
  ThresholdGrid grid = ThresholdGrid::defaults();
  if (!a.grid.empty()) {
    require_exists(a.grid, "grid file");
    try {
      grid = parse_grid(read_text_file(a.grid));
    } catch (const std::invalid_argument& e) {
      throw DataError(a.grid + ": " + e.what());
    }
  }
  const ThresholdSet base = load_threshold_option(a.base);
  const auto manifest = load_manifest(a.train);
  auto corpus = load_split(manifest, "train");
  if (corpus.empty()) throw DataError("manifest has no 'train' entries");
  std::vector<TrainingItem> items;
  for (const auto& r : corpus) items.push_back(make_training_item(r.recording, r.truth));

  FitOptions opt;
  opt.jobs = a.jobs;
  const FitResult fit =
      a.stage == "saccade"
          ? fit_saccade_thresholds(items, base, grid.sacc_low, grid.sacc_high, opt)
          : fit_gaze_thresholds(items, base, grid.gaze_low, grid.gaze_high, opt);

  json j = json::parse(serialize_thresholds(fit.thresholds));
  j["_tool"] = tool_id();
  j["_stage"] = a.stage;
  j["_objective"] = fit.objective;
  j["_train_recordings"] = items.size();
  const std::string text = j.dump(2) + "\n";
  if (a.out.empty()) {
    out << text;
    return 0;
  }
  write_text_file_atomic(a.out, text);
  out << "stage " << a.stage << ": " << describe(fit.thresholds) << " objective "
      << fit.objective << " over " << fit.scores.size() << " grid points\n";
  return 0;
}

// ---------------------------------------------------------------- serve

struct ServeArgs {
  std::string root;
  std::string host = "127.0.0.1";
  int port = 8360;
  std::string static_dir;
};

int cmd_serve(ServeArgs a, std::ostream& out) {
  if (a.root.empty()) {
    if (const char* env = std::getenv("GAZE360_DATA_ROOT")) a.root = env;
  }
  if (a.root.empty()) throw DataError("serve needs --root or GAZE360_DATA_ROOT");
  if (!fs::is_directory(a.root)) throw DataError("data root is not a directory: " + a.root);
  AnnotationStore store(a.root);
  ServerOptions opt;
  opt.static_dir = a.static_dir;
  AnnotationServer server(store, opt);
  out << "serving " << a.root << " on http://" << a.host << ":" << a.port << "\n" << std::flush;
  if (!server.listen(a.host, a.port)) throw DataError("cannot listen on port " + std::to_string(a.port));
  return 0;
}

// ---------------------------------------------------------------- stats

struct StatsArgs {
  std::vector<std::string> labels;
  std::vector<std::string> recordings;
  double head_threshold = 10.0;
};

int cmd_stats(const StatsArgs& a, std::ostream& out) {
  if (a.labels.empty() && a.recordings.empty()) {
    throw DataError("stats needs --labels and/or --recordings");
  }
  if (!a.labels.empty()) {
    std::vector<LabelTrack> tracks;
    for (const auto& f : expand_inputs(a.labels, kLabelExt)) tracks.push_back(load_labels(f).track);
    out << format_statistics(label_statistics(tracks));
  }
  if (!a.recordings.empty()) {
    std::size_t moving = 0, defined = 0, n = 0;
    for (const auto& f : expand_inputs(a.recordings, kRecordingExt)) {
      const auto rec = load_recording(f).recording;
      for (double v : centred_head_speeds(rec, 100000)) {
        if (std::isnan(v)) continue;
        ++defined;
        if (v >= a.head_threshold) ++moving;
      }
      ++n;
    }
    const double frac = defined ? static_cast<double>(moving) / static_cast<double>(defined) : 0.0;
    out << "head motion >= " << a.head_threshold << " deg/s: " << frac << " of " << defined
        << " samples in " << n << " recording(s)\n";
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Eye-movement classification for 360-degree head-free recordings", "gaze360"};
  app.set_version_flag("--version", tool_id());
  app.require_subcommand(1);

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Convert or check recordings");
  c_ingest->add_option("--from", ingest.from, "Input layout")
      ->check(CLI::IsMember({"canonical", "gin-arff"}));
  c_ingest->add_option("inputs", ingest.inputs, "Files or directories")->required();
  c_ingest->add_option("--out", ingest.out, "Output directory");
  c_ingest->add_flag("--validate", ingest.validate_only, "Report only; write nothing without --out");
  c_ingest->add_option("--gaze-frame", ingest.gaze_frame, "Frame of the source gaze")
      ->check(CLI::IsMember({"world", "fov"}));
  c_ingest->add_option("--min-confidence", ingest.min_confidence, "Tracking validity cut-off");
  c_ingest->add_option("--time-scale", ingest.time_scale, "Factor from source time units to us");
  c_ingest->add_option("--observer", ingest.observer, "Observer id stored in the header");

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Generate a labelled synthetic recording");
  c_synth->add_option("--phases", synth.phases, "Phase list (JSON); default: the five-phase session");
  c_synth->add_option("--seed", synth.seed, "Random seed");
  c_synth->add_option("--rate", synth.rate, "Sampling rate, Hz");
  c_synth->add_option("--out", synth.out, "Output directory")->required();
  c_synth->add_option("--id", synth.id, "Recording id (file stem)");
  c_synth->add_option("--noise-sd", synth.noise_sd, "Override per-sample jitter, deg");

  ClassifyArgs classify;
  auto* c_classify = app.add_subcommand("classify", "Label recordings");
  c_classify->add_option("inputs", classify.inputs, "Recording files or directories")->required();
  c_classify->add_option("--variant", classify.variant, "combined | fov | eh")
      ->check(CLI::IsMember({"combined", "fov", "eh"}));
  c_classify->add_option("--thresholds", classify.thresholds, "Threshold file or 'defaults'");
  c_classify->add_option("--out", classify.out, "Output directory")->required();
  c_classify->add_option("--jobs", classify.jobs, "Parallel recordings (0: all cores)");

  EvaluateArgs evaluate;
  auto* c_eval = app.add_subcommand("evaluate", "Score predicted labels against ground truth");
  c_eval->add_option("--gt", evaluate.gt, "Ground-truth label file or directory")->required();
  c_eval->add_option("--pred", evaluate.pred, "Predicted label file or directory")->required();
  c_eval->add_option("--report", evaluate.report, "csv | md")->check(CLI::IsMember({"csv", "md"}));
  c_eval->add_option("--out", evaluate.out, "Write the report here instead of stdout");

  OptimizeArgs optimize;
  auto* c_opt = app.add_subcommand("optimize", "Grid-search thresholds on the training split");
  c_opt->add_option("--train", optimize.train, "Split manifest")->required();
  c_opt->add_option("--stage", optimize.stage, "saccade | gaze")
      ->check(CLI::IsMember({"saccade", "gaze"}));
  c_opt->add_option("--grid", optimize.grid, "Grid file (JSON)");
  c_opt->add_option("--thresholds", optimize.base, "Starting thresholds, file or 'defaults'");
  c_opt->add_option("--out", optimize.out, "Threshold file to write");
  c_opt->add_option("--jobs", optimize.jobs, "Worker threads (0: all cores)");

  ServeArgs serve;
  auto* c_serve = app.add_subcommand("serve", "Run the annotation server");
  c_serve->add_option("--root", serve.root, "Data root (default: $GAZE360_DATA_ROOT)");
  c_serve->add_option("--host", serve.host, "Bind address");
  c_serve->add_option("--port", serve.port, "TCP port")->check(CLI::Range(1, 65535));
  c_serve->add_option("--static", serve.static_dir, "Directory served at /");

  StatsArgs stats;
  auto* c_stats = app.add_subcommand("stats", "Corpus label shares and head-motion fraction");
  c_stats->add_option("--labels", stats.labels, "Label files or directories");
  c_stats->add_option("--recordings", stats.recordings, "Recording files or directories");
  c_stats->add_option("--head-threshold", stats.head_threshold, "deg/s");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  try {
    if (*c_ingest) return cmd_ingest(ingest, out);
    if (*c_synth) return cmd_synth(synth, out);
    if (*c_classify) return cmd_classify(classify, out);
    if (*c_eval) return cmd_evaluate(evaluate, out);
    if (*c_opt) return cmd_optimize(optimize, out);
    if (*c_serve) return cmd_serve(serve, out);
    if (*c_stats) return cmd_stats(stats, out);
  } catch (const std::exception& e) {
    json j = {{"error", e.what()}, {"command", app.get_subcommands().front()->get_name()}};
    err << j.dump() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace gaze360
