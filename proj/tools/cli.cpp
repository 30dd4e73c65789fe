#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <json.hpp>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "afecnn/checkpoint.hpp"
#include "afecnn/dataset.hpp"
#include "afecnn/encoder.hpp"
#include "afecnn/errors.hpp"
#include "afecnn/recognizer.hpp"
#include "afecnn/skeleton_io.hpp"
#include "afecnn/synth.hpp"
#include "afecnn/trainer.hpp"
#include "ppm.hpp"

namespace afecnn::tools {

namespace fs = std::filesystem;

namespace {

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("AFE_SEED"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (*end != '\0') throw UsageError(std::string("AFE_SEED is not an unsigned integer: ") + env);
    return v;
  }
  return 1;
}

Topology topology_for(std::size_t joints) {
  if (joints == 25) return Topology::ntu25();
  if (joints == 15) return Topology::humanoid15();
  throw ConfigError("no built-in skeleton topology for " + std::to_string(joints) + " joints");
}

std::string format_double(double v, int digits = 6) {
  if (std::isnan(v)) return "undefined";
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

std::vector<SkeletonSequence> load_dataset(const fs::path& path) {
  if (!fs::exists(path)) throw InputError("no such file: " + path.string());
  auto data = parse_jsonl(path);
  if (data.empty()) throw InputError(path.string() + " holds no sequences");
  return data;
}

std::size_t class_count_of(std::span<const SkeletonSequence> data) {
  int top = 0;
  for (const auto& s : data) top = std::max(top, s.action_label);
  return static_cast<std::size_t>(top) + 1;
}

struct ModelOptions {
  std::size_t frames = 64;
  bool no_kjfe = false, no_bvfe = false, no_mfam = false, no_te = false, no_jvtm = false;

  void add_to(CLI::App& app) {
    app.add_option("--frames", frames, "Frames per resampled sequence (T)")->check(CLI::PositiveNumber);
    app.add_flag("--no-kjfe", no_kjfe, "Disable key-joint scaling");
    app.add_flag("--no-bvfe", no_bvfe, "Disable bone-vector scaling");
    app.add_flag("--no-mfam", no_mfam, "Disable multi-frame attention");
    app.add_flag("--no-te", no_te, "Disable temporal embedding");
    app.add_flag("--no-jvtm", no_jvtm, "Drop the two velocity streams");
  }

  EnhancementFlags flags() const { return {!no_kjfe, !no_bvfe, !no_mfam, !no_te, !no_jvtm}; }
};

void print_summary(std::span<const SkeletonSequence> data, std::ostream& out) {
  std::set<int> labels, subjects, cameras;
  for (const auto& s : data) {
    labels.insert(s.action_label);
    subjects.insert(s.subject_id);
    cameras.insert(s.camera_id);
  }
  out << "sequences=" << data.size() << " classes=" << labels.size() << " subjects=" << subjects.size()
      << " cameras=" << cameras.size() << "\n";
}

// ---- ingest ----

struct IngestArgs {
  std::string ntu_dir, jsonl, out;
};

int cmd_ingest(const IngestArgs& a, std::ostream& out, std::ostream& err) {
  if (a.ntu_dir.empty() == a.jsonl.empty()) throw UsageError("ingest needs exactly one of --ntu-dir or --jsonl");
  std::vector<SkeletonSequence> data;
  if (!a.ntu_dir.empty()) {
    if (!fs::is_directory(a.ntu_dir)) throw InputError("not a directory: " + a.ntu_dir);
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(a.ntu_dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".skeleton") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      try {
        data.push_back(parse_ntu(f));
      } catch (const Error& e) {
        err << f.string() << ": " << e.what() << "\n";
      }
    }
  } else {
    data = parse_jsonl(fs::path(a.jsonl));
  }
  if (data.empty()) throw InputError("no sequences ingested");
  write_jsonl(data, fs::path(a.out));
  print_summary(data, out);
  return kExitOk;
}

// ---- synth ----

struct SynthArgs {
  SynthConfig config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

int cmd_synth(SynthArgs a, std::ostream& out) {
  a.config.seed = resolve_seed(a.seed);
  const auto data = synth_generate(a.config);
  write_jsonl(data, fs::path(a.out));
  print_summary(data, out);
  return kExitOk;
}

// ---- train ----

struct TrainArgs {
  std::string data, test_data, protocol = "cross-subject", checkpoint, log;
  std::size_t epochs = 60, batch = 64;
  double lr = 0.001;
  std::optional<std::size_t> classes;
  std::optional<std::uint64_t> seed;
  ModelOptions model;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  std::vector<SkeletonSequence> data = load_dataset(a.data);
  DatasetSplit split;
  if (!a.test_data.empty()) {
    const auto test = load_dataset(a.test_data);
    split = holdout_split(data.size(), test.size());
    data.insert(data.end(), test.begin(), test.end());
  } else {
    split = split_dataset(data, parse_protocol(a.protocol));
  }

  ModelConfig mc(topology_for(data.front().joint_count()), a.classes.value_or(class_count_of(data)), a.model.frames);
  TrainConfig tc;
  tc.lr = a.lr;
  tc.batch_size = a.batch;
  tc.epochs = a.epochs;
  tc.seed = resolve_seed(a.seed);
  tc.flags = a.model.flags();
  mc.flags = tc.flags;

  const fs::path log_path = a.log.empty() ? fs::path(a.checkpoint).replace_extension(".log") : fs::path(a.log);
  std::ofstream log(log_path, std::ios::trunc);
  if (!log) throw InputError("cannot open " + log_path.string() + " for writing");
  out << "train=" << split.train.size() << " test=" << split.test.size() << " classes=" << mc.classes
      << " joints=" << mc.joints() << " lr=" << tc.lr << " batch=" << tc.batch_size << " seed=" << tc.seed << "\n";
  const TrainResult result = train(data, split, mc, tc, [&](const EpochLog& e) {
    log << format_log_line(e) << "\n";
    log.flush();
    out << format_log_line(e) << "\n";
  });
  save_checkpoint(a.checkpoint, result.params, mc);
  out << "checkpoint written to " << a.checkpoint << "\n";
  return kExitOk;
}

// ---- eval ----

struct EvalArgs {
  std::string checkpoint, data, protocol = "all", out_dir = ".";
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const Checkpoint ck = load_checkpoint(a.checkpoint);
  const auto data = load_dataset(a.data);
  if (data.front().joint_count() != ck.config.joints()) {
    throw ConfigError("checkpoint expects " + std::to_string(ck.config.joints()) + " joints, data has " +
                      std::to_string(data.front().joint_count()));
  }
  std::vector<std::size_t> indices;
  if (a.protocol == "all") {
    indices.resize(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) indices[i] = i;
  } else {
    indices = split_dataset(data, parse_protocol(a.protocol)).test;
  }
  const PreparedSet test = prepare(data, indices, ck.config);
  const Evaluation ev = evaluate(ck.params, ck.config, test);

  out << "accuracy=" << format_double(ev.accuracy) << " (" << ev.confusion.trace() << "/" << ev.confusion.total()
      << ")\n";
  out << "class,count,accuracy\n";
  for (std::size_t c = 0; c < ck.config.classes; ++c) {
    out << c << "," << ev.confusion.row_sum(c) << "," << format_double(ev.per_class[c]) << "\n";
  }
  out << "mean_class_accuracy=" << format_double(mean_defined(ev.per_class)) << "\n";

  fs::create_directories(a.out_dir);
  const fs::path csv_path = fs::path(a.out_dir) / "confusion.csv";
  std::ofstream csv(csv_path, std::ios::trunc);
  if (!csv) throw InputError("cannot open " + csv_path.string() + " for writing");
  const std::size_t c = ck.config.classes;
  std::vector<double> counts;
  for (std::size_t r = 0; r < c; ++r) {
    for (std::size_t p = 0; p < c; ++p) {
      csv << (p ? "," : "") << ev.confusion.at(r, p);
      counts.push_back(static_cast<double>(ev.confusion.at(r, p)));
    }
    csv << "\n";
  }
  write_ppm(fs::path(a.out_dir) / "confusion.ppm", yellow_heatmap(counts, c, c));
  return kExitOk;
}

// ---- model source shared by encode and bench ----

struct ModelSource {
  std::string checkpoint;
  bool init = false;
  std::size_t joints = 15;
  std::size_t classes = 8;
  std::optional<std::uint64_t> seed;
  ModelOptions model;

  void add_to(CLI::App& app) {
    auto* ck = app.add_option("--checkpoint", checkpoint, "Trained checkpoint");
    auto* in = app.add_flag("--init", init, "Use freshly initialised parameters");
    ck->excludes(in);
    app.add_option("--joints", joints, "Joint count for --init (15 or 25)");
    app.add_option("--classes", classes, "Class count for --init")->check(CLI::PositiveNumber);
    app.add_option("--seed", seed, "Initialisation seed for --init");
    model.add_to(app);
  }

  Checkpoint load() const {
    if (!checkpoint.empty()) return load_checkpoint(checkpoint);
    if (!init) throw UsageError("one of --checkpoint or --init is required");
    ModelConfig mc(topology_for(joints), classes, model.frames);
    mc.flags = model.flags();
    return {mc, ModelParams<float>::initialize(mc, resolve_seed(seed))};
  }
};

// ---- encode ----

struct EncodeArgs {
  ModelSource source;
  std::string sequence, out_dir;
  std::size_t index = 0;
};

std::string image_file(std::size_t stream) {
  std::string name = stream_name(stream);
  std::transform(name.begin(), name.end(), name.begin(), [](char ch) {
    return ch == '-' ? '_' : static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  });
  return name + ".ppm";
}

int cmd_encode(const EncodeArgs& a, std::ostream& out) {
  const Checkpoint ck = a.source.load();
  const auto data = load_dataset(a.sequence);
  if (a.index >= data.size()) {
    throw UsageError("sequence index " + std::to_string(a.index) + " out of range (" + std::to_string(data.size()) +
                     " sequences)");
  }
  const SkeletonSequence& seq = data[a.index];
  if (seq.joint_count() != ck.config.joints()) {
    throw ConfigError("model expects " + std::to_string(ck.config.joints()) + " joints, sequence has " +
                      std::to_string(seq.joint_count()));
  }
  const auto x = sequence_tensor<float>(preprocess(seq, ck.config.topology.root(), ck.config.time_steps));
  const EncodedBundle<float> bundle = encode(x, ck.params, ck.config);

  fs::create_directories(a.out_dir);
  for (std::size_t s = 0; s < kStreamCount; ++s) {
    if (!bundle.images[s]) continue;
    const fs::path p = fs::path(a.out_dir) / image_file(s);
    write_ppm(p, feature_image(*bundle.images[s]));
    out << p.string() << "\n";
  }
  if (bundle.attention) {
    const auto& att = *bundle.attention;
    const std::vector<double> values(att.data().begin(), att.data().end());
    const fs::path p = fs::path(a.out_dir) / "mfam.ppm";
    write_ppm(p, yellow_heatmap(values, att.extent(1), att.extent(0)));
    out << p.string() << "\n";
  }
  return kExitOk;
}

// ---- bench ----

struct BenchArgs {
  ModelSource source;
  std::size_t iters = 50, warmup = 5;
};

std::string cpu_model() {
  std::ifstream in("/proc/cpuinfo");
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) return line.substr(line.find_first_not_of(' ', colon + 1));
    }
  }
  return "unknown";
}

int cmd_bench(const BenchArgs& a, std::ostream& out) {
  if (a.iters < 1) throw UsageError("--iters must be at least 1");
  const Checkpoint ck = a.source.load();
  SynthConfig sc;
  sc.class_count = 1;
  sc.sequences_per_class = 1;
  sc.frames = ck.config.time_steps;
  SkeletonSequence seq = synth_generate(sc).front();
  if (ck.config.joints() != seq.joint_count()) {
    // Sequence content does not affect timing; any pose of the right width will do.
    for (Frame& f : seq.frames) f.resize(ck.config.joints(), f.back());
  }
  const auto x = sequence_tensor<float>(preprocess(seq, ck.config.topology.root(), ck.config.time_steps));

  std::vector<double> ms;
  for (std::size_t i = 0; i < a.warmup + a.iters; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    const Tensor<float> logits = sequence_logits(x, ck.params, ck.config);
    const auto t1 = std::chrono::steady_clock::now();
    if (!std::isfinite(logits[0])) throw InputError("benchmark forward produced non-finite logits");
    if (i >= a.warmup) ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  std::vector<double> sorted = ms;
  std::sort(sorted.begin(), sorted.end());
  double mean = 0;
  for (double v : ms) mean += v;
  mean /= static_cast<double>(ms.size());
  const std::size_t n = sorted.size();
  const double median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  const std::size_t p95_rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n)));
  const double p95 = sorted[std::max<std::size_t>(p95_rank, 1) - 1];

  const FlopsReport flops = count_flops(ck.config);
  out << "# cpu: " << cpu_model() << "; hardware threads: " << std::thread::hardware_concurrency()
      << "; iters: " << a.iters << "; warmup: " << a.warmup << "; T=" << ck.config.time_steps
      << " J=" << ck.config.joints() << "\n";
  nlohmann::ordered_json report;
  report["mean_ms"] = mean;
  report["median_ms"] = median;
  report["p95_ms"] = p95;
  report["gflops"] = static_cast<double>(flops.total_flops) / 1e9;
  report["params"] = flops.parameters;
  out << report.dump() << "\n";
  return kExitOk;
}

// ---- ablate ----

struct AblateArgs {
  std::string data, out;
  std::size_t epochs = 60, batch = 64;
  std::optional<std::uint64_t> seed;
  std::size_t frames = 64;
};

int cmd_ablate(const AblateArgs& a, std::ostream& out) {
  const auto data = load_dataset(a.data);
  const ModelConfig mc(topology_for(data.front().joint_count()), class_count_of(data), a.frames);
  TrainConfig tc;
  tc.epochs = a.epochs;
  tc.batch_size = a.batch;
  tc.seed = resolve_seed(a.seed);
  const auto results = ablate(data, mc, tc, default_ablation_grid());
  std::ostringstream table;
  table << "variant,cross_subject,cross_view\n";
  for (const auto& r : results) {
    table << r.variant << "," << format_double(r.cross_subject) << "," << format_double(r.cross_view) << "\n";
  }
  out << table.str();
  if (!a.out.empty()) {
    std::ofstream f(a.out, std::ios::trunc);
    if (!f) throw InputError("cannot open " + a.out + " for writing");
    f << table.str();
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Skeleton action recognition with feature-enhanced images", "afecnn"};
  app.require_subcommand(1);

  IngestArgs ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Convert NTU .skeleton files or JSONL to normalised JSONL");
  auto* ntu_opt = ingest_cmd->add_option("--ntu-dir", ingest.ntu_dir, "Directory of .skeleton files");
  auto* jsonl_opt = ingest_cmd->add_option("--jsonl", ingest.jsonl, "JSONL input");
  ntu_opt->excludes(jsonl_opt);
  ingest_cmd->add_option("--out", ingest.out, "Output JSONL")->required();

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic labelled dataset");
  synth_cmd->add_option("--classes", synth.config.class_count, "Number of motion classes (1-8)");
  synth_cmd->add_option("--per-class", synth.config.sequences_per_class, "Sequences per class");
  synth_cmd->add_option("--seed", synth.seed, "Generator seed");
  synth_cmd->add_option("--frames", synth.config.frames, "Frames per sequence");
  synth_cmd->add_option("--noise", synth.config.noise_std, "Gaussian joint noise (metres)");
  synth_cmd->add_option("--yaw-range", synth.config.view_yaw_range, "Camera yaw range in degrees (+/-)");
  synth_cmd->add_option("--scale-min", synth.config.body_scale_min, "Smallest body scale");
  synth_cmd->add_option("--scale-max", synth.config.body_scale_max, "Largest body scale");
  synth_cmd->add_option("--amplitude-jitter", synth.config.amplitude_jitter, "Relative motion amplitude jitter");
  synth_cmd->add_option("--tempo-jitter", synth.config.tempo_jitter, "Log-scale tempo warp jitter");
  synth_cmd->add_option("--out", synth.out, "Output JSONL")->required();

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train a model and write a checkpoint");
  train_cmd->add_option("--data", tr.data, "Training JSONL")->required();
  auto* test_opt = train_cmd->add_option("--test-data", tr.test_data, "Separate test JSONL (replaces --protocol)");
  train_cmd->add_option("--protocol", tr.protocol, "cross-subject, cross-view or cross-setup")->excludes(test_opt);
  train_cmd->add_option("--out-checkpoint", tr.checkpoint, "Checkpoint path")->required();
  train_cmd->add_option("--log", tr.log, "Per-epoch log (default: checkpoint path with .log)");
  train_cmd->add_option("--epochs", tr.epochs, "Epochs")->check(CLI::PositiveNumber);
  train_cmd->add_option("--batch", tr.batch, "Mini-batch size")->check(CLI::PositiveNumber);
  train_cmd->add_option("--lr", tr.lr, "Initial learning rate")->check(CLI::PositiveNumber);
  train_cmd->add_option("--classes", tr.classes, "Class count (default: largest label + 1)");
  train_cmd->add_option("--seed", tr.seed, "Initialisation and shuffling seed");
  tr.model.add_to(*train_cmd);

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval_cmd->add_option("--checkpoint", ev.checkpoint, "Checkpoint path")->required();
  eval_cmd->add_option("--data", ev.data, "JSONL dataset")->required();
  eval_cmd->add_option("--protocol", ev.protocol, "all, cross-subject, cross-view or cross-setup (test side)");
  eval_cmd->add_option("--out-dir", ev.out_dir, "Where confusion.csv and confusion.ppm go");

  EncodeArgs en;
  auto* encode_cmd = app.add_subcommand("encode", "Export the feature images of one sequence as PPM");
  en.source.add_to(*encode_cmd);
  encode_cmd->add_option("--sequence", en.sequence, "JSONL file holding the sequence")->required();
  encode_cmd->add_option("--index", en.index, "Zero-based line index of the sequence");
  encode_cmd->add_option("--out-dir", en.out_dir, "Output directory")->required();

  BenchArgs be;
  auto* bench_cmd = app.add_subcommand("bench", "Single-sequence forward latency and operation count");
  be.source.add_to(*bench_cmd);
  bench_cmd->add_option("--iters", be.iters, "Timed iterations")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--warmup", be.warmup, "Untimed warm-up iterations");

  AblateArgs ab;
  auto* ablate_cmd = app.add_subcommand("ablate", "Train and evaluate the enhancement ablation grid");
  ablate_cmd->add_option("--data", ab.data, "JSONL dataset")->required();
  ablate_cmd->add_option("--epochs", ab.epochs, "Epochs per run")->check(CLI::PositiveNumber);
  ablate_cmd->add_option("--batch", ab.batch, "Mini-batch size")->check(CLI::PositiveNumber);
  ablate_cmd->add_option("--seed", ab.seed, "Training seed");
  ablate_cmd->add_option("--frames", ab.frames, "Frames per resampled sequence (T)")->check(CLI::PositiveNumber);
  ablate_cmd->add_option("--out", ab.out, "CSV results path");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    if (const auto* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front()) {
      err << "run 'afecnn " << sub->get_name() << " --help' for usage\n";
    } else {
      err << "run 'afecnn --help' for usage\n";
    }
    return kExitUsage;
  }

  try {
    if (*ingest_cmd) return cmd_ingest(ingest, out, err);
    if (*synth_cmd) return cmd_synth(synth, out);
    if (*train_cmd) return cmd_train(tr, out);
    if (*eval_cmd) return cmd_eval(ev, out);
    if (*encode_cmd) return cmd_encode(en, out);
    if (*bench_cmd) return cmd_bench(be, out);
    if (*ablate_cmd) return cmd_ablate(ab, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "config mismatch: " << e.what() << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace afecnn::tools
