// SPDX-License-Identifier: Apache-2.0
// mvcs: scene generation, belief transfer, bounds, training and evaluation.
#include <algorithm>
#include <cstdio>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "mvcs/eval.hpp"
#include "mvcs/io.hpp"

namespace mvcs {
namespace {

std::string index_name(const std::string& stem, int v, const std::string& ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%02d%s", stem.c_str(), v, ext.c_str());
  return buf;
}

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (int x : v) out += (out.empty() ? "" : " ") + std::to_string(x);
  return out;
}

std::vector<int> parse_ints(const std::string& text) {
  std::vector<int> out;
  std::istringstream is(text);
  std::string tok;
  while (is >> tok) {
    char* end = nullptr;
    const long v = std::strtol(tok.c_str(), &end, 10);
    if (end == tok.c_str() || *end != '\0') throw InvalidArgument("bad integer '" + tok + "'");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

/// Collects every output of one subcommand under a single run directory and
/// records it in manifest.txt. Files are written atomically.
class RunDir {
 public:
  RunDir(const fs::path& root, std::string command) : root_(root), command_(std::move(command)) {
    std::error_code ec;
    fs::create_directories(root_, ec);
    if (ec || !fs::is_directory(root_))
      throw IoError("cannot create output directory '" + root_.string() + "'");
  }

  void param(const std::string& key, const std::string& value) { params_.emplace_back(key, value); }

  void write(const std::string& rel, const std::string& bytes) {
    const fs::path p = root_ / rel;
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
    if (ec) throw IoError("cannot create directory '" + p.parent_path().string() + "'");
    write_file_atomic(p, bytes);
    files_[rel] = bytes.size();
  }

  void finish() {
    std::ostringstream os;
    os << "command = " << command_ << "\n";
    for (const auto& [k, v] : params_) os << k << " = " << v << "\n";
    for (const auto& [rel, size] : files_) os << "file = " << rel << " " << size << "\n";
    write_file_atomic(root_ / "manifest.txt", os.str());
  }

 private:
  fs::path root_;
  std::string command_;
  std::vector<std::pair<std::string, std::string>> params_;
  std::map<std::string, std::size_t> files_;
};

CameraView load_camera(const fs::path& path) {
  const auto cams = parse_rig(load_config(path));
  require(cams.size() == 1, "camera file '" + path.string() + "' must hold one [camera]");
  return cams.front();
}

// ---------------------------------------------------------------------------
// gen-scene

struct GenOptions {
  std::string out;
  std::string config;
  double eta = 0.125;
  long seed = 1;
  double noise = 0.03;
  double gain_spread = FeatureStyle{}.camera_gain_spread;
};

void cmd_gen_scene(const GenOptions& o) {
  require(o.seed >= 0, "seed must be non-negative");
  Scene scene = default_scene();
  RigSpec spec;
  if (!o.config.empty()) {
    const Config cfg = load_config(o.config);
    if (!cfg.all("body").empty()) scene = parse_scene(cfg);
    if (const auto* rig = cfg.find("rig")) spec = parse_rig_spec(*rig);
  }
  FeatureStyle style;
  style.camera_gain_spread = o.gain_spread;
  const auto cams = make_rig(spec, scene);
  const auto seed = static_cast<std::uint64_t>(o.seed);
  const Dataset ds = make_dataset(scene, cams, o.eta, seed, o.noise, style);

  RunDir run(o.out, "gen-scene");
  run.param("eta", exact(o.eta));
  run.param("seed", std::to_string(o.seed));
  run.param("noise", exact(o.noise));
  run.param("gain_spread", exact(o.gain_spread));
  run.write("scene.cfg", format_scene(scene));
  run.write("rig.cfg", format_rig(cams));
  for (int v = 0; v < static_cast<int>(cams.size()); ++v) {
    run.write(index_name("cameras/cam", v, ".cfg"), format_rig({cams[v]}));
    run.write(index_name("masks/gt", v, ".pbm"), encode_pbm(ds.truth[v]));
    const ProbMap p = soft_probability(ds.truth[v]);
    run.write(index_name("probs/gt", v, ".mvpm"), encode_probmap(p));
    run.write(index_name("features/feat", v, ".txt"), encode_features(ds.views[v].features));
  }
  Config split;
  auto& s = split.add("split");
  s.set("views", std::to_string(cams.size()));
  s.set("eta", exact(o.eta));
  s.set("seed", std::to_string(o.seed));
  s.set("labeled", join_ints(ds.labeled));
  s.set("unlabeled", join_ints(ds.unlabeled));
  run.write("split.cfg", format_config(split));
  run.finish();
  std::cout << "gen-scene: " << cams.size() << " views, " << ds.labeled.size()
            << " labeled, written to " << o.out << "\n";
}

/// Rebuilds a Dataset from a gen-scene run directory.
Dataset load_dataset(const fs::path& dir) {
  const Config split_cfg = load_config(dir / "split.cfg");
  const auto* split = split_cfg.find("split");
  if (!split) throw InvalidArgument("split.cfg: missing [split]");
  const int n = static_cast<int>(split->integer("views"));
  require(n >= 3, "split.cfg: need at least three views");
  Dataset ds;
  ds.labeled = parse_ints(split->raw("labeled"));
  ds.unlabeled = parse_ints(split->raw("unlabeled"));
  std::vector<int> all = ds.labeled;
  all.insert(all.end(), ds.unlabeled.begin(), ds.unlabeled.end());
  std::sort(all.begin(), all.end());
  for (int v = 0; v < n; ++v)
    require(v < static_cast<int>(all.size()) && all[v] == v,
            "split.cfg: labeled and unlabeled must partition the views");
  for (int v = 0; v < n; ++v) {
    DataView dv{decode_features(read_file(dir / index_name("features/feat", v, ".txt"))),
                load_camera(dir / index_name("cameras/cam", v, ".cfg")), std::nullopt};
    ds.truth.push_back(load_pbm(dir / index_name("masks/gt", v, ".pbm")));
    ds.views.push_back(std::move(dv));
  }
  for (int v : ds.labeled) ds.views[v].label = ds.truth[v];
  return ds;
}

// ---------------------------------------------------------------------------
// transfer

struct TransferOptions {
  std::string out;
  std::string target;
  std::vector<std::string> sources;
  std::vector<std::string> maps;
  int rect_size = 0;
  int samples = 4096;
  bool verify = false;
};

void cmd_transfer(const TransferOptions& o) {
  require(!o.sources.empty(), "transfer: at least one source is required");
  require(o.sources.size() == o.maps.size(), "transfer: need one --maps entry per --sources entry");
  require(o.samples >= 2, "transfer: --samples must be at least 2");
  const CameraView target = load_camera(o.target);
  std::vector<CameraView> cams;
  std::vector<ProbMap> maps;
  for (std::size_t i = 0; i < o.sources.size(); ++i) {
    cams.push_back(load_camera(o.sources[i]));
    maps.push_back(load_probmap(o.maps[i]));
  }
  for (std::size_t i = 0; i < cams.size(); ++i) {
    try {
      rectify_pair(target, cams[i]);
    } catch (const DegenerateError& e) {
      throw DegenerateError("transfer: pair (" + o.target + ", " + o.sources[i] + "): " + e.what());
    }
  }
  std::vector<ProbView> views;
  for (std::size_t i = 0; i < cams.size(); ++i) views.push_back({maps[i], cams[i]});
  const auto pairing = reparam_coeffs(target, cams, o.rect_size);
  const ProbMap out = belief_transfer_rectified(views, target, pairing).first;

  RunDir run(o.out, "transfer");
  run.param("target", o.target);
  for (std::size_t i = 0; i < cams.size(); ++i)
    run.param("source", o.sources[i] + " " + o.maps[i]);
  run.param("rect_size", std::to_string(pairing.rect_size));
  run.write("transfer.mvpm", encode_probmap(out));
  run.write("transfer.pgm", encode_pgm(out));
  if (o.verify) {
    std::vector<CameraView> rig = cams;
    rig.push_back(target);
    const auto sampling = rig_depth_sampling(rig, o.samples);
    const ProbMap dense = belief_transfer_dense(views, target, sampling);
    double linf = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) linf = std::max(linf, std::abs(out[i] - dense[i]));
    char buf[160];
    std::snprintf(buf, sizeof buf, "samples = %d\nlambda_min = %.6f\nlambda_max = %.6f\nlinf = %.6f\n",
                  o.samples, sampling.lambda_min, sampling.lambda_max, linf);
    run.write("verify.txt", buf);
    run.write("dense.pgm", encode_pgm(dense));
    std::printf("verify: linf = %.6f over %d depth samples\n", linf, o.samples);
  }
  run.finish();
}

// ---------------------------------------------------------------------------
// bounds

struct BoundsOptions {
  std::string out;
  std::vector<int> counts{2, 4, 8, 16};
  int unlabeled_cameras = 4;
  double unlabeled_elevation = 45.0;
  int grid = 128;
};

void cmd_bounds(const BoundsOptions& o) {
  const Scene scene = default_scene();
  const RigSpec spec;
  const auto cams = make_rig(spec, scene);
  const int n = static_cast<int>(cams.size());
  for (int c : o.counts)
    require(c >= 2 && c <= n, "bounds: labeled counts must lie in [2, " + std::to_string(n) + "]");
  require(o.grid >= 8, "bounds: --grid must be at least 8");
  RigSpec uspec = spec;
  uspec.camera_count = o.unlabeled_cameras;
  uspec.elevation_deg = o.unlabeled_elevation;
  const auto ucams = make_rig(uspec, scene);

  std::vector<BinaryMask> gt;
  std::vector<ProbMap> prob;
  for (const auto& c : cams) {
    gt.push_back(render_silhouette(scene, c));
    prob.push_back(soft_probability(gt.back()));
  }
  const auto sampling = rig_depth_sampling(cams);
  const auto [center, radius] = scene.bounds();
  VoxelGrid grid;
  grid.min_corner = center - Vec3::Constant(1.05 * radius);
  grid.max_corner = center + Vec3::Constant(1.05 * radius);
  grid.resolution = o.grid;

  RunDir run(o.out, "bounds");
  run.param("counts", join_ints(o.counts));
  run.param("unlabeled_cameras", std::to_string(o.unlabeled_cameras));
  run.param("unlabeled_elevation", exact(o.unlabeled_elevation));
  run.param("grid", std::to_string(o.grid));
  std::string csv = "labeled,mean_gap,max_gap,lower_outside_truth,truth_outside_upper\n";
  for (int count : o.counts) {
    std::vector<ProbView> src;
    std::vector<MaskView> masks;
    for (int k = 0; k < count; ++k) {
      const int v = k * n / count;
      src.push_back({prob[v], cams[v]});
      masks.push_back({gt[v], cams[v]});
    }
    double gap_sum = 0.0, gap_max = 0.0;
    std::size_t lower_bad = 0, upper_bad = 0;
    for (int u = 0; u < static_cast<int>(ucams.size()); ++u) {
      const BinaryMask truth = render_silhouette(scene, ucams[u]);
      const BoundPair b{upper_bound_auto(src, ucams[u], sampling),
                        lower_bound(masks, ucams[u], grid).as_probmap()};
      const auto stats = bound_gap_stats(b);
      gap_sum += stats.mean;
      gap_max = std::max(gap_max, stats.max);
      for (std::size_t p = 0; p < truth.size(); ++p) {
        lower_bad += b.lower[p] > 0.5 && !truth[p];
        upper_bad += truth[p] && !(b.upper[p] > 0.5);
      }
      const std::string tag = "c" + std::to_string(count);
      run.write("maps/" + index_name("upper_" + tag + "_u", u, ".mvpm"), encode_probmap(b.upper));
      run.write("maps/" + index_name("upper_" + tag + "_u", u, ".pgm"), encode_pgm(b.upper));
      run.write("maps/" + index_name("lower_" + tag + "_u", u, ".pbm"),
                encode_pbm(binarize(b.lower)));
    }
    char buf[160];
    std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f,%zu,%zu\n", count, gap_sum / ucams.size(),
                  gap_max, lower_bad, upper_bad);
    csv += buf;
    std::cout << "bounds: " << buf;
  }
  run.write("gap.csv", csv);
  run.finish();
}

// ---------------------------------------------------------------------------
// train / eval

struct TrainOptions {
  std::string data;
  std::string out;
  std::string config;
  std::string regime;
  int steps = -1;
  int stop_at = -1;
  long seed = -1;
  double lambda_s = -1.0;
  double lambda_p = -1.0;
  std::string resume;
};

TrainConfig build_train_config(const TrainOptions& o) {
  TrainConfig c;
  if (!o.config.empty()) {
    const Config cfg = load_config(o.config);
    if (const auto* s = cfg.find("train")) c = parse_train_config(*s);
  }
  if (!o.regime.empty()) c.regime = parse_regime(o.regime);
  if (o.steps >= 0) c.steps = o.steps;
  if (o.seed >= 0) c.seed = static_cast<std::uint64_t>(o.seed);
  if (o.lambda_s >= 0) c.weights.lambda_s = o.lambda_s;
  if (o.lambda_p >= 0) c.weights.lambda_p = o.lambda_p;
  c.validate();
  return c;
}

void write_prediction(RunDir& run, const std::string& rel, const Dataset& ds, const Trainer& t,
                      int v) {
  run.write(rel, encode_pgm(forward(ds.views[v].features, t.weights())));
}

void cmd_train(const TrainOptions& o) {
  const Dataset ds = load_dataset(o.data);
  const TrainConfig cfg = build_train_config(o);
  Trainer trainer(ds, cfg);
  if (!o.resume.empty()) {
    std::istringstream is(read_file(o.resume));
    trainer.load(is);
  }
  RunDir run(o.out, "train");
  run.param("data", o.data);
  run.param("regime", to_string(cfg.regime));
  run.param("steps", std::to_string(cfg.steps));
  run.param("seed", std::to_string(cfg.seed));
  run.param("lambda_s", exact(cfg.weights.lambda_s));
  run.param("lambda_p", exact(cfg.weights.lambda_p));
  if (!o.resume.empty()) run.param("resumed_at", std::to_string(trainer.iteration()));

  const int until = o.stop_at >= 0 ? std::min(o.stop_at, cfg.steps) : cfg.steps;
  const int snapshot_view = ds.unlabeled.front();
  while (trainer.iteration() < until) {
    trainer.step();
    if (trainer.iteration() % cfg.eval_every == 0)
      write_prediction(run, "snapshots/" + index_name("iter", trainer.iteration(), "") + "_" +
                                index_name("view", snapshot_view, ".pgm"),
                       ds, trainer, snapshot_view);
  }
  std::ostringstream ckpt;
  trainer.save(ckpt);
  run.write("checkpoint.txt", ckpt.str());
  std::string metrics = "iteration,mean_iou,pixel_accuracy\n";
  for (const auto& m : trainer.metrics()) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f\n", m.iteration, m.mean_iou, m.pixel_accuracy);
    metrics += buf;
  }
  run.write("metrics.csv", metrics);
  std::string losses = "iteration,labeled,cross,prior,total\n";
  for (const auto& l : trainer.losses()) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g,%.9g\n", l.iteration, l.parts.labeled,
                  l.parts.cross, l.parts.prior, l.total);
    losses += buf;
  }
  run.write("losses.csv", losses);
  run.finish();
  const auto rep = trainer.evaluate(ds.unlabeled);
  std::printf("train: %s reached iteration %d, unlabeled mean IoU %.4f\n",
              to_string(cfg.regime).c_str(), trainer.iteration(), rep.mean_iou);
}

struct EvalOptions {
  std::string data;
  std::string out;
  std::vector<std::string> checkpoints;
  std::string views = "unlabeled";
};

Regime checkpoint_regime(const std::string& text) {
  std::istringstream is(text);
  std::string magic, version, key, name;
  if (!(is >> magic >> version >> key >> name) || magic != "mvcs-checkpoint" || key != "regime")
    throw IoError("checkpoint: bad header");
  try {
    return parse_regime(name);
  } catch (const InvalidArgument&) {
    throw IoError("checkpoint: unknown regime '" + name + "'");
  }
}

void cmd_eval(const EvalOptions& o) {
  require(!o.checkpoints.empty(), "eval: at least one checkpoint is required");
  const Dataset ds = load_dataset(o.data);
  std::vector<int> views;
  if (o.views == "unlabeled") {
    views = ds.unlabeled;
  } else if (o.views == "labeled") {
    views = ds.labeled;
    std::cerr << "warning: evaluating on labeled views; accuracy is defined on unlabeled views\n";
  } else if (o.views == "all") {
    for (int v = 0; v < static_cast<int>(ds.views.size()); ++v) views.push_back(v);
    std::cerr << "warning: evaluation includes labeled views\n";
  } else {
    throw InvalidArgument("eval: --views must be unlabeled, labeled or all");
  }

  RunDir run(o.out, "eval");
  run.param("data", o.data);
  run.param("views", o.views);
  std::string per_view = "regime,view,iou,pixel_accuracy\n";
  std::string compare = "regime,mean_iou,pixel_accuracy\n";
  for (const auto& path : o.checkpoints) {
    const std::string text = read_file(path);
    TrainConfig cfg;
    cfg.regime = checkpoint_regime(text);
    Trainer trainer(ds, cfg);
    std::istringstream is(text);
    trainer.load(is);
    const auto rep = trainer.evaluate(views);
    const std::string tag = to_string(cfg.regime);
    run.param("checkpoint", path);
    per_view += rep.csv_rows(tag);
    char buf[96];
    std::snprintf(buf, sizeof buf, "%s,%.6f,%.6f\n", tag.c_str(), rep.mean_iou, rep.pixel_accuracy);
    compare += buf;
    std::cout << rep.summary(tag);
  }
  run.write("per_view.csv", per_view);
  run.write("comparison.csv", compare);
  run.finish();
}

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::config: return 2;
    case ErrorKind::numeric: return 3;
    case ErrorKind::io: return 4;
  }
  return 1;
}

}  // namespace
}  // namespace mvcs

int main(int argc, char** argv) {
  using namespace mvcs;
  CLI::App app{"Multiview cross-supervision: synthetic scenes, belief transfer, training"};
  app.require_subcommand(1);

  GenOptions gen;
  auto* g = app.add_subcommand("gen-scene", "Render a synthetic multi-camera dataset");
  g->add_option("-o,--out", gen.out, "Run directory")->required();
  g->add_option("-c,--config", gen.config, "Config with [rig] and optional [scene]/[body]");
  g->add_option("--eta", gen.eta, "Labeled fraction of views")->capture_default_str();
  g->add_option("--seed", gen.seed, "Split seed")->capture_default_str();
  g->add_option("--noise", gen.noise, "Feature noise level")->capture_default_str();
  g->add_option("--gain-spread", gen.gain_spread, "Per-camera color gain spread")->capture_default_str();

  TransferOptions tr;
  auto* t = app.add_subcommand("transfer", "Transfer source beliefs into a target view");
  t->add_option("-o,--out", tr.out, "Run directory")->required();
  t->add_option("--target", tr.target, "Target camera file")->required();
  t->add_option("--sources", tr.sources, "Source camera files")->required();
  t->add_option("--maps", tr.maps, "Source probability maps, one per source")->required();
  t->add_option("--rect-size", tr.rect_size, "Rectified grid size, 0 = automatic")->capture_default_str();
  t->add_option("--samples", tr.samples, "Depth samples of the dense check")->capture_default_str();
  t->add_flag("--verify", tr.verify, "Compare against a dense depth sweep");

  BoundsOptions bo;
  auto* b = app.add_subcommand("bounds", "Upper and lower bound gap across labeled counts");
  b->add_option("-o,--out", bo.out, "Run directory")->required();
  b->add_option("--counts", bo.counts, "Labeled view counts")->capture_default_str();
  b->add_option("--unlabeled-cameras", bo.unlabeled_cameras, "Unlabeled ring size")->capture_default_str();
  b->add_option("--unlabeled-elevation", bo.unlabeled_elevation, "Unlabeled ring elevation")->capture_default_str();
  b->add_option("--grid", bo.grid, "Voxel grid resolution of the lower bound")->capture_default_str();

  TrainOptions to;
  auto* tn = app.add_subcommand("train", "Train a segmentation model");
  tn->add_option("-d,--data", to.data, "gen-scene run directory")->required();
  tn->add_option("-o,--out", to.out, "Run directory")->required();
  tn->add_option("-c,--config", to.config, "Config with a [train] section");
  tn->add_option("--regime", to.regime, "no-aug, prior or cross");
  tn->add_option("--steps", to.steps, "Total iterations");
  tn->add_option("--stop-at", to.stop_at, "Stop early at this iteration");
  tn->add_option("--seed", to.seed, "Training seed");
  tn->add_option("--lambda-s", to.lambda_s, "Cross-supervision weight");
  tn->add_option("--lambda-p", to.lambda_p, "Bootstrapping prior weight");
  tn->add_option("--resume", to.resume, "Checkpoint to continue from");

  EvalOptions ev;
  auto* e = app.add_subcommand("eval", "Compare checkpoints on held-out views");
  e->add_option("-d,--data", ev.data, "gen-scene run directory")->required();
  e->add_option("-o,--out", ev.out, "Run directory")->required();
  e->add_option("--checkpoints", ev.checkpoints, "Checkpoint files")->required();
  e->add_option("--views", ev.views, "unlabeled, labeled or all")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*g) cmd_gen_scene(gen);
    if (*t) cmd_transfer(tr);
    if (*b) cmd_bounds(bo);
    if (*tn) cmd_train(to);
    if (*e) cmd_eval(ev);
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return exit_code(err.kind());
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
