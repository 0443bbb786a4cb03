#include "datscan/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "datscan/model/checkpoint.hpp"
#include "datscan/model/model.hpp"
#include "datscan/phantom.hpp"
#include "datscan/plot.hpp"
#include "datscan/splits.hpp"

namespace datscan {
namespace fs = std::filesystem;

PipelineLayout PipelineLayout::of(const PipelineConfig& cfg) {
  PipelineLayout l;
  l.volume_manifest = cfg.data_root / "manifest.csv";
  l.images = cfg.output_root / "images";
  l.image_manifest = l.images / "manifest.csv";
  l.splits = cfg.output_root / "splits";
  l.crossval = cfg.output_root / "crossval";
  l.final_dir = cfg.output_root / "final";
  return l;
}

namespace {

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string exact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file);
  if (!out) throw DataError("cannot write " + file.string());
  out << text;
  if (!out) throw DataError("failed writing " + file.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw DataError("cannot create directory " + dir.string());
}

DatasetManifest require_manifest(const fs::path& file, const char* produced_by) {
  if (!fs::exists(file)) throw DataError("manifest " + file.string() + " not found; run `" + produced_by + "` first");
  try {
    return read_manifest(file);
  } catch (const ManifestError& e) {
    throw DataError(e.what());
  }
}

std::vector<LabeledImage> load_images_or_throw(const DatasetManifest& m) {
  try {
    return load_labeled_images(m);
  } catch (const ImageIoError& e) {
    throw DataError(e.what());
  }
}

nn::Classifier<float> build_model(const TrainConfig& tc) {
  auto model = nn::make_classifier<float>(tc);
  if (!tc.backbone_weights.empty()) {
    try {
      transfer_backbone(model, tc.backbone_weights);
    } catch (const CheckpointError& e) {
      throw DataError(std::string("cannot load backbone weights: ") + e.what());
    }
  }
  return model;
}

nn::EpochCallback progress(std::ostream& log, bool verbose, const std::string& tag, int epochs) {
  return [&log, verbose, tag, epochs](int epoch, const EpochRecord& r) {
    if (verbose || epoch + 1 == epochs || (epoch + 1) % 10 == 0) {
      log << tag << " epoch " << (epoch + 1) << "/" << epochs << "  loss " << fixed(r.train_loss) << "  acc "
          << fixed(r.train_accuracy) << "  lr " << r.lr << '\n';
    }
  };
}

std::string fold_file(int fold) { return "fold_" + std::to_string(fold) + ".csv"; }

const char* kCrossvalHeader = "fold,size,train_loss,train_accuracy,val_loss,val_accuracy";

std::string row_line(const FoldRow& r) {
  return std::to_string(r.fold) + "," + std::to_string(r.size) + "," + exact(r.train_loss) + "," +
         exact(r.train_accuracy) + "," + exact(r.val_loss) + "," + exact(r.val_accuracy);
}

}  // namespace

DatasetManifest cmd_synth(const PipelineConfig& cfg, std::ostream& log) {
  cfg.validate();
  ensure_dir(cfg.data_root);
  DatasetManifest m;
  try {
    m = synth_dataset(cfg.n_control, cfg.n_pd, cfg.phantom, cfg.data_root);
  } catch (const VolumeError& e) {
    throw DataError(e.what());
  } catch (const ManifestError& e) {
    throw DataError(e.what());
  } catch (const std::runtime_error& e) {
    throw DataError(e.what());
  }
  write_text(cfg.data_root / "config.txt", format_config(cfg));
  log << "synth: wrote " << m.size() << " volumes (" << m.count(Label::Control) << " CONTROL, " << m.count(Label::PD)
      << " PD) to " << cfg.data_root.string() << '\n';
  return m;
}

PreprocessSummary cmd_preprocess(const PipelineConfig& cfg, std::ostream& log) {
  cfg.validate();
  const auto layout = PipelineLayout::of(cfg);
  const DatasetManifest volumes = require_manifest(layout.volume_manifest, "synth");

  ensure_dir(layout.images);
  for (Label l : kAllLabels) ensure_dir(layout.images / std::string(class_dir(l)));

  PreprocessSummary summary;
  DatasetManifest images;
  images.root = layout.images;
  for (const auto& e : volumes.entries) {
    try {
      const Volume v = load_volume(volumes.resolve(e));
      TripletImage t = extract_triplet(v, cfg.z0, cfg.axis);
      t.subject_id = e.subject_id;
      const fs::path rel = fs::path(std::string(class_dir(e.label))) / (e.subject_id + ".png");
      write_image(t, layout.images / rel);
      images.entries.push_back({e.subject_id, rel, e.label});
      ++summary.written;
    } catch (const std::exception& ex) {
      summary.failures.push_back(e.subject_id + ": " + ex.what());
    }
  }
  write_manifest(images, layout.image_manifest);
  write_text(layout.images / "config.txt", format_config(cfg));
  log << "preprocess: wrote " << summary.written << " images to " << layout.images.string() << '\n';

  if (!summary.failures.empty()) {
    std::string msg = std::to_string(summary.failures.size()) + " volume(s) failed:";
    for (const auto& f : summary.failures) msg += "\n  " + f;
    throw DataError(msg);
  }
  return summary;
}

SplitSummary cmd_split(const PipelineConfig& cfg, std::ostream& log) {
  cfg.validate();
  const auto layout = PipelineLayout::of(cfg);
  const DatasetManifest images = require_manifest(layout.image_manifest, "preprocess");
  ensure_dir(layout.splits);

  SplitSummary s;
  try {
    s.folds = stratified_kfold(images, cfg.k, cfg.split_seed);
    s.holdout = stratified_holdout(images, cfg.test_frac, cfg.split_seed, {cfg.test_control, cfg.test_pd});
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }

  std::ostringstream folds;
  folds << "subject_id,fold,label\n";
  for (const auto& e : images.entries) folds << e.subject_id << ',' << s.folds.fold_of.at(e.subject_id) << ',' << to_string(e.label) << '\n';
  write_text(layout.splits / "folds.csv", folds.str());

  for (const auto& [name, part] : {std::pair{"train", &s.holdout.train}, std::pair{"test", &s.holdout.test}}) {
    const fs::path dir = layout.splits / "holdout" / name;
    const DatasetManifest tree = export_image_tree(*part, dir);
    write_manifest(tree, dir / "manifest.csv");
  }
  write_text(layout.splits / "config.txt", format_config(cfg));

  log << "split: " << cfg.k << " folds\n";
  for (int f = 0; f < cfg.k; ++f) {
    auto [train, val] = fold_datasets(images, s.folds, f);
    log << "  fold " << (f + 1) << ": val " << val.size() << " (" << val.count(Label::Control) << " CONTROL, "
        << val.count(Label::PD) << " PD), train " << train.size() << '\n';
  }
  log << "  holdout: train " << s.holdout.train.size() << ", test " << s.holdout.test.size() << " ("
      << s.holdout.test.count(Label::Control) << " CONTROL, " << s.holdout.test.count(Label::PD) << " PD)\n";
  return s;
}

CrossValReport aggregate_crossval(std::vector<FoldRow> rows) {
  if (rows.empty()) throw std::invalid_argument("no cross-validation rows");
  std::sort(rows.begin(), rows.end(), [](const FoldRow& a, const FoldRow& b) { return a.fold < b.fold; });
  std::vector<double> w, tl, ta, vl, va;
  for (const auto& r : rows) {
    w.push_back(static_cast<double>(r.size));
    tl.push_back(r.train_loss);
    ta.push_back(r.train_accuracy);
    vl.push_back(r.val_loss);
    va.push_back(r.val_accuracy);
  }
  CrossValReport rep;
  rep.mean_train_loss = weighted_mean(tl, w);
  rep.mean_train_accuracy = weighted_mean(ta, w);
  rep.mean_val_loss = weighted_mean(vl, w);
  rep.mean_val_accuracy = weighted_mean(va, w);
  rep.sd_train_accuracy = population_stddev(ta);
  rep.sd_val_accuracy = population_stddev(va);
  if (rows.size() >= 2) {
    rep.sample_sd_train_accuracy = sample_stddev(ta);
    rep.sample_sd_val_accuracy = sample_stddev(va);
  }
  rep.rows = std::move(rows);
  return rep;
}

std::string format_crossval(const CrossValReport& r) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-14s %10s %16s %10s %16s %6s\n", "Fold", "Train Loss", "Train Accuracy", "Val Loss",
                "Val Accuracy", "Size");
  out << line;
  for (const auto& row : r.rows) {
    std::snprintf(line, sizeof line, "%-14d %10.4f %16.4f %10.4f %16.4f %6zu\n", row.fold + 1, row.train_loss,
                  row.train_accuracy, row.val_loss, row.val_accuracy, row.size);
    out << line;
  }
  const std::string ta = fixed(r.mean_train_accuracy) + " (+/- " + fixed(r.sd_train_accuracy) + ")";
  const std::string va = fixed(r.mean_val_accuracy) + " (+/- " + fixed(r.sd_val_accuracy) + ")";
  std::snprintf(line, sizeof line, "%-14s %10.4f %16s %10.4f %16s\n", "Weighted Mean", r.mean_train_loss, ta.c_str(),
                r.mean_val_loss, va.c_str());
  out << line;
  return out.str();
}

void write_crossval_csv(const CrossValReport& r, const fs::path& file) {
  std::string text = std::string(kCrossvalHeader) + "\n";
  for (const auto& row : r.rows) text += row_line(row) + "\n";
  write_text(file, text);
}

std::vector<FoldRow> read_crossval_rows(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw DataError("cross-validation file not found: " + file.string());
  std::string line;
  if (!std::getline(in, line) || line != kCrossvalHeader) throw DataError(file.string() + ": unexpected header");
  std::vector<FoldRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    FoldRow r;
    char tail = 0;
    if (std::sscanf(line.c_str(), "%d,%zu,%lf,%lf,%lf,%lf%c", &r.fold, &r.size, &r.train_loss, &r.train_accuracy,
                    &r.val_loss, &r.val_accuracy, &tail) != 6) {
      throw DataError(file.string() + ":" + std::to_string(line_no) + ": malformed row");
    }
    rows.push_back(r);
  }
  return rows;
}

CrossValReport cmd_crossval(const PipelineConfig& cfg, std::ostream& log, std::optional<int> only_fold, bool merge_only) {
  cfg.validate();
  const auto layout = PipelineLayout::of(cfg);
  ensure_dir(layout.crossval);

  if (merge_only) {
    std::vector<FoldRow> rows;
    for (int f = 0; f < cfg.k; ++f) {
      auto part = read_crossval_rows(layout.crossval / fold_file(f));
      rows.insert(rows.end(), part.begin(), part.end());
    }
    CrossValReport rep = aggregate_crossval(std::move(rows));
    write_crossval_csv(rep, layout.crossval / "report.csv");
    write_text(layout.crossval / "report.txt", format_crossval(rep));
    return rep;
  }

  const DatasetManifest images = require_manifest(layout.image_manifest, "preprocess");
  FoldAssignment folds;
  try {
    folds = stratified_kfold(images, cfg.k, cfg.split_seed);
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  const auto all = load_images_or_throw(images);
  std::map<std::string, const LabeledImage*> by_id;
  for (const auto& li : all) by_id[li.image.subject_id] = &li;

  if (only_fold && (*only_fold < 0 || *only_fold >= cfg.k)) {
    throw ConfigError("fold " + std::to_string(*only_fold) + " outside [0, " + std::to_string(cfg.k) + ")");
  }

  std::vector<FoldRow> rows;
  for (int f = 0; f < cfg.k; ++f) {
    if (only_fold && f != *only_fold) continue;
    auto [train_m, val_m] = fold_datasets(images, folds, f);
    std::vector<LabeledImage> train_set, val_set;
    for (const auto& e : train_m.entries) train_set.push_back(*by_id.at(e.subject_id));
    for (const auto& e : val_m.entries) val_set.push_back(*by_id.at(e.subject_id));

    TrainConfig tc = cfg.train;
    tc.seed = mix_seed(cfg.train.seed, static_cast<std::uint64_t>(f));
    TrainHistory h;
    try {
      auto model = build_model(tc);
      h = nn::train(model, std::span<const LabeledImage>(train_set), std::span<const LabeledImage>(val_set), tc, cfg.aug,
                    cfg.schedule, progress(log, cfg.verbose, "fold " + std::to_string(f + 1), tc.epochs));
    } catch (const DataError&) {
      throw;
    } catch (const std::exception& e) {
      throw TrainingError("fold " + std::to_string(f + 1) + ": " + e.what());
    }
    FoldRow row{f, val_set.size(), h.epochs.back().train_loss, h.epochs.back().train_accuracy, *h.val_loss,
                *h.val_accuracy};
    write_text(layout.crossval / fold_file(f), std::string(kCrossvalHeader) + "\n" + row_line(row) + "\n");
    log << "fold " << (f + 1) << ": val loss " << fixed(row.val_loss) << ", val accuracy " << fixed(row.val_accuracy)
        << '\n';
    rows.push_back(row);
  }

  CrossValReport rep = aggregate_crossval(std::move(rows));
  if (!only_fold) {
    write_crossval_csv(rep, layout.crossval / "report.csv");
    write_text(layout.crossval / "report.txt", format_crossval(rep));
    write_text(layout.crossval / "config.txt", format_config(cfg));
  }
  return rep;
}

EvaluationReport evaluate_predictions(std::span<const ScoredPrediction> preds, double threshold) {
  EvaluationReport r;
  r.n = preds.size();
  r.threshold = threshold;
  r.cm = confusion(preds, threshold);
  r.loss = mean_bce(preds);
  auto guarded = [](auto&& fn) -> std::optional<double> {
    try {
      return fn();
    } catch (const UndefinedMetric&) {
      return std::nullopt;
    }
  };
  r.accuracy = guarded([&] { return accuracy(r.cm); });
  r.sensitivity = guarded([&] { return sensitivity(r.cm); });
  r.specificity = guarded([&] { return specificity(r.cm); });
  r.precision = guarded([&] { return precision(r.cm); });
  r.roc_auc = guarded([&] { return roc_auc(preds); });
  r.pr_auc = guarded([&] { return pr_auc(preds); });
  return r;
}

std::string format_evaluation(const EvaluationReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? fixed(*v) : std::string("undefined"); };
  std::ostringstream out;
  out << "n = " << r.n << '\n'
      << "threshold = " << r.threshold << '\n'
      << "test_accuracy = " << opt(r.accuracy) << '\n'
      << "test_loss = " << fixed(r.loss) << '\n'
      << "true_positive = " << r.cm.tp << '\n'
      << "false_positive = " << r.cm.fp << '\n'
      << "true_negative = " << r.cm.tn << '\n'
      << "false_negative = " << r.cm.fn << '\n'
      << "sensitivity = " << opt(r.sensitivity) << '\n'
      << "specificity = " << opt(r.specificity) << '\n'
      << "precision = " << opt(r.precision) << '\n'
      << "pr_auc = " << opt(r.pr_auc) << '\n'
      << "roc_auc = " << opt(r.roc_auc) << '\n';
  return out.str();
}

void write_evaluation(std::span<const ScoredPrediction> preds, const EvaluationReport& r, const fs::path& dir,
                      bool plots, std::ostream& log) {
  ensure_dir(dir);
  write_text(dir / "metrics.txt", format_evaluation(r));
  std::optional<Curve> roc, pr;
  try {
    roc = roc_curve(preds);
    write_curve_csv(*roc, dir / "roc.csv");
  } catch (const UndefinedMetric& e) {
    log << "roc curve skipped: " << e.what() << '\n';
  }
  try {
    pr = pr_curve(preds);
    write_curve_csv(*pr, dir / "pr.csv");
  } catch (const UndefinedMetric& e) {
    log << "pr curve skipped: " << e.what() << '\n';
  }
  if (!plots) return;
  try {
    if (roc) write_curve_png(*roc, dir / "roc.png");
    if (pr) write_curve_png(*pr, dir / "pr.png");
  } catch (const std::exception& e) {
    log << "plot rendering skipped: " << e.what() << '\n';
  }
}

FinalRunResult cmd_train_final(const PipelineConfig& cfg, std::ostream& log) {
  cfg.validate();
  const auto layout = PipelineLayout::of(cfg);
  const DatasetManifest images = require_manifest(layout.image_manifest, "preprocess");

  HoldoutSplit split;
  try {
    split = stratified_holdout(images, cfg.test_frac, cfg.split_seed, {cfg.test_control, cfg.test_pd});
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  const fs::path data_dir = layout.final_dir / "data";
  if (fs::exists(data_dir)) fs::remove_all(data_dir);
  export_image_tree(split.train, data_dir / "train");
  export_image_tree(split.test, data_dir / "test");

  const auto train_set = load_images_or_throw(scan_image_tree(data_dir / "train"));
  const auto test_set = load_images_or_throw(scan_image_tree(data_dir / "test"));
  log << "train: " << train_set.size() << " training images, " << test_set.size() << " test images\n";

  FinalRunResult result;
  std::optional<nn::Classifier<float>> model;
  TrainHistory h;
  try {
    model.emplace(build_model(cfg.train));
    h = nn::train(*model, std::span<const LabeledImage>(train_set), {}, cfg.train, cfg.aug, cfg.schedule,
                  progress(log, cfg.verbose, "train", cfg.train.epochs));
  } catch (const DataError&) {
    throw;
  } catch (const std::exception& e) {
    throw TrainingError(e.what());
  }

  result.checkpoint = layout.final_dir / "model.json";
  save_checkpoint(*model, cfg.train, cfg.schedule, cfg.train.epochs, result.checkpoint);

  std::string hist = "epoch,train_loss,train_accuracy,lr\n";
  for (std::size_t e = 0; e < h.epochs.size(); ++e) {
    hist += std::to_string(e) + "," + exact(h.epochs[e].train_loss) + "," + exact(h.epochs[e].train_accuracy) + "," +
            exact(h.epochs[e].lr) + "\n";
  }
  write_text(layout.final_dir / "history.csv", hist);
  result.history = std::move(h);

  result.predictions = nn::predict(*model, std::span<const LabeledImage>(test_set));
  write_predictions(result.predictions, layout.final_dir / "predictions.csv");
  result.test = evaluate_predictions(result.predictions, cfg.train.threshold);
  write_evaluation(result.predictions, result.test, layout.final_dir, cfg.plots, log);
  write_text(layout.final_dir / "config.txt", format_config(cfg));
  return result;
}

EvaluationReport cmd_evaluate(const fs::path& predictions, double threshold, const std::optional<fs::path>& out_dir,
                              bool plots, std::ostream& log) {
  std::vector<ScoredPrediction> preds;
  try {
    preds = read_predictions(predictions);
  } catch (const PredictionsFormatError& e) {
    throw DataError(e.what());
  }
  const EvaluationReport r = evaluate_predictions(preds, threshold);
  if (out_dir) write_evaluation(preds, r, *out_dir, plots, log);
  return r;
}

std::string cmd_report(const std::optional<fs::path>& predictions, const std::optional<fs::path>& crossval_csv,
                       double threshold, const fs::path& out_dir, bool plots, std::ostream& log) {
  if (!predictions && !crossval_csv) throw ConfigError("report needs --predictions and/or --crossval");
  ensure_dir(out_dir);
  std::ostringstream md;
  md << "# DaTscan classification report\n\n";

  if (crossval_csv) {
    const CrossValReport cv = aggregate_crossval(read_crossval_rows(*crossval_csv));
    md << "## Cross-validation\n\n"
       << "| Fold | Train Loss | Train Accuracy | Val Loss | Val Accuracy | Size |\n"
       << "|---:|---:|---:|---:|---:|---:|\n";
    for (const auto& r : cv.rows) {
      md << "| " << (r.fold + 1) << " | " << fixed(r.train_loss) << " | " << fixed(r.train_accuracy) << " | "
         << fixed(r.val_loss) << " | " << fixed(r.val_accuracy) << " | " << r.size << " |\n";
    }
    md << "| Weighted Mean | " << fixed(cv.mean_train_loss) << " | " << fixed(cv.mean_train_accuracy) << " (± "
       << fixed(cv.sd_train_accuracy) << ") | " << fixed(cv.mean_val_loss) << " | " << fixed(cv.mean_val_accuracy)
       << " (± " << fixed(cv.sd_val_accuracy) << ") | |\n\n";
  }

  if (predictions) {
    std::vector<ScoredPrediction> preds;
    try {
      preds = read_predictions(*predictions);
    } catch (const PredictionsFormatError& e) {
      throw DataError(e.what());
    }
    const EvaluationReport r = evaluate_predictions(preds, threshold);
    write_evaluation(preds, r, out_dir, plots, log);
    auto opt = [](const std::optional<double>& v) { return v ? fixed(*v) : std::string("undefined"); };
    md << "## Test set (n = " << r.n << ")\n\n"
       << "| | | | |\n|---|---:|---|---:|\n"
       << "| Test Accuracy | " << opt(r.accuracy) << " | PR auc | " << opt(r.pr_auc) << " |\n"
       << "| Test Loss | " << fixed(r.loss) << " | ROC auc | " << opt(r.roc_auc) << " |\n"
       << "| True Positive | " << r.cm.tp << " | True Negative | " << r.cm.tn << " |\n"
       << "| False Positive | " << r.cm.fp << " | False Negative | " << r.cm.fn << " |\n"
       << "| Sensitivity | " << opt(r.sensitivity) << " | Specificity | " << opt(r.specificity) << " |\n"
       << "| Precision | " << opt(r.precision) << " | | |\n\n"
       << "Curves: `roc.csv`, `pr.csv`" << (plots ? ", `roc.png`, `pr.png`" : "") << "\n";
  }

  write_text(out_dir / "report.md", md.str());
  return md.str();
}

}  // namespace datscan
