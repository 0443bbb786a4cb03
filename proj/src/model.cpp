#include <fstream>

#include "datscan/model/checkpoint.hpp"
#include "datscan/model/model.hpp"

namespace datscan {
namespace fs = std::filesystem;
using nlohmann::json;

std::vector<LabeledImage> load_labeled_images(const DatasetManifest& m) {
  std::vector<LabeledImage> out;
  out.reserve(m.size());
  for (const auto& e : m.entries) {
    TripletImage img = read_image(m.resolve(e));
    img.subject_id = e.subject_id;
    out.push_back({std::move(img), e.label});
  }
  return out;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
    throw std::invalid_argument("Adam betas must lie in [0, 1)");
  }
  if (!(adam.epsilon > 0.0)) throw std::invalid_argument("Adam epsilon must be > 0");
  if (head_units < 1) throw std::invalid_argument("head_units must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw std::invalid_argument("dropout must lie in [0, 1)");
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw std::invalid_argument("threshold must lie in [0, 1]");
  if (input_rows < 8 || input_cols < 8) throw std::invalid_argument("backbone input must be at least 8x8");
  if (backbone_widths.size() != 3) throw std::invalid_argument("backbone needs three block widths");
}

json to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"adam_beta1", c.adam.beta1},
          {"adam_beta2", c.adam.beta2},
          {"adam_epsilon", c.adam.epsilon},
          {"seed", c.seed},
          {"backbone_mode", c.backbone_mode == BackboneMode::Frozen ? "frozen" : "fine-tune"},
          {"head_units", c.head_units},
          {"dropout", c.dropout},
          {"threshold", c.threshold},
          {"input_rows", c.input_rows},
          {"input_cols", c.input_cols},
          {"backbone_widths", c.backbone_widths},
          {"backbone_weights", c.backbone_weights}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  c.epochs = j.at("epochs").get<int>();
  c.batch_size = j.at("batch_size").get<int>();
  c.adam.beta1 = j.at("adam_beta1").get<double>();
  c.adam.beta2 = j.at("adam_beta2").get<double>();
  c.adam.epsilon = j.at("adam_epsilon").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.backbone_mode = j.at("backbone_mode").get<std::string>() == "frozen" ? BackboneMode::Frozen : BackboneMode::FineTune;
  c.head_units = j.at("head_units").get<int>();
  c.dropout = j.at("dropout").get<double>();
  c.threshold = j.at("threshold").get<double>();
  c.input_rows = j.at("input_rows").get<int>();
  c.input_cols = j.at("input_cols").get<int>();
  c.backbone_widths = j.at("backbone_widths").get<std::vector<int>>();
  c.backbone_weights = j.value("backbone_weights", std::string{});
  return c;
}

json to_json(const StepDecaySchedule& s) {
  return {{"initial_lr", s.initial_lr}, {"final_lr", s.final_lr}, {"drop_factor", s.drop_factor}, {"drop_period", s.drop_period}};
}

StepDecaySchedule schedule_from_json(const json& j) {
  StepDecaySchedule s;
  s.initial_lr = j.at("initial_lr").get<double>();
  s.final_lr = j.at("final_lr").get<double>();
  s.drop_factor = j.at("drop_factor").get<double>();
  s.drop_period = j.at("drop_period").get<int>();
  return s;
}

namespace {

json params_to_json(const std::vector<const nn::Parameter<float>*>& params) {
  json out = json::object();
  for (const auto* p : params) {
    const auto& v = p->value;
    out[p->name] = {{"rows", v.rows()}, {"cols", v.cols()}, {"data", std::vector<float>(v.data(), v.data() + v.size())}};
  }
  return out;
}

void params_from_json(const json& j, const std::vector<nn::Parameter<float>*>& params, const std::string& where) {
  for (auto* p : params) {
    if (!j.contains(p->name)) throw CheckpointError(where + ": missing parameter '" + p->name + "'");
    const auto& e = j.at(p->name);
    const auto rows = e.at("rows").get<Eigen::Index>();
    const auto cols = e.at("cols").get<Eigen::Index>();
    if (rows != p->value.rows() || cols != p->value.cols()) {
      throw CheckpointError(where + ": parameter '" + p->name + "' has shape " + std::to_string(rows) + "x" +
                            std::to_string(cols) + ", model expects " + std::to_string(p->value.rows()) + "x" +
                            std::to_string(p->value.cols()));
    }
    const auto data = e.at("data").get<std::vector<float>>();
    if (data.size() != static_cast<std::size_t>(rows * cols)) throw CheckpointError(where + ": truncated '" + p->name + "'");
    std::copy(data.begin(), data.end(), p->value.data());
  }
}

json read_json(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw CheckpointError("checkpoint not found: " + file.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw CheckpointError(file.string() + ": " + e.what());
  }
  if (j.value("format", "") != "datscan-checkpoint") throw CheckpointError(file.string() + ": not a checkpoint");
  if (j.value("version", 0) != kCheckpointVersion) {
    throw CheckpointError(file.string() + ": unsupported checkpoint version " + std::to_string(j.value("version", 0)));
  }
  return j;
}

}  // namespace

void save_checkpoint(const nn::Classifier<float>& model, const TrainConfig& cfg, const StepDecaySchedule& schedule,
                     int epochs_completed, const fs::path& file) {
  const auto& bb = model.backbone();
  const auto* cnn = dynamic_cast<const nn::SmallCnn<float>*>(&bb);
  if (!cnn) throw CheckpointError("only small-cnn backbones can be embedded in a checkpoint");

  json sched = to_json(schedule);
  sched["epochs_completed"] = epochs_completed;
  const json j = {{"format", "datscan-checkpoint"},
                  {"version", kCheckpointVersion},
                  {"scalar", "float32"},
                  {"backbone",
                   {{"kind", bb.kind()},
                    {"input_rows", bb.input_rows()},
                    {"input_cols", bb.input_cols()},
                    {"widths", cnn->widths()},
                    {"trainable", bb.trainable()},
                    {"weights", "embedded"},
                    {"params", params_to_json(bb.parameters())}}},
                  {"head",
                   {{"units", model.head().units()},
                    {"dropout", model.head().dropout()},
                    {"params", params_to_json(model.head().parameters())}}},
                  {"train_config", to_json(cfg)},
                  {"schedule", sched}};
  std::ofstream out(file);
  if (!out) throw CheckpointError("cannot write checkpoint " + file.string());
  out << j.dump() << '\n';
  if (!out) throw CheckpointError("failed writing checkpoint " + file.string());
}

namespace {

std::unique_ptr<nn::SmallCnn<float>> backbone_from_json(const json& b, const std::string& where) {
  const auto kind = b.at("kind").get<std::string>();
  if (kind != "small-cnn") throw CheckpointError(where + ": unsupported backbone kind '" + kind + "'");
  if (b.value("weights", "") != "embedded") throw CheckpointError(where + ": backbone weights are not embedded");
  auto cnn = std::make_unique<nn::SmallCnn<float>>(b.at("input_rows").get<int>(), b.at("input_cols").get<int>(),
                                                   b.at("widths").get<std::vector<int>>());
  params_from_json(b.at("params"), cnn->parameters(), where);
  return cnn;
}

}  // namespace

Checkpoint load_checkpoint(const fs::path& file) {
  const json j = read_json(file);
  try {
    auto cnn = backbone_from_json(j.at("backbone"), file.string());
    cnn->set_trainable(j.at("backbone").value("trainable", true));
    const auto& h = j.at("head");
    nn::ClassifierHead<float> head(cnn->output_channels(), h.at("units").get<int>(), h.at("dropout").get<double>());
    params_from_json(h.at("params"), head.parameters(), file.string());

    Checkpoint ck;
    ck.model = std::make_unique<nn::Classifier<float>>(std::move(cnn), std::move(head));
    ck.config = train_config_from_json(j.at("train_config"));
    ck.schedule = schedule_from_json(j.at("schedule"));
    ck.epochs_completed = j.at("schedule").at("epochs_completed").get<int>();
    return ck;
  } catch (const json::exception& e) {
    throw CheckpointError(file.string() + ": " + e.what());
  }
}

void transfer_backbone(nn::Classifier<float>& model, const fs::path& checkpoint_file) {
  const json j = read_json(checkpoint_file);
  try {
    const auto& b = j.at("backbone");
    if (b.at("kind").get<std::string>() != model.backbone().kind()) {
      throw CheckpointError(checkpoint_file.string() + ": backbone kind differs from the model's");
    }
    params_from_json(b.at("params"), model.backbone().parameters(), checkpoint_file.string());
  } catch (const json::exception& e) {
    throw CheckpointError(checkpoint_file.string() + ": " + e.what());
  }
}

}  // namespace datscan
