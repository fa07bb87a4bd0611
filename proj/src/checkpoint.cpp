#include <cmath>

#include "mtaffect/error.hpp"
#include "mtaffect/model.hpp"

namespace mtaffect::model {

namespace {
constexpr const char* kFormat = "mtaffect-checkpoint";
constexpr int kVersion = 1;
}  // namespace

nlohmann::json history_to_json(const std::vector<EpochRecord>& history) {
  auto out = nlohmann::json::array();
  for (const auto& h : history) {
    nlohmann::json e = {{"epoch", h.epoch}, {"train_loss", h.train_loss}};
    e["dev_pearson_class"] = h.dev_pearson_class ? nlohmann::json(*h.dev_pearson_class) : nlohmann::json(nullptr);
    e["dev_pearson_intensity"] =
        h.dev_pearson_intensity ? nlohmann::json(*h.dev_pearson_intensity) : nlohmann::json(nullptr);
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<EpochRecord> history_from_json(const nlohmann::json& j) {
  std::vector<EpochRecord> out;
  for (const auto& e : j) {
    EpochRecord r;
    r.epoch = e.at("epoch").get<std::size_t>();
    r.train_loss = e.at("train_loss").get<double>();
    if (e.contains("dev_pearson_class") && !e["dev_pearson_class"].is_null())
      r.dev_pearson_class = e["dev_pearson_class"].get<double>();
    if (e.contains("dev_pearson_intensity") && !e["dev_pearson_intensity"].is_null())
      r.dev_pearson_intensity = e["dev_pearson_intensity"].get<double>();
    out.push_back(r);
  }
  return out;
}

std::string config_hash(const ModelConfig& config) { return hash_json(config.to_json()); }

std::string experiment_hash(const ModelConfig& config) {
  auto j = config.to_json();
  j.erase("seed");
  j.erase("task_mode");
  return hash_json(j);
}

Checkpoint make_checkpoint(const Model& model, std::vector<EpochRecord> history, std::size_t best_epoch,
                           double best_monitor) {
  Checkpoint c;
  c.config = model.config();
  for (const auto& p : model.parameters()) c.parameters.push_back({p.name, p.tensor->shape(), p.tensor->values()});
  c.history = std::move(history);
  c.best_epoch = best_epoch;
  c.best_monitor = best_monitor;
  return c;
}

Model model_from_checkpoint(const Checkpoint& ckpt) {
  Model m(ckpt.config);
  const auto params = m.parameters();
  if (params.size() != ckpt.parameters.size())
    throw Error("checkpoint holds " + std::to_string(ckpt.parameters.size()) + " arrays, model expects " +
                std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& a = ckpt.parameters[i];
    if (a.name != params[i].name) throw Error("checkpoint array '" + a.name + "' where '" + params[i].name + "' expected");
    if (a.shape != params[i].tensor->shape())
      throw Error("checkpoint array '" + a.name + "' has shape " + nlohmann::json(a.shape).dump() + ", model expects " +
                  params[i].tensor->shape_string());
    m.set_parameter(a.name, a.data);
  }
  return m;
}

Container checkpoint_to_container(const Checkpoint& ckpt) {
  Container c;
  c.meta["format"] = kFormat;
  c.meta["version"] = kVersion;
  c.meta["config"] = ckpt.config.to_json();
  c.meta["config_hash"] = config_hash(ckpt.config);
  c.meta["experiment_hash"] = experiment_hash(ckpt.config);
  c.meta["history"] = history_to_json(ckpt.history);
  c.meta["best_epoch"] = ckpt.best_epoch;
  c.meta["best_monitor"] = std::isfinite(ckpt.best_monitor) ? nlohmann::json(ckpt.best_monitor) : nlohmann::json(nullptr);
  c.arrays = ckpt.parameters;
  return c;
}

Checkpoint checkpoint_from_container(const Container& c) {
  if (c.meta.value("format", std::string()) != kFormat) throw Error("container is not a model checkpoint");
  if (c.meta.value("version", 0) != kVersion)
    throw Error("unsupported checkpoint version " + c.meta.value("version", nlohmann::json(nullptr)).dump());
  Checkpoint ckpt;
  ckpt.config = ModelConfig::from_json(c.meta.at("config"));
  ckpt.parameters = c.arrays;
  ckpt.history = history_from_json(c.meta.at("history"));
  ckpt.best_epoch = c.meta.at("best_epoch").get<std::size_t>();
  const auto& bm = c.meta.at("best_monitor");
  ckpt.best_monitor = bm.is_null() ? -INFINITY : bm.get<double>();
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  save_container(path, checkpoint_to_container(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  try {
    return checkpoint_from_container(load_container(path));
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

}  // namespace mtaffect::model
