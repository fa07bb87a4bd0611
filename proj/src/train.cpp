#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <sstream>

#include "mtaffect/error.hpp"
#include "mtaffect/eval.hpp"
#include "mtaffect/model.hpp"

namespace mtaffect::model {

namespace {

void require_labels(const std::vector<EncodedExample>& set, const ModelConfig& c, const std::string& what) {
  for (const auto& ex : set) {
    if (c.has_class_head() && !ex.valence)
      throw Error(what + " tweet '" + ex.id + "' lacks a valence class required by " + task_mode_name(c.task_mode));
    if (c.has_intensity_head() && !ex.intensity)
      throw Error(what + " tweet '" + ex.id + "' lacks an intensity required by " + task_mode_name(c.task_mode));
  }
}

void shuffle(std::vector<std::size_t>& order, ad::Rng& rng) {
  for (std::size_t i = order.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
}

std::vector<std::vector<double>> snapshot(const Model& m) {
  std::vector<std::vector<double>> out;
  for (const auto& p : m.parameters()) out.push_back(p.tensor->values());
  return out;
}

void restore(Model& m, const std::vector<std::vector<double>>& s) {
  const auto params = m.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) params[i].tensor->values() = s[i];
}

}  // namespace

DevScores score(const Model& model, const std::vector<EncodedExample>& examples) {
  DevScores s;
  const auto preds = model.predict(examples);
  const auto& c = model.config();
  double sum = 0.0;
  std::size_t active = 0;
  if (c.has_class_head()) {
    std::vector<double> gold, pred;
    for (std::size_t i = 0; i < examples.size(); ++i) {
      if (!examples[i].valence) continue;
      gold.push_back(corpus::class_to_ordinal(*examples[i].valence));
      pred.push_back(corpus::class_to_ordinal(*preds[i].valence));
    }
    s.pearson_class = gold.size() >= 2 ? eval::pearson(gold, pred).r : 0.0;
    sum += *s.pearson_class;
    ++active;
  }
  if (c.has_intensity_head()) {
    std::vector<double> gold, pred;
    for (std::size_t i = 0; i < examples.size(); ++i) {
      if (!examples[i].intensity) continue;
      gold.push_back(*examples[i].intensity);
      pred.push_back(*preds[i].intensity);
    }
    s.pearson_intensity = gold.size() >= 2 ? eval::pearson(gold, pred).r : 0.0;
    sum += *s.pearson_intensity;
    ++active;
  }
  s.monitor = active ? sum / static_cast<double>(active) : 0.0;
  return s;
}

Checkpoint train(Model& model, const std::vector<EncodedExample>& train_set,
                 const std::vector<EncodedExample>& dev_set, const TrainOptions& options) {
  const auto& c = model.config();
  if (train_set.empty()) throw Error("training set is empty");
  if (dev_set.empty()) throw Error("dev set is empty");
  require_labels(train_set, c, "train");
  require_labels(dev_set, c, "dev");

  const auto params = model.parameters();
  ad::AdamConfig adam;
  adam.lr = c.lr;
  auto state = ad::make_adam_state(params, adam);
  ad::Rng rng(c.seed ^ 0x9e3779b97f4a7c15ull);

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::vector<EpochRecord> history;
  double best = -std::numeric_limits<double>::infinity();
  std::size_t best_epoch = 0, since = 0;
  auto best_params = snapshot(model);

  for (std::size_t epoch = 1; epoch <= c.max_epochs; ++epoch) {
    shuffle(order, rng);
    double total = 0.0;
    for (std::size_t start = 0, batch_no = 0; start < order.size(); start += c.batch_size, ++batch_no) {
      const std::size_t end = std::min(order.size(), start + c.batch_size);
      std::vector<const EncodedExample*> members;
      std::vector<std::size_t> gold_class;
      std::vector<double> gold_int;
      for (std::size_t i = start; i < end; ++i) {
        const auto& ex = train_set[order[i]];
        members.push_back(&ex);
        if (c.has_class_head()) gold_class.push_back(corpus::class_index(*ex.valence));
        if (c.has_intensity_head()) gold_int.push_back(*ex.intensity);
      }
      const auto batch = make_batch(members);
      for (const auto& p : params) p.tensor->zero_grad();

      ad::Tape tape;
      const auto out = model.forward(tape, batch, true, rng);
      ad::Var ce, se, loss;
      if (out.logits) ce = ad::softmax_cross_entropy(tape, out.logits, gold_class);
      if (out.intensity) se = ad::mse(tape, out.intensity, gold_int);
      if (ce && se) loss = ad::add(tape, ce, ad::scale(tape, se, c.loss_weight_lambda));
      else loss = ce ? ce : se;

      const double value = loss->item();
      if (!std::isfinite(value)) {
        std::ostringstream msg;
        msg << "non-finite loss at epoch " << epoch << ", batch " << batch_no;
        if (ce) msg << ", cross-entropy " << ce->item();
        if (se) msg << ", mse " << se->item();
        throw Error(msg.str());
      }
      tape.backward(loss);
      ad::adam_step(params, state);
      total += value * static_cast<double>(end - start);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = total / static_cast<double>(train_set.size());
    const auto dev = score(model, dev_set);
    rec.dev_pearson_class = dev.pearson_class;
    rec.dev_pearson_intensity = dev.pearson_intensity;
    history.push_back(rec);
    if (options.verbose) {
      std::clog << "epoch " << epoch << " loss " << rec.train_loss;
      if (rec.dev_pearson_class) std::clog << " dev_r_class " << *rec.dev_pearson_class;
      if (rec.dev_pearson_intensity) std::clog << " dev_r_intensity " << *rec.dev_pearson_intensity;
      std::clog << '\n';
    }

    bool stop = false;
    if (dev.monitor > best) {
      best = dev.monitor;
      best_epoch = epoch;
      best_params = snapshot(model);
      since = 0;
    } else {
      ++since;
      stop = since >= c.patience;
    }
    if (options.on_epoch && !options.on_epoch(rec, model)) break;
    if (stop) break;
  }

  restore(model, best_params);
  return make_checkpoint(model, std::move(history), best_epoch, best);
}

}  // namespace mtaffect::model
