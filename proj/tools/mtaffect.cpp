#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mtaffect/commands.hpp"
#include "mtaffect/error.hpp"

namespace fs = std::filesystem;
using namespace mtaffect;

namespace {

corpus::SplitName split_from_name(const std::string& name) {
  if (name == "train") return corpus::SplitName::Train;
  if (name == "dev") return corpus::SplitName::Dev;
  if (name == "test") return corpus::SplitName::Test;
  throw Error("unknown split '" + name + "' (expected train, dev or test)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-task valence classification and intensity regression for tweets"};
  app.require_subcommand(1);

  std::string config_path, mode, out, in, freq, emoji, kind = "class", split = "test", checkpoint;
  std::optional<std::uint64_t> seed;
  bool verbose = false, no_shallow = false, force = false, no_standardize = false;

  auto* normalize = app.add_subcommand("normalize", "Normalize the tweet text of a dataset file");
  normalize->add_option("--in", in, "Input dataset TSV")->required();
  normalize->add_option("--out", out, "Output dataset TSV")->required();
  normalize->add_option("--freq", freq, "Word frequency lexicon")->required();
  normalize->add_option("--emoji", emoji, "Emoji description lexicon");
  normalize->add_option("--kind", kind, "Label kind: class, intensity or both");
  int max_edit = 2;
  normalize->add_option("--max-edit", max_edit, "Spell-correction edit distance (1 or 2)");

  auto* encode = app.add_subcommand("encode", "Encode a split into embedding matrices and features");
  encode->add_option("--config", config_path, "Run config JSON")->required();
  encode->add_option("--split", split, "train, dev or test");
  encode->add_option("--out", out, "Output container")->required();

  auto* train = app.add_subcommand("train", "Train one run (checkpoint, history, reports, scores)");
  train->add_option("--config", config_path, "Run config JSON")->required();
  train->add_option("--mode", mode, "stl-class, stl-intensity or mtl");
  train->add_option("--seed", seed, "Override the model seed");
  train->add_option("--out", out, "Run directory");
  train->add_flag("--no-shallow", no_shallow, "Skip the SVM/SVR heads");
  train->add_flag("-v,--verbose", verbose, "Log every epoch");

  auto* repr = app.add_subcommand("repr", "Export shared representations for a split");
  repr->add_option("--config", config_path, "Run config JSON")->required();
  repr->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
  repr->add_option("--split", split, "train, dev or test");
  repr->add_option("--out", out, "Representation TSV")->required();

  std::string train_repr, train_labels, eval_repr, eval_labels, head = "svm";
  double c_value = 1.0, epsilon = 0.1;
  std::size_t epochs = 50;
  auto* shallow_cmd = app.add_subcommand("shallow", "Fit an SVM or SVR on representations and evaluate it");
  shallow_cmd->add_option("--config", config_path, "Run config JSON supplying shallow defaults");
  shallow_cmd->add_option("--train-repr", train_repr, "Training representations")->required();
  shallow_cmd->add_option("--train-labels", train_labels, "Training labels (dataset TSV)")->required();
  shallow_cmd->add_option("--eval-repr", eval_repr, "Evaluation representations")->required();
  shallow_cmd->add_option("--eval-labels", eval_labels, "Evaluation labels (dataset TSV)")->required();
  shallow_cmd->add_option("--kind", kind, "Label kind of the label files");
  shallow_cmd->add_option("--head", head, "svm or svr");
  auto* c_opt = shallow_cmd->add_option("--C", c_value, "Regularization constant");
  auto* eps_opt = shallow_cmd->add_option("--epsilon", epsilon, "SVR tube width");
  auto* epochs_opt = shallow_cmd->add_option("--epochs", epochs, "Training epochs");
  shallow_cmd->add_option("--seed", seed, "Shuffle seed");
  shallow_cmd->add_flag("--no-standardize", no_standardize, "Use raw features");
  shallow_cmd->add_option("--out", out, "Output directory")->required();

  std::string pred, gold, task = "class";
  auto* eval_cmd = app.add_subcommand("eval", "Score a prediction file against gold labels");
  eval_cmd->add_option("--pred", pred, "Predictions TSV (id, valence, intensity)")->required();
  eval_cmd->add_option("--gold", gold, "Gold dataset TSV")->required();
  eval_cmd->add_option("--kind", kind, "Label kind of the gold file");
  eval_cmd->add_option("--task", task, "class or intensity");
  eval_cmd->add_option("--out", out, "Output directory")->required();

  std::vector<std::string> mtl_runs, stl_runs;
  auto* compare = app.add_subcommand("compare", "Compare MTL and STL runs across seeds");
  compare->add_option("--mtl", mtl_runs, "MTL run directories")->required();
  compare->add_option("--stl", stl_runs, "STL run directories")->required();
  compare->add_option("--out", out, "Output directory");
  compare->add_flag("--force", force, "Compare runs from different configurations");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*normalize) {
      text::NormalizeOptions opts;
      opts.max_edit = max_edit;
      cli::cmd_normalize(in, out, freq, emoji, cli::label_kind_from_name(kind), opts);
    } else if (*encode) {
      cli::cmd_encode(cli::RunConfig::load(config_path), split_from_name(split), out);
    } else if (*train) {
      cli::TrainRequest req;
      if (!mode.empty()) req.mode = model::task_mode_from_name(mode);
      req.seed = seed;
      req.out = out;
      req.shallow = !no_shallow;
      req.verbose = verbose;
      const auto dir = cli::cmd_train(cli::RunConfig::load(config_path), req);
      std::cout << dir.string() << "\n";
    } else if (*repr) {
      cli::cmd_repr(cli::RunConfig::load(config_path), checkpoint, split_from_name(split), out);
    } else if (*shallow_cmd) {
      shallow::ShallowOptions opts;
      if (!config_path.empty()) opts = cli::RunConfig::load(config_path).shallow;
      if (c_opt->count()) opts.C = c_value;
      if (eps_opt->count()) opts.epsilon = epsilon;
      if (epochs_opt->count()) opts.epochs = epochs;
      if (seed) opts.seed = *seed;
      if (no_standardize) opts.standardize = false;
      const auto report = cli::cmd_shallow(train_repr, train_labels, eval_repr, eval_labels,
                                           cli::label_kind_from_name(kind), cli::shallow_head_from_name(head), opts,
                                           out);
      std::cout << "pearson " << report.pearson << " n " << report.n << "\n";
    } else if (*eval_cmd) {
      const auto report =
          cli::cmd_eval(pred, gold, cli::label_kind_from_name(kind), eval::task_from_name(task), out);
      std::cout << "pearson " << report.pearson << " n " << report.n << "\n";
    } else if (*compare) {
      std::vector<fs::path> mtl(mtl_runs.begin(), mtl_runs.end()), stl(stl_runs.begin(), stl_runs.end());
      std::cout << cli::cmd_compare(mtl, stl, out, force).to_markdown();
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
