#include <CLI11.hpp>
#include <iostream>

#include "elicit/cli/commands.hpp"
#include "elicit/error.hpp"

namespace {

using elicit::cli::RunConfig;

struct Overrides {
  std::string config;
  std::string dataset;
  std::string k;
  std::string seed;
  std::string runs;
  std::string methods;
  std::string out;
  std::string checkpoint;
  std::string feedback;
  std::string top_n;
  bool interactive = false;
  std::vector<std::string> settings;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "key=value config file");
  cmd->add_option("--dataset", o.dataset, "raw ratings file or snapshot directory");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--set", o.settings, "extra key=value setting (repeatable)");
}

RunConfig resolve(const Overrides& o) {
  RunConfig c;
  if (!o.config.empty()) elicit::cli::load_config_file(c, o.config);
  const auto set = [&](const char* key, const std::string& value) {
    if (!value.empty()) elicit::cli::apply_setting(c, key, value);
  };
  set("dataset", o.dataset);
  set("k", o.k);
  set("seed", o.seed);
  set("runs", o.runs);
  set("methods", o.methods);
  set("out", o.out);
  set("checkpoint", o.checkpoint);
  set("feedback", o.feedback);
  set("top_n", o.top_n);
  if (o.interactive) c.interactive = true;
  for (const auto& s : o.settings) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw elicit::Error("--set expects key=value, got '" + s + "'");
    elicit::cli::apply_setting(c, s.substr(0, eq), s.substr(eq + 1));
  }
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Seed itemset elicitation for cold-start recommendation"};
  app.require_subcommand(1);
  Overrides o;
  std::vector<std::string> dumps;

  auto* prepare = app.add_subcommand("prepare", "binarize, filter and snapshot a ratings file");
  add_common(prepare, o);

  auto* train = app.add_subcommand("train", "train the elicitation model and write a checkpoint");
  add_common(train, o);
  train->add_option("--k", o.k, "seed itemset size");
  train->add_option("--seed", o.seed, "random seed");

  auto* eval = app.add_subcommand("eval", "multi-run evaluation of seed selection methods");
  add_common(eval, o);
  eval->add_option("--k", o.k, "seed itemset size");
  eval->add_option("--seed", o.seed, "master seed");
  eval->add_option("--runs", o.runs, "number of seeded runs");
  eval->add_option("--methods", o.methods, "comma-separated methods");
  eval->add_option("--checkpoint", o.checkpoint, "use a trained model directory for DRE");

  auto* grid = app.add_subcommand("grid", "hyperparameter sweep scored on validation users");
  add_common(grid, o);
  grid->add_option("--k", o.k, "seed itemset size");
  grid->add_option("--seed", o.seed, "random seed");

  auto* rec = app.add_subcommand("recommend", "recommend items for a new user");
  add_common(rec, o);
  rec->add_option("--checkpoint", o.checkpoint, "model directory written by train")->required();
  rec->add_flag("--interactive", o.interactive, "ask about each seed item on the terminal");
  rec->add_option("--feedback", o.feedback, "file with k answers (0/1)");
  rec->add_option("--top-n", o.top_n, "number of recommendations");

  auto* report = app.add_subcommand("report", "comparison table with improvement and significance");
  report->add_option("dumps", dumps, "report.json files")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*report) return elicit::cli::cmd_report({dumps.begin(), dumps.end()}, std::cout);
    const RunConfig config = resolve(o);
    if (*prepare) return elicit::cli::cmd_prepare(config, std::cout);
    if (*train) return elicit::cli::cmd_train(config, std::cout);
    if (*eval) return elicit::cli::cmd_eval(config, std::cout, std::cerr);
    if (*grid) return elicit::cli::cmd_grid(config, std::cout, std::cerr);
    if (*rec) return elicit::cli::cmd_recommend(config, std::cin, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
