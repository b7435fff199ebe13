#include "elicit/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "elicit/baselines.hpp"
#include "elicit/error.hpp"
#include "elicit/seeds.hpp"

namespace elicit::cli {
namespace {

namespace fs = std::filesystem;

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

std::map<std::string, std::string> read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("missing manifest: " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

std::vector<std::string> read_item_map(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("missing item map: " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos) throw Error("malformed item map: " + path.string());
    const auto index = std::stoul(line.substr(tab + 1));
    if (index != tokens.size()) throw Error("item map is not in index order: " + path.string());
    tokens.push_back(line.substr(0, tab));
  }
  return tokens;
}

std::vector<double> widen(const RowVector<float>& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Predictor neural_predictor(DecoderParams theta) {
  return [theta = std::move(theta)](std::span<const float> z) { return widen(predict_scores(theta, z)); };
}

const std::set<std::string> kBuiltinMethods{"MOSTPOP", "RAN++", "POP++", "RBMF", "RBMF++", "DRE"};

void check_methods(const RunConfig& config) {
  if (config.methods.empty()) throw Error("no methods requested");
  std::set<std::string> seen;
  for (const auto& m : config.methods) {
    if (!kBuiltinMethods.contains(m) && !config.seed_files.contains(m)) {
      throw Error("unknown method '" + m + "' (no seed_file." + m + " configured)");
    }
    if (!seen.insert(m).second) throw Error("method '" + m + "' listed twice");
  }
}

}  // namespace

RatingMatrix load_dataset(const RunConfig& config) {
  if (config.dataset.empty()) throw Error("no dataset given (--dataset or dataset=)");
  if (fs::is_directory(config.dataset)) return read_matrix_snapshot(config.dataset);
  if (!fs::exists(config.dataset)) throw Error("no such file: " + config.dataset.string());
  return prepare_matrix(config.dataset, config.preprocess);
}

SplitSpec make_split(const RunConfig& config, const RatingMatrix& matrix) {
  return split_users(matrix, config.split_seed, config.test_frac, config.val_frac);
}

TrainedDre train_dre(const RatingMatrix& matrix, const SplitSpec& split, const TrainConfig& cfg) {
  TrainedDre out;
  out.joint = train(matrix, split, cfg);
  out.checkpoint.encoder = out.joint.best_phi;
  out.checkpoint.seeds = extract_seeds(out.joint.best_phi);
  out.checkpoint.decoder =
      retrain_decoder(matrix, split, out.checkpoint.seeds, out.joint.best_theta, cfg.retrain_epochs, cfg);
  return out;
}

EvalReport run_evaluation(const RunConfig& config, const RatingMatrix& matrix, const SplitSpec& split,
                          const std::optional<Checkpoint>& fixed_dre, std::ostream* log) {
  check_methods(config);
  if (config.runs < 1) throw Error("runs must be at least 1");
  const std::size_t k = config.train.k;
  const std::uint64_t master = config.train.seed;
  const auto has = [&](const std::string& m) {
    return std::find(config.methods.begin(), config.methods.end(), m) != config.methods.end();
  };
  if (fixed_dre && fixed_dre->seeds.size() != k) {
    throw Error("checkpoint has k=" + std::to_string(fixed_dre->seeds.size()) + " but config asks for k=" +
                std::to_string(k));
  }
  std::map<std::string, SeedItemset> external;
  for (const auto& m : config.methods) {
    if (config.seed_files.contains(m)) external[m] = read_seed_file(config.seed_files.at(m), k, matrix.num_items());
  }

  const auto popularity = item_popularity(matrix, split.train_users);
  std::vector<RunEvaluation> runs;
  for (std::size_t run = 0; run < config.runs; ++run) {
    RunEvaluation ev;
    ev.seed = derive_seed(master, "run", run);
    const auto plusplus = [&](const std::string& name, const SeedItemset& seeds) {
      TrainConfig cfg = config.train;
      cfg.seed = derive_seed(master, name + "/decoder", run);
      return neural_predictor(plusplus_decoder(matrix, split, seeds, cfg));
    };

    std::optional<SeedItemset> dre_seeds;
    std::optional<Predictor> dre_predictor;
    if (has("DRE")) {
      Checkpoint ck;
      if (fixed_dre) {
        ck = *fixed_dre;
      } else {
        TrainConfig cfg = config.train;
        cfg.seed = derive_seed(master, "DRE", run);
        ck = train_dre(matrix, split, cfg).checkpoint;
      }
      dre_seeds = ck.seeds;
      dre_predictor = neural_predictor(ck.decoder);
    }
    std::optional<SeedItemset> rbmf_seeds;
    if (has("RBMF") || has("RBMF++")) {
      rbmf_seeds = rbmf_select(matrix, split.train_users, k, config.rbmf_delta, derive_seed(master, "RBMF", run));
    }

    for (const auto& method : config.methods) {
      SeedItemset seeds;
      Predictor predictor;
      if (method == "DRE") {
        seeds = *dre_seeds;
        predictor = *dre_predictor;
      } else if (method == "MOSTPOP") {
        // Shares the DRE candidate universe when DRE is part of the comparison.
        seeds = dre_seeds ? *dre_seeds : select_popular(matrix, split.train_users, k);
        const std::vector<double> scores(popularity.begin(), popularity.end());
        predictor = [scores](std::span<const float>) { return scores; };
      } else if (method == "RAN++") {
        Rng rng(derive_seed(master, "RAN++", run));
        seeds = select_random(matrix.num_items(), k, rng);
        predictor = plusplus(method, seeds);
      } else if (method == "POP++") {
        seeds = select_popular(matrix, split.train_users, k);
        predictor = plusplus(method, seeds);
      } else if (method == "RBMF") {
        seeds = *rbmf_seeds;
        auto dec = rbmf_decoder(matrix, split.train_users, seeds, config.rbmf_lambda);
        predictor = [dec = std::move(dec)](std::span<const float> z) { return dec.predict(z); };
      } else if (method == "RBMF++") {
        seeds = *rbmf_seeds;
        predictor = plusplus(method, seeds);
      } else {
        seeds = external.at(method);
        predictor = plusplus(method, seeds);
      }
      auto result = evaluate_method(predictor, matrix, split.test_users, seeds, config.cutoffs);
      if (log) {
        *log << "run " << run << " " << method;
        for (std::size_t c = 0; c < result.cutoffs.size(); ++c) {
          *log << " P@" << result.cutoffs[c] << "=" << fmt("%.4f", result.mean_precision(c)) << " NDCG@"
               << result.cutoffs[c] << "=" << fmt("%.4f", result.mean_ndcg(c));
        }
        *log << " skipped=" << result.skipped << "\n";
      }
      ev.methods.emplace_back(method, std::move(result));
    }
    runs.push_back(std::move(ev));
  }
  const std::optional<std::string> reference =
      has(kReferenceMethod) ? std::optional<std::string>(kReferenceMethod) : std::nullopt;
  return aggregate_runs(runs, {}, reference);
}

std::string significance_stars(double p) {
  if (p <= 0.005) return "***";
  if (p <= 0.01) return "**";
  if (p <= 0.05) return "*";
  return "";
}

double improvement_percent(double ours, double best) {
  if (best == 0.0) return ours == 0.0 ? 0.0 : INFINITY;
  return 100.0 * (ours - best) / best;
}

std::string format_comparison(const EvalReport& report, const std::string& reference) {
  if (std::find(report.methods.begin(), report.methods.end(), reference) == report.methods.end()) {
    throw Error("report has no " + reference + " column");
  }
  if (report.methods.size() < 2) throw Error("report needs at least two methods");
  std::ostringstream out;
  out << "metric";
  for (const auto& m : report.methods) out << '\t' << m;
  out << "\tbest_other\tImprov.%\n";
  for (const Metric metric : {Metric::Precision, Metric::Ndcg}) {
    for (const auto n : report.cutoffs) {
      out << metric_name(metric) << '@' << n;
      const auto& ref = report.cell(reference, metric, n);
      const ReportCell* best = nullptr;
      for (const auto& m : report.methods) {
        const auto& cell = report.cell(m, metric, n);
        out << '\t' << fmt("%.4f", cell.mean);
        if (m == reference) {
          // Equal means carry no significance mark.
          if (ref.p_vs_best && !(ref.best_other && report.cell(*ref.best_other, metric, n).mean == ref.mean)) {
            out << significance_stars(*ref.p_vs_best);
          }
        } else if (!best || cell.mean > best->mean) {
          best = &cell;
        }
      }
      out << '\t' << best->method << '\t' << fmt("%.2f", improvement_percent(ref.mean, best->mean)) << "%\n";
    }
  }
  return out.str();
}

Checkpoint load_model_dir(const fs::path& dir, const std::string& fingerprint) {
  const auto manifest = read_manifest(dir / kManifestFile);
  const auto it = manifest.find("data_fingerprint");
  if (it == manifest.end()) throw Error("manifest has no data_fingerprint: " + (dir / kManifestFile).string());
  if (it->second != fingerprint) {
    throw Error("checkpoint " + dir.string() + " was trained on data " + it->second +
                " but the dataset fingerprint is " + fingerprint);
  }
  return read_checkpoint(dir / kModelFile);
}

int cmd_prepare(const RunConfig& config, std::ostream& out) {
  if (config.dataset.empty()) throw Error("no dataset given (--dataset or dataset=)");
  if (!fs::is_regular_file(config.dataset)) throw Error("no such file: " + config.dataset.string());
  const auto matrix = prepare_matrix(config.dataset, config.preprocess);
  fs::create_directories(config.out);
  write_matrix_snapshot(matrix, config.out);
  out << "users=" << matrix.num_users() << "\n"
      << "items=" << matrix.num_items() << "\n"
      << "positives=" << matrix.nnz() << "\n"
      << "sparsity=" << fmt("%.2f", 100.0 * matrix.sparsity()) << "%\n"
      << "fingerprint=" << data_fingerprint(matrix) << "\n";
  return 0;
}

int cmd_train(const RunConfig& config, std::ostream& out) {
  const auto matrix = load_dataset(config);
  const auto split = make_split(config, matrix);
  const auto trained = train_dre(matrix, split, config.train);
  fs::create_directories(config.out);
  write_checkpoint(trained.checkpoint, config.out / kModelFile);
  write_seed_file(trained.checkpoint.seeds, config.out / kSeedsFile);

  std::string history = "epoch\ttau\ttrain_loss\tval_ndcg20\n";
  for (const auto& h : trained.joint.history) {
    history += std::to_string(h.epoch) + "\t" + fmt("%.9g", h.tau) + "\t" + fmt("%.9g", h.train_loss) + "\t" +
               (h.val_ndcg ? fmt("%.9g", *h.val_ndcg) : std::string("-")) + "\n";
  }
  write_file(config.out / kHistoryFile, history);

  std::string items;
  for (std::size_t i = 0; i < matrix.num_items(); ++i) items += matrix.item_tokens()[i] + "\t" + std::to_string(i) + "\n";
  write_file(config.out / kItemsFile, items);

  std::string manifest = "format=elicit-model/1\n";
  manifest += "data_fingerprint=" + data_fingerprint(matrix) + "\n";
  manifest += "users=" + std::to_string(matrix.num_users()) + "\nitems=" + std::to_string(matrix.num_items()) +
              "\npositives=" + std::to_string(matrix.nnz()) + "\n";
  manifest += "best_epoch=" + std::to_string(trained.joint.best_epoch) + "\n";
  manifest += "best_val_ndcg20=" +
              (trained.joint.best_val_ndcg ? fmt("%.9g", *trained.joint.best_val_ndcg) : std::string("-")) + "\n";
  std::istringstream cfg(config_text(config));
  for (std::string line; std::getline(cfg, line);) manifest += "config." + line + "\n";
  write_file(config.out / kManifestFile, manifest);

  out << "seeds:";
  for (const auto s : trained.checkpoint.seeds.items) out << ' ' << matrix.item_tokens()[s];
  out << "\nbest_epoch=" << trained.joint.best_epoch << "\n";
  if (trained.joint.best_val_ndcg) out << "best_val_ndcg20=" << fmt("%.6f", *trained.joint.best_val_ndcg) << "\n";
  return 0;
}

int cmd_eval(const RunConfig& config, std::ostream& out, std::ostream& log) {
  check_methods(config);
  const auto matrix = load_dataset(config);
  const auto split = make_split(config, matrix);
  std::optional<Checkpoint> fixed;
  if (!config.checkpoint.empty()) fixed = load_model_dir(config.checkpoint, data_fingerprint(matrix));
  const auto report = run_evaluation(config, matrix, split, fixed, &log);
  fs::create_directories(config.out);
  write_report(report, config.out);
  out << format_report_table(report);
  return 0;
}

int cmd_grid(const RunConfig& config, std::ostream& out, std::ostream& log) {
  const auto or_scalar = [](auto axis, auto scalar) {
    return axis.empty() ? decltype(axis){scalar} : axis;
  };
  const auto ks = or_scalar(config.grid_k, config.train.k);
  const auto hiddens = or_scalar(config.grid_hidden, config.train.hidden);
  const auto lrs = or_scalar(config.grid_lr, config.train.lr);
  const auto epochs = or_scalar(config.grid_epochs, config.train.epochs);
  const auto t0s = or_scalar(config.grid_t0, config.train.t0);
  const auto tes = or_scalar(config.grid_te, fmt("%.17g", config.train.te));
  const std::size_t cells = ks.size() * hiddens.size() * lrs.size() * epochs.size() * t0s.size() * tes.size();
  if (cells > config.grid_max_cells) {
    log << "warning: grid has " << cells << " cells, above grid_max_cells=" << config.grid_max_cells
        << "; raise the cap to run it\n";
    return kExitGridBudget;
  }

  const auto matrix = load_dataset(config);
  const auto split = make_split(config, matrix);
  const std::array<std::size_t, 1> at20{20};

  struct Cell {
    TrainConfig cfg;
    std::string te_token;
    std::optional<double> val_p, val_ndcg, test_p, test_ndcg;
  };
  std::vector<Cell> results;
  for (const auto k : ks)
    for (const auto d : hiddens)
      for (const auto lr : lrs)
        for (const auto e : epochs)
          for (const auto t0 : t0s)
            for (const auto& te_token : tes) {
              Cell cell;
              cell.cfg = config.train;
              cell.cfg.k = k;
              cell.cfg.hidden = d;
              cell.cfg.lr = lr;
              cell.cfg.epochs = e;
              cell.cfg.t0 = t0;
              cell.cfg.te = te_token == "T0" ? t0 : std::stod(te_token);
              cell.te_token = te_token;
              if (cell.cfg.te <= cell.cfg.t0) {
                const auto trained = train_dre(matrix, split, cell.cfg);
                const auto predictor = neural_predictor(trained.checkpoint.decoder);
                const auto& seeds = trained.checkpoint.seeds;
                if (!split.val_users.empty()) {
                  const auto val = evaluate_method(predictor, matrix, split.val_users, seeds, at20);
                  cell.val_p = val.mean_precision(0);
                  cell.val_ndcg = val.mean_ndcg(0);
                }
                const auto test = evaluate_method(predictor, matrix, split.test_users, seeds, at20);
                cell.test_p = test.mean_precision(0);
                cell.test_ndcg = test.mean_ndcg(0);
              }
              log << "cell " << results.size() + 1 << "/" << cells << " k=" << k << " hidden=" << d
                  << " lr=" << lr << " epochs=" << e << " t0=" << t0 << " te=" << te_token << " val_ndcg20="
                  << (cell.val_ndcg ? fmt("%.4f", *cell.val_ndcg) : std::string("-")) << "\n";
              results.push_back(std::move(cell));
            }

  const auto opt = [](const std::optional<double>& v) { return v ? fmt("%.6f", *v) : std::string("-"); };
  std::string sweep = "k\thidden\tlr\tepochs\tt0\tte\tval_P@20\tval_NDCG@20\ttest_P@20\ttest_NDCG@20\n";
  const Cell* best = nullptr;
  for (const auto& c : results) {
    sweep += std::to_string(c.cfg.k) + "\t" + std::to_string(c.cfg.hidden) + "\t" + fmt("%g", c.cfg.lr) + "\t" +
             std::to_string(c.cfg.epochs) + "\t" + fmt("%g", c.cfg.t0) + "\t" + c.te_token + "\t" + opt(c.val_p) +
             "\t" + opt(c.val_ndcg) + "\t" + opt(c.test_p) + "\t" + opt(c.test_ndcg) + "\n";
    if (c.val_ndcg && (!best || *c.val_ndcg > *best->val_ndcg)) best = &c;
  }
  fs::create_directories(config.out);
  write_file(config.out / "sweep.tsv", sweep);
  out << sweep;

  if (best) {
    RunConfig chosen = config;
    chosen.train = best->cfg;
    write_file(config.out / "best.conf", config_text(chosen));
    out << "best: k=" << best->cfg.k << " hidden=" << best->cfg.hidden << " lr=" << fmt("%g", best->cfg.lr)
        << " epochs=" << best->cfg.epochs << " t0=" << fmt("%g", best->cfg.t0) << " te=" << best->te_token
        << " val_NDCG@20=" << fmt("%.6f", *best->val_ndcg) << "\n";
  }

  if (t0s.size() > 1 || tes.size() > 1) {
    // Temperature sub-table at the best cell's other settings, test P@20.
    const TrainConfig& anchor = best ? best->cfg : results.front().cfg;
    std::string table = "TE\\T0";
    for (const auto t0 : t0s) table += "\t" + fmt("%g", t0);
    table += "\n";
    for (const auto& te_token : tes) {
      table += te_token;
      for (const auto t0 : t0s) {
        const auto it = std::find_if(results.begin(), results.end(), [&](const Cell& c) {
          return c.cfg.k == anchor.k && c.cfg.hidden == anchor.hidden && c.cfg.lr == anchor.lr &&
                 c.cfg.epochs == anchor.epochs && c.cfg.t0 == t0 && c.te_token == te_token;
        });
        table += "\t" + (it != results.end() && it->test_p ? fmt("%.4f", *it->test_p) : std::string("-"));
      }
      table += "\n";
    }
    write_file(config.out / "temperature.tsv", table);
    out << "\ntest P@20 by temperature\n" << table;
  }
  return 0;
}

int cmd_recommend(const RunConfig& config, std::istream& in, std::ostream& out, std::ostream& prompt) {
  if (config.checkpoint.empty()) throw Error("no checkpoint directory given (--checkpoint)");
  const auto ck = read_checkpoint(config.checkpoint / kModelFile);
  const auto items = read_item_map(config.checkpoint / kItemsFile);
  if (items.size() != ck.decoder.m()) throw Error("item map does not match the checkpoint");
  const std::size_t k = ck.seeds.size();
  if (config.top_n == 0 || config.top_n > items.size() - k) {
    throw Error("top-n must be in [1, " + std::to_string(items.size() - k) + "]");
  }

  std::vector<float> feedback;
  if (config.interactive) {
    for (const auto seed : ck.seeds.items) {
      for (;;) {
        prompt << "Do you like " << items[seed] << "? [1/0] " << std::flush;
        std::string answer;
        if (!std::getline(in, answer)) throw Error("input ended before all seed items were answered");
        answer.erase(std::remove_if(answer.begin(), answer.end(), [](unsigned char c) { return std::isspace(c); }),
                     answer.end());
        if (answer == "1" || answer == "y" || answer == "yes") {
          feedback.push_back(1.0f);
          break;
        }
        if (answer == "0" || answer == "n" || answer == "no") {
          feedback.push_back(0.0f);
          break;
        }
        prompt << "please answer 1 (like) or 0 (dislike)\n";
      }
    }
  } else {
    if (config.feedback.empty()) throw Error("need --feedback <file> or --interactive");
    std::ifstream file(config.feedback);
    if (!file) throw Error("no such file: " + config.feedback.string());
    std::string token;
    std::size_t count = 0;
    while (file >> token) {
      ++count;
      if (token != "0" && token != "1") throw Error("feedback value " + std::to_string(count) + " is '" + token + "', expected 0 or 1");
      feedback.push_back(token == "1" ? 1.0f : 0.0f);
    }
    if (feedback.size() != k) {
      throw Error("feedback file has " + std::to_string(feedback.size()) + " values, expected " + std::to_string(k));
    }
  }
  for (const auto item : recommend(ck.decoder, ck.seeds, feedback, config.top_n)) out << items[item] << "\n";
  return 0;
}

int cmd_report(const std::vector<fs::path>& dumps, std::ostream& out) {
  if (dumps.empty()) throw Error("no report dumps given");
  for (std::size_t i = 0; i < dumps.size(); ++i) {
    if (dumps.size() > 1) out << (i ? "\n" : "") << "# " << dumps[i].string() << "\n";
    out << format_comparison(read_report(dumps[i]));
  }
  return 0;
}

}  // namespace elicit::cli
