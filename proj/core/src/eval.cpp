#include "elicit/eval.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>
#include <stdexcept>

namespace elicit {
namespace {

bool is_relevant(std::span<const ItemIndex> relevant, ItemIndex item) {
  return std::binary_search(relevant.begin(), relevant.end(), item);
}

void check_cutoff(std::span<const ItemIndex> ranking, std::size_t n) {
  if (n == 0) throw Error("cutoff must be positive");
  if (n > ranking.size()) {
    throw Error("cutoff " + std::to_string(n) + " exceeds ranking length " +
                std::to_string(ranking.size()));
  }
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mu = mean_of(v);
  double ss = 0.0;
  for (const double x : v) ss += (x - mu) * (x - mu);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

const std::vector<double>& metric_values(const UserMetrics& u, Metric metric) {
  return metric == Metric::Precision ? u.precision : u.ndcg;
}

// Per-user scores of two methods on the users both evaluated.
std::pair<std::vector<double>, std::vector<double>> align(const MethodEvaluation& a,
                                                          const MethodEvaluation& b, Metric metric,
                                                          std::size_t cutoff_pos) {
  std::pair<std::vector<double>, std::vector<double>> out;
  std::size_t i = 0, j = 0;
  while (i < a.users.size() && j < b.users.size()) {
    if (a.users[i].user < b.users[j].user) {
      ++i;
    } else if (b.users[j].user < a.users[i].user) {
      ++j;
    } else {
      out.first.push_back(metric_values(a.users[i], metric)[cutoff_pos]);
      out.second.push_back(metric_values(b.users[j], metric)[cutoff_pos]);
      ++i;
      ++j;
    }
  }
  return out;
}

const MethodEvaluation& find_method(const RunEvaluation& run, const std::string& name) {
  for (const auto& [method, eval] : run.methods) {
    if (method == name) return eval;
  }
  throw Error("run is missing method '" + name + "'");
}

Metric parse_metric(const std::string& name) {
  if (name == "P") return Metric::Precision;
  if (name == "NDCG") return Metric::Ndcg;
  throw Error("unknown metric '" + name + "'");
}

}  // namespace

double precision_at(std::span<const ItemIndex> ranking, std::span<const ItemIndex> relevant,
                    std::size_t n) {
  check_cutoff(ranking, n);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) hits += is_relevant(relevant, ranking[i]) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(n);
}

double ndcg_at(std::span<const ItemIndex> ranking, std::span<const ItemIndex> relevant,
               std::size_t n) {
  check_cutoff(ranking, n);
  if (relevant.empty()) throw Error("NDCG is undefined for an empty ground-truth set");
  double dcg = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (is_relevant(relevant, ranking[i])) dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  }
  double idcg = 0.0;
  for (std::size_t i = 0; i < std::min(n, relevant.size()); ++i) {
    idcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  }
  return dcg / idcg;
}

double MethodEvaluation::mean_precision(std::size_t cutoff_pos) const {
  double sum = 0.0;
  for (const auto& u : users) sum += u.precision.at(cutoff_pos);
  return users.empty() ? 0.0 : sum / static_cast<double>(users.size());
}

double MethodEvaluation::mean_ndcg(std::size_t cutoff_pos) const {
  double sum = 0.0;
  for (const auto& u : users) sum += u.ndcg.at(cutoff_pos);
  return users.empty() ? 0.0 : sum / static_cast<double>(users.size());
}

MethodEvaluation evaluate_method(const Predictor& predictor, const RatingMatrix& matrix,
                                 std::span<const UserIndex> users, const SeedItemset& seeds,
                                 std::span<const std::size_t> cutoffs) {
  if (users.empty()) throw DegenerateDataError("no users to evaluate");
  if (cutoffs.empty()) throw Error("no cutoffs requested");
  validate_seeds(seeds, matrix.num_items());
  const std::size_t max_n = *std::max_element(cutoffs.begin(), cutoffs.end());

  MethodEvaluation result;
  result.cutoffs.assign(cutoffs.begin(), cutoffs.end());
  std::vector<UserIndex> ordered(users.begin(), users.end());
  std::sort(ordered.begin(), ordered.end());

  std::vector<float> feedback(seeds.size());
  std::vector<ItemIndex> truth;
  for (const auto u : ordered) {
    const auto& row = matrix.row(u);
    truth.clear();
    for (const auto item : row) {
      if (!seeds.contains(item)) truth.push_back(item);
    }
    if (truth.empty()) {
      ++result.skipped;
      continue;
    }
    for (std::size_t j = 0; j < seeds.size(); ++j) {
      feedback[j] = std::binary_search(row.begin(), row.end(), seeds.items[j]) ? 1.0f : 0.0f;
    }
    const auto scores = predictor(feedback);
    if (scores.size() != matrix.num_items()) {
      throw Error("predictor returned " + std::to_string(scores.size()) + " scores, expected " +
                  std::to_string(matrix.num_items()));
    }
    const auto ranking = top_n(std::span<const double>(scores), seeds, max_n);
    for (const auto item : ranking) {
      if (seeds.contains(item)) throw std::logic_error("seed item leaked into a ranking");
    }

    UserMetrics metrics;
    metrics.user = u;
    for (const auto n : cutoffs) {
      metrics.precision.push_back(precision_at(ranking, truth, n));
      metrics.ndcg.push_back(ndcg_at(ranking, truth, n));
    }
    result.users.push_back(std::move(metrics));
  }
  if (result.users.empty()) {
    throw DegenerateDataError("every evaluated user had an empty ground-truth set");
  }
  return result;
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error("paired t-test needs samples of equal length");
  if (a.size() < 2) throw Error("paired t-test needs at least two pairs");
  const std::size_t n = a.size();
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i] - mean;
    ss += d * d;
  }
  const double var = ss / static_cast<double>(n - 1);

  TTestResult result;
  result.n = n;
  if (!(var > 0.0)) {
    result.t = mean == 0.0 ? 0.0 : std::copysign(INFINITY, mean);
    result.p = mean == 0.0 ? 1.0 : 0.0;
    return result;
  }
  result.t = mean / std::sqrt(var / static_cast<double>(n));
  const boost::math::students_t dist(static_cast<double>(n - 1));
  result.p = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(result.t))));
  return result;
}

std::string_view metric_name(Metric metric) noexcept {
  return metric == Metric::Precision ? "P" : "NDCG";
}

const ReportCell& EvalReport::cell(const std::string& method, Metric metric,
                                   std::size_t cutoff) const {
  for (const auto& c : cells) {
    if (c.method == method && c.metric == metric && c.cutoff == cutoff) return c;
  }
  throw Error("report has no cell " + method + " " + std::string(metric_name(metric)) + "@" +
              std::to_string(cutoff));
}

EvalReport aggregate_runs(std::span<const RunEvaluation> runs,
                          std::span<const std::pair<std::string, std::string>> pairings,
                          std::optional<std::string> reference) {
  if (runs.empty()) throw Error("aggregate_runs needs at least one run");
  EvalReport report;
  for (const auto& [name, eval] : runs.front().methods) report.methods.push_back(name);
  if (report.methods.empty()) throw Error("run contains no methods");
  report.cutoffs = runs.front().methods.front().second.cutoffs;

  for (const auto& run : runs) {
    if (run.methods.size() != report.methods.size()) {
      throw Error("runs evaluate different method sets");
    }
    for (const auto& name : report.methods) {
      if (find_method(run, name).cutoffs != report.cutoffs) throw Error("runs use different cutoffs");
    }
    report.run_seeds.push_back(run.seed);
  }
  if (reference && std::find(report.methods.begin(), report.methods.end(), *reference) ==
                       report.methods.end()) {
    reference.reset();
  }
  report.reference = reference;

  for (const auto& name : report.methods) {
    std::vector<std::size_t> skipped;
    for (const auto& run : runs) skipped.push_back(find_method(run, name).skipped);
    report.skipped.emplace_back(name, std::move(skipped));
  }

  for (const auto& name : report.methods) {
    for (const Metric metric : {Metric::Precision, Metric::Ndcg}) {
      for (std::size_t c = 0; c < report.cutoffs.size(); ++c) {
        ReportCell cell;
        cell.method = name;
        cell.metric = metric;
        cell.cutoff = report.cutoffs[c];
        for (const auto& run : runs) {
          const auto& eval = find_method(run, name);
          cell.run_means.push_back(metric == Metric::Precision ? eval.mean_precision(c)
                                                               : eval.mean_ndcg(c));
        }
        cell.mean = mean_of(cell.run_means);
        cell.std = sample_std(cell.run_means);
        report.cells.push_back(std::move(cell));
      }
    }
  }

  std::vector<std::pair<std::string, std::string>> pairs(pairings.begin(), pairings.end());
  if (reference) {
    for (const auto& name : report.methods) {
      if (name != *reference) pairs.emplace_back(*reference, name);
    }
  }
  std::vector<std::pair<std::string, std::string>> unique_pairs;
  for (const auto& p : pairs) {
    if (p.first == p.second) continue;
    if (std::find(unique_pairs.begin(), unique_pairs.end(), p) == unique_pairs.end()) {
      unique_pairs.push_back(p);
    }
  }

  for (const auto& [a, b] : unique_pairs) {
    for (const Metric metric : {Metric::Precision, Metric::Ndcg}) {
      for (std::size_t c = 0; c < report.cutoffs.size(); ++c) {
        PairedComparison cmp;
        cmp.a = a;
        cmp.b = b;
        cmp.metric = metric;
        cmp.cutoff = report.cutoffs[c];
        std::vector<double> pooled_a, pooled_b;
        for (const auto& run : runs) {
          auto [xa, xb] = align(find_method(run, a), find_method(run, b), metric, c);
          cmp.per_run.push_back(paired_t_test(xa, xb));
          pooled_a.insert(pooled_a.end(), xa.begin(), xa.end());
          pooled_b.insert(pooled_b.end(), xb.begin(), xb.end());
        }
        cmp.pooled = paired_t_test(pooled_a, pooled_b);
        report.comparisons.push_back(std::move(cmp));
      }
    }
  }

  if (reference && report.methods.size() > 1) {
    for (auto& cell : report.cells) {
      if (cell.method != *reference) continue;
      const ReportCell* best = nullptr;
      for (const auto& other : report.cells) {
        if (other.method == *reference || other.metric != cell.metric || other.cutoff != cell.cutoff) {
          continue;
        }
        if (!best || other.mean > best->mean) best = &other;
      }
      for (const auto& cmp : report.comparisons) {
        if (cmp.a == *reference && cmp.b == best->method && cmp.metric == cell.metric &&
            cmp.cutoff == cell.cutoff) {
          cell.p_vs_best = cmp.pooled.p;
          cell.best_other = best->method;
        }
      }
    }
  }
  return report;
}

std::string format_report_table(const EvalReport& report) {
  std::string out = "method\tmetric\tN\tmean\tstd\tp_vs_best\n";
  char buf[256];
  for (const auto& c : report.cells) {
    std::string p = "-";
    if (c.p_vs_best) {
      std::snprintf(buf, sizeof buf, "%.6g", *c.p_vs_best);
      p = buf;
    }
    std::snprintf(buf, sizeof buf, "%s\t%s\t%zu\t%.6f\t%.6f\t", c.method.c_str(),
                  std::string(metric_name(c.metric)).c_str(), c.cutoff, c.mean, c.std);
    out += buf;
    out += p;
    out += '\n';
  }
  return out;
}

namespace {

nlohmann::json ttest_json(const TTestResult& t) {
  // JSON has no infinity; clamp for the dump.
  const double tv = std::isfinite(t.t) ? t.t : std::copysign(1e308, t.t);
  return {{"t", tv}, {"p", t.p}, {"n", t.n}};
}

TTestResult ttest_from(const nlohmann::json& j) {
  return {j.at("t").get<double>(), j.at("p").get<double>(), j.at("n").get<std::size_t>()};
}

}  // namespace

std::string report_to_json(const EvalReport& report) {
  nlohmann::json j;
  j["format"] = "elicit-eval-report/1";
  j["methods"] = report.methods;
  j["cutoffs"] = report.cutoffs;
  j["run_seeds"] = report.run_seeds;
  j["reference"] = report.reference ? nlohmann::json(*report.reference) : nlohmann::json(nullptr);
  auto& cells = j["cells"] = nlohmann::json::array();
  for (const auto& c : report.cells) {
    nlohmann::json cj{{"method", c.method},
                      {"metric", metric_name(c.metric)},
                      {"N", c.cutoff},
                      {"mean", c.mean},
                      {"std", c.std},
                      {"run_means", c.run_means}};
    cj["p_vs_best"] = c.p_vs_best ? nlohmann::json(*c.p_vs_best) : nlohmann::json(nullptr);
    cj["best_other"] = c.best_other ? nlohmann::json(*c.best_other) : nlohmann::json(nullptr);
    cells.push_back(std::move(cj));
  }
  auto& comps = j["comparisons"] = nlohmann::json::array();
  for (const auto& c : report.comparisons) {
    nlohmann::json per_run = nlohmann::json::array();
    for (const auto& t : c.per_run) per_run.push_back(ttest_json(t));
    comps.push_back({{"a", c.a},
                     {"b", c.b},
                     {"metric", metric_name(c.metric)},
                     {"N", c.cutoff},
                     {"per_run", per_run},
                     {"pooled", ttest_json(c.pooled)}});
  }
  auto& skipped = j["skipped_users"] = nlohmann::json::object();
  for (const auto& [name, counts] : report.skipped) skipped[name] = counts;
  return j.dump(2) + "\n";
}

EvalReport report_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed report JSON: ") + e.what());
  }
  try {
    if (j.value("format", "") != "elicit-eval-report/1") throw Error("not an elicit eval report");
    EvalReport r;
    r.methods = j.at("methods").get<std::vector<std::string>>();
    r.cutoffs = j.at("cutoffs").get<std::vector<std::size_t>>();
    r.run_seeds = j.at("run_seeds").get<std::vector<std::uint64_t>>();
    if (!j.at("reference").is_null()) r.reference = j.at("reference").get<std::string>();
    for (const auto& cj : j.at("cells")) {
      ReportCell c;
      c.method = cj.at("method").get<std::string>();
      c.metric = parse_metric(cj.at("metric").get<std::string>());
      c.cutoff = cj.at("N").get<std::size_t>();
      c.mean = cj.at("mean").get<double>();
      c.std = cj.at("std").get<double>();
      c.run_means = cj.at("run_means").get<std::vector<double>>();
      if (!cj.at("p_vs_best").is_null()) c.p_vs_best = cj.at("p_vs_best").get<double>();
      if (!cj.at("best_other").is_null()) c.best_other = cj.at("best_other").get<std::string>();
      r.cells.push_back(std::move(c));
    }
    for (const auto& cj : j.at("comparisons")) {
      PairedComparison c;
      c.a = cj.at("a").get<std::string>();
      c.b = cj.at("b").get<std::string>();
      c.metric = parse_metric(cj.at("metric").get<std::string>());
      c.cutoff = cj.at("N").get<std::size_t>();
      for (const auto& t : cj.at("per_run")) c.per_run.push_back(ttest_from(t));
      c.pooled = ttest_from(cj.at("pooled"));
      r.comparisons.push_back(std::move(c));
    }
    for (const auto& [name, counts] : j.at("skipped_users").items()) {
      r.skipped.emplace_back(name, counts.get<std::vector<std::size_t>>());
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("incomplete report JSON: ") + e.what());
  }
}

void write_report(const EvalReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto write = [](const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out) throw Error("write failure on " + path.string());
  };
  write(dir / "report.tsv", format_report_table(report));
  write(dir / "report.json", report_to_json(report));
}

EvalReport read_report(const std::filesystem::path& json_path) {
  std::ifstream in(json_path, std::ios::binary);
  if (!in) throw Error("cannot open report " + json_path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return report_from_json(buf.str());
}

}  // namespace elicit
