// nobn: learn Bayesian networks mixing full-CPT and noisy-OR local models.
//
//   nobn scores   --data d.csv [--bf 20 | --epsilon e] [--max-parents k] [--threads t] --out s.scores
//   nobn learn    (--scores s.scores | --data d.csv) [--max-networks m] --out nets.json [--dot prefix]
//   nobn fit      --data d.csv --child Y --parents A,B
//   nobn generate --parent-size k --seed s --out truth.json
//   nobn sample   --network truth.json --num-samples N --seed s --out d.csv
//   nobn eval     --mode recovery|inference ...

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nobn/nobn.hpp"

namespace {

enum ExitCode : int { kOk = 0, kOther = 1, kUsage = 2, kParse = 3, kCapacity = 4, kInfeasible = 5 };

struct usage_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EpsilonFlags {
  std::optional<double> bf;
  std::optional<double> epsilon;

  double resolve() const {
    if (epsilon) {
      if (!(*epsilon >= 0.0)) throw usage_error("--epsilon must be >= 0");
      return *epsilon;
    }
    return nobn::epsilon_from_bayes_factor(bf.value_or(20.0));
  }
};

void add_epsilon_flags(CLI::App* cmd, EpsilonFlags& f) {
  auto* bf = cmd->add_option("--bf", f.bf, "Bayes factor; epsilon = ln(bf) (default 20)");
  auto* eps = cmd->add_option("--epsilon", f.epsilon, "score window epsilon");
  bf->excludes(eps);
  eps->excludes(bf);
}

void add_fit_flags(CLI::App* cmd, nobn::FitConfig& cfg) {
  cmd->add_option("--fit-threshold", cfg.threshold, "noisy-OR fit stopping threshold")->capture_default_str();
  cmd->add_option("--fit-max-iter", cfg.max_iter, "noisy-OR fit iteration cap")->capture_default_str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw nobn::io_error("cannot write " + path);
  out << text;
  if (!out) throw nobn::io_error("write failed: " + path);
}

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    while (!item.empty() && std::isspace(static_cast<unsigned char>(item.back()))) item.pop_back();
    std::size_t b = 0;
    while (b < item.size() && std::isspace(static_cast<unsigned char>(item[b]))) ++b;
    item.erase(0, b);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void print_prune_report(const nobn::ScoringResult& r) {
  std::printf("%-16s %6s | %8s %7s %7s %7s | %8s %7s %7s %7s %7s %7s | %6s %7s\n", "variable", "", "T-cand",
              "scored", "subset", "penalty", "N-cand", "scored", "subset", "penalty", "null", "infeas", "merge",
              "entries");
  std::size_t total = 0;
  for (std::size_t v = 0; v < r.reports.size(); ++v) {
    const auto& n = r.reports[v];
    std::printf("%-16s %6s | %8.0f %7zu %7zu %7zu | %8.0f %7zu %7zu %7zu %7zu %7zu | %6zu %7zu\n",
                r.table.names[v].c_str(), "", n.cpt.candidates, n.cpt.scored, n.cpt.subset_pruned, n.cpt.penalty_cut,
                n.noisy_or.candidates, n.noisy_or.scored, n.noisy_or.subset_pruned, n.noisy_or.penalty_cut,
                n.noisy_or.null_cut, n.noisy_or.infeasible, n.merge_pruned, n.entries);
    total += n.entries;
  }
  std::printf("retained entries: %zu\n", total);
}

// ---------------------------------------------------------------------------

struct ScoresArgs {
  std::string data, out;
  EpsilonFlags eps;
  std::optional<int> max_parents;
  int threads = 1;
  nobn::FitConfig fit;
};

nobn::ScoringOptions scoring_options(const EpsilonFlags& eps, std::optional<int> max_parents, int threads,
                                     const nobn::FitConfig& fit) {
  if (threads < 1) throw usage_error("--threads must be >= 1");
  if (max_parents && *max_parents < 0) throw usage_error("--max-parents must be >= 0");
  nobn::ScoringOptions opt;
  opt.epsilon = eps.resolve();
  opt.fit = fit;
  opt.max_parents = max_parents;
  opt.threads = threads;
  return opt;
}

int run_scores(const ScoresArgs& a) {
  const auto opt = scoring_options(a.eps, a.max_parents, a.threads, a.fit);
  const auto data = nobn::load_csv(a.data);
  const auto result = nobn::build_score_table(data, opt);
  std::ostringstream text;
  nobn::write_score_file(text, result.table);
  write_text(a.out, text.str());
  std::printf("variables: %d  instances: %zu  epsilon: %s\n", data.n(), data.N(), fixed(opt.epsilon).c_str());
  print_prune_report(result);
  std::printf("wrote %s\n", a.out.c_str());
  return kOk;
}

struct LearnArgs {
  std::string scores, data, out, dot, write_scores;
  EpsilonFlags eps;
  std::optional<int> max_parents;
  int threads = 1;
  std::size_t max_networks = nobn::kDefaultMaxNetworks;
  nobn::FitConfig fit;
};

int run_learn(const LearnArgs& a) {
  if (a.scores.empty() == a.data.empty()) throw usage_error("learn needs exactly one of --scores or --data");
  const auto opt = scoring_options(a.eps, a.max_parents, a.threads, a.fit);
  nobn::ScoreTable table;
  if (!a.scores.empty()) {
    table = nobn::load_score_file(a.scores);
  } else {
    const auto data = nobn::load_csv(a.data);
    table = nobn::build_score_table(data, opt).table;
  }
  if (!a.write_scores.empty()) {
    std::ostringstream text;
    nobn::write_score_file(text, table);
    write_text(a.write_scores, text.str());
  }
  const auto cs = nobn::enumerate_credible(table, opt.epsilon, a.max_networks);
  std::printf("OPT: %s\nepsilon: %s\nnetworks: %zu\ntruncated: %s\n", fixed(cs.opt).c_str(),
              fixed(cs.epsilon).c_str(), cs.networks.size(), cs.truncated ? "yes" : "no");
  for (std::size_t i = 0; i < cs.networks.size() && i < 5; ++i) {
    const auto& net = cs.networks[i];
    std::printf("  #%zu score %s  noisy-OR nodes %d:", i + 1, fixed(net.total_score()).c_str(), net.noisy_or_count());
    for (int v = 0; v < net.n(); ++v) {
      const auto& node = net.node(v);
      if (node.parents.empty()) continue;
      std::printf(" %s%s<-{", net.names()[v].c_str(), node.rep.is_noisy_or() ? "[N]" : "[T]");
      bool first = true;
      for (int p : node.parents.members()) {
        std::printf("%s%s", first ? "" : ",", net.names()[p].c_str());
        first = false;
      }
      std::printf("}");
    }
    std::printf("\n");
  }
  if (!a.out.empty()) write_text(a.out, nobn::credible_set_to_json(cs).dump(2) + "\n");
  if (!a.dot.empty())
    for (std::size_t i = 0; i < cs.networks.size(); ++i)
      write_text(a.dot + "_" + std::to_string(i + 1) + ".dot",
                 nobn::network_to_dot(cs.networks[i], "network " + std::to_string(i + 1)));
  return kOk;
}

struct FitArgs {
  std::string data, child, parents;
  nobn::FitConfig fit;
};

int run_fit(const FitArgs& a) {
  const auto names = split_list(a.parents);
  if (names.empty()) throw usage_error("--parents must list at least one variable (noisy-OR needs a parent)");
  const auto data = nobn::load_csv(a.data);
  const int child = data.index_of(a.child);
  std::vector<int> members;
  for (const auto& p : names) members.push_back(data.index_of(p));
  const auto parents = nobn::ParentSet::from_members(members);
  if (parents.size() != static_cast<int>(members.size())) throw usage_error("--parents lists a variable twice");
  if (parents.contains(child)) throw usage_error("--child cannot be one of its own parents");

  const auto cv = nobn::counts(data, child, parents);
  const auto full = nobn::bic_full(data, child, parents);
  std::printf("candidate: %s <- {", a.child.c_str());
  bool first = true;
  for (int p : parents.members()) {
    std::printf("%s%s", first ? "" : ",", data.names()[p].c_str());
    first = false;
  }
  std::printf("}\nBIC full CPT: %s\n", fixed(full.score).c_str());
  if (nobn::noisyor_infeasible(cv)) {
    std::fprintf(stderr,
                 "infeasible noisy-OR candidate: %lld instance(s) have %s=1 while every listed parent is 0; "
                 "a noisy-OR without a leak assigns that event probability 0\n",
                 static_cast<long long>(cv.n_jk[0][1]), a.child.c_str());
    return kInfeasible;
  }
  const auto init = nobn::hot_start(nobn::HotStartCache{}, parents, a.fit);
  const auto res = nobn::fit_noisyor(cv, init, a.fit);
  const double score = res.objective + nobn::penalty_noisyor(parents, data.N());
  std::printf("fitted q:");
  const auto ordered = parents.members();
  for (std::size_t i = 0; i < ordered.size(); ++i)
    std::printf(" %s=%s", data.names()[ordered[i]].c_str(), fixed(res.params.q[i]).c_str());
  std::printf("\nobjective: %s\niterations: %d\nBIC noisy-OR: %s\n", fixed(res.objective).c_str(), res.iterations,
              fixed(score).c_str());
  return kOk;
}

struct GenerateArgs {
  int parent_size = 4;
  std::uint64_t seed = 1;
  std::string out;
};

int run_generate(const GenerateArgs& a) {
  if (a.parent_size < 1) throw usage_error("--parent-size must be >= 1");
  const auto gt = nobn::gen_single_noisyor(a.parent_size, a.seed);
  write_text(a.out, nobn::network_to_json(gt.network).dump(2) + "\n");
  std::printf("true q:");
  for (double q : gt.true_q.q) std::printf(" %s", fixed(q, 2).c_str());
  std::printf("\nwrote %s\n", a.out.c_str());
  return kOk;
}

struct SampleArgs {
  std::string network, out;
  std::size_t samples = 1000;
  std::uint64_t seed = 1;
};

int run_sample(const SampleArgs& a) {
  if (a.samples < 1) throw usage_error("--num-samples must be >= 1");
  const auto net = nobn::load_network(a.network);
  const auto data = nobn::forward_sample(net, a.samples, a.seed);
  std::ostringstream text;
  nobn::write_csv(text, data);
  write_text(a.out, text.str());
  std::printf("wrote %zu rows over %d variables to %s\n", data.N(), data.n(), a.out.c_str());
  return kOk;
}

struct EvalArgs {
  std::string mode = "recovery";
  std::string parent_sizes = "2,3,4";
  std::string sample_sizes = "1000";
  int trials = 30;
  std::uint64_t seed = 1;
  std::string network, out;
  EpsilonFlags eps;
  std::optional<int> max_parents;
  int threads = 1;
  std::size_t max_networks = nobn::kDefaultMaxNetworks;
  nobn::FitConfig fit;
};

template <class T>
std::vector<T> parse_numbers(const std::string& flag, const std::string& s) {
  std::vector<T> out;
  for (const auto& item : split_list(s)) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      if (used != item.size() || v < 1) throw std::invalid_argument(item);
      out.push_back(static_cast<T>(v));
    } catch (const std::exception&) {
      throw usage_error(flag + " expects a comma list of positive integers, got '" + item + "'");
    }
  }
  if (out.empty()) throw usage_error(flag + " is empty");
  return out;
}

int run_eval(const EvalArgs& a) {
  if (a.trials < 1) throw usage_error("--trials must be >= 1");
  const auto Ns = parse_numbers<std::size_t>("--num-samples", a.sample_sizes);
  nobn::json report;
  if (a.mode == "recovery") {
    const auto sizes = parse_numbers<int>("--parent-size", a.parent_sizes);
    const auto cells = nobn::recovery_experiment(sizes, Ns, a.trials, a.seed, a.fit);
    std::printf("%-12s %8s %8s %24s %16s\n", "parent size", "N", "trials", "median relative error", "median KL");
    for (const auto& c : cells)
      std::printf("%-12d %8zu %8zu %24s %16s\n", c.parent_count, c.samples, c.trials.size(),
                  fixed(c.median_relative_error, 4).c_str(), fixed(c.median_kl, 4).c_str());
    report = {{"mode", "recovery"}, {"seed", a.seed}, {"trials", a.trials}, {"cells", nobn::recovery_to_json(cells)}};
  } else if (a.mode == "inference") {
    if (a.network.empty()) throw usage_error("--mode inference needs --network <ground truth JSON>");
    const auto truth = nobn::load_network(a.network);
    const auto opt = scoring_options(a.eps, a.max_parents, a.threads, a.fit);
    nobn::json cells = nobn::json::array();
    std::printf("%8s %10s %10s %8s | %-28s | %-28s | %-28s\n", "N", "OPT", "CPT OPT", "nets",
                "best: med abs / med rel", "worst: med abs / med rel", "CPT only: med abs / med rel");
    for (std::size_t N : Ns) {
      const auto c = nobn::inference_experiment(truth, N, a.trials, a.seed, opt, a.max_networks);
      auto pair = [](const nobn::InferenceErrors& e) {
        return fixed(e.median_absolute, 4) + " / " + fixed(e.median_relative, 4);
      };
      std::printf("%8zu %10s %10s %7zu%s | %-28s | %-28s | %-28s\n", c.samples, fixed(c.opt, 2).c_str(),
                  fixed(c.cpt_only_opt, 2).c_str(), c.credible_count, c.truncated ? "+" : " ", pair(c.best).c_str(),
                  pair(c.worst).c_str(), pair(c.cpt_only).c_str());
      cells.push_back(nobn::inference_cell_to_json(c));
    }
    report = {{"mode", "inference"}, {"seed", a.seed},          {"trials", a.trials},
              {"epsilon", opt.epsilon}, {"network", a.network}, {"cells", cells}};
  } else {
    throw usage_error("--mode must be recovery or inference");
  }
  if (!a.out.empty()) write_text(a.out, report.dump(2) + "\n");
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact Bayesian network structure learning with full-CPT and noisy-OR local models"};
  app.require_subcommand(1);

  ScoresArgs scores;
  auto* c_scores = app.add_subcommand("scores", "score and prune candidate parent sets, write a score file");
  c_scores->add_option("--data", scores.data, "binary CSV with a header row")->required();
  c_scores->add_option("--out", scores.out, "score file to write")->required();
  add_epsilon_flags(c_scores, scores.eps);
  c_scores->add_option("--max-parents", scores.max_parents, "cap on parent set size");
  c_scores->add_option("--threads", scores.threads, "worker threads")->capture_default_str();
  add_fit_flags(c_scores, scores.fit);

  LearnArgs learn;
  auto* c_learn = app.add_subcommand("learn", "enumerate the credible set of networks");
  auto* l_scores = c_learn->add_option("--scores", learn.scores, "score file from 'scores'");
  auto* l_data = c_learn->add_option("--data", learn.data, "binary CSV (scored first)");
  l_scores->excludes(l_data);
  c_learn->add_option("--out", learn.out, "credible set JSON");
  c_learn->add_option("--dot", learn.dot, "write <prefix>_<i>.dot per network");
  c_learn->add_option("--write-scores", learn.write_scores, "rewrite the score table used");
  c_learn->add_option("--max-networks", learn.max_networks, "cap on networks (0 = unbounded)")->capture_default_str();
  add_epsilon_flags(c_learn, learn.eps);
  c_learn->add_option("--max-parents", learn.max_parents, "cap on parent set size (with --data)");
  c_learn->add_option("--threads", learn.threads, "worker threads")->capture_default_str();
  add_fit_flags(c_learn, learn.fit);

  FitArgs fit;
  auto* c_fit = app.add_subcommand("fit", "fit one noisy-OR candidate and report both BIC scores");
  c_fit->add_option("--data", fit.data, "binary CSV")->required();
  c_fit->add_option("--child", fit.child, "child variable")->required();
  c_fit->add_option("--parents", fit.parents, "comma-separated parent names")->required();
  add_fit_flags(c_fit, fit.fit);

  GenerateArgs gen;
  auto* c_gen = app.add_subcommand("generate", "write a single noisy-OR ground truth network");
  c_gen->add_option("--parent-size", gen.parent_size, "number of root causes")->capture_default_str();
  c_gen->add_option("--seed", gen.seed, "RNG seed")->capture_default_str();
  c_gen->add_option("--out", gen.out, "network JSON")->required();

  SampleArgs sample;
  auto* c_sample = app.add_subcommand("sample", "forward-sample a network to CSV");
  c_sample->add_option("--network", sample.network, "network JSON")->required();
  c_sample->add_option("--num-samples", sample.samples, "rows")->capture_default_str();
  c_sample->add_option("--seed", sample.seed, "RNG seed")->capture_default_str();
  c_sample->add_option("--out", sample.out, "CSV to write")->required();

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "parameter recovery or inference error experiments");
  c_eval->add_option("--mode", ev.mode, "recovery | inference")->capture_default_str();
  c_eval->add_option("--parent-size", ev.parent_sizes, "comma list of parent sizes (recovery)")->capture_default_str();
  c_eval->add_option("--num-samples", ev.sample_sizes, "comma list of sample sizes")->capture_default_str();
  c_eval->add_option("--trials", ev.trials, "trials per cell")->capture_default_str();
  c_eval->add_option("--seed", ev.seed, "RNG seed")->capture_default_str();
  c_eval->add_option("--network", ev.network, "ground truth network JSON (inference)");
  c_eval->add_option("--out", ev.out, "JSON report");
  add_epsilon_flags(c_eval, ev.eps);
  c_eval->add_option("--max-parents", ev.max_parents, "cap on parent set size (inference)");
  c_eval->add_option("--threads", ev.threads, "worker threads")->capture_default_str();
  c_eval->add_option("--max-networks", ev.max_networks, "cap on credible networks")->capture_default_str();
  add_fit_flags(c_eval, ev.fit);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*c_scores) return run_scores(scores);
    if (*c_learn) return run_learn(learn);
    if (*c_fit) return run_fit(fit);
    if (*c_gen) return run_generate(gen);
    if (*c_sample) return run_sample(sample);
    if (*c_eval) return run_eval(ev);
  } catch (const usage_error& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kUsage;
  } catch (const nobn::parse_error& e) {
    std::fprintf(stderr, "parse error: %s\n", e.what());
    return kParse;
  } catch (const nobn::io_error& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return kParse;
  } catch (const nobn::capacity_error& e) {
    std::fprintf(stderr, "capacity error: %s\n", e.what());
    return kCapacity;
  } catch (const nobn::infeasible_candidate& e) {
    std::fprintf(stderr, "infeasible: %s\n", e.what());
    return kInfeasible;
  } catch (const nobn::invalid_argument& e) {
    std::fprintf(stderr, "invalid argument: %s\n", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kOther;
  }
  return kOther;
}
