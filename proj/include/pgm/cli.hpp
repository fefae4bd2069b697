#pragma once

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pgm/common.hpp"
#include "pgm/data.hpp"
#include "pgm/ggm.hpp"
#include "pgm/graph.hpp"
#include "pgm/infer.hpp"
#include "pgm/learn.hpp"
#include "pgm/model_io.hpp"
#include "pgm/params.hpp"
#include "pgm/validate.hpp"

namespace pgm::cli {

namespace detail {

inline Dataset read_dataset(const std::string& path, const std::string& schema_path) {
  std::optional<Schema> schema;
  if (!schema_path.empty()) {
    std::ifstream sin(schema_path);
    if (!sin) throw IngestError("cannot read schema file '" + schema_path + "'");
    schema = Schema::parse(sin);
  }
  std::ifstream in(path);
  if (!in) throw IngestError("cannot read data file '" + path + "'");
  return load_dataset(in, schema);
}

inline BayesianNetwork read_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot read model file '" + path + "'");
  return load_model(in);
}

inline void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestError("cannot write file '" + path + "'");
  out << bytes;
}

inline std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(tok);
  return out;
}

inline Algo parse_algo(const std::string& s) {
  if (s == "gs") return Algo::gs;
  if (s == "hc") return Algo::hc;
  if (s == "hybrid") return Algo::hybrid;
  throw ArgumentError("unknown algorithm '" + s + "'");
}

inline CiKind parse_test(const std::string& s) {
  if (s == "g2") return CiKind::g2;
  if (s == "chi2") return CiKind::chi2;
  if (s == "zf") return CiKind::zf;
  throw ArgumentError("unknown test '" + s + "'");
}

inline ScoreKind parse_score(const std::string& s) {
  if (s == "loglik") return ScoreKind::loglik;
  if (s == "aic") return ScoreKind::aic;
  if (s == "bic" || s == "mdl") return ScoreKind::bic;  // mdl treated as bic
  if (s == "bdeu") return ScoreKind::bdeu;
  throw ArgumentError("unknown score '" + s + "'");
}

inline Evidence parse_evidence(const std::string& hard_text,
                               const std::vector<std::string>& soft_specs) {
  Evidence ev;
  if (!hard_text.empty()) {
    for (const auto& item : split_list(hard_text)) {
      const auto eq = item.find('=');
      if (eq == std::string::npos || eq == 0 || eq + 1 >= item.size())
        throw ArgumentError("evidence item '" + item + "' is not name=level");
      ev.hard[item.substr(0, eq)] = item.substr(eq + 1);
    }
  }
  for (const auto& spec : soft_specs) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 >= spec.size())
      throw ArgumentError("soft evidence '" + spec + "' is not name=p1,p2,...");
    std::vector<double> probs;
    for (const auto& tok : split_list(spec.substr(eq + 1))) {
      try {
        probs.push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw ArgumentError("soft evidence '" + spec + "': bad number '" + tok + "'");
      }
    }
    ev.soft[spec.substr(0, eq)] = std::move(probs);
  }
  return ev;
}

// Learner flags shared by learn-bn, bootstrap and cv.
struct LearnerFlags {
  std::string algo = "hc";
  std::string test = "g2";
  std::string score = "bic";
  double alpha = 0.05;
  double iss = 1.0;
  int restarts = 0;
  int tabu = 0;
  int max_parents = 8;
  std::uint64_t seed = 0;
  bool markov_net = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--algo", algo, "Learning algorithm: gs|hc|hybrid");
    cmd->add_option("--test", test, "Independence test: g2|chi2|zf");
    cmd->add_option("--score", score, "Network score: loglik|aic|bic|bdeu|mdl");
    cmd->add_option("--alpha", alpha, "Test significance threshold");
    cmd->add_option("--iss", iss, "Imaginary sample size for bdeu and fitting");
    cmd->add_option("--restarts", restarts, "Random restarts for hill climbing");
    cmd->add_option("--tabu", tabu, "Tabu list length");
    cmd->add_option("--max-parents", max_parents, "Parent set size bound");
    cmd->add_option("--seed", seed, "Random seed");
    cmd->add_flag("--markov-net", markov_net,
                  "Grow-Shrink only: stop at the symmetric-blanket undirected graph");
  }

  LearnerSpec spec() const {
    LearnerSpec ls;
    ls.algo = parse_algo(algo);
    ls.config.test = parse_test(test);
    ls.config.score = parse_score(score);
    ls.config.alpha = alpha;
    ls.config.iss = iss;
    ls.config.restarts = restarts;
    ls.config.tabu = tabu;
    ls.config.max_parents = max_parents;
    ls.config.seed = seed;
    ls.config.markov_network = markov_net;
    ls.config.validate();
    return ls;
  }
};

}  // namespace detail

/// Entry point shared by the binary and in-process callers.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Graphical-models workbench: structure learning, inference and validation"};
  app.require_subcommand(1);

  // learn-bn ----------------------------------------------------------------
  auto* learn_cmd = app.add_subcommand("learn-bn", "Learn a network structure from data");
  std::string lb_data, lb_schema, lb_out, lb_dot;
  detail::LearnerFlags lb_flags;
  learn_cmd->add_option("--data", lb_data, "CSV data file")->required();
  learn_cmd->add_option("--schema", lb_schema, "Schema sidecar (name,kind[,levels...] lines)");
  lb_flags.attach(learn_cmd);
  learn_cmd->add_option("--out", lb_out, "Write the fitted model document here");
  learn_cmd->add_option("--dot", lb_dot, "Write the learned graph as DOT here");

  // learn-ggm ---------------------------------------------------------------
  auto* ggm_cmd = app.add_subcommand("learn-ggm", "Shrinkage partial-correlation network");
  std::string gg_data, gg_schema, gg_select = "fdr", gg_out, gg_pcor;
  double gg_level = 0.05;
  ggm_cmd->add_option("--data", gg_data, "CSV data file")->required();
  ggm_cmd->add_option("--schema", gg_schema, "Schema sidecar");
  ggm_cmd->add_option("--select", gg_select, "Edge selection: threshold|fdr");
  ggm_cmd->add_option("--level", gg_level, "Threshold magnitude or FDR level q");
  ggm_cmd->add_option("--out", gg_out, "Write the selected graph as DOT here");
  ggm_cmd->add_option("--pcor", gg_pcor, "Write the partial-correlation matrix as CSV here");

  // relevance ---------------------------------------------------------------
  auto* rel_cmd = app.add_subcommand("relevance", "Marginal-correlation relevance network");
  std::string rl_data, rl_schema, rl_out;
  double rl_threshold = 0.8;
  rel_cmd->add_option("--data", rl_data, "CSV data file")->required();
  rel_cmd->add_option("--schema", rl_schema, "Schema sidecar");
  rel_cmd->add_option("--threshold", rl_threshold, "Absolute correlation threshold");
  rel_cmd->add_option("--out", rl_out, "Write the graph as DOT here");

  // infer -------------------------------------------------------------------
  auto* infer_cmd = app.add_subcommand("infer", "Conditional probability query on a model");
  std::string in_model, in_query, in_evidence, in_method = "ve";
  std::vector<std::string> in_soft;
  long long in_samples = 10000;
  std::uint64_t in_seed = 0;
  infer_cmd->add_option("--model", in_model, "Model document")->required();
  infer_cmd->add_option("--query", in_query, "Comma-separated query nodes")->required();
  infer_cmd->add_option("--evidence", in_evidence, "Hard evidence: X=yes,Y=no");
  infer_cmd->add_option("--soft", in_soft, "Soft evidence: Z=0.9,0.1 (repeatable)");
  infer_cmd->add_option("--method", in_method, "ve|ls|lw");
  infer_cmd->add_option("--samples", in_samples, "Sample count for ls/lw");
  infer_cmd->add_option("--seed", in_seed, "Random seed for ls/lw");

  // dsep --------------------------------------------------------------------
  auto* dsep_cmd = app.add_subcommand("dsep", "d-separation query on a model's graph");
  std::string ds_model, ds_x, ds_y, ds_given;
  dsep_cmd->add_option("--model", ds_model, "Model document")->required();
  dsep_cmd->add_option("--x", ds_x, "First node")->required();
  dsep_cmd->add_option("--y", ds_y, "Second node")->required();
  dsep_cmd->add_option("--given", ds_given, "Comma-separated conditioning nodes");

  // bootstrap ---------------------------------------------------------------
  auto* boot_cmd = app.add_subcommand("bootstrap", "Bootstrap confidence for edges");
  std::string bs_data, bs_schema, bs_out;
  long long bs_replicates = 100;
  detail::LearnerFlags bs_flags;
  boot_cmd->add_option("--data", bs_data, "CSV data file")->required();
  boot_cmd->add_option("--schema", bs_schema, "Schema sidecar");
  bs_flags.attach(boot_cmd);
  boot_cmd->add_option("--replicates", bs_replicates, "Bootstrap replicates");
  boot_cmd->add_option("--out", bs_out, "Write edge strengths CSV here");

  // cv ----------------------------------------------------------------------
  auto* cv_cmd = app.add_subcommand("cv", "Cross-validated predictive loss");
  std::string cv_data, cv_schema, cv_target, cv_loss = "mis";
  int cv_folds = 10;
  detail::LearnerFlags cv_flags;
  cv_cmd->add_option("--data", cv_data, "CSV data file")->required();
  cv_cmd->add_option("--schema", cv_schema, "Schema sidecar");
  cv_cmd->add_option("--target", cv_target, "Prediction target")->required();
  cv_cmd->add_option("--folds", cv_folds, "Number of folds");
  cv_cmd->add_option("--loss", cv_loss, "mis|rss");
  cv_flags.attach(cv_cmd);

  std::vector<const char*> argv;
  argv.push_back("pgm");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (learn_cmd->parsed()) {
      const LearnerSpec spec = lb_flags.spec();
      const Dataset d = detail::read_dataset(lb_data, lb_schema);
      MixedGraph learned = spec.learn(d);
      if (!lb_dot.empty()) detail::write_file(lb_dot, emit_dot(learned));
      if (!lb_out.empty()) {
        const Dag dag = spec.algo == Algo::gs ? pdag_extension(Pdag(learned)) : Dag(learned);
        detail::write_file(lb_out, emit_model(fit_network(d, dag, spec.config.iss)));
      }
      return 0;
    }
    if (ggm_cmd->parsed()) {
      const Dataset d = detail::read_dataset(gg_data, gg_schema);
      const ShrinkageEstimate est = shrink_correlation(d);
      const Matrix pcor = partial_correlations(est.correlation);
      GgmSelectMethod method;
      if (gg_select == "threshold")
        method = GgmSelectMethod::threshold;
      else if (gg_select == "fdr")
        method = GgmSelectMethod::fdr;
      else
        throw ArgumentError("unknown selection method '" + gg_select + "'");
      const GgmResult res = ggm_select(pcor, d.n(), method, gg_level, est.names);
      out << "lambda," << real_repr(est.lambda) << "\n";
      if (!gg_out.empty()) {
        UGraph graph(res.names, res.edges);
        std::map<std::string, std::size_t> col;
        for (std::size_t i = 0; i < res.names.size(); ++i) col[res.names[i]] = i;
        // Dotted styling marks negative partial correlations.
        std::map<std::pair<std::string, std::string>, std::string> styles;
        for (const auto& e : graph.edges())
          if (res.pcor(col[e.tail], col[e.head]) < 0.0) styles[{e.tail, e.head}] = "style=dotted";
        detail::write_file(gg_out, emit_dot(graph, styles));
      }
      if (!gg_pcor.empty()) {
        std::string csv;
        for (std::size_t i = 0; i < res.names.size(); ++i)
          csv += (i ? "," : "") + res.names[i];
        csv += "\n";
        for (std::size_t i = 0; i < res.pcor.rows(); ++i) {
          for (std::size_t j = 0; j < res.pcor.cols(); ++j)
            csv += (j ? "," : "") + real_repr(res.pcor(i, j));
          csv += "\n";
        }
        detail::write_file(gg_pcor, csv);
      }
      return 0;
    }
    if (rel_cmd->parsed()) {
      const Dataset d = detail::read_dataset(rl_data, rl_schema);
      const GaussStats s = gauss_stats(d);
      const UGraph graph = relevance_network(s.correlation, s.names, rl_threshold);
      const std::string dot = emit_dot(graph);
      if (!rl_out.empty())
        detail::write_file(rl_out, dot);
      else
        out << dot;
      return 0;
    }
    if (infer_cmd->parsed()) {
      const BayesianNetwork bn = detail::read_model(in_model);
      const Evidence ev = detail::parse_evidence(in_evidence, in_soft);
      const auto query = detail::split_list(in_query);
      QueryResult q;
      if (in_method == "ve")
        q = variable_elimination(bn, query, ev);
      else if (in_method == "ls")
        q = logic_sampling(bn, query, ev, in_samples, in_seed);
      else if (in_method == "lw")
        q = likelihood_weighting(bn, query, ev, in_samples, in_seed);
      else
        throw ArgumentError("unknown method '" + in_method + "'");
      out << "# method: " << q.method << "\n";
      if (in_method == "ls") {
        out << "# samples: " << q.samples << "\n# accepted: " << q.accepted << "\n";
      } else if (in_method == "lw") {
        out << "# samples: " << q.samples << "\n# ess: " << real_repr(q.effective_sample_size)
            << "\n";
      }
      for (const auto& nm : q.query) out << nm << ",";
      out << "probability\n";
      std::vector<int> levels(q.query.size(), 0);
      for (std::size_t idx = 0; idx < q.table.size(); ++idx) {
        for (std::size_t i = 0; i < q.query.size(); ++i) {
          const auto& meta = bn.variables[static_cast<std::size_t>(bn.index_of(q.query[i]))];
          out << meta.levels[static_cast<std::size_t>(levels[i])] << ",";
        }
        out << real_repr(q.table[idx]) << "\n";
        for (std::size_t i = q.query.size(); i-- > 0;) {
          if (++levels[i] < q.cards[i]) break;
          levels[i] = 0;
        }
      }
      return 0;
    }
    if (dsep_cmd->parsed()) {
      const BayesianNetwork bn = detail::read_model(ds_model);
      std::vector<std::string> given;
      if (!ds_given.empty()) given = detail::split_list(ds_given);
      const bool separated = d_separated(bn.dag, {ds_x}, {ds_y}, given);
      out << (separated ? "true" : "false") << "\n";
      return separated ? 0 : 1;
    }
    if (boot_cmd->parsed()) {
      const LearnerSpec spec = bs_flags.spec();
      const Dataset d = detail::read_dataset(bs_data, bs_schema);
      const EdgeConfidence conf =
          bootstrap_confidence(d, spec, bs_replicates, spec.config.seed);
      std::string csv = "from,to,directed,skeleton\n";
      std::set<std::pair<std::string, std::string>> pairs;
      for (const auto& [pr, f] : conf.skeleton) {
        pairs.insert(pr);
        pairs.insert({pr.second, pr.first});
      }
      for (const auto& [a, b] : pairs)
        csv += a + "," + b + "," + real_repr(conf.directed_frequency(a, b)) + "," +
               real_repr(conf.skeleton_frequency(a, b)) + "\n";
      if (!bs_out.empty())
        detail::write_file(bs_out, csv);
      else
        out << csv;
      return 0;
    }
    if (cv_cmd->parsed()) {
      const LearnerSpec spec = cv_flags.spec();
      const Dataset d = detail::read_dataset(cv_data, cv_schema);
      LossKind loss;
      if (cv_loss == "mis")
        loss = LossKind::misclassification;
      else if (cv_loss == "rss")
        loss = LossKind::rss;
      else
        throw ArgumentError("unknown loss '" + cv_loss + "'");
      const CvResult res = cross_validate(d, spec, cv_target, cv_folds, loss, spec.config.seed);
      out << "fold,loss\n";
      for (std::size_t f = 0; f < res.per_fold.size(); ++f)
        out << (f + 1) << "," << real_repr(res.per_fold[f]) << "\n";
      out << "mean," << real_repr(res.mean) << "\n";
      return 0;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  err << "error: no subcommand\n";
  return 2;
}

}  // namespace pgm::cli
