// duonet command-line driver: graph-info, solve, barycenter, check-lemmas.
//
// Exit codes: 0 success, 1 a lemma check failed, 2 invalid input or
// configuration, 3 solver failure.

#include "duonet.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace duonet;

namespace {

constexpr int kExitLemmaFailure = 1;
constexpr int kExitInput = 2;
constexpr int kExitSolver = 3;

struct GraphOpts {
  std::string topology = "path";
  int m = 3;
  double p = 0.5;
  std::uint64_t graph_seed = 0;
  std::string edges;
};

void add_graph_options(CLI::App* sub, GraphOpts& g) {
  sub->add_option("--topology", g.topology, "path, cycle, star, complete, erdos_renyi or edge_list")
      ->capture_default_str();
  sub->add_option("--m", g.m, "number of nodes")->capture_default_str();
  sub->add_option("--p", g.p, "erdos_renyi edge probability")->capture_default_str();
  sub->add_option("--graph-seed", g.graph_seed, "erdos_renyi generator seed")->capture_default_str();
  sub->add_option("--edges", g.edges, "edge list file (one 'i j' pair per line)");
}

NetworkGraph make_graph(const GraphOpts& o) {
  const auto kind = parse_topology_kind(o.topology);
  switch (kind) {
    case Topology::Kind::ErdosRenyi:
      return build_graph(Topology::erdos_renyi(o.p, o.graph_seed), o.m);
    case Topology::Kind::EdgeList: {
      if (o.edges.empty()) throw ConfigError("--edges is required for topology edge_list");
      auto edges = read_edge_list(o.edges);
      return build_graph(Topology::edge_list(std::move(edges)), o.m);
    }
    default:
      return build_graph(Topology{kind}, o.m);
  }
}

struct RunOpts {
  std::string algo = "stoch";
  std::string oracle = "quadratic_gaussian";
  int n = 2;
  double mu = 1.0;
  std::string centers;
  std::string out = "trace.ndjson";
  unsigned threads = 1;
  SolverConfig cfg;
  std::optional<double> L_psi, M_F_sq;
  std::optional<long> iterations;
  std::optional<double> sigma_x_sq;
  // barycenter
  std::string histograms, cost;
  double mu_reg = 0.1;
  bool paper_constants = false;
  // check-lemmas
  int tail_samples = 10'000;
};

void add_solver_options(CLI::App* sub, RunOpts& r) {
  sub->add_option("--eps", r.cfg.eps, "target accuracy")->required();
  sub->add_option("--delta", r.cfg.delta, "confidence level in (0, 0.25)")->capture_default_str();
  sub->add_option("--seed", r.cfg.seed, "base random seed")->capture_default_str();
  sub->add_option("--c-n", r.cfg.c_N, "iteration-count multiplier")->capture_default_str();
  sub->add_option("--c-r", r.cfg.c_r, "batch-size multiplier")->capture_default_str();
  sub->add_option("--L-psi", r.L_psi, "smoothness of the dual (default lambda_max / mu)");
  sub->add_option("--M-F-sq", r.M_F_sq, "squared gradient norm at the optimum");
  sub->add_option("--iterations", r.iterations, "fixed iteration count N");
  sub->add_option("--batch-cap", r.cfg.batch_cap, "largest allowed batch")->capture_default_str();
  sub->add_option("--out", r.out, "trace file (relative paths land in the output directory)")
      ->capture_default_str();
}

fs::path out_dir() {
  const char* env = std::getenv("DUONET_OUT_DIR");
  fs::path dir = env && *env ? fs::path(env) : fs::path("out");
  fs::create_directories(dir);
  return dir;
}

fs::path resolve_out(const std::string& name) {
  const fs::path p(name);
  const fs::path full = p.is_absolute() ? p : out_dir() / p;
  if (full.has_parent_path()) fs::create_directories(full.parent_path());
  return full;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << text;
}

void write_trace(const fs::path& path, const std::vector<TraceRecord>& trace) {
  std::ostringstream ss;
  write_ndjson(ss, trace);
  write_text(path, ss.str());
}

void emit_summary(const json& summary, const fs::path& path) {
  write_text(path, summary.dump(2) + "\n");
  std::cout << summary.dump(2) << "\n";
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

json summary_header(const std::string& algo, const GraphOpts& go, const NetworkGraph& g,
                    Eigen::Index n, const SolverConfig& cfg) {
  json s;
  s["algo"] = algo;
  s["topology"] = go.topology;
  s["m"] = g.m();
  s["n"] = n;
  s["eps"] = cfg.eps;
  s["delta"] = cfg.delta;
  return s;
}

// ---------------------------------------------------------------- graph-info

int run_graph_info(const GraphOpts& go) {
  const NetworkGraph g = make_graph(go);
  json j;
  j["topology"] = go.topology;
  j["m"] = g.m();
  j["edges"] = g.edges().size();
  j["lambda_max"] = g.lambda_max();
  j["lambda_min_plus"] = g.lambda_min_plus();
  j["chi"] = g.chi();
  std::cout << j.dump(2) << "\n";
  return 0;
}

// --------------------------------------------------------------------- solve

OracleSet make_quadratic_set(const RunOpts& r, const NetworkGraph& g, bool stochastic) {
  Matrix centers = r.centers.empty() ? ramp_centers(g.m(), r.n) : read_csv_matrix(r.centers);
  if (centers.rows() != g.m()) {
    throw DimensionMismatch("centers file has " + std::to_string(centers.rows()) +
                            " rows for " + std::to_string(g.m()) + " nodes");
  }
  if (r.oracle == "quadratic_exact") {
    // A zero-variance sampler keeps the stochastic method usable on exact oracles.
    return make_quadratic_oracles(centers, r.mu, stochastic ? std::optional<double>(0.0) : std::nullopt);
  }
  if (r.oracle == "quadratic_gaussian") {
    return make_quadratic_oracles(centers, r.mu, r.sigma_x_sq.value_or(1.0));
  }
  throw ConfigError("unknown --oracle '" + r.oracle +
                    "' for solve (quadratic_exact or quadratic_gaussian)");
}

int run_solve(const GraphOpts& go, RunOpts r) {
  if (r.algo != "det" && r.algo != "stoch") throw ConfigError("--algo must be det or stoch");
  if (r.n < 1) throw ConfigError("--n must be >= 1");
  if (!(r.mu > 0.0)) throw ConfigError("--mu must be > 0");
  const bool stochastic = r.algo == "stoch";
  const NetworkGraph g = make_graph(go);
  const OracleSet oracles = make_quadratic_set(r, g, stochastic);
  const QuadraticReference ref = quadratic_reference(g, oracles);
  const auto n = block_dim(oracles);

  SolverConfig cfg = r.cfg;
  cfg.L_psi = r.L_psi;
  cfg.mu = r.mu;
  cfg.M_F_sq = r.M_F_sq ? r.M_F_sq : std::optional<double>(ref.M_F_sq);
  cfg.N_override = r.iterations;
  cfg.sigma_x_sq = r.oracle == "quadratic_gaussian" ? r.sigma_x_sq.value_or(1.0) : 0.0;
  cfg.validate();
  if (!stochastic && cfg.trials > 1) throw ConfigError("--trials applies to --algo stoch only");

  json s = summary_header(r.algo, go, g, n, cfg);
  s["oracle"] = r.oracle;
  const fs::path trace_path = resolve_out(r.out);

  if (!stochastic) {
    const double L = cfg.L_psi.value_or(g.lambda_max() / r.mu);
    if (!(L > 0.0)) throw ConfigError("--L-psi is required on a single-node graph");
    const long N = cfg.N_override.value_or(
        predict_iterations_det(*cfg.M_F_sq, r.mu, g.chi(), cfg.eps, cfg.c_N));
    const DetResult res = solve_deterministic(g, oracles, L, N);
    write_trace(trace_path, res.trace);
    s["iterations"] = N;
    s["oracle_calls"] = N;
    s["comm_rounds"] = res.comm_rounds;
    s["final_gap"] = res.trace.back().gap;
    s["final_consensus_residual"] = res.trace.back().consensus_residual;
    s["L_psi"] = L;
    s["objective_error"] = primal_objective(oracles, res.x) - ref.F_star;
    s["trace"] = trace_path.string();
    emit_summary(s, out_dir() / "summary.json");
    return 0;
  }

  StochOptions opts;
  opts.F_star = ref.F_star;
  opts.y_star = ref.y_star;
  const StochResult res = solve_stochastic(g, oracles, cfg, opts);
  print_warnings(res.warnings);
  write_trace(trace_path, res.trace);
  s["iterations"] = res.iterations;
  s["oracle_calls"] = res.total_oracle_calls;
  s["comm_rounds"] = res.comm_rounds;
  s["final_gap"] = res.trace.back().gap;
  s["final_consensus_residual"] = res.trace.back().consensus_residual;
  s["L_psi"] = res.L_psi;
  s["sigma_psi_sq"] = res.sigma_psi_sq;
  s["R_y"] = ref.R_y;
  s["seed"] = cfg.seed;

  if (cfg.trials > 1) {
    const auto outcomes = quadratic_trials(g, oracles, cfg, cfg.trials, r.threads);
    std::ostringstream csv;
    csv << std::setprecision(17)
        << "trial,seed,objective_error,consensus_residual,oracle_calls,iterations,success\n";
    for (std::size_t t = 0; t < outcomes.size(); ++t) {
      const auto& o = outcomes[t];
      csv << t << ',' << o.seed << ',' << o.objective_error << ',' << o.consensus_residual << ','
          << o.oracle_calls << ',' << o.iterations << ',' << (o.success ? 1 : 0) << '\n';
    }
    const fs::path report = out_dir() / "trials.csv";
    write_text(report, csv.str());
    s["trials"] = cfg.trials;
    s["success_fraction"] = success_fraction(outcomes);
    s["trials_report"] = report.string();
  }
  s["trace"] = trace_path.string();
  emit_summary(s, out_dir() / "summary.json");
  return 0;
}

// ---------------------------------------------------------------- barycenter

int run_barycenter(const GraphOpts& go, RunOpts r) {
  if (r.histograms.empty() || r.cost.empty()) throw ConfigError("--histograms and --cost are required");
  const Matrix hist = normalize_histograms(read_csv_matrix(r.histograms));
  const Matrix cost = read_csv_matrix(r.cost);
  GraphOpts gopt = go;
  gopt.m = static_cast<int>(hist.rows());  // one node per histogram
  const NetworkGraph g = make_graph(gopt);
  const BarycenterProblem prob = build_barycenter_problem(
      hist, cost, r.mu_reg, g, r.sigma_x_sq.value_or(kSimplexSigmaXSq), r.paper_constants);

  SolverConfig cfg = r.cfg;
  cfg.L_psi = r.L_psi;
  cfg.M_F_sq = r.M_F_sq ? r.M_F_sq : std::optional<double>(prob.M_F_sq);
  if (cfg.M_F_sq && *cfg.M_F_sq == 0.0 && !r.iterations) {
    throw ConfigError("cost matrix is zero; pass --iterations or --M-F-sq");
  }
  cfg.N_override = r.iterations;
  cfg.sigma_x_sq = prob.noise.sigma_x_sq;
  cfg.validate();

  const StochResult res = solve_stochastic(g, prob.oracles, cfg);
  print_warnings(res.warnings);
  const fs::path trace_path = resolve_out(r.out);
  write_trace(trace_path, res.trace);

  std::ostringstream csv;
  csv << std::setprecision(17);
  for (Eigen::Index i = 0; i < res.x.rows(); ++i) {
    for (Eigen::Index j = 0; j < res.x.cols(); ++j) csv << (j ? "," : "") << res.x(i, j);
    csv << '\n';
  }
  const fs::path est_path = out_dir() / "barycenter.csv";
  write_text(est_path, csv.str());

  const Vector mean = res.x.colwise().mean().transpose();
  json s = summary_header("stoch", gopt, g, cost.rows(), cfg);
  s["iterations"] = res.iterations;
  s["oracle_calls"] = res.total_oracle_calls;
  s["comm_rounds"] = res.comm_rounds;
  s["final_gap"] = res.trace.back().gap;
  s["final_consensus_residual"] = res.trace.back().consensus_residual;
  s["objective"] = barycenter_objective_at(prob.oracles, mean);
  s["objective_nodes"] = barycenter_objective(prob.oracles, res.x);
  s["consensus_residual"] = consensus_residual(g, res.x);
  s["mu_reg"] = r.mu_reg;
  s["M_F_sq"] = *cfg.M_F_sq;
  s["sigma_psi_sq"] = res.sigma_psi_sq;
  s["barycenter"] = std::vector<double>(mean.data(), mean.data() + mean.size());
  s["estimates"] = est_path.string();
  s["trace"] = trace_path.string();
  emit_summary(s, out_dir() / "summary.json");
  return 0;
}

// -------------------------------------------------------------- check-lemmas

int run_check_lemmas(const RunOpts& r) {
  bool ok = true;
  json report;

  json alpha = json::array();
  for (double L : {0.1, 1.0, 10.0}) {
    const auto rep = check_alpha_sequence(L, 10'000);
    const bool pass = rep.max_rel_residual <= 1e-12 && rep.bound_holds;
    ok = ok && pass;
    alpha.push_back({{"L_psi", L}, {"max_rel_residual", rep.max_rel_residual},
                     {"bound_holds", rep.bound_holds}, {"pass", pass}});
  }
  report["alpha_sequence"] = alpha;

  KeyedEngine eng(StreamKey{r.cfg.seed, 0, 0, 0});
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int sequences = 0, conclusions = 0;
  for (int t = 0; t < 100; ++t) {
    const double A = 3.0 * u(eng), B = 3.0 * u(eng);
    const long N = 5 + t % 30;
    std::vector<double> seq{0.5 + 3.0 * u(eng)};
    double weighted = 0.0;
    for (long l = 1; l <= N; ++l) {
      weighted += static_cast<double>(l + 1) * seq[l - 1] * seq[l - 1];
      const double rhs =
          A * seq[0] * seq[0] + B * (seq[0] / static_cast<double>(N)) * std::sqrt(weighted);
      double next;
      do {
        next = 1.3 * std::sqrt(2.0 * rhs) * u(eng);
      } while (0.5 * next * next > rhs);
      seq.push_back(next);
    }
    const auto rep = check_recurrence_lemma(A, B, seq, N);
    if (rep.holds_premise) {
      ++sequences;
      if (rep.holds_conclusion) ++conclusions;
    }
  }
  const bool rec_ok = sequences == 100 && conclusions == 100 &&
                      recurrence_bound(1.0, 1.0) == 1.0 + std::sqrt(3.0);
  ok = ok && rec_ok;
  report["recurrence_lemma"] = {{"sequences", sequences}, {"conclusions", conclusions},
                                {"C_A1_B1", recurrence_bound(1.0, 1.0)}, {"pass", rec_ok}};

  const double sx = r.sigma_x_sq.value_or(1.0);
  if (!(sx > 0.0)) throw ConfigError("--sigma-x-sq must be > 0 for the tail check");
  const QuadraticOracle o(1.0, Vector::Zero(r.n), sx);
  const Vector y = Vector::Zero(r.n);
  std::vector<double> dev;
  dev.reserve(static_cast<std::size_t>(std::max(r.tail_samples, 0)));
  for (int s = 0; s < r.tail_samples; ++s) {
    KeyedEngine e(StreamKey{r.cfg.seed, 1, 0, static_cast<std::uint64_t>(s)});
    dev.push_back(o.sample_primal(y, e).norm());
  }
  const TailReport tail = empirical_tail_check(dev, sx);
  ok = ok && tail.pass;
  json curve = json::array();
  for (std::size_t i = 0; i < tail.gamma.size(); ++i) {
    curve.push_back({{"gamma", tail.gamma[i]}, {"empirical", tail.empirical[i]},
                     {"bound", tail.bound[i]}});
  }
  report["tail_check"] = {{"samples", dev.size()}, {"sigma_x_sq", sx}, {"slack", tail.slack},
                          {"curve", curve}, {"pass", tail.pass}};
  report["pass"] = ok;
  std::cout << report.dump(2) << "\n";
  return ok ? 0 : kExitLemmaFailure;
}

// Expands `--config FILE` into `--key=value` arguments placed right after the
// subcommand name, so anything given on the command line wins.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  for (std::size_t i = 1; i < args.size(); ++i) {
    std::string path;
    std::size_t span = 0;
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      span = 2;
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      span = 1;
    } else {
      continue;
    }
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::vector<std::string> injected;
    for (const auto& item : CLI::ConfigINI().from_config(in)) {
      if (item.name == "++" || item.name == "--") continue;
      if (!item.parents.empty()) {
        throw ConfigError("config file must be flat key=value, got section '" +
                          item.parents.front() + "'");
      }
      std::string joined;
      for (std::size_t k = 0; k < item.inputs.size(); ++k) joined += (k ? "," : "") + item.inputs[k];
      injected.push_back("--" + item.name + "=" + joined);
    }
    args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
               args.begin() + static_cast<std::ptrdiff_t>(i + span));
    args.insert(args.begin() + 2, injected.begin(), injected.end());
    break;
  }
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app("Decentralized dual optimization over networks");
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  GraphOpts go;
  RunOpts r;
  std::string config_path;  // consumed by expand_config; declared for --help

  auto* info = app.add_subcommand("graph-info", "print the spectral summary of a topology");
  add_graph_options(info, go);

  auto* solve = app.add_subcommand("solve", "run the deterministic or stochastic dual method");
  add_graph_options(solve, go);
  add_solver_options(solve, r);
  solve->add_option("--algo", r.algo, "det or stoch")->capture_default_str();
  solve->add_option("--oracle", r.oracle, "quadratic_exact or quadratic_gaussian")
      ->capture_default_str();
  solve->add_option("--n", r.n, "block dimension")->capture_default_str();
  solve->add_option("--mu", r.mu, "strong convexity of each f_i")->capture_default_str();
  solve->add_option("--centers", r.centers, "CSV of per-node centers (default: ramp)");
  solve->add_option("--sigma-x-sq", r.sigma_x_sq, "per-sample primal noise level (default 1)");
  solve->add_option("--trials", r.cfg.trials, "seed sweep size (stoch)")->capture_default_str();
  solve->add_option("--threads", r.threads, "workers for the seed sweep")->capture_default_str();

  auto* bary = app.add_subcommand("barycenter", "entropic Wasserstein barycenter over a network");
  add_graph_options(bary, go);
  add_solver_options(bary, r);
  bary->add_option("--histograms", r.histograms, "CSV, one histogram per node")->required();
  bary->add_option("--cost", r.cost, "CSV, n x n cost matrix")->required();
  bary->add_option("--mu-reg", r.mu_reg, "entropic regularization")->capture_default_str();
  bary->add_option("--sigma-x-sq", r.sigma_x_sq, "per-sample noise bound (default 4)");
  bary->add_flag("--paper-constants", r.paper_constants, "use sigma_psi^2 = m lambda_max");

  auto* lemmas = app.add_subcommand("check-lemmas", "alpha bound, recurrence lemma and tail checks");
  lemmas->add_option("--seed", r.cfg.seed, "random seed")->capture_default_str();
  lemmas->add_option("--n", r.n, "dimension of the Gaussian tail sample")->capture_default_str();
  lemmas->add_option("--sigma-x-sq", r.sigma_x_sq, "Gaussian noise level (default 1)");
  lemmas->add_option("--tail-samples", r.tail_samples, "samples for the tail check")
      ->capture_default_str();

  for (auto* sub : {info, solve, bary, lemmas}) {
    sub->add_option("--config", config_path, "flat key=value file; flags override it");
  }

  try {
    std::vector<std::string> args(argv, argv + argc);
    args = expand_config(std::move(args));
    std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
    app.parse(std::move(rev));
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }

  try {
    if (info->parsed()) return run_graph_info(go);
    if (solve->parsed()) return run_solve(go, r);
    if (bary->parsed()) return run_barycenter(go, r);
    if (lemmas->parsed()) return run_check_lemmas(r);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kExitSolver;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolver;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolver;
  }
  return 0;
}
