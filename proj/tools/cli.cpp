#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <map>
#include <ostream>
#include <sstream>

#include "llmdcd/bayesnet.hpp"
#include "llmdcd/errors.hpp"
#include "llmdcd/metrics.hpp"
#include "llmdcd/optimizer.hpp"
#include "llmdcd/rng.hpp"
#include "llmdcd/warmstart.hpp"
#include "parallel.hpp"
#include "text_util.hpp"

namespace llmdcd::cli {

namespace fs = std::filesystem;

namespace {

fs::path sibling(const fs::path& path, const std::string& suffix) {
  return path.parent_path() / (path.stem().string() + suffix);
}

fs::path with_suffix(const fs::path& prefix, const std::string& suffix) {
  return fs::path(prefix.string() + suffix);
}

struct EndpointFlags {
  LlmEndpoint endpoint;
  std::string cache_dir;
  std::string prompt_dir = PromptTemplates::default_dir().string();
  std::string description;
  std::size_t max_in_flight = 4;

  LlmInitOptions options(const std::string& fallback_description) const {
    LlmEndpoint e = endpoint;
    if (!cache_dir.empty()) e.cache_dir = cache_dir;
    LlmInitOptions o;
    o.client = make_client(e);
    o.templates = PromptTemplates::load(prompt_dir);
    o.dataset_description = description.empty() ? fallback_description : description;
    o.max_retries = e.max_retries;
    o.max_in_flight = max_in_flight;
    return o;
  }
};

void add_endpoint_flags(CLI::App* app, EndpointFlags& f) {
  const char* group = "LLM endpoint";
  app->add_option("--base-url", f.endpoint.base_url, "Chat-completions base URL; empty means cache only")
      ->group(group);
  app->add_option("--model", f.endpoint.model_name, "Model name sent with each request")->group(group);
  app->add_option("--api-key-env", f.endpoint.api_key_env_var, "Environment variable holding the API key")
      ->group(group);
  app->add_option("--temperature", f.endpoint.temperature)->check(CLI::NonNegativeNumber)->group(group);
  app->add_option("--max-retries", f.endpoint.max_retries, "Retries per query (transport and parse)")
      ->group(group);
  app->add_option("--timeout", f.endpoint.timeout_seconds)->check(CLI::PositiveNumber)->group(group);
  app->add_option("--cache-dir", f.cache_dir, "Response cache directory")->group(group);
  app->add_option("--prompt-dir", f.prompt_dir, "Prompt template directory")->group(group);
  app->add_option("--dataset-description", f.description, "Dataset context used in prompts")->group(group);
  app->add_option("--max-in-flight", f.max_in_flight, "Concurrent LLM queries")
      ->check(CLI::PositiveNumber)
      ->group(group);
}

void add_optimizer_flags(CLI::App* app, OptimizerConfig& c) {
  const char* group = "Optimizer";
  app->add_option("--i1", c.i1, "Stage-1 steps")->group(group);
  app->add_option("--i2", c.i2, "Minimum stage-2 steps")->group(group);
  app->add_option("--lr", c.lr)->group(group);
  app->add_option("--alpha", c.alpha, "L1 weight")->group(group);
  app->add_option("--delta", c.delta, "Per-step acyclicity weight increment")->group(group);
  app->add_option("--gamma1", c.gamma1)->group(group);
  app->add_option("--gamma2", c.gamma2)->group(group);
  app->add_option("--eps", c.epsilon)->group(group);
  app->add_option("--batch-size", c.batch_size, "Mini-batch size; 0 picks by dimension")->group(group);
  app->add_option("--bias-correction", c.bias_correction)
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, BiasCorrection>{{"standard", BiasCorrection::kStandard},
                                                {"literal", BiasCorrection::kLiteral}},
          CLI::ignore_case))
      ->group(group);
  app->add_option("--tol", c.convergence_tol, "Convergence tolerance on the per-step max change")->group(group);
  app->add_option("--window", c.convergence_window, "Steps the change must stay below --tol")->group(group);
  app->add_option("--cap-multiplier", c.cap_multiplier, "Hard cap as a multiple of i1 + i2")->group(group);
  app->add_option("--threshold", c.threshold, "Edge threshold tau")->group(group);
  app->add_option("--spectral-mode", c.spectral_mode)
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, SpectralMode>{{"dense", SpectralMode::kDense}, {"power", SpectralMode::kPower}},
          CLI::ignore_case))
      ->group(group);
  app->add_option("--threads", c.threads, "Gradient worker threads; 0 uses all cores")->group(group);
}

void write_config(CLI::App* app, const fs::path& path) {
  // sectioned so that `llmdcd --config FILE` alone re-selects the command
  detail::write_file(path, "[" + app->get_name() + "]\n" + app->config_to_str(true, false));
}

// Seeds of the named randomness streams. Sampling, initialization and
// mini-batching each get their own so one can change without the others.
std::uint64_t sub_seed(std::uint64_t seed, const char* label) { return derive_seed(seed, label); }

struct InitSpec {
  std::string kind;  // random, file, pair, bfs, truth, corrupt
  std::string path;
  std::size_t k = 0;
};

InitSpec parse_init(const std::string& text) {
  InitSpec s;
  if (text == "random" || text == "pair" || text == "bfs") {
    s.kind = text;
  } else if (text == "file:truth") {
    s.kind = "truth";
  } else if (text.rfind("file:", 0) == 0 && text.size() > 5) {
    s.kind = "file";
    s.path = text.substr(5);
  } else if (text.rfind("corrupt:", 0) == 0) {
    s.kind = "corrupt";
    try {
      std::size_t used = 0;
      const long long k = std::stoll(text.substr(8), &used);
      if (k < 0 || used != text.size() - 8) throw std::invalid_argument(text);
      s.k = static_cast<std::size_t>(k);
    } catch (const std::exception&) {
      throw CLI::ValidationError("--init", "bad corruption count in '" + text + "'");
    }
  } else {
    throw CLI::ValidationError("--init", "expected random, file:PATH, pair or bfs, got '" + text + "'");
  }
  return s;
}

// Ground truth (for file:truth and corrupt:K) is only known to bench.
WarmStart resolve_init(const InitSpec& spec, const ObservationTable& table, std::uint64_t seed,
                       const EndpointFlags& llm, const std::string& description, const Graph* truth) {
  const auto names = table.names();
  if (spec.kind == "random") return init_random(names.size(), sub_seed(seed, "init"));
  if (spec.kind == "file") return init_file(spec.path, names);
  if (spec.kind == "pair") return init_pair(table, llm.options(description));
  if (spec.kind == "bfs") return init_bfs(table, llm.options(description));
  if (!truth) throw DomainError("init '" + spec.kind + "' needs a known ground truth");
  WarmStart ws;
  ws.provenance = Provenance::kFile;
  EdgeSet edges = truth->edges;
  if (spec.kind == "corrupt") edges = corrupt_edges(names.size(), edges, spec.k, sub_seed(seed, "corrupt"));
  ws.a0 = AdjacencyMatrix::from_edges(names.size(), edges);
  return ws;
}

struct DiscoverOutcome {
  DiscoveryResult result;
  double seconds = 0.0;
};

DiscoverOutcome discover_to(const ObservationTable& table, const WarmStart& ws, OptimizerConfig cfg,
                            std::uint64_t seed, const fs::path& prefix) {
  const auto names = table.names();
  if (cfg.batch_size == 0) cfg.batch_size = default_batch_size(names.size());
  cfg.seed = sub_seed(seed, "batching");
  write_matrix_csv(ws.a0.values(), names, with_suffix(prefix, ".init.csv"));
  if (!ws.query_log.empty()) detail::write_file(with_suffix(prefix, ".queries.json"), query_log_to_json(ws.query_log));

  DiscoverOutcome out;
  const auto t0 = std::chrono::steady_clock::now();
  out.result = run(table, ws.a0, cfg);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  write_matrix_csv(out.result.a_final.values(), names, with_suffix(prefix, ".matrix.csv"));
  write_edge_list(Graph{names, out.result.edges}, with_suffix(prefix, ".edges.csv"));
  write_trace_csv(out.result.trace, with_suffix(prefix, ".trace.csv"));

  nlohmann::ordered_json info;
  info["init"] = to_string(ws.provenance);
  info["batch_size"] = cfg.batch_size;
  info["steps"] = out.result.steps_run;
  info["converged"] = out.result.converged;
  info["edges"] = out.result.edges.size();
  info["warnings"] = ws.warnings;
  info["runtime_seconds"] = out.seconds;
  detail::write_file(with_suffix(prefix, ".run.json"), info.dump(2) + "\n");
  return out;
}

std::string mean_pm_std(const std::vector<double>& xs, double* mean_out = nullptr, double* std_out = nullptr) {
  if (xs.empty()) return "n/a";
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  const double sd = xs.size() > 1 ? std::sqrt(var / static_cast<double>(xs.size() - 1)) : 0.0;
  if (mean_out) *mean_out = mean;
  if (std_out) *std_out = sd;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f ± %.2f", mean, sd);
  return buf;
}

std::string init_label(const std::string& init) {
  std::string s;
  for (char c : init) s += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
  return s;
}

// ---------------------------------------------------------------- commands

struct SampleArgs {
  std::string bif;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_sample(CLI::App* app, const SampleArgs& a, std::ostream& out) {
  const BayesNet net = parse_bif(a.bif);
  const ObservationTable table = forward_sample(net, a.n, sub_seed(a.seed, "sampling"));
  write_csv(table, a.out);
  write_edge_list(true_adjacency(net), sibling(a.out, ".truth.csv"));
  write_config(app, sibling(a.out, ".config.ini"));
  out << "wrote " << a.n << " rows over " << net.size() << " variables to " << a.out << "\n";
  return 0;
}

struct InitArgs {
  std::string data;
  std::string method = "random";
  std::uint64_t seed = 0;
  std::string out;
  EndpointFlags llm;
};

int cmd_init(CLI::App* app, const InitArgs& a, std::ostream& out, std::ostream& err) {
  const ObservationTable table = load_csv(a.data);
  const WarmStart ws =
      resolve_init(parse_init(a.method), table, a.seed, a.llm, fs::path(a.data).stem().string(), nullptr);
  for (const auto& w : ws.warnings) err << "warning: " << w << "\n";
  write_matrix_csv(ws.a0.values(), table.names(), a.out);
  if (!ws.query_log.empty()) detail::write_file(sibling(a.out, ".queries.json"), query_log_to_json(ws.query_log));
  write_config(app, sibling(a.out, ".config.ini"));
  out << "wrote " << to_string(ws.provenance) << " warm start (" << ws.query_log.size() << " queries) to " << a.out
      << "\n";
  return 0;
}

struct DiscoverArgs {
  std::string data;
  std::string init = "random";
  std::uint64_t seed = 0;
  std::string out;
  OptimizerConfig opt;
  EndpointFlags llm;
};

int cmd_discover(CLI::App* app, const DiscoverArgs& a, std::ostream& out, std::ostream& err) {
  const ObservationTable table = load_csv(a.data);
  const WarmStart ws = resolve_init(parse_init(a.init), table, a.seed, a.llm, fs::path(a.data).stem().string(), nullptr);
  for (const auto& w : ws.warnings) err << "warning: " << w << "\n";
  write_config(app, with_suffix(a.out, ".config.ini"));
  const DiscoverOutcome o = discover_to(table, ws, a.opt, a.seed, a.out);
  out << "discovered " << o.result.edges.size() << " edges in " << o.result.steps_run << " steps ("
      << (o.result.converged ? "converged" : "step cap reached") << ")\n";
  return 0;
}

struct EvalArgs {
  std::string pred, truth, out, data;
  double runtime = 0.0;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  std::optional<std::vector<std::string>> names;
  if (!a.data.empty()) {
    // the header row is enough to fix the vertex set
    std::ifstream in(a.data);
    std::string header;
    if (!in || !std::getline(in, header)) throw IoError("cannot read header of " + a.data);
    if (!header.empty() && header.back() == '\r') header.pop_back();
    names = detail::split(header, ',');
  }
  Graph truth = read_edge_list(a.truth, names);
  Graph pred = read_edge_list(a.pred, names);
  if (!names) {
    // without a schema, both graphs range over every name either file mentions
    std::vector<std::string> all = truth.names;
    for (const auto& n : pred.names)
      if (std::find(all.begin(), all.end(), n) == all.end()) all.push_back(n);
    truth = read_edge_list(a.truth, all);
    pred = read_edge_list(a.pred, all);
  }
  const EvalReport r = evaluate(pred, truth, a.runtime);
  if (!a.out.empty()) detail::write_file(a.out, to_json(r));
  char buf[160];
  std::snprintf(buf, sizeof buf, "shd %zu  precision %.3f  recall %.3f  f1 %.3f  (%zu predicted, %zu true)\n", r.shd,
                r.precision, r.recall, r.f1, r.pred_edges, r.true_edges);
  out << buf;
  return 0;
}

struct BenchArgs {
  std::vector<std::string> datasets;
  std::string data_dir = "data/bnlearn";
  std::vector<std::string> seed_text;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> inits{"random"};
  std::size_t n = 1000;
  std::string out = "bench";
  std::size_t jobs = 1;
  OptimizerConfig opt;
  EndpointFlags llm;
};

struct Cell {
  std::string dataset, init;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  EvalReport report;
  std::size_t steps = 0;
};

int cmd_bench(CLI::App* app, BenchArgs a, std::ostream& out, std::ostream& err) {
  // CLI11 reads an empty item as 0, so the list is parsed here
  for (const auto& t : a.seed_text) {
    if (t.empty()) continue;
    std::uint64_t v = 0;
    const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || end != t.data() + t.size()) throw CLI::ValidationError("--seeds", "not a seed: " + t);
    a.seeds.push_back(v);
  }
  if (a.seeds.empty()) throw CLI::ValidationError("--seeds", "at least one seed is required");
  for (const auto& i : a.inits) parse_init(i);
  const fs::path root = a.out;
  fs::create_directories(root);
  write_config(app, root / "bench.config.ini");

  struct Prepared {
    std::string dataset;
    std::uint64_t seed;
    std::optional<ObservationTable> table;
    Graph truth;
    std::string error;
  };
  std::vector<Prepared> prepared;
  for (const auto& name : a.datasets) {
    std::optional<BayesNet> net;
    std::string net_error;
    try {
      net = parse_bif(fs::path(a.data_dir) / (name + ".bif"));
    } catch (const std::exception& e) {
      net_error = e.what();
    }
    for (std::uint64_t seed : a.seeds) {
      Prepared p{name, seed, std::nullopt, {}, net_error};
      if (net) {
        try {
          p.table = forward_sample(*net, a.n, sub_seed(seed, "sampling"));
          p.truth = true_adjacency(*net);
          const fs::path dir = root / name / ("seed" + std::to_string(seed));
          write_csv(*p.table, dir / "data.csv");
          write_edge_list(p.truth, dir / "truth.csv");
        } catch (const std::exception& e) {
          p.error = e.what();
          p.table.reset();
        }
      }
      prepared.push_back(std::move(p));
    }
  }

  std::vector<Cell> cells;
  std::vector<std::size_t> owner;
  for (std::size_t p = 0; p < prepared.size(); ++p)
    for (const auto& init : a.inits) {
      cells.push_back(Cell{prepared[p].dataset, init, prepared[p].seed, false, prepared[p].error, {}, 0});
      owner.push_back(p);
    }

  detail::parallel_tasks(cells.size(), a.jobs, [&](std::size_t c) {
    Cell& cell = cells[c];
    const Prepared& p = prepared[owner[c]];
    if (!p.table) return;
    try {
      const fs::path prefix = root / p.dataset / ("seed" + std::to_string(p.seed)) / init_label(cell.init) / "run";
      const WarmStart ws = resolve_init(parse_init(cell.init), *p.table, p.seed, a.llm,
                                        "the " + p.dataset + " Bayesian network benchmark", &p.truth);
      const DiscoverOutcome o = discover_to(*p.table, ws, a.opt, p.seed, prefix);
      cell.report = evaluate(Graph{p.truth.names, o.result.edges}, p.truth, o.seconds);
      detail::write_file(with_suffix(prefix, ".eval.json"), to_json(cell.report));
      cell.steps = o.result.steps_run;
      cell.ok = true;
    } catch (const std::exception& e) {
      cell.error = e.what();
    }
  });

  std::ostringstream raw;
  raw << "dataset,init,seed,status,shd,precision,recall,f1,true_edges,pred_edges,steps,runtime_seconds,error\n";
  for (const auto& c : cells) {
    raw << c.dataset << ',' << c.init << ',' << c.seed << ',' << (c.ok ? "ok" : "failed");
    if (c.ok)
      raw << ',' << c.report.shd << ',' << detail::format_double(c.report.precision) << ','
          << detail::format_double(c.report.recall) << ',' << detail::format_double(c.report.f1) << ','
          << c.report.true_edges << ',' << c.report.pred_edges << ',' << c.steps << ','
          << detail::format_double(c.report.runtime_seconds) << ",";
    else {
      std::string msg = c.error;
      std::replace(msg.begin(), msg.end(), ',', ';');
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      raw << ",,,,,,,,," << msg;
    }
    raw << '\n';
  }
  detail::write_file(root / "cells.csv", raw.str());

  std::ostringstream summary;
  summary << "dataset,init,seeds,failures,shd,precision,recall,f1,runtime_seconds,shd_mean,shd_std\n";
  bool any_failed = false;
  for (const auto& name : a.datasets)
    for (const auto& init : a.inits) {
      std::vector<double> shd, prec, rec, f1, secs;
      std::size_t failures = 0;
      for (const auto& c : cells) {
        if (c.dataset != name || c.init != init) continue;
        if (!c.ok) {
          ++failures;
          err << name << " seed " << c.seed << " " << init << ": " << c.error << "\n";
          continue;
        }
        shd.push_back(static_cast<double>(c.report.shd));
        prec.push_back(c.report.precision);
        rec.push_back(c.report.recall);
        f1.push_back(c.report.f1);
        secs.push_back(c.report.runtime_seconds);
      }
      any_failed |= failures > 0;
      double m = 0, s = 0;
      const std::string shd_text = mean_pm_std(shd, &m, &s);
      summary << name << ',' << init << ',' << a.seeds.size() << ',' << failures << ',' << shd_text << ','
              << mean_pm_std(prec) << ',' << mean_pm_std(rec) << ',' << mean_pm_std(f1) << ',' << mean_pm_std(secs)
              << ',' << (shd.empty() ? "" : detail::format_double(m)) << ','
              << (shd.empty() ? "" : detail::format_double(s)) << '\n';
      out << name << "  " << init << "  SHD " << shd_text << "  F1 " << mean_pm_std(f1) << "  ("
          << failures << " failed)\n";
    }
  detail::write_file(root / "summary.csv", summary.str());
  return any_failed ? 1 : 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Causal discovery on discrete data by gradient ascent over an explicit adjacency matrix", "llmdcd"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  app.set_config("--config", "", "Read options from a config file written by an earlier run");

  SampleArgs sample;
  auto* s = app.add_subcommand("sample", "Forward-sample a BIF network into a CSV table");
  s->configurable();
  s->add_option("--bif", sample.bif, "Bayesian network in BIF format")->required()->check(CLI::ExistingFile);
  s->add_option("-n,--n", sample.n, "Number of rows")->required()->check(CLI::PositiveNumber);
  s->add_option("--seed", sample.seed, "Master seed");
  s->add_option("-o,--out", sample.out, "Output CSV")->required();

  InitArgs init;
  auto* in = app.add_subcommand("init", "Build an initial adjacency matrix");
  in->configurable();
  in->add_option("--data", init.data, "Observation CSV")->required()->check(CLI::ExistingFile);
  in->add_option("--method", init.method, "random, pair or bfs")
      ->check(CLI::IsMember({"random", "pair", "bfs"}));
  in->add_option("--seed", init.seed, "Master seed");
  in->add_option("-o,--out", init.out, "Output matrix CSV")->required();
  add_endpoint_flags(in, init.llm);

  DiscoverArgs disc;
  auto* d = app.add_subcommand("discover", "Learn a DAG from an observation table");
  d->configurable();
  d->add_option("--data", disc.data, "Observation CSV")->required()->check(CLI::ExistingFile);
  d->add_option("--init", disc.init, "random, file:PATH, pair or bfs");
  d->add_option("--seed", disc.seed, "Master seed");
  d->add_option("-o,--out", disc.out, "Output prefix")->required();
  disc.opt.batch_size = 0;
  add_optimizer_flags(d, disc.opt);
  add_endpoint_flags(d, disc.llm);

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Score a predicted edge list against the truth");
  e->add_option("--pred", ev.pred, "Predicted edge list")->required()->check(CLI::ExistingFile);
  e->add_option("--truth", ev.truth, "Ground-truth edge list")->required()->check(CLI::ExistingFile);
  e->add_option("--data", ev.data, "CSV whose header fixes the variable set")->check(CLI::ExistingFile);
  e->add_option("--runtime", ev.runtime, "Runtime in seconds to record")->check(CLI::NonNegativeNumber);
  e->add_option("-o,--out", ev.out, "Output report JSON");

  BenchArgs bench;
  auto* b = app.add_subcommand("bench", "Sample, initialize, discover and score over a seed grid");
  b->configurable();
  b->add_option("--dataset", bench.datasets, "Network name(s) resolved as DATA_DIR/NAME.bif")->required();
  b->add_option("--data-dir", bench.data_dir, "Directory of BIF files");
  b->add_option("--seeds", bench.seed_text, "Master seeds")->required()->delimiter(',');
  b->add_option("--inits", bench.inits, "random, file:truth, file:PATH, corrupt:K, pair, bfs")->delimiter(',');
  b->add_option("-n,--n", bench.n, "Rows per sample")->check(CLI::PositiveNumber);
  b->add_option("-o,--out", bench.out, "Output directory");
  b->add_option("--jobs", bench.jobs, "Cells run concurrently")->check(CLI::PositiveNumber);
  bench.opt.batch_size = 0;
  add_optimizer_flags(b, bench.opt);
  add_endpoint_flags(b, bench.llm);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
    if (d->parsed()) parse_init(disc.init);
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (s->parsed()) return cmd_sample(s, sample, out);
    if (in->parsed()) return cmd_init(in, init, out, err);
    if (d->parsed()) return cmd_discover(d, disc, out, err);
    if (e->parsed()) return cmd_eval(ev, out);
    if (b->parsed()) return cmd_bench(b, bench, out, err);
  } catch (const CLI::ParseError& ex) {
    err << ex.what() << "\n";
    return 2;
  } catch (const OptimizerAbort& ex) {
    err << "error: optimizer aborted at step " << ex.step() << ": " << ex.what() << "\n";
    return 1;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace llmdcd::cli
