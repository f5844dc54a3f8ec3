#include "gjepa/cli.hpp"

#include <charconv>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gjepa/checkpoint.hpp"
#include "gjepa/dataset.hpp"
#include "gjepa/error.hpp"
#include "gjepa/eval.hpp"
#include "gjepa/hash.hpp"
#include "gjepa/kernels.hpp"
#include "gjepa/pipeline_check.hpp"
#include "gjepa/trainer.hpp"

#ifndef GJEPA_DEFAULT_DATA_DIR
#define GJEPA_DEFAULT_DATA_DIR "data"
#endif

namespace gjepa {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string shortest(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

void write_file(const fs::path& file, const std::string& text) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::io_error, "cannot write " + file.string());
  out << text;
  if (!out) fail(Errc::io_error, "short write to " + file.string());
}

std::string matrix_csv(const DenseMatrix& m) {
  std::string out;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (c) out += ',';
      out += shortest(m(r, c));
    }
    out += '\n';
  }
  return out;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::string_view rest = text;
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const auto tok = rest.substr(0, comma);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
      fail(Errc::config_error, "bad number '" + std::string(tok) + "' in list '" + text + "'");
    out.push_back(v);
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  return out;
}

// Options shared by every subcommand that resolves a RunConfig.
struct ConfigFlags {
  std::string file;
  std::map<std::string, std::string> values;

  void attach(CLI::App* app) {
    app->add_option("--config", file, "flat key = value config file");
    for (const auto& key : config_keys()) {
      std::string flag = key;
      std::replace(flag.begin(), flag.end(), '_', '-');
      app->add_option("--" + flag, values[key], "config override: " + key);
    }
  }

  RunConfig resolve(CLI::App* app, std::vector<ConfigResolution>* log) const {
    std::map<std::string, std::string> given;
    for (const auto& key : config_keys()) {
      std::string flag = key;
      std::replace(flag.begin(), flag.end(), '_', '-');
      if (app->count("--" + flag) > 0) given[key] = values.at(key);
    }
    const fs::path path(file);
    return resolve_config(file.empty() ? nullptr : &path, given, log, std::getenv("GJEPA_SEED"));
  }
};

// Accumulates the run.json record of one invocation.
class RunRecord {
 public:
  RunRecord(std::string command, int argc, const char* const* argv)
      : start_(std::chrono::steady_clock::now()) {
    j_["command"] = std::move(command);
    ordered_json args = ordered_json::array();
    for (int i = 0; i < argc; ++i) args.push_back(argv[i]);
    j_["argv"] = args;
    j_["threads"] = kernels::max_threads();
  }

  void config(const RunConfig& cfg, const std::vector<ConfigResolution>& log) {
    ordered_json c, src;
    for (const auto& key : config_keys()) c[key] = cfg.get(key);
    for (const auto& r : log) src[r.key] = config_source_name(r.source);
    j_["config"] = c;
    j_["config_source"] = src;
    j_["seed"] = cfg.seed;
  }

  void input(const std::string& name, const fs::path& file) {
    inputs_[name + ":" + file.filename().string()] = git_blob_hash_file(file);
  }

  void dataset(const fs::path& dir, const DatasetManifest& m) {
    input("dataset", dir / "manifest.json");
    for (const auto& rel : {m.edges, m.features, m.labels, m.splits})
      if (!rel.empty()) input("dataset", dir / rel);
  }

  void output(const std::string& name, const fs::path& file) { j_["outputs"][name] = file.string(); }
  ordered_json& result() { return j_["result"]; }

  void write(const fs::path& dir) {
    ordered_json in;
    std::string manifest;
    for (const auto& [k, v] : inputs_) {
      in[k] = v;
      manifest += k + ' ' + v + '\n';
    }
    j_["inputs"] = in;
    j_["input_hash"] = git_blob_hash(manifest);
    j_["wall_time_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    write_file(dir / "run.json", j_.dump(2) + '\n');
  }

 private:
  ordered_json j_;
  std::map<std::string, std::string> inputs_;
  std::chrono::steady_clock::time_point start_;
};

fs::path dir_of(const fs::path& file) {
  return file.has_parent_path() ? file.parent_path() : fs::path(".");
}

void log_config(const std::vector<ConfigResolution>& log) {
  for (const auto& r : log)
    if (r.source != ConfigSource::builtin)
      std::cerr << "config " << r.key << " = " << r.value << " (" << config_source_name(r.source)
                << ")\n";
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Graph joint-embedding predictive learner", "gjepa"};
  app.require_subcommand(1);

  std::string data, checkpoint, out, metrics, run_dir, embeddings_file, name, protocol = "fixed";
  int runs = 10;

  // train
  ConfigFlags train_cfg;
  auto* train_cmd = app.add_subcommand("train", "self-supervised training");
  train_cmd->add_option("--data", data, "dataset directory")->required();
  train_cmd->add_option("--out", out, "checkpoint to write")->required();
  train_cmd->add_option("--metrics", metrics, "metrics JSON lines (default: next to --out)");
  train_cmd->add_option("--run-dir", run_dir, "where run.json goes (default: next to --out)");
  train_cfg.attach(train_cmd);

  // probe
  ConfigFlags probe_cfg;
  auto* probe_cmd = app.add_subcommand("probe", "linear probe over several seeds");
  probe_cmd->add_option("--data", data, "dataset directory")->required();
  probe_cmd->add_option("--checkpoint", checkpoint, "trained checkpoint")->required();
  probe_cmd->add_option("--runs", runs, "number of probe runs")->check(CLI::Range(2, 1000));
  probe_cmd->add_option("--protocol", protocol, "fixed or resample")
      ->check(CLI::IsMember({"fixed", "resample"}));
  probe_cmd->add_option("--out", out, "result JSON (default: stdout only)");
  probe_cmd->add_option("--run-dir", run_dir, "where run.json goes");
  probe_cfg.attach(probe_cmd);

  // embed
  auto* embed_cmd = app.add_subcommand("embed", "full-graph embeddings as CSV");
  embed_cmd->add_option("--data", data, "dataset directory")->required();
  embed_cmd->add_option("--checkpoint", checkpoint, "trained checkpoint")->required();
  embed_cmd->add_option("--out", out, "CSV to write")->required();
  embed_cmd->add_option("--run-dir", run_dir, "where run.json goes");

  // gmm-fit
  std::size_t k = 0;
  std::string covariance = "diag";
  int max_iter = 100;
  double tol = 1e-4;
  std::uint64_t seed = 0;
  auto* gmm_cmd = app.add_subcommand("gmm-fit", "fit a Gaussian mixture to embeddings");
  gmm_cmd->add_option("--embeddings", embeddings_file, "embedding CSV")->required();
  gmm_cmd->add_option("--k", k, "components")->required()->check(CLI::PositiveNumber);
  gmm_cmd->add_option("--covariance", covariance, "diag or full")
      ->check(CLI::IsMember({"diag", "diagonal", "full"}));
  gmm_cmd->add_option("--max-iter", max_iter, "EM iteration cap");
  gmm_cmd->add_option("--tol", tol, "log-likelihood change threshold");
  gmm_cmd->add_option("--seed", seed, "K-means seeding seed");
  gmm_cmd->add_option("--out", out, "result JSON")->required();
  gmm_cmd->add_option("--run-dir", run_dir, "where run.json goes");

  // sweep-momentum
  ConfigFlags sweep_cfg;
  std::string m_values = "0,0.5,0.9,0.99,1";
  auto* sweep_cmd = app.add_subcommand("sweep-momentum", "train and probe for several m");
  sweep_cmd->add_option("--data", data, "dataset directory")->required();
  sweep_cmd->add_option("--values", m_values, "comma-separated momentum values");
  sweep_cmd->add_option("--runs", runs, "probe runs per value")->check(CLI::Range(2, 1000));
  sweep_cmd->add_option("--protocol", protocol, "fixed or resample")
      ->check(CLI::IsMember({"fixed", "resample"}));
  sweep_cmd->add_option("--out", out, "CSV to write")->required();
  sweep_cmd->add_option("--run-dir", run_dir, "where run.json goes");
  sweep_cfg.attach(sweep_cmd);

  // spread
  auto* spread_cmd = app.add_subcommand("spread", "box-plot statistics of embedding entries");
  spread_cmd->add_option("--embeddings", embeddings_file, "embedding CSV");
  spread_cmd->add_option("--data", data, "dataset directory (with --checkpoint)");
  spread_cmd->add_option("--checkpoint", checkpoint, "trained checkpoint (with --data)");
  spread_cmd->add_option("--name", name, "dataset label for the CSV row");
  spread_cmd->add_option("--out", out, "CSV to write")->required();
  spread_cmd->add_option("--run-dir", run_dir, "where run.json goes");

  // distort-eval
  ConfigFlags distort_cfg;
  std::string ratios;
  auto* distort_cmd = app.add_subcommand("distort-eval", "test-time feature distortion study");
  distort_cmd->add_option("--data", data, "dataset directory")->required();
  distort_cmd->add_option("--checkpoint", checkpoint, "trained checkpoint")->required();
  distort_cmd->add_option("--ratios", ratios, "comma-separated ratios (default 0.10..0.40)");
  distort_cmd->add_option("--out", out, "CSV to write")->required();
  distort_cmd->add_option("--run-dir", run_dir, "where run.json goes");
  distort_cfg.attach(distort_cmd);

  // gradcheck
  ConfigFlags grad_cfg;
  std::size_t entries = 64;
  double tolerance = 1e-4;
  double step = 1e-5;
  auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference check of the objective");
  grad_cmd->add_option("--data", data, "dataset directory (default: the 8-node fixture)");
  grad_cmd->add_option("--entries", entries, "entries per parameter, 0 = all");
  grad_cmd->add_option("--tolerance", tolerance, "max relative error");
  grad_cmd->add_option("--step", step, "central difference step");
  bool five_point = false;
  int warmup = 0;
  grad_cmd->add_option("--warmup", warmup, "training epochs before the check");
  grad_cmd->add_flag("--five-point", five_point, "five-point central stencil");
  grad_cmd->add_option("--run-dir", run_dir, "where run.json goes");
  grad_cfg.attach(grad_cmd);

  // convert
  std::string content, cites;
  bool synthetic = false;
  SyntheticOptions syn;
  std::size_t per_class = 20, val = 500, test = 1000;
  auto* convert_cmd = app.add_subcommand("convert", "write a canonical dataset directory");
  auto* content_opt = convert_cmd->add_option("--linqs-content", content, "LINQS .content file");
  auto* cites_opt = convert_cmd->add_option("--linqs-cites", cites, "LINQS .cites file");
  auto* syn_opt = convert_cmd->add_flag("--synthetic", synthetic, "two-community synthetic graph");
  content_opt->needs(cites_opt);
  cites_opt->needs(content_opt);
  syn_opt->excludes(content_opt);
  convert_cmd->add_option("--nodes", syn.nodes, "synthetic node count");
  convert_cmd->add_option("--features", syn.feature_dim, "synthetic feature width");
  convert_cmd->add_option("--p-in", syn.p_in, "synthetic within-community edge probability");
  convert_cmd->add_option("--p-out", syn.p_out, "synthetic cross-community edge probability");
  convert_cmd->add_option("--signal", syn.signal, "synthetic feature mean shift");
  convert_cmd->add_option("--seed", syn.seed, "generator and split seed");
  convert_cmd->add_option("--per-class", per_class, "train nodes per class (LINQS split)");
  convert_cmd->add_option("--val", val, "validation nodes (LINQS split)");
  convert_cmd->add_option("--test", test, "test nodes (LINQS split)");
  convert_cmd->add_option("--name", name, "dataset name");
  convert_cmd->add_option("--out", out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  CLI::App* cmd = app.get_subcommands().front();
  try {
    RunRecord rec(cmd->get_name(), argc, argv);
    std::vector<ConfigResolution> log;

    if (cmd == train_cmd) {
      const RunConfig cfg = train_cfg.resolve(cmd, &log);
      log_config(log);
      rec.config(cfg, log);
      const Dataset ds = load_dataset(data);
      rec.dataset(data, ds.manifest);
      const fs::path ckpt(out);
      const fs::path metrics_path = metrics.empty() ? dir_of(ckpt) / "metrics.jsonl" : fs::path(metrics);
      if (ckpt.has_parent_path()) fs::create_directories(ckpt.parent_path());
      if (metrics_path.has_parent_path()) fs::create_directories(metrics_path.parent_path());
      const TrainReport report = train(ds.graph, cfg, {ckpt, metrics_path});
      rec.output("checkpoint", ckpt);
      rec.output("metrics", metrics_path);
      auto& r = rec.result();
      r["epochs"] = report.epochs.size();
      r["best_epoch"] = report.best_epoch;
      r["best_loss"] = report.best_loss;
      r["early_stopped"] = report.early_stopped;
      r["train_wall_time_s"] = report.wall_time_s;
      rec.write(run_dir.empty() ? dir_of(ckpt) : fs::path(run_dir));
      std::cout << "trained " << report.epochs.size() << " epochs, best total loss "
                << report.best_loss << " at epoch " << report.best_epoch << " ("
                << report.wall_time_s << " s)\n";
      return 0;
    }

    if (cmd == probe_cmd) {
      const RunConfig cfg = probe_cfg.resolve(cmd, &log);
      rec.config(cfg, log);
      const Dataset ds = load_dataset(data);
      rec.dataset(data, ds.manifest);
      rec.input("checkpoint", checkpoint);
      const Checkpoint ck = load_checkpoint(checkpoint);
      const DenseMatrix emb = embed(ds.graph, ck.state);
      const ProbeResult res =
          multi_seed_eval(ds, emb, runs,
                          protocol == "fixed" ? SplitProtocol::fixed : SplitProtocol::resample,
                          {cfg.probe_epochs, cfg.probe_lr, cfg.seed});
      auto& r = rec.result();
      r["runs"] = res.runs;
      r["mean"] = res.mean;
      r["std"] = res.std;
      r["split"] = res.split;
      if (!out.empty()) {
        write_file(out, r.dump(2) + '\n');
        rec.output("probe", out);
      }
      rec.write(!run_dir.empty() ? fs::path(run_dir) : out.empty() ? dir_of(checkpoint) : dir_of(out));
      std::cout << "accuracy " << res.mean << " +- " << res.std << " over " << res.runs.size()
                << " runs (" << res.split << " split)\n";
      return 0;
    }

    if (cmd == embed_cmd) {
      const Dataset ds = load_dataset(data);
      rec.dataset(data, ds.manifest);
      rec.input("checkpoint", checkpoint);
      const Checkpoint ck = load_checkpoint(checkpoint);
      rec.config(ck.config, {});
      write_file(out, matrix_csv(embed(ds.graph, ck.state)));
      rec.output("embeddings", out);
      rec.write(run_dir.empty() ? dir_of(out) : fs::path(run_dir));
      return 0;
    }

    if (cmd == gmm_cmd) {
      rec.input("embeddings", embeddings_file);
      const DenseMatrix h = read_features(embeddings_file);
      GmmOptions opt;
      opt.k = k;
      opt.covariance = parse_covariance(covariance == "diag" ? "diagonal" : covariance);
      opt.max_iter = max_iter;
      opt.tol = tol;
      Rng rng = make_stream(seed, Stream::cluster);
      const GmmFit fit = fit_gmm(h, opt, rng);
      auto& r = rec.result();
      r["k"] = k;
      r["covariance"] = covariance_name(opt.covariance);
      r["iterations"] = fit.iterations;
      r["converged"] = fit.converged;
      r["log_likelihood"] = fit.log_likelihood_trace;
      r["weights"] = fit.model.weights;
      r["labels"] = fit.labels.labels;
      write_file(out, r.dump(2) + '\n');
      rec.output("gmm", out);
      rec.write(run_dir.empty() ? dir_of(out) : fs::path(run_dir));
      std::cout << "EM " << (fit.converged ? "converged" : "stopped") << " after "
                << fit.iterations << " iterations, log-likelihood "
                << (fit.log_likelihood_trace.empty() ? 0.0 : fit.log_likelihood_trace.back())
                << "\n";
      return 0;
    }

    if (cmd == sweep_cmd) {
      const RunConfig cfg = sweep_cfg.resolve(cmd, &log);
      log_config(log);
      rec.config(cfg, log);
      const Dataset ds = load_dataset(data);
      rec.dataset(data, ds.manifest);
      const auto rows = momentum_sweep(
          ds, cfg, parse_list(m_values), runs,
          protocol == "fixed" ? SplitProtocol::fixed : SplitProtocol::resample);
      write_file(out, sweep_csv(rows));
      rec.output("sweep", out);
      rec.write(run_dir.empty() ? dir_of(out) : fs::path(run_dir));
      std::cout << sweep_csv(rows);
      return 0;
    }

    if (cmd == spread_cmd) {
      DenseMatrix emb;
      if (!embeddings_file.empty()) {
        rec.input("embeddings", embeddings_file);
        emb = read_features(embeddings_file);
      } else if (!data.empty() && !checkpoint.empty()) {
        const Dataset ds = load_dataset(data);
        rec.dataset(data, ds.manifest);
        rec.input("checkpoint", checkpoint);
        emb = embed(ds.graph, load_checkpoint(checkpoint).state);
        if (name.empty()) name = ds.manifest.name;
      } else {
        std::cerr << "error: spread needs --embeddings or --data with --checkpoint\n\n"
                  << spread_cmd->help();
        return 2;
      }
      const std::string csv = spread_csv({{name.empty() ? "embeddings" : name, spread_stats(emb)}});
      write_file(out, csv);
      rec.output("spread", out);
      rec.write(run_dir.empty() ? dir_of(out) : fs::path(run_dir));
      std::cout << csv;
      return 0;
    }

    if (cmd == distort_cmd) {
      const RunConfig cfg = distort_cfg.resolve(cmd, &log);
      rec.config(cfg, log);
      const Dataset ds = load_dataset(data);
      rec.dataset(data, ds.manifest);
      rec.input("checkpoint", checkpoint);
      const Checkpoint ck = load_checkpoint(checkpoint);
      const auto list = ratios.empty() ? default_distortion_ratios() : parse_list(ratios);
      const auto rows = distortion_study(ds, ck.state, list,
                                         {cfg.probe_epochs, cfg.probe_lr, cfg.seed}, cfg.seed);
      write_file(out, distortion_csv(rows));
      rec.output("distortion", out);
      rec.write(run_dir.empty() ? dir_of(out) : fs::path(run_dir));
      std::cout << distortion_csv(rows);
      return 0;
    }

    if (cmd == grad_cmd) {
      const RunConfig cfg = grad_cfg.resolve(cmd, &log);
      rec.config(cfg, log);
      const fs::path dir = data.empty() ? fs::path(GJEPA_DEFAULT_DATA_DIR) / "gradcheck8" : fs::path(data);
      const Dataset ds = load_dataset(dir);
      rec.dataset(dir, ds.manifest);
      PipelineCheckOptions opt;
      opt.tolerance = tolerance;
      opt.grad.max_entries_per_param = entries;
      opt.grad.step = step;
      opt.grad.five_point = five_point;
      opt.warmup_epochs = warmup;
      opt.grad.seed = cfg.seed;
      const PipelineCheckResult res = check_pipeline_gradients(ds.graph, cfg, opt);
      auto& r = rec.result();
      r["max_rel_error"] = res.report.max_rel_error;
      r["entries_checked"] = res.report.entries_checked;
      r["worst"] = {{"param", res.report.worst.param},
                    {"row", res.report.worst.row},
                    {"col", res.report.worst.col},
                    {"analytic", res.report.worst.analytic},
                    {"numeric", res.report.worst.numeric}};
      r["semantic_active"] = res.semantic_active;
      r["passed"] = res.report.passed();
      rec.write(run_dir.empty() ? fs::path(".") : fs::path(run_dir));
      std::cout << "max relative error " << res.report.max_rel_error << " over "
                << res.report.entries_checked << " entries (worst " << res.report.worst.param
                << "[" << res.report.worst.row << "," << res.report.worst.col << "]), tolerance "
                << tolerance << ": " << (res.report.passed() ? "ok" : "FAILED") << "\n";
      return res.report.passed() ? 0 : 1;
    }

    if (cmd == convert_cmd) {
      CsrGraph g;
      std::optional<Split> split;
      if (synthetic) {
        g = synthetic_two_community(syn);
        Rng rng = make_stream(syn.seed, Stream::split);
        split = random_split(*g.labels(), 0.5, 0.25, rng);
        if (name.empty()) name = "synthetic" + std::to_string(syn.nodes);
      } else if (!content.empty()) {
        rec.input("content", content);
        rec.input("cites", cites);
        std::size_t skipped = 0;
        g = convert_linqs(content, cites, nullptr, &skipped);
        if (skipped) std::cerr << "skipped " << skipped << " citations naming unknown ids\n";
        Rng rng = make_stream(syn.seed, Stream::split);
        split = per_class_split(*g.labels(), per_class, val, test, rng);
        if (name.empty()) name = fs::path(content).stem().string();
      } else {
        std::cerr << "error: convert needs --synthetic or --linqs-content/--linqs-cites\n\n"
                  << convert_cmd->help();
        return 2;
      }
      const DatasetManifest m = save_dataset(out, name, g, split);
      rec.output("dataset", out);
      auto& r = rec.result();
      r["n_nodes"] = m.n_nodes;
      r["n_edges"] = m.n_edges;
      r["d"] = m.d;
      r["classes"] = m.classes;
      rec.write(run_dir.empty() ? fs::path(out) : fs::path(run_dir));
      std::cout << "wrote " << name << ": " << m.n_nodes << " nodes, " << m.n_edges << " edges, "
                << m.d << " features, " << m.classes << " classes\n";
      return 0;
    }
  } catch (const Error& e) {
    ordered_json j;
    j["error"] = errc_name(e.code());
    j["message"] = e.what();
    if (const auto* d = dynamic_cast<const DatasetError*>(&e)) {
      j["file"] = d->file();
      j["line"] = d->line();
    }
    std::cerr << j.dump() << '\n';
    return 1;
  } catch (const std::exception& e) {
    ordered_json j;
    j["error"] = "internal";
    j["message"] = e.what();
    std::cerr << j.dump() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace gjepa
