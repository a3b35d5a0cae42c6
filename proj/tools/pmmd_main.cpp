// Command-line front end. Everything numeric goes through the C library.

#include <chrono>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cli_support.hpp"
#include "photonmmd/photonmmd.h"

namespace fs = std::filesystem;
using pmmd_cli::fmt;
using pmmd_cli::Manifest;

namespace {

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(pmmd_status status) {
  if (status != PMMD_OK)
    throw Failure(std::string(pmmd_status_name(status)) + ": " + pmmd_last_error());
}

struct DatasetDeleter {
  void operator()(pmmd_dataset* p) const { pmmd_dataset_free(p); }
};
struct CircuitDeleter {
  void operator()(pmmd_circuit* p) const { pmmd_circuit_free(p); }
};
struct RunDeleter {
  void operator()(pmmd_run* p) const { pmmd_run_free(p); }
};
using DatasetPtr = std::unique_ptr<pmmd_dataset, DatasetDeleter>;
using CircuitPtr = std::unique_ptr<pmmd_circuit, CircuitDeleter>;
using RunPtr = std::unique_ptr<pmmd_run, RunDeleter>;

DatasetPtr load_dataset(const std::string& path) {
  pmmd_dataset* raw = nullptr;
  check(pmmd_dataset_read(path.c_str(), &raw));
  return DatasetPtr(raw);
}

CircuitPtr load_circuit(const std::string& path) {
  pmmd_circuit* raw = nullptr;
  check(pmmd_circuit_load(path.c_str(), &raw));
  return CircuitPtr(raw);
}

pmmd_kernel parse_kernel(const std::string& name) {
  if (name == "mod2") return PMMD_KERNEL_MOD2;
  if (name == "gaussian") return PMMD_KERNEL_GAUSSIAN;
  throw Failure("unknown kernel '" + name + "' (expected mod2 or gaussian)");
}

// "5:100,3:100,1:300" -> (sigma, steps) pairs
void parse_schedule(const std::string& text, std::vector<double>& sigmas,
                    std::vector<size_t>& steps) {
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    const std::string item = text.substr(pos, comma - pos);
    const std::size_t colon = item.find(':');
    double sigma = 0.0;
    std::size_t count = 0;
    const bool ok =
        colon != std::string::npos &&
        std::from_chars(item.data(), item.data() + colon, sigma).ptr == item.data() + colon &&
        std::from_chars(item.data() + colon + 1, item.data() + item.size(), count).ptr ==
            item.data() + item.size();
    if (!ok || colon == 0 || colon + 1 == item.size())
      throw Failure("malformed schedule entry '" + item + "' (expected sigma:steps)");
    sigmas.push_back(sigma);
    steps.push_back(count);
    pos = comma + 1;
  }
}

std::vector<std::string> read_lines(const std::string& path) {
  std::vector<std::string> out;
  std::string line;
  std::istringstream in(pmmd_cli::read_file(path));
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty() && line[0] != '#') out.push_back(line);
  }
  return out;
}

std::string option_key(const CLI::Option* opt) {
  const auto& names = opt->get_lnames();
  return names.empty() ? opt->get_name() : names.front();
}

// Options that never influence primary outputs or that are recorded as
// content-hashed inputs instead of by value.
const std::set<std::string> kUnhashed = {"help", "out", "out-dir", "threads", "config"};
const std::set<std::string> kInputFiles = {"dataset", "test", "train", "circuit",
                                           "rankings", "expression", "universe"};

void record_options(const CLI::App* app, Manifest& manifest) {
  for (const CLI::Option* opt : app->get_options()) {
    const std::string key = option_key(opt);
    if (kUnhashed.count(key)) continue;
    if (kInputFiles.count(key)) {
      if (opt->count() > 0) manifest.input(key, opt->results().front());
      continue;
    }
    std::string value;
    if (opt->count() > 0) {
      for (const auto& r : opt->results()) value += (value.empty() ? "" : ",") + r;
    } else {
      value = opt->get_default_str();
    }
    manifest.parameter(key, value);
  }
}

struct TrainArgs {
  std::string mesh = "clements_rectangular";
  std::string init = "identity:0.5";
  std::vector<std::size_t> input;
  std::string schedule;
  std::string test_path;
  double test_fraction = 0.2;
  std::string eval_kernel = "mod2";
  bool frozen = false;
  pmmd_train_options options{};
};

void add_train_options(CLI::App* sub, TrainArgs& a) {
  pmmd_train_options_init(&a.options);
  auto& o = a.options;
  sub->add_option("--test", a.test_path, "Held-out dataset file (default: split the dataset)");
  sub->add_option("--test-fraction", a.test_fraction, "Share of the dataset held out when --test is absent")
      ->check(CLI::Range(0.0, 0.95));
  sub->add_option("--mesh", a.mesh, "clements_rectangular, butterfly, three_mzi or qr_haar");
  sub->add_option("--init", a.init, "identity, identity:<eps> or random");
  sub->add_option("--input", a.input, "0-based input modes (default: the first n)")->delimiter(',');
  sub->add_option("--steps", o.steps, "Optimizer steps")->check(CLI::PositiveNumber);
  sub->add_option("--lr", o.lr, "Adam learning rate");
  sub->add_option("--beta1", o.beta1, "Adam beta1");
  sub->add_option("--beta2", o.beta2, "Adam beta2");
  sub->add_option("--adam-eps", o.eps, "Adam epsilon");
  sub->add_option("--sigma", o.sigma, "Kernel bandwidth (fixed schedule)");
  sub->add_option("--schedule", a.schedule, "Bandwidth stages sigma:steps,...; overrides --sigma");
  sub->add_option("--kbatch", o.mask_batch, "|K|, masks per estimate");
  sub->add_option("--zbatch", o.glynn_batch, "|Z|, sign vectors per estimate");
  sub->add_option("--xbatch", o.data_batch, "|X|, data records per estimate (capped at the training size)");
  sub->add_option("--eval-every", o.eval_every, "Evaluate and checkpoint every N steps (0: final only)");
  sub->add_option("--repeats", o.eval_repeats, "Evaluation repeats");
  sub->add_option("--eval-kernel", a.eval_kernel, "mod2 or gaussian");
  sub->add_flag("--frozen-batches", a.frozen, "Reuse one set of masks and sign vectors for every step");
  sub->add_option("--seed", o.seed, "Run seed")->required();
}

struct Schedule {
  std::vector<double> sigmas;
  std::vector<std::size_t> steps;
};

void finish_train_options(TrainArgs& a, Schedule& schedule) {
  auto& o = a.options;
  if (!a.schedule.empty()) {
    parse_schedule(a.schedule, schedule.sigmas, schedule.steps);
    o.schedule_sigmas = schedule.sigmas.data();
    o.schedule_steps = schedule.steps.data();
    o.schedule_len = schedule.sigmas.size();
  }
  o.eval_kernel = parse_kernel(a.eval_kernel);
  o.frozen_batches = a.frozen ? 1 : 0;
}

std::pair<DatasetPtr, DatasetPtr> train_test(const std::string& dataset, const TrainArgs& a) {
  DatasetPtr all = load_dataset(dataset);
  if (!a.test_path.empty()) return {std::move(all), load_dataset(a.test_path)};
  if (a.test_fraction <= 0.0) return {std::move(all), nullptr};
  pmmd_dataset* train = nullptr;
  pmmd_dataset* test = nullptr;
  check(pmmd_dataset_split(all.get(), 1.0 - a.test_fraction, a.options.seed, &train, &test));
  return {DatasetPtr(train), DatasetPtr(test)};
}

std::string summary_line(const std::string& label, const pmmd_summary& s) {
  return label + ": mean " + fmt(s.mean) + " std " + fmt(s.std) + " over " +
         std::to_string(s.repeats) + " repeats";
}

void write_eval_csv(Manifest& manifest, const fs::path& dir,
                    const std::vector<std::pair<std::string, pmmd_summary>>& rows,
                    const std::vector<std::string>& comments = {}) {
  pmmd_cli::Csv csv(manifest.hash(), {"label", "mean", "std", "repeats"}, comments);
  for (const auto& [label, s] : rows) csv.row({label, fmt(s.mean), fmt(s.std), std::to_string(s.repeats)});
  manifest.write_output((dir / "eval.csv").string(), csv.text());
}

struct CheckpointSink {
  fs::path dir;
  Manifest* manifest = nullptr;
  std::string error;
};

void on_checkpoint(size_t step, const pmmd_circuit* circuit, void* user) {
  auto* sink = static_cast<CheckpointSink*>(user);
  if (!sink->error.empty()) return;
  char name[32];
  std::snprintf(name, sizeof name, "step_%06zu.txt", step);
  const std::string path = (sink->dir / name).string();
  if (pmmd_circuit_save(circuit, path.c_str()) != PMMD_OK) {
    sink->error = pmmd_last_error();
    return;
  }
  sink->manifest->record_output(path);
}

}  // namespace

int main(int argc, char** argv) {
  const auto started = std::chrono::steady_clock::now();
  CLI::App app{"Photonic boson-sampling generative models trained with an MMD loss"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value file; keys are <subcommand>.<option>, flags override it");
  app.allow_config_extras(CLI::config_extras_mode::error);
  unsigned threads = 0;
  app.add_option("--threads", threads, "Worker threads (default: PMMD_THREADS or all cores)");

  std::string out = "dataset.txt";
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  std::size_t m = 0, n = 0, size = 0;

  // gen-dataset
  auto* gen = app.add_subcommand("gen-dataset", "Write a fixed-weight dataset file");
  gen->require_subcommand(1);
  bool collision_free = false;
  auto* gen_boson = gen->add_subcommand("boson", "Exact boson samples from a seeded Haar-like unitary");
  auto* gen_uniform = gen->add_subcommand("uniform", "Uniform fixed-weight bitstrings");
  for (auto* sub : {gen_boson, gen_uniform}) {
    sub->add_option("--m", m, "Modes")->required();
    sub->add_option("--n", n, "Photons / Hamming weight")->required();
    sub->add_option("--size", size, "Records")->required();
    sub->add_option("--seed", seed, "Generator seed")->required();
    sub->add_option("--out", out, "Output dataset path");
  }
  gen_boson->add_flag("--collision-free", collision_free, "Keep only outputs with at most one photon per mode");
  auto* gen_ingest = gen->add_subcommand("ingest", "Convert rankings or expression scores");
  std::string rankings, ranking_format = "csv", expression, universe;
  bool signed_order = false;
  gen_ingest->add_option("--rankings", rankings, "Ranking file (1-based item ids, best first)");
  gen_ingest->add_option("--format", ranking_format, "csv or preflib");
  gen_ingest->add_option("--expression", expression, "Expression CSV with an item-id header");
  gen_ingest->add_option("--universe", universe, "Item ids to keep, one per line (expression only)");
  gen_ingest->add_flag("--signed", signed_order, "Rank expression scores by signed value");
  gen_ingest->add_option("--m", m, "Items (rankings only)");
  gen_ingest->add_option("--n", n, "Top items marked per row")->required();
  gen_ingest->add_option("--out", out, "Output dataset path");

  // train
  auto* train = app.add_subcommand("train", "Fit a circuit to a dataset");
  std::string dataset, circuit_path;
  TrainArgs targs;
  train->add_option("--dataset", dataset, "Training dataset file")->required()->check(CLI::ExistingFile);
  train->add_option("--circuit", circuit_path, "Start from this checkpoint instead of --mesh/--init");
  add_train_options(train, targs);
  train->add_option("--out-dir", out_dir, "Directory for trace, evaluations and checkpoints");

  // eval
  auto* eval = app.add_subcommand("eval", "Score a circuit against a test set");
  std::string test_path, kernel_name = "mod2", label = "model";
  double sigma = 3.0;
  std::size_t repeats = 5;
  eval->add_option("--circuit", circuit_path, "Circuit checkpoint")->required()->check(CLI::ExistingFile);
  eval->add_option("--test", test_path, "Test dataset file")->required()->check(CLI::ExistingFile);
  eval->add_option("--sigma", sigma, "Kernel bandwidth");
  eval->add_option("--kernel", kernel_name, "mod2 or gaussian");
  eval->add_option("--repeats", repeats, "Independent sample sets");
  eval->add_option("--label", label, "Row label in eval.csv");
  eval->add_option("--seed", seed, "Sampling seed")->required();
  eval->add_option("--out-dir", out_dir, "Output directory");

  // baseline
  auto* baseline = app.add_subcommand("baseline", "Score a classical comparison model");
  baseline->require_subcommand(1);
  auto* base_rbm = baseline->add_subcommand("rbm", "CD-1 restricted Boltzmann machine");
  auto* base_uniform = baseline->add_subcommand("uniform", "Uniform fixed-weight model");
  auto* base_t2t = baseline->add_subcommand("test2test", "Test set halves against each other");
  std::string train_path;
  pmmd_rbm_options rbm;
  pmmd_rbm_options_init(&rbm);
  base_rbm->add_option("--train", train_path, "RBM training dataset")->required()->check(CLI::ExistingFile);
  base_rbm->add_option("--hidden", rbm.hidden, "Hidden units (0: m)");
  base_rbm->add_option("--epochs", rbm.epochs, "Training epochs");
  base_rbm->add_option("--rbm-lr", rbm.lr, "Learning rate");
  base_rbm->add_option("--batch", rbm.batch_size, "Minibatch size");
  for (auto* sub : {base_rbm, base_uniform, base_t2t}) {
    sub->add_option("--test", test_path, "Test dataset file")->required()->check(CLI::ExistingFile);
    sub->add_option("--sigma", sigma, "Kernel bandwidth");
    sub->add_option("--kernel", kernel_name, "mod2 or gaussian");
    sub->add_option("--repeats", repeats, "Repeats");
    sub->add_option("--seed", seed, "Seed")->required();
    sub->add_option("--out-dir", out_dir, "Output directory");
  }

  // check-grad
  auto* check_grad = app.add_subcommand("check-grad", "Compare analytic gradients with central differences");
  std::string mesh = "clements_rectangular";
  double h = 1e-6, tol = 1e-4, grad_sigma = 1.0;
  std::size_t kbatch = 64, zbatch = 64, xbatch = 32;
  check_grad->add_option("--m", m, "Modes")->required();
  check_grad->add_option("--n", n, "Photons")->required();
  check_grad->add_option("--mesh", mesh, "Mesh kind");
  check_grad->add_option("--fd-step", h, "Central-difference step");
  check_grad->add_option("--tol", tol, "Largest accepted relative error");
  check_grad->add_option("--sigma", grad_sigma, "Kernel bandwidth");
  check_grad->add_option("--kbatch", kbatch, "|K|");
  check_grad->add_option("--zbatch", zbatch, "|Z|");
  check_grad->add_option("--xbatch", xbatch, "|X|");
  check_grad->add_option("--seed", seed, "Seed for parameters, data and batches")->required();
  check_grad->add_option("--out-dir", out_dir, "Output directory");

  // oracle
  auto* oracle = app.add_subcommand("oracle", "Exact desk-scale reference values");
  oracle->require_subcommand(1);
  auto* oracle_identity = oracle->add_subcommand("kernel-identity", "Mask sum of the optical observable vs the brute-force kernel sum");
  oracle_identity->add_option("--m", m, "Modes")->required();
  oracle_identity->add_option("--n", n, "Photons")->required();
  oracle_identity->add_option("--sigma", sigma, "Kernel bandwidth");
  oracle_identity->add_option("--tol", tol, "Largest accepted absolute difference");
  oracle_identity->add_option("--seed", seed, "Unitary seed")->required();
  oracle_identity->add_option("--out-dir", out_dir, "Output directory");
  auto* oracle_mmd = oracle->add_subcommand("mmd", "Exact MMD between a circuit and a dataset's empirical distribution");
  oracle_mmd->add_option("--circuit", circuit_path, "Circuit checkpoint")->required()->check(CLI::ExistingFile);
  oracle_mmd->add_option("--dataset", dataset, "Dataset file")->required()->check(CLI::ExistingFile);
  oracle_mmd->add_option("--sigma", sigma, "Kernel bandwidth");
  oracle_mmd->add_option("--kernel", kernel_name, "mod2 or gaussian");
  oracle_mmd->add_option("--out-dir", out_dir, "Output directory");

  // grid
  auto* grid = app.add_subcommand("grid", "Train over a grid of (lr, init epsilon, sigma)");
  TrainArgs gargs;
  std::vector<double> lrs{0.01}, epsilons{0.5}, sigmas{3.0};
  grid->add_option("--dataset", dataset, "Training dataset file")->required()->check(CLI::ExistingFile);
  add_train_options(grid, gargs);
  grid->add_option("--lrs", lrs, "Learning rates")->delimiter(',');
  grid->add_option("--epsilons", epsilons, "identity_perturbed epsilons")->delimiter(',');
  grid->add_option("--sigmas", sigmas, "Bandwidths")->delimiter(',');
  grid->add_option("--out-dir", out_dir, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.get_exit_code() ? e.get_exit_code() : 2;
  }

  // The innermost parsed subcommand names the command.
  const CLI::App* leaf = &app;
  std::string command;
  while (!leaf->get_subcommands().empty()) {
    leaf = leaf->get_subcommands().front();
    command += (command.empty() ? "" : " ") + leaf->get_name();
  }

  try {
    if (threads > 0) check(pmmd_set_threads(threads));
    Manifest manifest(command);
    manifest.set_argv(std::vector<std::string>(argv, argv + argc));
    if (auto* cfg = app.get_option("--config"); cfg->count() > 0)
      manifest.set_config_path(cfg->results().front());
    record_options(leaf, manifest);

    fs::path dir = out_dir;
    std::string manifest_path;
    if (leaf->get_parent() == gen) {
      const fs::path target = out;
      if (target.has_parent_path()) fs::create_directories(target.parent_path());
      manifest_path = out + ".manifest.json";
    } else {
      fs::create_directories(dir);
      manifest_path = (dir / "manifest.json").string();
    }
    auto finish = [&] {
      const double ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
      pmmd_cli::write_file(manifest_path, manifest.render(ms));
    };

    if (leaf->get_parent() == gen) {
      pmmd_dataset* raw = nullptr;
      if (leaf == gen_boson) {
        check(pmmd_dataset_generate_boson(m, n, size, seed, collision_free ? 1 : 0, &raw));
      } else if (leaf == gen_uniform) {
        check(pmmd_dataset_generate_uniform(m, n, size, seed, &raw));
      } else if (!rankings.empty() == !expression.empty()) {
        throw Failure("ingest needs exactly one of --rankings and --expression");
      } else if (!rankings.empty()) {
        if (m == 0) throw Failure("ingest --rankings needs --m");
        check(pmmd_dataset_ingest_rankings(rankings.c_str(), ranking_format.c_str(), m, n, &raw));
      } else {
        std::vector<std::string> ids;
        if (!universe.empty()) ids = read_lines(universe);
        std::vector<const char*> ptrs;
        for (const auto& id : ids) ptrs.push_back(id.c_str());
        check(pmmd_dataset_ingest_expression(expression.c_str(), ptrs.empty() ? nullptr : ptrs.data(),
                                             ptrs.size(), n, signed_order ? 1 : 0, &raw));
      }
      DatasetPtr ds(raw);
      check(pmmd_dataset_add_comment(ds.get(), ("manifest " + manifest.hash()).c_str()));
      check(pmmd_dataset_write(ds.get(), out.c_str()));
      manifest.record_output(out);
      std::size_t records = 0;
      check(pmmd_dataset_info(ds.get(), nullptr, nullptr, &records));
      std::cout << "wrote " << records << " records to " << out << "\n";
    } else if (leaf == train) {
      Schedule schedule;
      finish_train_options(targs, schedule);
      auto [train_ds, test_ds] = train_test(dataset, targs);
      std::size_t dm = 0, dn = 0;
      check(pmmd_dataset_info(train_ds.get(), &dm, &dn, nullptr));
      CircuitPtr start;
      if (!circuit_path.empty()) {
        start = load_circuit(circuit_path);
      } else {
        pmmd_circuit* raw = nullptr;
        if (!targs.input.empty() && targs.input.size() != dn)
          throw Failure("--input lists " + std::to_string(targs.input.size()) +
                        " modes but the dataset has weight " + std::to_string(dn));
        check(pmmd_circuit_create(targs.mesh.c_str(), dm, dn,
                                  targs.input.empty() ? nullptr : targs.input.data(),
                                  targs.init.c_str(), targs.options.seed, &raw));
        start.reset(raw);
      }
      fs::create_directories(dir / "checkpoints");
      CheckpointSink sink{dir / "checkpoints", &manifest, {}};
      pmmd_run* raw_run = nullptr;
      check(pmmd_train(start.get(), train_ds.get(), test_ds.get(), &targs.options, on_checkpoint,
                       &sink, &raw_run));
      RunPtr run(raw_run);
      if (!sink.error.empty()) throw Failure("checkpoint write failed: " + sink.error);

      const std::string hash = manifest.hash();
      pmmd_cli::Csv trace(hash, {"step", "sigma", "mmd", "grad_norm", "wall_ms"});
      for (std::size_t i = 0; i < pmmd_run_trace_length(run.get()); ++i) {
        pmmd_trace_record r;
        check(pmmd_run_trace_record(run.get(), i, &r));
        trace.row({std::to_string(r.step), fmt(r.sigma), fmt(r.mmd), fmt(r.grad_norm), fmt(r.wall_ms)});
      }
      manifest.write_output((dir / "trace.csv").string(), trace.text());
      std::vector<std::pair<std::string, pmmd_summary>> rows;
      for (std::size_t i = 0; i < pmmd_run_eval_count(run.get()); ++i) {
        pmmd_eval_record e;
        check(pmmd_run_eval_record(run.get(), i, &e));
        rows.emplace_back("step_" + std::to_string(e.step), e.result);
      }
      write_eval_csv(manifest, dir, rows);
      pmmd_circuit* raw_final = nullptr;
      check(pmmd_run_final_circuit(run.get(), &raw_final));
      CircuitPtr final_circuit(raw_final);
      const std::string final_path = (dir / "circuit.txt").string();
      check(pmmd_circuit_save(final_circuit.get(), final_path.c_str()));
      manifest.record_output(final_path);
      pmmd_trace_record last;
      check(pmmd_run_trace_record(run.get(), pmmd_run_trace_length(run.get()) - 1, &last));
      std::cout << "trained " << last.step << " steps, last sampled loss " << fmt(last.mmd) << "\n";
      if (!rows.empty()) std::cout << summary_line("final evaluation", rows.back().second) << "\n";
    } else if (leaf == eval) {
      CircuitPtr c = load_circuit(circuit_path);
      DatasetPtr test = load_dataset(test_path);
      pmmd_summary s;
      check(pmmd_evaluate(c.get(), test.get(), parse_kernel(kernel_name), sigma, repeats, seed, &s));
      write_eval_csv(manifest, dir, {{label, s}});
      std::cout << summary_line(label, s) << "\n";
    } else if (leaf->get_parent() == baseline) {
      DatasetPtr test = load_dataset(test_path);
      const pmmd_kernel kernel = parse_kernel(kernel_name);
      pmmd_summary s;
      std::vector<std::string> comments;
      if (leaf == base_uniform) {
        check(pmmd_baseline_uniform(test.get(), kernel, sigma, repeats, seed, &s));
      } else if (leaf == base_t2t) {
        check(pmmd_baseline_test_to_test(test.get(), kernel, sigma, repeats, seed, &s));
      } else {
        DatasetPtr train_ds = load_dataset(train_path);
        std::size_t fallbacks = 0;
        double recon = 0.0;
        check(pmmd_baseline_rbm(train_ds.get(), test.get(), &rbm, kernel, sigma, repeats, seed, &s,
                                &fallbacks, &recon));
        comments.push_back("rbm_fallback_samples " + std::to_string(fallbacks));
        comments.push_back("rbm_final_reconstruction_error " + fmt(recon));
      }
      write_eval_csv(manifest, dir, {{leaf->get_name(), s}}, comments);
      std::cout << summary_line(leaf->get_name(), s) << "\n";
    } else if (leaf == check_grad) {
      pmmd_grad_check r;
      check(pmmd_check_grad(mesh.c_str(), m, n, grad_sigma, kbatch, zbatch, xbatch, h, seed, &r));
      pmmd_cli::Csv csv(manifest.hash(), {"mesh", "m", "n", "params", "loss", "max_relative_error"});
      csv.row({mesh, std::to_string(m), std::to_string(n), std::to_string(r.param_count), fmt(r.loss),
               fmt(r.max_relative_error)});
      manifest.write_output((dir / "check_grad.csv").string(), csv.text());
      finish();
      std::cout << "max relative error " << fmt(r.max_relative_error) << " over " << r.param_count
                << " parameters\n";
      if (!(r.max_relative_error < tol)) {
        std::cerr << "error: gradient check failed: max relative error " << fmt(r.max_relative_error)
                  << " is not below " << fmt(tol) << "\n";
        return 1;
      }
      return 0;
    } else if (leaf == oracle_identity) {
      pmmd_kernel_identity_report r;
      check(pmmd_oracle_kernel_identity(m, n, sigma, seed, &r));
      const double d_mod2 = std::abs(r.lo_mod2 - r.brute_mod2);
      const double d_cf = std::abs(r.lo_gaussian_cf - r.brute_gaussian_cf);
      pmmd_cli::Csv csv(manifest.hash(), {"quantity", "value"});
      csv.row({"lo_mod2", fmt(r.lo_mod2)});
      csv.row({"brute_mod2", fmt(r.brute_mod2)});
      csv.row({"abs_diff_mod2", fmt(d_mod2)});
      csv.row({"lo_gaussian_collision_free", fmt(r.lo_gaussian_cf)});
      csv.row({"brute_gaussian_collision_free", fmt(r.brute_gaussian_cf)});
      csv.row({"abs_diff_gaussian_collision_free", fmt(d_cf)});
      csv.row({"collision_mass", fmt(r.collision_mass)});
      manifest.write_output((dir / "oracle.csv").string(), csv.text());
      finish();
      std::cout << "mod2 difference " << fmt(d_mod2) << ", collision-free Gaussian difference "
                << fmt(d_cf) << ", collision mass " << fmt(r.collision_mass) << "\n";
      if (!(d_mod2 < tol && d_cf < tol)) {
        std::cerr << "error: oracle disagreement above " << fmt(tol) << "\n";
        return 1;
      }
      return 0;
    } else if (leaf == oracle_mmd) {
      CircuitPtr c = load_circuit(circuit_path);
      DatasetPtr ds = load_dataset(dataset);
      double value = 0.0;
      check(pmmd_oracle_exact_mmd(c.get(), ds.get(), parse_kernel(kernel_name), sigma, &value));
      pmmd_cli::Csv csv(manifest.hash(), {"quantity", "value"});
      csv.row({"exact_mmd", fmt(value)});
      manifest.write_output((dir / "oracle.csv").string(), csv.text());
      std::cout << "exact MMD " << fmt(value) << "\n";
    } else if (leaf == grid) {
      Schedule schedule;
      finish_train_options(gargs, schedule);
      gargs.options.schedule_len = 0;
      auto [train_ds, test_ds] = train_test(dataset, gargs);
      std::vector<pmmd_grid_point> points(lrs.size() * epsilons.size() * sigmas.size());
      check(pmmd_grid(gargs.mesh.c_str(), train_ds.get(), test_ds.get(), &gargs.options, lrs.data(),
                      lrs.size(), epsilons.data(), epsilons.size(), sigmas.data(), sigmas.size(),
                      points.data()));
      pmmd_cli::Csv csv(manifest.hash(),
                        {"lr", "epsilon", "sigma", "final_loss", "eval_mean", "eval_std", "repeats"});
      for (const auto& p : points)
        csv.row({fmt(p.lr), fmt(p.epsilon), fmt(p.sigma), fmt(p.final_loss), fmt(p.evaluation.mean),
                 fmt(p.evaluation.std), std::to_string(p.evaluation.repeats)});
      manifest.write_output((dir / "grid.csv").string(), csv.text());
      std::cout << "ran " << points.size() << " grid points\n";
    }
    finish();
  } catch (const std::exception& e) {
    std::string msg = e.what();
    for (auto& ch : msg)
      if (ch == '\n') ch = ' ';
    std::cerr << "error: " << msg << "\n";
    return 1;
  }
  return 0;
}
