#include "photonmmd/photonmmd.h"

#include <exception>
#include <map>
#include <new>
#include <string>
#include <vector>

#include "pmmd/baselines.hpp"
#include "pmmd/boson.hpp"
#include "pmmd/circuits.hpp"
#include "pmmd/dataio.hpp"
#include "pmmd/error.hpp"
#include "pmmd/grad.hpp"
#include "pmmd/mmd.hpp"
#include "pmmd/parallel.hpp"
#include "pmmd/trainer.hpp"

struct pmmd_dataset {
  pmmd::Dataset value;
};

struct pmmd_circuit {
  pmmd::CircuitSpec value;
};

struct pmmd_run {
  pmmd::TrainResult value;
};

namespace {

thread_local std::string last_error;

pmmd_status status_of(pmmd::ErrorCode code) {
  switch (code) {
    case pmmd::ErrorCode::invalid_argument: return PMMD_ERR_INVALID_ARGUMENT;
    case pmmd::ErrorCode::shape_mismatch: return PMMD_ERR_SHAPE_MISMATCH;
    case pmmd::ErrorCode::cap_exceeded: return PMMD_ERR_CAP_EXCEEDED;
    case pmmd::ErrorCode::parse_error: return PMMD_ERR_PARSE;
    case pmmd::ErrorCode::io_error: return PMMD_ERR_IO;
    case pmmd::ErrorCode::numeric_error: return PMMD_ERR_NUMERIC;
  }
  return PMMD_ERR_INTERNAL;
}

template <class F>
pmmd_status guarded(F&& body) {
  last_error.clear();
  try {
    body();
    return PMMD_OK;
  } catch (const pmmd::Error& e) {
    last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
  } catch (const std::exception& e) {
    last_error = e.what();
  } catch (...) {
    last_error = "unknown error";
  }
  return PMMD_ERR_INTERNAL;
}

void need(const void* p, const char* what) {
  pmmd::require(p != nullptr, pmmd::ErrorCode::invalid_argument,
                std::string(what) + " must not be NULL");
}

pmmd::Kernel make_kernel(pmmd_kernel kind, double sigma) {
  pmmd::require(kind == PMMD_KERNEL_MOD2 || kind == PMMD_KERNEL_GAUSSIAN,
                pmmd::ErrorCode::invalid_argument, "unknown kernel kind");
  return {kind == PMMD_KERNEL_MOD2 ? pmmd::KernelKind::mod2 : pmmd::KernelKind::gaussian, sigma};
}

pmmd_summary to_c(const pmmd::MeanStd& s) { return {s.mean, s.std, s.values.size()}; }

pmmd::TrainConfig to_config(const pmmd_train_options& o) {
  pmmd::TrainConfig cfg;
  cfg.steps = o.steps;
  cfg.adam = {o.lr, o.beta1, o.beta2, o.eps};
  cfg.mmd = {o.sigma, o.mask_batch, o.glynn_batch, o.data_batch};
  if (o.schedule_len > 0) {
    need(o.schedule_sigmas, "schedule_sigmas");
    need(o.schedule_steps, "schedule_steps");
    for (std::size_t i = 0; i < o.schedule_len; ++i)
      cfg.sigma_schedule.push_back({o.schedule_sigmas[i], o.schedule_steps[i]});
  }
  cfg.seed = o.seed;
  cfg.eval_every = o.eval_every;
  cfg.eval_repeats = o.eval_repeats;
  cfg.eval_kernel = make_kernel(o.eval_kernel, 1.0).kind;
  cfg.frozen_batches = o.frozen_batches != 0;
  return cfg;
}

template <class T, class V>
T* wrap(V&& value) {
  return new T{std::forward<V>(value)};
}

}  // namespace

extern "C" {

const char* pmmd_last_error(void) { return last_error.c_str(); }

const char* pmmd_status_name(pmmd_status status) {
  switch (status) {
    case PMMD_OK: return "ok";
    case PMMD_ERR_INVALID_ARGUMENT: return "invalid argument";
    case PMMD_ERR_SHAPE_MISMATCH: return "shape mismatch";
    case PMMD_ERR_CAP_EXCEEDED: return "cap exceeded";
    case PMMD_ERR_PARSE: return "parse error";
    case PMMD_ERR_IO: return "I/O error";
    case PMMD_ERR_NUMERIC: return "numeric error";
    case PMMD_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* pmmd_version(void) { return "1.0.0"; }

pmmd_status pmmd_set_threads(unsigned threads) {
  return guarded([&] {
    pmmd::require(threads >= 1, pmmd::ErrorCode::invalid_argument, "thread count must be >= 1");
    pmmd::set_thread_count(threads);
  });
}

pmmd_status pmmd_dataset_generate_boson(size_t m, size_t n, size_t size, uint64_t seed,
                                        int collision_free, pmmd_dataset** out) {
  return guarded([&] {
    need(out, "out");
    pmmd::BosonDatasetOptions opts;
    opts.collision_free = collision_free != 0;
    *out = wrap<pmmd_dataset>(pmmd::generate_boson_dataset(m, n, size, seed, opts));
  });
}

pmmd_status pmmd_dataset_generate_uniform(size_t m, size_t n, size_t size, uint64_t seed,
                                          pmmd_dataset** out) {
  return guarded([&] {
    need(out, "out");
    pmmd::require(n >= 1, pmmd::ErrorCode::invalid_argument, "weight n must be >= 1");
    pmmd::Rng rng = pmmd::substream(seed, pmmd::Stream::dataset);
    pmmd::Dataset ds;
    ds.m = m;
    ds.n = n;
    ds.records = pmmd::uniform_fixed_hw_sample(m, n, size, rng);
    ds.provenance.push_back("generator uniform_fixed_weight seed=" + std::to_string(seed) +
                            " m=" + std::to_string(m) + " n=" + std::to_string(n));
    ds.validate();
    *out = wrap<pmmd_dataset>(std::move(ds));
  });
}

pmmd_status pmmd_dataset_ingest_rankings(const char* path, const char* format, size_t m,
                                         size_t n, pmmd_dataset** out) {
  return guarded([&] {
    need(path, "path");
    need(format, "format");
    need(out, "out");
    const std::string fmt = format;
    std::vector<std::vector<std::size_t>> rows;
    if (fmt == "csv")
      rows = pmmd::read_ranking_csv(path);
    else if (fmt == "preflib")
      rows = pmmd::read_preflib_strict_order(path);
    else
      pmmd::fail(pmmd::ErrorCode::invalid_argument, "unknown ranking format '" + fmt + "'");
    pmmd::Dataset ds = pmmd::ingest_rankings(rows, m, n);
    ds.provenance.insert(ds.provenance.begin(),
                         "ingest rankings format=" + fmt + " source=" + std::string(path));
    *out = wrap<pmmd_dataset>(std::move(ds));
  });
}

pmmd_status pmmd_dataset_ingest_expression(const char* path, const char* const* universe,
                                           size_t universe_len, size_t n, int signed_order,
                                           pmmd_dataset** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    const pmmd::ExpressionTable table = pmmd::read_expression_csv(path);
    std::vector<std::string> items;
    if (universe_len > 0) {
      need(universe, "universe");
      for (std::size_t i = 0; i < universe_len; ++i) {
        need(universe[i], "universe entry");
        items.emplace_back(universe[i]);
      }
    } else {
      items = table.items;
    }
    pmmd::Dataset ds = pmmd::ingest_expression_table(table, items, n, signed_order != 0);
    ds.provenance.insert(ds.provenance.begin(),
                         "ingest expression source=" + std::string(path) +
                             " order=" + (signed_order ? "signed" : "magnitude"));
    *out = wrap<pmmd_dataset>(std::move(ds));
  });
}

pmmd_status pmmd_dataset_read(const char* path, pmmd_dataset** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = wrap<pmmd_dataset>(pmmd::read_dataset(path));
  });
}

pmmd_status pmmd_dataset_write(const pmmd_dataset* ds, const char* path) {
  return guarded([&] {
    need(ds, "dataset");
    need(path, "path");
    pmmd::write_dataset(ds->value, path);
  });
}

pmmd_status pmmd_dataset_info(const pmmd_dataset* ds, size_t* m, size_t* n, size_t* size) {
  return guarded([&] {
    need(ds, "dataset");
    if (m) *m = ds->value.m;
    if (n) *n = ds->value.n;
    if (size) *size = ds->value.records.size();
  });
}

pmmd_status pmmd_dataset_add_comment(pmmd_dataset* ds, const char* text) {
  return guarded([&] {
    need(ds, "dataset");
    need(text, "text");
    const std::string line = text;
    pmmd::require(line.find('\n') == std::string::npos, pmmd::ErrorCode::invalid_argument,
                  "dataset comments must be a single line");
    ds->value.provenance.push_back(line);
  });
}

pmmd_status pmmd_dataset_split(const pmmd_dataset* ds, double train_fraction, uint64_t seed,
                               pmmd_dataset** train, pmmd_dataset** test) {
  return guarded([&] {
    need(ds, "dataset");
    need(train, "train");
    need(test, "test");
    auto [a, b] = pmmd::shuffle_split(ds->value, train_fraction, seed);
    auto* first = wrap<pmmd_dataset>(std::move(a));
    try {
      *test = wrap<pmmd_dataset>(std::move(b));
    } catch (...) {
      delete first;
      throw;
    }
    *train = first;
  });
}

void pmmd_dataset_free(pmmd_dataset* ds) { delete ds; }

pmmd_status pmmd_circuit_create(const char* mesh, size_t m, size_t n, const size_t* positions,
                                const char* init, uint64_t seed, pmmd_circuit** out) {
  return guarded([&] {
    need(mesh, "mesh");
    need(init, "init");
    need(out, "out");
    const pmmd::MeshKind kind = pmmd::parse_mesh_kind(mesh);
    std::optional<std::vector<std::size_t>> pos;
    if (positions) pos = std::vector<std::size_t>(positions, positions + n);
    pmmd::Rng rng = pmmd::substream(seed, pmmd::Stream::params);
    pmmd::CircuitSpec spec{kind, m,
                           pmmd::initialize_parameters(kind, m, pmmd::InitStrategy::parse(init), rng),
                           pmmd::make_input_state(m, n, pos)};
    spec.validate();
    *out = wrap<pmmd_circuit>(std::move(spec));
  });
}

pmmd_status pmmd_circuit_load(const char* path, pmmd_circuit** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = wrap<pmmd_circuit>(pmmd::parse_circuit(pmmd::read_text_file(path)));
  });
}

pmmd_status pmmd_circuit_save(const pmmd_circuit* c, const char* path) {
  return guarded([&] {
    need(c, "circuit");
    need(path, "path");
    pmmd::write_text_file(path, pmmd::serialize_circuit(c->value));
  });
}

pmmd_status pmmd_circuit_info(const pmmd_circuit* c, size_t* m, size_t* n, size_t* param_count) {
  return guarded([&] {
    need(c, "circuit");
    if (m) *m = c->value.m;
    if (n) *n = c->value.photons();
    if (param_count) *param_count = c->value.params.size();
  });
}

pmmd_status pmmd_circuit_unitarity_defect(const pmmd_circuit* c, double* defect) {
  return guarded([&] {
    need(c, "circuit");
    need(defect, "defect");
    *defect = pmmd::unitarity_defect(pmmd::compose_mesh(c->value));
  });
}

void pmmd_circuit_free(pmmd_circuit* c) { delete c; }

void pmmd_train_options_init(pmmd_train_options* o) {
  if (!o) return;
  const pmmd::TrainConfig cfg;
  *o = pmmd_train_options{};
  o->steps = cfg.steps;
  o->lr = cfg.adam.lr;
  o->beta1 = cfg.adam.beta1;
  o->beta2 = cfg.adam.beta2;
  o->eps = cfg.adam.eps;
  o->sigma = cfg.mmd.sigma;
  o->mask_batch = cfg.mmd.mask_batch;
  o->glynn_batch = cfg.mmd.glynn_batch;
  o->data_batch = cfg.mmd.data_batch;
  o->seed = cfg.seed;
  o->eval_every = cfg.eval_every;
  o->eval_repeats = cfg.eval_repeats;
  o->eval_kernel = PMMD_KERNEL_MOD2;
  o->frozen_batches = 0;
}

pmmd_status pmmd_train(const pmmd_circuit* initial, const pmmd_dataset* train,
                       const pmmd_dataset* test, const pmmd_train_options* options,
                       pmmd_checkpoint_fn checkpoint, void* user, pmmd_run** out) {
  return guarded([&] {
    need(initial, "initial circuit");
    need(train, "training set");
    need(options, "options");
    need(out, "out");
    const pmmd::TrainConfig cfg = to_config(*options);
    pmmd::CheckpointFn hook;
    if (checkpoint)
      hook = [&](std::size_t step, const pmmd::CircuitSpec& spec) {
        const pmmd_circuit view{spec};
        checkpoint(step, &view, user);
      };
    std::span<const pmmd::OccupationVector> test_records;
    if (test) test_records = test->value.records;
    *out = wrap<pmmd_run>(pmmd::train(initial->value, train->value.records, test_records, cfg, hook));
  });
}

size_t pmmd_run_trace_length(const pmmd_run* run) { return run ? run->value.trace.size() : 0; }

pmmd_status pmmd_run_trace_record(const pmmd_run* run, size_t index, pmmd_trace_record* record) {
  return guarded([&] {
    need(run, "run");
    need(record, "record");
    pmmd::require(index < run->value.trace.size(), pmmd::ErrorCode::invalid_argument,
                  "trace index out of range");
    const auto& r = run->value.trace[index];
    *record = {r.step, r.sigma, r.mmd, r.grad_norm, r.wall_ms};
  });
}

size_t pmmd_run_eval_count(const pmmd_run* run) { return run ? run->value.evals.size() : 0; }

pmmd_status pmmd_run_eval_record(const pmmd_run* run, size_t index, pmmd_eval_record* record) {
  return guarded([&] {
    need(run, "run");
    need(record, "record");
    pmmd::require(index < run->value.evals.size(), pmmd::ErrorCode::invalid_argument,
                  "evaluation index out of range");
    const auto& e = run->value.evals[index];
    *record = {e.step, e.sigma, to_c(e.result)};
  });
}

pmmd_status pmmd_run_final_circuit(const pmmd_run* run, pmmd_circuit** out) {
  return guarded([&] {
    need(run, "run");
    need(out, "out");
    *out = wrap<pmmd_circuit>(run->value.spec);
  });
}

void pmmd_run_free(pmmd_run* run) { delete run; }

pmmd_status pmmd_evaluate(const pmmd_circuit* c, const pmmd_dataset* test, pmmd_kernel kernel,
                          double sigma, size_t repeats, uint64_t seed, pmmd_summary* out) {
  return guarded([&] {
    need(c, "circuit");
    need(test, "test set");
    need(out, "out");
    *out = to_c(pmmd::evaluate_model(c->value, test->value.records, make_kernel(kernel, sigma),
                                     repeats, seed));
  });
}

pmmd_status pmmd_baseline_uniform(const pmmd_dataset* test, pmmd_kernel kernel, double sigma,
                                  size_t repeats, uint64_t seed, pmmd_summary* out) {
  return guarded([&] {
    need(test, "test set");
    need(out, "out");
    pmmd::Rng rng = pmmd::substream(seed, pmmd::Stream::baseline);
    *out = to_c(pmmd::uniform_baseline_mmd(test->value.records, test->value.n,
                                           make_kernel(kernel, sigma), repeats, rng));
  });
}

pmmd_status pmmd_baseline_test_to_test(const pmmd_dataset* test, pmmd_kernel kernel,
                                       double sigma, size_t repeats, uint64_t seed,
                                       pmmd_summary* out) {
  return guarded([&] {
    need(test, "test set");
    need(out, "out");
    pmmd::Rng rng = pmmd::substream(seed, pmmd::Stream::baseline);
    *out = to_c(pmmd::test_to_test_mmd(test->value.records, make_kernel(kernel, sigma), repeats, rng));
  });
}

void pmmd_rbm_options_init(pmmd_rbm_options* o) {
  if (!o) return;
  const pmmd::RbmTrainOptions d;
  *o = {d.hidden, d.epochs, d.lr, d.batch_size};
}

pmmd_status pmmd_baseline_rbm(const pmmd_dataset* train, const pmmd_dataset* test,
                              const pmmd_rbm_options* options, pmmd_kernel kernel, double sigma,
                              size_t repeats, uint64_t seed, pmmd_summary* out,
                              size_t* fallback_count, double* final_reconstruction_error) {
  return guarded([&] {
    need(train, "training set");
    need(test, "test set");
    need(options, "options");
    need(out, "out");
    const pmmd::Kernel k = make_kernel(kernel, sigma);
    pmmd::Rng rng = pmmd::substream(seed, pmmd::Stream::baseline);
    const pmmd::RbmTrainOptions opts{options->hidden, options->epochs, options->lr,
                                     options->batch_size};
    const pmmd::RbmTrainResult fit = pmmd::rbm_train(train->value.records, opts, rng);
    std::vector<double> values;
    std::size_t fallbacks = 0;
    for (std::size_t r = 0; r < repeats; ++r) {
      const auto drawn = pmmd::rbm_sample(fit.model, test->value.records.size(), test->value.n, rng);
      fallbacks += drawn.fallback_count;
      values.push_back(pmmd::mmd_unbiased_samples(drawn.samples, test->value.records, k));
    }
    *out = to_c(pmmd::summarize(std::move(values)));
    if (fallback_count) *fallback_count = fallbacks;
    if (final_reconstruction_error)
      *final_reconstruction_error =
          fit.reconstruction_error.empty() ? pmmd::rbm_reconstruction_error(fit.model, train->value.records)
                                           : fit.reconstruction_error.back();
  });
}

pmmd_status pmmd_grid(const char* mesh, const pmmd_dataset* train, const pmmd_dataset* test,
                      const pmmd_train_options* base, const double* lrs, size_t n_lr,
                      const double* epsilons, size_t n_eps, const double* sigmas, size_t n_sigma,
                      pmmd_grid_point* out) {
  return guarded([&] {
    need(mesh, "mesh");
    need(train, "training set");
    need(base, "base options");
    need(lrs, "lrs");
    need(epsilons, "epsilons");
    need(sigmas, "sigmas");
    need(out, "out");
    const pmmd::TrainConfig cfg = to_config(*base);
    const pmmd::MeshKind kind = pmmd::parse_mesh_kind(mesh);
    std::span<const pmmd::OccupationVector> test_records;
    if (test) test_records = test->value.records;
    const auto points = pmmd::run_grid(
        kind, pmmd::make_input_state(train->value.m, train->value.n), train->value.records,
        test_records, cfg, {lrs, lrs + n_lr}, {epsilons, epsilons + n_eps},
        {sigmas, sigmas + n_sigma});
    for (std::size_t i = 0; i < points.size(); ++i)
      out[i] = {points[i].lr, points[i].epsilon, points[i].sigma, points[i].final_loss,
                to_c(points[i].evaluation)};
  });
}

pmmd_status pmmd_check_grad(const char* mesh, size_t m, size_t n, double sigma,
                            size_t mask_batch, size_t glynn_batch, size_t data_batch, double h,
                            uint64_t seed, pmmd_grad_check* out) {
  return guarded([&] {
    need(mesh, "mesh");
    need(out, "out");
    const pmmd::MeshKind kind = pmmd::parse_mesh_kind(mesh);
    pmmd::Rng rng = pmmd::substream(seed, pmmd::Stream::params);
    pmmd::CircuitSpec spec{kind, m,
                           pmmd::initialize_parameters(kind, m, pmmd::InitStrategy::parse("random"), rng),
                           pmmd::make_input_state(m, n)};
    spec.validate();
    const pmmd::MMDConfig cfg{sigma, mask_batch, glynn_batch, data_batch};
    cfg.validate();
    const pmmd::Dataset target = pmmd::generate_boson_dataset(m, n, data_batch, seed, {});
    const pmmd::EstimatorBatches batches =
        pmmd::draw_estimator_batches(target.records, m, n, cfg, seed, 0);
    out->param_count = spec.params.size();
    out->loss = pmmd::mmd_hat_figure1(batches, spec);
    out->max_relative_error = pmmd::finite_difference_check(spec, batches, h);
  });
}

pmmd_status pmmd_oracle_kernel_identity(size_t m, size_t n, double sigma, uint64_t seed,
                                     pmmd_kernel_identity_report* out) {
  return guarded([&] {
    need(out, "out");
    const pmmd::ComplexMatrix u = pmmd::boson_dataset_unitary(m, seed);
    const pmmd::OccupationVector s = pmmd::make_input_state(m, n);
    const pmmd::OutputDistribution dist = pmmd::output_distribution(u, s);
    out->lo_mod2 = pmmd::mmd_lo_exact(u, s, sigma, pmmd::LoKernelMode::mod2);
    out->brute_mod2 = pmmd::self_kernel_term(dist, {pmmd::KernelKind::mod2, sigma});
    out->lo_gaussian_cf =
        pmmd::mmd_lo_exact(u, s, sigma, pmmd::LoKernelMode::gaussian_collision_free);
    const pmmd::Kernel gauss{pmmd::KernelKind::gaussian, sigma};
    double cf = 0.0;
    for (std::size_t i = 0; i < dist.domain.size(); ++i) {
      if (!dist.domain[i].collision_free()) continue;
      for (std::size_t j = 0; j < dist.domain.size(); ++j)
        if (dist.domain[j].collision_free())
          cf += dist.probabilities[i] * dist.probabilities[j] * gauss(dist.domain[i], dist.domain[j]);
    }
    out->brute_gaussian_cf = cf;
    out->collision_mass = dist.collision_mass();
  });
}

pmmd_status pmmd_oracle_exact_mmd(const pmmd_circuit* c, const pmmd_dataset* data,
                                  pmmd_kernel kernel, double sigma, double* out) {
  return guarded([&] {
    need(c, "circuit");
    need(data, "dataset");
    need(out, "out");
    const auto& spec = c->value;
    spec.validate();
    pmmd::require(data->value.m == spec.m && data->value.n == spec.photons(),
                  pmmd::ErrorCode::shape_mismatch,
                  "dataset m and weight differ from the circuit's");
    pmmd::require(!data->value.records.empty(), pmmd::ErrorCode::invalid_argument,
                  "dataset is empty");
    const pmmd::OutputDistribution model =
        pmmd::output_distribution(pmmd::compose_mesh(spec), spec.input_state);
    std::map<pmmd::OccupationVector, std::size_t> counts;
    for (const auto& x : data->value.records) ++counts[x];
    pmmd::OutputDistribution empirical;
    empirical.domain = model.domain;
    empirical.probabilities.assign(model.domain.size(), 0.0);
    const double total = static_cast<double>(data->value.records.size());
    for (std::size_t i = 0; i < model.domain.size(); ++i) {
      auto it = counts.find(model.domain[i]);
      if (it != counts.end()) empirical.probabilities[i] = static_cast<double>(it->second) / total;
    }
    *out = pmmd::mmd_exact(model, empirical, make_kernel(kernel, sigma));
  });
}

}  // extern "C"
