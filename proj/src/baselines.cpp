#include "pmmd/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pmmd/error.hpp"

namespace pmmd {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// log(1 + e^x) without overflow
double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

void hidden_probabilities(const RbmModel& rbm, std::span<const double> v, std::vector<double>& out) {
  out.assign(rbm.hidden_bias.begin(), rbm.hidden_bias.end());
  for (std::size_t i = 0; i < rbm.visible; ++i) {
    if (v[i] == 0.0) continue;
    for (std::size_t j = 0; j < rbm.hidden; ++j) out[j] += v[i] * rbm.weight(i, j);
  }
  for (auto& x : out) x = sigmoid(x);
}

void visible_probabilities(const RbmModel& rbm, std::span<const double> h, std::vector<double>& out) {
  out.assign(rbm.visible_bias.begin(), rbm.visible_bias.end());
  for (std::size_t i = 0; i < rbm.visible; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < rbm.hidden; ++j) acc += rbm.weight(i, j) * h[j];
    out[i] = sigmoid(out[i] + acc);
  }
}

void sample_bits(const std::vector<double>& prob, std::vector<double>& out, Rng& rng) {
  out.resize(prob.size());
  for (std::size_t i = 0; i < prob.size(); ++i) out[i] = uniform01(rng) < prob[i] ? 1.0 : 0.0;
}

std::vector<double> as_doubles(const OccupationVector& v) {
  std::vector<double> out(v.modes());
  for (std::size_t i = 0; i < v.modes(); ++i) out[i] = v[i];
  return out;
}

void require_binary(std::span<const OccupationVector> data) {
  require(!data.empty(), ErrorCode::invalid_argument, "RBM training needs a non-empty dataset");
  const std::size_t m = data.front().modes();
  for (std::size_t r = 0; r < data.size(); ++r) {
    require(data[r].modes() == m, ErrorCode::shape_mismatch,
            "RBM training data has records of different lengths");
    for (auto c : data[r].counts())
      require(c <= 1, ErrorCode::invalid_argument,
              "RBM training needs binary data; record " + std::to_string(r) +
                  " has an occupation above 1");
  }
}

}  // namespace

bool RbmModel::all_finite() const {
  auto finite = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  return finite(weights) && finite(visible_bias) && finite(hidden_bias);
}

RbmModel rbm_initialize(std::size_t visible, std::size_t hidden, Rng& rng) {
  require(visible >= 1 && hidden >= 1, ErrorCode::invalid_argument,
          "RBM needs at least one visible and one hidden unit");
  RbmModel rbm;
  rbm.visible = visible;
  rbm.hidden = hidden;
  rbm.weights.resize(visible * hidden);
  for (auto& w : rbm.weights) w = 0.01 * standard_normal(rng);
  rbm.visible_bias.assign(visible, 0.0);
  rbm.hidden_bias.assign(hidden, 0.0);
  return rbm;
}

double rbm_reconstruction_error(const RbmModel& model, std::span<const OccupationVector> data) {
  if (data.empty()) return 0.0;
  std::vector<double> ph, pv;
  double total = 0.0;
  for (const auto& x : data) {
    const auto v = as_doubles(x);
    hidden_probabilities(model, v, ph);
    visible_probabilities(model, ph, pv);
    for (std::size_t i = 0; i < v.size(); ++i) total += (v[i] - pv[i]) * (v[i] - pv[i]);
  }
  return total / static_cast<double>(data.size());
}

RbmTrainResult rbm_train(std::span<const OccupationVector> data, const RbmTrainOptions& options,
                         Rng& rng) {
  require_binary(data);
  require(options.lr > 0.0 && std::isfinite(options.lr), ErrorCode::invalid_argument,
          "RBM learning rate must be positive");
  require(options.batch_size >= 1, ErrorCode::invalid_argument, "RBM batch size must be >= 1");
  const std::size_t m = data.front().modes();
  const std::size_t h = options.hidden ? options.hidden : m;

  RbmTrainResult result;
  RbmModel& rbm = result.model;
  rbm = rbm_initialize(m, h, rng);

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> dw(m * h), db(m), dc(h);
  std::vector<double> ph0, h0, pv1, v1, ph1;

  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t stop = std::min(order.size(), start + options.batch_size);
      std::fill(dw.begin(), dw.end(), 0.0);
      std::fill(db.begin(), db.end(), 0.0);
      std::fill(dc.begin(), dc.end(), 0.0);
      for (std::size_t b = start; b < stop; ++b) {
        const auto v0 = as_doubles(data[order[b]]);
        hidden_probabilities(rbm, v0, ph0);
        sample_bits(ph0, h0, rng);
        visible_probabilities(rbm, h0, pv1);
        sample_bits(pv1, v1, rng);
        hidden_probabilities(rbm, v1, ph1);
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t j = 0; j < h; ++j) dw[i * h + j] += v0[i] * ph0[j] - v1[i] * ph1[j];
          db[i] += v0[i] - v1[i];
        }
        for (std::size_t j = 0; j < h; ++j) dc[j] += ph0[j] - ph1[j];
      }
      const double step = options.lr / static_cast<double>(stop - start);
      for (std::size_t k = 0; k < dw.size(); ++k) rbm.weights[k] += step * dw[k];
      for (std::size_t i = 0; i < m; ++i) rbm.visible_bias[i] += step * db[i];
      for (std::size_t j = 0; j < h; ++j) rbm.hidden_bias[j] += step * dc[j];
    }
    require(rbm.all_finite(), ErrorCode::numeric_error,
            "RBM parameters diverged in epoch " + std::to_string(epoch + 1));
    result.reconstruction_error.push_back(rbm_reconstruction_error(rbm, data));
  }
  return result;
}

double rbm_free_energy(const RbmModel& model, const OccupationVector& v) {
  require(v.modes() == model.visible, ErrorCode::shape_mismatch,
          "free energy: vector length differs from the visible layer");
  double energy = 0.0;
  for (std::size_t i = 0; i < model.visible; ++i) energy -= model.visible_bias[i] * v[i];
  for (std::size_t j = 0; j < model.hidden; ++j) {
    double act = model.hidden_bias[j];
    for (std::size_t i = 0; i < model.visible; ++i) act += v[i] * model.weight(i, j);
    energy -= softplus(act);
  }
  return energy;
}

RbmSamples rbm_sample(const RbmModel& model, std::size_t count, std::size_t n, Rng& rng,
                      const RbmSampleOptions& options) {
  require(n <= model.visible, ErrorCode::invalid_argument,
          "requested Hamming weight exceeds the number of visible units");
  RbmSamples out;
  out.samples.reserve(count);
  std::vector<double> v, ph, hs, pv;
  for (std::size_t s = 0; s < count; ++s) {
    v.resize(model.visible);
    for (auto& x : v) x = coin(rng) ? 1.0 : 0.0;
    bool accepted = false;
    for (std::size_t sweep = 0; sweep < options.burn_in + options.retry_cap + 1; ++sweep) {
      hidden_probabilities(model, v, ph);
      sample_bits(ph, hs, rng);
      visible_probabilities(model, hs, pv);
      sample_bits(pv, v, rng);
      if (sweep < options.burn_in) continue;
      if (std::count(v.begin(), v.end(), 1.0) == static_cast<std::ptrdiff_t>(n)) {
        accepted = true;
        break;
      }
    }
    OccupationVector x(std::vector<OccupationVector::value_type>(model.visible, 0));
    if (accepted) {
      for (std::size_t i = 0; i < model.visible; ++i) x[i] = v[i] != 0.0 ? 1 : 0;
    } else {
      std::vector<std::size_t> idx(model.visible);
      std::iota(idx.begin(), idx.end(), 0);
      std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return pv[a] > pv[b]; });
      for (std::size_t i = 0; i < n; ++i) x[idx[i]] = 1;
      ++out.fallback_count;
    }
    out.samples.push_back(std::move(x));
  }
  return out;
}

std::vector<OccupationVector> uniform_fixed_hw_sample(std::size_t m, std::size_t n,
                                                      std::size_t count, Rng& rng) {
  require(n <= m, ErrorCode::invalid_argument, "Hamming weight n must not exceed m");
  std::vector<OccupationVector> out;
  out.reserve(count);
  std::vector<std::size_t> idx(m);
  for (std::size_t s = 0; s < count; ++s) {
    std::iota(idx.begin(), idx.end(), 0);
    OccupationVector x(std::vector<OccupationVector::value_type>(m, 0));
    for (std::size_t i = 0; i < n; ++i) {
      std::swap(idx[i], idx[i + uniform_index(rng, m - i)]);
      x[idx[i]] = 1;
    }
    out.push_back(std::move(x));
  }
  return out;
}

MeanStd summarize(std::vector<double> values) {
  MeanStd out;
  out.values = std::move(values);
  if (out.values.empty()) return out;
  const double k = static_cast<double>(out.values.size());
  out.mean = std::accumulate(out.values.begin(), out.values.end(), 0.0) / k;
  if (out.values.size() > 1) {
    double ss = 0.0;
    for (double v : out.values) ss += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(ss / (k - 1.0));
  }
  return out;
}

MeanStd test_to_test_mmd(std::span<const OccupationVector> test_set, const Kernel& kernel,
                         std::size_t repeats, Rng& rng) {
  require(test_set.size() >= 4, ErrorCode::invalid_argument,
          "test-to-test baseline needs at least four test points");
  require(repeats >= 1, ErrorCode::invalid_argument, "repeats must be >= 1");
  std::vector<OccupationVector> pool(test_set.begin(), test_set.end());
  const std::size_t half = pool.size() / 2;
  std::vector<double> values;
  for (std::size_t r = 0; r < repeats; ++r) {
    for (std::size_t i = pool.size(); i > 1; --i) std::swap(pool[i - 1], pool[uniform_index(rng, i)]);
    const std::span<const OccupationVector> all(pool);
    values.push_back(mmd_unbiased_samples(all.first(half), all.subspan(half, half), kernel));
  }
  return summarize(std::move(values));
}

MeanStd uniform_baseline_mmd(std::span<const OccupationVector> test_set, std::size_t n,
                             const Kernel& kernel, std::size_t repeats, Rng& rng) {
  require(test_set.size() >= 2, ErrorCode::invalid_argument,
          "baseline scoring needs at least two test points");
  const std::size_t m = test_set.front().modes();
  std::vector<double> values;
  for (std::size_t r = 0; r < repeats; ++r) {
    const auto samples = uniform_fixed_hw_sample(m, n, test_set.size(), rng);
    values.push_back(mmd_unbiased_samples(samples, test_set, kernel));
  }
  return summarize(std::move(values));
}

MeanStd rbm_baseline_mmd(const RbmModel& model, std::span<const OccupationVector> test_set,
                         std::size_t n, const Kernel& kernel, std::size_t repeats, Rng& rng) {
  require(test_set.size() >= 2, ErrorCode::invalid_argument,
          "baseline scoring needs at least two test points");
  std::vector<double> values;
  for (std::size_t r = 0; r < repeats; ++r) {
    const auto drawn = rbm_sample(model, test_set.size(), n, rng);
    values.push_back(mmd_unbiased_samples(drawn.samples, test_set, kernel));
  }
  return summarize(std::move(values));
}

}  // namespace pmmd
