#include "busdep/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "busdep/numtext.hpp"
#include "busdep/parallel.hpp"
#include "busdep/rng.hpp"

namespace busdep::nn {

namespace {

std::vector<int> layer_widths(const NetworkSpec& spec) {
  std::vector<int> widths;
  widths.reserve(spec.hidden.size() + 2);
  widths.push_back(spec.input_dim);
  for (int h : spec.hidden) widths.push_back(h);
  widths.push_back(spec.output_dim);
  return widths;
}

void validate(const NetworkSpec& spec) {
  if (spec.input_dim < 1 || spec.output_dim < 1) {
    throw std::invalid_argument("network spec: input and output dims must be >= 1");
  }
  for (int h : spec.hidden) {
    if (h < 1) throw std::invalid_argument("network spec: hidden dims must be >= 1");
  }
}

}  // namespace

std::string NetworkSpec::hidden_to_string() const {
  if (hidden.empty()) return "linear";
  std::string out;
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    if (i > 0) out += ',';
    out += format_int(hidden[i]);
  }
  return out;
}

long long param_count(const NetworkSpec& spec) {
  validate(spec);
  const auto widths = layer_widths(spec);
  long long total = 0;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    total += static_cast<long long>(widths[i]) * widths[i + 1] + widths[i + 1];
  }
  return total;
}

long long mac_count(const NetworkSpec& spec) {
  validate(spec);
  const auto widths = layer_widths(spec);
  long long total = 0;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    total += static_cast<long long>(widths[i]) * widths[i + 1];
  }
  return total;
}

Network init(const NetworkSpec& spec, std::uint64_t seed) {
  validate(spec);
  Network net;
  net.spec = spec;
  Rng rng(seed);
  const auto widths = layer_widths(spec);
  net.layers.resize(widths.size() - 1);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    Layer& layer = net.layers[l];
    layer.fan_in = widths[l];
    layer.fan_out = widths[l + 1];
    layer.w.resize(static_cast<std::size_t>(layer.fan_in) * layer.fan_out);
    layer.b.assign(layer.fan_out, 0.0);
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.fan_in));
    for (double& w : layer.w) w = rng.uniform(-bound, bound);
  }
  return net;
}

double forward(const Network& net, std::span<const double> x, ForwardCache& cache) {
  if (static_cast<int>(x.size()) != net.spec.input_dim) {
    throw std::invalid_argument("forward: input size mismatch");
  }
  if (net.spec.output_dim != 1) {
    throw std::invalid_argument("forward: scalar output expected");
  }
  cache.acts.resize(net.layers.size() + 1);
  cache.acts[0].assign(x.begin(), x.end());
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const Layer& layer = net.layers[l];
    const auto& in = cache.acts[l];
    auto& out = cache.acts[l + 1];
    out.assign(layer.fan_out, 0.0);
    const bool is_output = l + 1 == net.layers.size();
    for (int o = 0; o < layer.fan_out; ++o) {
      const double* row = layer.w.data() + static_cast<std::size_t>(o) * layer.fan_in;
      double z = layer.b[o];
      for (int i = 0; i < layer.fan_in; ++i) z += row[i] * in[i];
      out[o] = is_output ? z : (z > 0 ? z : 0.0);
    }
  }
  return cache.acts.back()[0];
}

double forward(const Network& net, std::span<const double> x) {
  ForwardCache cache;
  return forward(net, x, cache);
}

double mse(std::span<const double> predictions, std::span<const double> targets) {
  if (predictions.size() != targets.size()) {
    throw std::invalid_argument("mse: length mismatch");
  }
  if (predictions.empty()) {
    throw std::invalid_argument("mse: empty input");
  }
  double sum = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double e = predictions[i] - targets[i];
    sum += e * e;
  }
  return sum / static_cast<double>(predictions.size());
}

void Gradients::zero() {
  for (auto& g : dw) std::fill(g.begin(), g.end(), 0.0);
  for (auto& g : db) std::fill(g.begin(), g.end(), 0.0);
}

Gradients make_gradients(const NetworkSpec& spec) {
  validate(spec);
  const auto widths = layer_widths(spec);
  Gradients g;
  g.dw.resize(widths.size() - 1);
  g.db.resize(widths.size() - 1);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    g.dw[l].assign(static_cast<std::size_t>(widths[l]) * widths[l + 1], 0.0);
    g.db[l].assign(widths[l + 1], 0.0);
  }
  return g;
}

void backward(const Network& net, const ForwardCache& cache, double target,
              Gradients& out) {
  const std::size_t n_layers = net.layers.size();
  if (cache.acts.size() != n_layers + 1) {
    throw std::invalid_argument("backward: cache does not match network");
  }
  for (std::size_t l = 0; l < n_layers; ++l) {
    if (static_cast<int>(cache.acts[l].size()) != net.layers[l].fan_in) {
      throw std::invalid_argument("backward: cache shape mismatch");
    }
  }
  if (out.dw.size() != n_layers) {
    throw std::invalid_argument("backward: gradient buffer mismatch");
  }

  // delta for the output layer of the squared error (y_hat - y)^2
  std::vector<double> delta = {2.0 * (cache.acts.back()[0] - target)};
  for (std::size_t l = n_layers; l-- > 0;) {
    const Layer& layer = net.layers[l];
    const auto& in = cache.acts[l];
    auto& dw = out.dw[l];
    auto& db = out.db[l];
    for (int o = 0; o < layer.fan_out; ++o) {
      const double d = delta[o];
      db[o] = d;
      double* dw_row = dw.data() + static_cast<std::size_t>(o) * layer.fan_in;
      for (int i = 0; i < layer.fan_in; ++i) dw_row[i] = d * in[i];
    }
    if (l == 0) break;
    // propagate through W, gate by relu'(z) via the post-activation sign
    std::vector<double> prev(layer.fan_in, 0.0);
    for (int i = 0; i < layer.fan_in; ++i) {
      if (in[i] <= 0) continue;  // relu'(0) = 0
      double acc = 0;
      for (int o = 0; o < layer.fan_out; ++o) {
        acc += delta[o] * layer.w[static_cast<std::size_t>(o) * layer.fan_in + i];
      }
      prev[i] = acc;
    }
    delta = std::move(prev);
  }
}

Gradients backward(const Network& net, const ForwardCache& cache, double target) {
  Gradients g = make_gradients(net.spec);
  backward(net, cache, target, g);
  return g;
}

AdamState make_adam(const NetworkSpec& spec, double lr) {
  AdamState state;
  state.lr = lr;
  const auto widths = layer_widths(spec);
  state.mw.resize(widths.size() - 1);
  state.vw.resize(widths.size() - 1);
  state.mb.resize(widths.size() - 1);
  state.vb.resize(widths.size() - 1);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const std::size_t n = static_cast<std::size_t>(widths[l]) * widths[l + 1];
    state.mw[l].assign(n, 0.0);
    state.vw[l].assign(n, 0.0);
    state.mb[l].assign(widths[l + 1], 0.0);
    state.vb[l].assign(widths[l + 1], 0.0);
  }
  return state;
}

void adam_step(Network& net, const Gradients& grads, AdamState& state) {
  if (grads.dw.size() != net.layers.size() || state.mw.size() != net.layers.size()) {
    throw std::invalid_argument("adam_step: shape mismatch");
  }
  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));

  const auto update = [&](std::vector<double>& param, const std::vector<double>& g,
                          std::vector<double>& m, std::vector<double>& v) {
    if (param.size() != g.size()) {
      throw std::invalid_argument("adam_step: gradient shape mismatch");
    }
    for (std::size_t i = 0; i < param.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      param[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  };
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    update(net.layers[l].w, grads.dw[l], state.mw[l], state.vw[l]);
    update(net.layers[l].b, grads.db[l], state.mb[l], state.vb[l]);
  }
}

void forward_batch(const Network& net, std::span<const double> x, int batch,
                   BatchCache& cache, std::span<double> predictions, int threads) {
  if (batch < 1) throw std::invalid_argument("forward_batch: batch must be >= 1");
  const std::size_t input_dim = static_cast<std::size_t>(net.spec.input_dim);
  if (x.size() != input_dim * static_cast<std::size_t>(batch)) {
    throw std::invalid_argument("forward_batch: input size mismatch");
  }
  if (predictions.size() != static_cast<std::size_t>(batch)) {
    throw std::invalid_argument("forward_batch: prediction buffer mismatch");
  }
  cache.batch = batch;
  cache.acts.resize(net.layers.size() + 1);
  cache.acts[0].assign(x.begin(), x.end());

  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const Layer& layer = net.layers[l];
    const auto& in = cache.acts[l];
    auto& out = cache.acts[l + 1];
    out.assign(static_cast<std::size_t>(batch) * layer.fan_out, 0.0);
    const bool is_output = l + 1 == net.layers.size();
    // sample-parallel: each row of the activation matrix is independent
    parallel_for(static_cast<std::size_t>(batch), threads,
                 [&](std::size_t begin, std::size_t end) {
                   for (std::size_t s = begin; s < end; ++s) {
                     const double* in_row = in.data() + s * layer.fan_in;
                     double* out_row = out.data() + s * layer.fan_out;
                     for (int o = 0; o < layer.fan_out; ++o) {
                       const double* w_row =
                           layer.w.data() + static_cast<std::size_t>(o) * layer.fan_in;
                       double z = layer.b[o];
                       for (int i = 0; i < layer.fan_in; ++i) z += w_row[i] * in_row[i];
                       out_row[o] = is_output ? z : (z > 0 ? z : 0.0);
                     }
                   }
                 });
  }
  const auto& out = cache.acts.back();
  for (int s = 0; s < batch; ++s) predictions[s] = out[s];
}

void backward_batch(const Network& net, const BatchCache& cache,
                    std::span<const double> targets, Gradients& out, int threads) {
  const std::size_t n_layers = net.layers.size();
  const int batch = cache.batch;
  if (cache.acts.size() != n_layers + 1) {
    throw std::invalid_argument("backward_batch: cache does not match network");
  }
  if (targets.size() != static_cast<std::size_t>(batch)) {
    throw std::invalid_argument("backward_batch: target size mismatch");
  }
  if (out.dw.size() != n_layers) {
    throw std::invalid_argument("backward_batch: gradient buffer mismatch");
  }

  // delta of the batch-mean squared error, batch x fan_out
  std::vector<double> delta(static_cast<std::size_t>(batch));
  const auto& preds = cache.acts.back();
  const double inv_batch = 1.0 / static_cast<double>(batch);
  for (int s = 0; s < batch; ++s) {
    delta[s] = 2.0 * (preds[s] - targets[s]) * inv_batch;
  }

  for (std::size_t l = n_layers; l-- > 0;) {
    const Layer& layer = net.layers[l];
    const auto& in = cache.acts[l];
    auto& dw = out.dw[l];
    auto& db = out.db[l];
    // weight rows are independent; the inner batch loop runs in a fixed
    // order so sums do not depend on the thread count
    parallel_for(static_cast<std::size_t>(layer.fan_out), threads,
                 [&](std::size_t begin, std::size_t end) {
                   for (std::size_t o = begin; o < end; ++o) {
                     double* dw_row = dw.data() + o * layer.fan_in;
                     std::fill(dw_row, dw_row + layer.fan_in, 0.0);
                     double db_acc = 0;
                     for (int s = 0; s < batch; ++s) {
                       const double d = delta[s * layer.fan_out + o];
                       if (d == 0.0) continue;
                       db_acc += d;
                       const double* in_row = in.data() + static_cast<std::size_t>(s) * layer.fan_in;
                       for (int i = 0; i < layer.fan_in; ++i) dw_row[i] += d * in_row[i];
                     }
                     db[o] = db_acc;
                   }
                 });
    if (l == 0) break;

    std::vector<double> prev(static_cast<std::size_t>(batch) * layer.fan_in, 0.0);
    parallel_for(static_cast<std::size_t>(batch), threads,
                 [&](std::size_t begin, std::size_t end) {
                   for (std::size_t s = begin; s < end; ++s) {
                     const double* in_row = in.data() + s * layer.fan_in;
                     const double* delta_row = delta.data() + s * layer.fan_out;
                     double* prev_row = prev.data() + s * layer.fan_in;
                     for (int i = 0; i < layer.fan_in; ++i) {
                       if (in_row[i] <= 0) continue;  // relu'(0) = 0
                       double acc = 0;
                       for (int o = 0; o < layer.fan_out; ++o) {
                         acc += delta_row[o] *
                                layer.w[static_cast<std::size_t>(o) * layer.fan_in + i];
                       }
                       prev_row[i] = acc;
                     }
                   }
                 });
    delta = std::move(prev);
  }
}

}  // namespace busdep::nn
