#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace busdep::nn {

/// Layer-size description: relu on hidden layers, identity on the output.
/// hidden may be empty (plain linear regression).
struct NetworkSpec {
  int input_dim = 0;
  std::vector<int> hidden;
  int output_dim = 1;

  /// "512,128,64" for the hidden stack, "linear" when empty.
  std::string hidden_to_string() const;
  bool operator==(const NetworkSpec&) const = default;
};

/// Stored parameter count: sum over layers of fan_in*fan_out + fan_out.
long long param_count(const NetworkSpec& spec);
/// Per-sample multiply-accumulates: sum over layers of fan_in*fan_out.
long long mac_count(const NetworkSpec& spec);

struct Layer {
  int fan_in = 0;
  int fan_out = 0;
  std::vector<double> w;  // fan_out x fan_in, row-major
  std::vector<double> b;  // fan_out
};

struct Network {
  NetworkSpec spec;
  std::vector<Layer> layers;
};

/// Weights uniform in (-1/sqrt(fan_in), +1/sqrt(fan_in)), biases zero.
/// Bit-reproducible for a given (spec, seed).
Network init(const NetworkSpec& spec, std::uint64_t seed);

/// Post-activation values per layer; acts[0] is the input copy.
struct ForwardCache {
  std::vector<std::vector<double>> acts;
};

double forward(const Network& net, std::span<const double> x, ForwardCache& cache);
double forward(const Network& net, std::span<const double> x);

double mse(std::span<const double> predictions, std::span<const double> targets);

struct Gradients {
  std::vector<std::vector<double>> dw;
  std::vector<std::vector<double>> db;
  void zero();
};

Gradients make_gradients(const NetworkSpec& spec);

/// Gradients of the per-sample squared error (prediction - target)^2.
/// relu subgradient at 0 is 0.
void backward(const Network& net, const ForwardCache& cache, double target,
              Gradients& out);
Gradients backward(const Network& net, const ForwardCache& cache, double target);

struct AdamState {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long long t = 0;
  std::vector<std::vector<double>> mw, vw, mb, vb;
};

AdamState make_adam(const NetworkSpec& spec, double lr = 0.01);

/// One bias-corrected Adam update; increments t exactly once.
void adam_step(Network& net, const Gradients& grads, AdamState& state);

/// Batched path used by training. X is row-major batch x input_dim.
struct BatchCache {
  int batch = 0;
  std::vector<std::vector<double>> acts;  // acts[l]: batch x width, row-major
};

void forward_batch(const Network& net, std::span<const double> x, int batch,
                   BatchCache& cache, std::span<double> predictions, int threads);

/// Gradients of the batch-mean squared error. The per-sample reduction
/// order inside each output element is fixed, so results are independent
/// of the thread count.
void backward_batch(const Network& net, const BatchCache& cache,
                    std::span<const double> targets, Gradients& out, int threads);

}  // namespace busdep::nn
