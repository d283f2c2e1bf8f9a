#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stancecast/common.hpp"

// Three-layer feed-forward classifier: tanh activations, inverted dropout,
// 2-unit softmax head, binary cross-entropy, AdamW. All passes hand-rolled.

namespace stancecast::model {

inline constexpr std::uint32_t kModelFormatVersion = 1;

// Row-major dense matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

// Layer sizes: d -> d -> d/2 -> d/4 -> 2. Input dimension is padded up to
// the next multiple of 4 before construction.
struct MlpParameters {
  std::size_t d = 0;
  Matrix w1, w2, w3, w_out;
  std::vector<double> b1, b2, b3, b_out;
  double threshold = 0.5;
  std::string embedder_id;
  std::uint32_t format_version = kModelFormatVersion;

  // Mutable views over all parameter blocks, fixed serialization order.
  std::vector<std::vector<double>*> blocks();
  std::vector<const std::vector<double>*> blocks() const;
  static std::vector<std::string> block_names();
};

std::size_t pad_dimension(std::size_t d);  // next multiple of 4, >= 4

// Zero-initialized parameter holder with consistent shapes; d must already
// be padded.
MlpParameters make_parameters(std::size_t d);

// Seeded scaled-uniform fan-in initialization.
MlpParameters init_parameters(std::size_t d, std::uint64_t seed);

// Zero-pads x up to params.d; fatal if longer.
std::vector<double> pad_input(const std::vector<double>& x, std::size_t d);

struct DropoutMasks {
  // One 0/1 mask per hidden layer, already scaled to {0, 1/(1-p)}.
  std::vector<double> m1, m2, m3;
};

DropoutMasks sample_masks(std::size_t d, double dropout, Rng& rng);

struct ForwardCache {
  std::vector<double> x;              // padded input
  std::vector<double> t1, t2, t3;     // tanh outputs, pre-dropout
  std::vector<double> h1, h2, h3;     // post-dropout (== t at inference)
  double z0 = 0.0, z1 = 0.0;          // output logits
  double p0 = 0.5, p1 = 0.5;
};

// Training mode iff masks != nullptr (inverted dropout needs no inference
// correction).
ForwardCache forward(const MlpParameters& params, const std::vector<double>& x,
                     const DropoutMasks* masks);

// Binary cross-entropy on p1 clamped to [1e-12, 1 - 1e-12].
double bce_loss(double p1, int label);

// Gradient accumulator with the same block layout as MlpParameters.
struct Gradients {
  Matrix w1, w2, w3, w_out;
  std::vector<double> b1, b2, b3, b_out;

  std::vector<std::vector<double>*> blocks();
  std::vector<const std::vector<double>*> blocks() const;
};

Gradients make_gradients(std::size_t d);

// Accumulates dLoss/dParams for one example into `grads` (caller divides by
// batch size). Masks must be the ones used in `cache`'s forward pass.
void backward(const MlpParameters& params, const ForwardCache& cache,
              int label, const DropoutMasks* masks, Gradients& grads);

// Mean-loss gradients over a batch; pairs with `forward` for checking.
struct Batch {
  std::vector<std::vector<double>> inputs;  // already padded to d
  std::vector<int> labels;
};

struct TrainConfig {
  std::size_t batch_size = 128;
  double dropout = 0.40;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;
  std::size_t max_epochs = 200;
  std::size_t early_stop_patience = 10;
  std::uint64_t seed = 1;
};

struct AdamWState {
  std::vector<std::vector<double>> m, v;  // one entry per parameter block
  std::int64_t t = 0;
};

AdamWState make_adamw_state(const MlpParameters& params);

// One decoupled-weight-decay Adam step over every parameter block.
void adamw_step(MlpParameters& params, const Gradients& grads,
                AdamWState& state, const TrainConfig& config);

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double validation_loss = 0.0;
  bool is_best = false;
};

struct TrainResult {
  MlpParameters params;  // from the best validation epoch
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
};

// Deterministic for fixed seed and input order. Inputs shorter than the
// padded dimension are zero-padded. Fatal when either slice lacks a class.
TrainResult train(const std::vector<std::pair<std::vector<double>, int>>& train_samples,
                  const std::vector<std::pair<std::vector<double>, int>>& validation_samples,
                  std::size_t input_dimension, const std::string& embedder_id,
                  const TrainConfig& config);

// Model file: magic, format_version, embedder_id, d, threshold, parameter
// blocks as little-endian doubles, trailing FNV-1a checksum.
void save_model(const MlpParameters& params, const std::string& path);
MlpParameters load_model(const std::string& path);

}  // namespace stancecast::model
