#include "stancecast/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>

namespace stancecast::model {

std::vector<std::vector<double>*> MlpParameters::blocks() {
  return {&w1.data, &b1, &w2.data, &b2, &w3.data, &b3, &w_out.data, &b_out};
}

std::vector<const std::vector<double>*> MlpParameters::blocks() const {
  return {&w1.data, &b1, &w2.data, &b2, &w3.data, &b3, &w_out.data, &b_out};
}

std::vector<std::string> MlpParameters::block_names() {
  return {"w1", "b1", "w2", "b2", "w3", "b3", "w_out", "b_out"};
}

std::size_t pad_dimension(std::size_t d) {
  if (d < 4) return 4;
  return (d + 3) / 4 * 4;
}

MlpParameters make_parameters(std::size_t d) {
  if (d < 4 || d % 4 != 0)
    throw DataError("model dimension must be a positive multiple of 4, got " +
                    std::to_string(d));
  MlpParameters p;
  p.d = d;
  const std::size_t d2 = d / 2, d4 = d / 4;
  p.w1 = Matrix(d, d);
  p.b1.assign(d, 0.0);
  p.w2 = Matrix(d2, d);
  p.b2.assign(d2, 0.0);
  p.w3 = Matrix(d4, d2);
  p.b3.assign(d4, 0.0);
  p.w_out = Matrix(2, d4);
  p.b_out.assign(2, 0.0);
  return p;
}

namespace {

void init_weights(MlpParameters& p, Rng& rng) {
  auto fill = [&rng](Matrix& w) {
    // Scaled uniform fan-in init: [-1/sqrt(fan_in), 1/sqrt(fan_in)).
    double limit = 1.0 / std::sqrt(static_cast<double>(w.cols));
    for (auto& v : w.data) v = (2.0 * rng.uniform() - 1.0) * limit;
  };
  fill(p.w1);
  fill(p.w2);
  fill(p.w3);
  fill(p.w_out);
}

}  // namespace

MlpParameters init_parameters(std::size_t d, std::uint64_t seed) {
  MlpParameters p = make_parameters(d);
  Rng rng(seed);
  init_weights(p, rng);
  return p;
}

std::vector<double> pad_input(const std::vector<double>& x, std::size_t d) {
  if (x.size() > d)
    throw DataError("input dimension " + std::to_string(x.size()) +
                    " exceeds model dimension " + std::to_string(d));
  std::vector<double> out(d, 0.0);
  std::copy(x.begin(), x.end(), out.begin());
  return out;
}

DropoutMasks sample_masks(std::size_t d, double dropout, Rng& rng) {
  DropoutMasks m;
  if (dropout == 0.0) {
    m.m1.assign(d, 1.0);
    m.m2.assign(d / 2, 1.0);
    m.m3.assign(d / 4, 1.0);
    return m;
  }
  const double scale = 1.0 / (1.0 - dropout);  // inverted dropout
  auto draw = [&](std::size_t n) {
    std::vector<double> mask(n);
    for (auto& v : mask) v = rng.uniform() < dropout ? 0.0 : scale;
    return mask;
  };
  m.m1 = draw(d);
  m.m2 = draw(d / 2);
  m.m3 = draw(d / 4);
  return m;
}

namespace {

// out[i] = tanh(sum_j w[i][j] in[j] + b[i]), optionally masked.
void dense_tanh(const Matrix& w, const std::vector<double>& b,
                const std::vector<double>& in, std::vector<double>& t,
                std::vector<double>& h, const std::vector<double>* mask) {
  t.resize(w.rows);
  h.resize(w.rows);
  for (std::size_t i = 0; i < w.rows; ++i) {
    double a = b[i];
    const double* row = &w.data[i * w.cols];
    for (std::size_t j = 0; j < w.cols; ++j) a += row[j] * in[j];
    t[i] = std::tanh(a);
    h[i] = mask ? t[i] * (*mask)[i] : t[i];
  }
}

}  // namespace

ForwardCache forward(const MlpParameters& params, const std::vector<double>& x,
                     const DropoutMasks* masks) {
  if (x.size() != params.d)
    throw DataError("forward: input size " + std::to_string(x.size()) +
                    " != model dimension " + std::to_string(params.d));
  ForwardCache c;
  c.x = x;
  dense_tanh(params.w1, params.b1, c.x, c.t1, c.h1,
             masks ? &masks->m1 : nullptr);
  dense_tanh(params.w2, params.b2, c.h1, c.t2, c.h2,
             masks ? &masks->m2 : nullptr);
  dense_tanh(params.w3, params.b3, c.h2, c.t3, c.h3,
             masks ? &masks->m3 : nullptr);

  const std::size_t d4 = params.d / 4;
  double z[2];
  for (std::size_t k = 0; k < 2; ++k) {
    double a = params.b_out[k];
    const double* row = &params.w_out.data[k * d4];
    for (std::size_t j = 0; j < d4; ++j) a += row[j] * c.h3[j];
    z[k] = a;
  }
  c.z0 = z[0];
  c.z1 = z[1];
  const double m = std::max(z[0], z[1]);
  const double e0 = std::exp(z[0] - m), e1 = std::exp(z[1] - m);
  c.p0 = e0 / (e0 + e1);
  c.p1 = e1 / (e0 + e1);
  return c;
}

double bce_loss(double p1, int label) {
  const double p = std::clamp(p1, 1e-12, 1.0 - 1e-12);
  return label == 1 ? -std::log(p) : -std::log(1.0 - p);
}

std::vector<std::vector<double>*> Gradients::blocks() {
  return {&w1.data, &b1, &w2.data, &b2, &w3.data, &b3, &w_out.data, &b_out};
}

std::vector<const std::vector<double>*> Gradients::blocks() const {
  return {&w1.data, &b1, &w2.data, &b2, &w3.data, &b3, &w_out.data, &b_out};
}

Gradients make_gradients(std::size_t d) {
  Gradients g;
  const std::size_t d2 = d / 2, d4 = d / 4;
  g.w1 = Matrix(d, d);
  g.b1.assign(d, 0.0);
  g.w2 = Matrix(d2, d);
  g.b2.assign(d2, 0.0);
  g.w3 = Matrix(d4, d2);
  g.b3.assign(d4, 0.0);
  g.w_out = Matrix(2, d4);
  g.b_out.assign(2, 0.0);
  return g;
}

namespace {

// Backprop through one dense+tanh(+dropout) layer. `dh` is dLoss/d(post-
// dropout output); returns dLoss/d(layer input) and accumulates weight and
// bias gradients.
std::vector<double> dense_tanh_backward(const Matrix& w,
                                        const std::vector<double>& in,
                                        const std::vector<double>& t,
                                        const std::vector<double>& dh,
                                        const std::vector<double>* mask,
                                        Matrix& dw, std::vector<double>& db) {
  std::vector<double> din(w.cols, 0.0);
  for (std::size_t i = 0; i < w.rows; ++i) {
    double dt = mask ? dh[i] * (*mask)[i] : dh[i];
    double da = dt * (1.0 - t[i] * t[i]);  // tanh'
    db[i] += da;
    double* dw_row = &dw.data[i * w.cols];
    const double* w_row = &w.data[i * w.cols];
    for (std::size_t j = 0; j < w.cols; ++j) {
      dw_row[j] += da * in[j];
      din[j] += da * w_row[j];
    }
  }
  return din;
}

}  // namespace

void backward(const MlpParameters& params, const ForwardCache& cache,
              int label, const DropoutMasks* masks, Gradients& grads) {
  const std::size_t d4 = params.d / 4;
  // Softmax + BCE collapse to dL/dz1 = p1 - y, dL/dz0 = -(p1 - y).
  const double g1 = cache.p1 - static_cast<double>(label);
  const double dz[2] = {-g1, g1};

  std::vector<double> dh3(d4, 0.0);
  for (std::size_t k = 0; k < 2; ++k) {
    grads.b_out[k] += dz[k];
    double* dw_row = &grads.w_out.data[k * d4];
    const double* w_row = &params.w_out.data[k * d4];
    for (std::size_t j = 0; j < d4; ++j) {
      dw_row[j] += dz[k] * cache.h3[j];
      dh3[j] += dz[k] * w_row[j];
    }
  }

  auto dh2 = dense_tanh_backward(params.w3, cache.h2, cache.t3, dh3,
                                 masks ? &masks->m3 : nullptr, grads.w3,
                                 grads.b3);
  auto dh1 = dense_tanh_backward(params.w2, cache.h1, cache.t2, dh2,
                                 masks ? &masks->m2 : nullptr, grads.w2,
                                 grads.b2);
  dense_tanh_backward(params.w1, cache.x, cache.t1, dh1,
                      masks ? &masks->m1 : nullptr, grads.w1, grads.b1);
}

AdamWState make_adamw_state(const MlpParameters& params) {
  AdamWState s;
  for (const auto* block : params.blocks()) {
    s.m.emplace_back(block->size(), 0.0);
    s.v.emplace_back(block->size(), 0.0);
  }
  return s;
}

void adamw_step(MlpParameters& params, const Gradients& grads,
                AdamWState& state, const TrainConfig& config) {
  auto pb = params.blocks();
  auto gb = grads.blocks();
  if (pb.size() != state.m.size())
    throw DataError("adamw_step: state/parameter block mismatch");

  state.t += 1;
  const double bc1 =
      1.0 - std::pow(config.beta1, static_cast<double>(state.t));
  const double bc2 =
      1.0 - std::pow(config.beta2, static_cast<double>(state.t));

  for (std::size_t b = 0; b < pb.size(); ++b) {
    auto& theta = *pb[b];
    const auto& g = *gb[b];
    auto& m = state.m[b];
    auto& v = state.v[b];
    if (theta.size() != g.size() || theta.size() != m.size())
      throw DataError("adamw_step: block size mismatch");
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      theta[i] -= config.learning_rate *
                  (m_hat / (std::sqrt(v_hat) + config.epsilon) +
                   config.weight_decay * theta[i]);
    }
  }
}

namespace {

void check_two_classes(
    const std::vector<std::pair<std::vector<double>, int>>& samples,
    const char* name) {
  bool has0 = false, has1 = false;
  for (const auto& [x, y] : samples) (y == 1 ? has1 : has0) = true;
  if (samples.empty() || !has0 || !has1)
    throw DataError(std::string("train: ") + name +
                    " set must contain both classes");
}

}  // namespace

TrainResult train(
    const std::vector<std::pair<std::vector<double>, int>>& train_samples,
    const std::vector<std::pair<std::vector<double>, int>>& validation_samples,
    std::size_t input_dimension, const std::string& embedder_id,
    const TrainConfig& config) {
  check_two_classes(train_samples, "training");
  check_two_classes(validation_samples, "validation");
  if (config.batch_size < 1) throw UsageError("train: batch_size must be >= 1");
  if (config.dropout < 0.0 || config.dropout >= 1.0)
    throw UsageError("train: dropout must be in [0, 1)");

  const std::size_t d = pad_dimension(input_dimension);
  auto pad_all =
      [d](const std::vector<std::pair<std::vector<double>, int>>& samples) {
        std::vector<std::pair<std::vector<double>, int>> out;
        out.reserve(samples.size());
        for (const auto& [x, y] : samples)
          out.emplace_back(pad_input(x, d), y);
        return out;
      };
  const auto tr = pad_all(train_samples);
  const auto va = pad_all(validation_samples);

  Rng rng(config.seed);
  MlpParameters params = make_parameters(d);
  init_weights(params, rng);
  params.embedder_id = embedder_id;
  AdamWState state = make_adamw_state(params);

  TrainResult result;
  MlpParameters best = params;
  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;

  std::vector<std::size_t> order(tr.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    rng.shuffle(order);
    double train_loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += config.batch_size) {
      const std::size_t stop =
          std::min(start + config.batch_size, order.size());
      Gradients grads = make_gradients(d);
      for (std::size_t k = start; k < stop; ++k) {
        const auto& [x, y] = tr[order[k]];
        DropoutMasks masks = sample_masks(d, config.dropout, rng);
        ForwardCache cache = forward(params, x, &masks);
        train_loss_sum += bce_loss(cache.p1, y);
        backward(params, cache, y, &masks, grads);
      }
      const double inv = 1.0 / static_cast<double>(stop - start);
      for (auto* block : grads.blocks())
        for (auto& g : *block) g *= inv;
      adamw_step(params, grads, state, config);
    }

    double val_loss_sum = 0.0;
    for (const auto& [x, y] : va)
      val_loss_sum += bce_loss(forward(params, x, nullptr).p1, y);

    EpochLog log;
    log.epoch = epoch;
    log.train_loss = train_loss_sum / static_cast<double>(tr.size());
    log.validation_loss = val_loss_sum / static_cast<double>(va.size());
    result.log.push_back(log);

    if (log.validation_loss < best_loss) {
      best_loss = log.validation_loss;
      best = params;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.early_stop_patience) {
      break;
    }
  }

  if (result.best_epoch > 0)
    result.log[result.best_epoch - 1].is_best = true;
  result.params = std::move(best);
  return result;
}

namespace {

constexpr char kMagic[8] = {'S', 'T', 'C', 'M', 'O', 'D', 'L', '\n'};

void append_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i)
    s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void append_u64(std::string& s, std::uint64_t v) {
  for (int i = 0; i < 8; ++i)
    s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void append_f64(std::string& s, double v) {
  append_u64(s, std::bit_cast<std::uint64_t>(v));
}

struct Reader {
  const std::string& data;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > data.size())
      throw DataError("model file truncated inside the parameter layout");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(
               static_cast<unsigned char>(data[pos + i]))
           << (8 * i);
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(
               static_cast<unsigned char>(data[pos + i]))
           << (8 * i);
    pos += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = data.substr(pos, n);
    pos += n;
    return s;
  }
};

}  // namespace

void save_model(const MlpParameters& params, const std::string& path) {
  std::string body;
  body.append(kMagic, sizeof(kMagic));
  append_u32(body, params.format_version);
  append_u32(body, static_cast<std::uint32_t>(params.embedder_id.size()));
  body.append(params.embedder_id);
  append_u32(body, static_cast<std::uint32_t>(params.d));
  append_f64(body, params.threshold);
  for (const auto* block : params.blocks())
    for (double v : *block) append_f64(body, v);
  append_u64(body, fnv1a64(body));
  write_file(path, body);
}

MlpParameters load_model(const std::string& path) {
  const std::string data = read_file(path);
  if (data.size() < sizeof(kMagic) ||
      std::memcmp(data.data(), kMagic, sizeof(kMagic)) != 0)
    throw DataError(path + ": not a model file (bad magic)");

  Reader r{data, sizeof(kMagic)};
  const std::uint32_t version = r.u32();
  if (version != kModelFormatVersion)
    throw DataError(path + ": model format version " +
                    std::to_string(version) + ", this tool supports version " +
                    std::to_string(kModelFormatVersion));

  if (data.size() < r.pos + 8)
    throw DataError(path + ": model file truncated (no checksum)");
  Reader tail{data, data.size() - 8};
  const std::uint64_t stored = tail.u64();
  const std::uint64_t computed =
      fnv1a64(data.data(), data.size() - 8);
  if (stored != computed)
    throw DataError(path + ": checksum mismatch (truncated or corrupted file)");

  const std::uint32_t id_len = r.u32();
  std::string embedder_id = r.bytes(id_len);
  const std::uint32_t d = r.u32();
  if (d < 4 || d % 4 != 0)
    throw DataError(path + ": invalid model dimension " + std::to_string(d));
  const double threshold = r.f64();
  if (!(threshold > 0.0 && threshold < 1.0))
    throw DataError(path + ": threshold outside (0, 1)");

  MlpParameters params = make_parameters(d);
  params.embedder_id = std::move(embedder_id);
  params.threshold = threshold;
  params.format_version = version;
  for (auto* block : params.blocks())
    for (auto& v : *block) {
      v = r.f64();
      if (!std::isfinite(v))
        throw DataError(path + ": non-finite parameter value");
    }
  if (r.pos != data.size() - 8)
    throw DataError(path + ": parameter layout does not match dimension " +
                    std::to_string(d));
  return params;
}

}  // namespace stancecast::model
