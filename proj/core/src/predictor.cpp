#include "blockpred/predictor.hpp"

#include <cmath>

#include "blockpred/errors.hpp"
#include "blockpred/rng.hpp"

namespace blockpred {

void ModelConfig::validate() const {
  if (input_dim <= 0 || hidden_dim <= 0 || num_layers <= 0 || seq_len <= 0) {
    throw ConfigError("model dimensions must be positive");
  }
  if (num_classes != 2) throw ConfigError("blockage prediction is binary: num_classes must be 2");
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be finite and non-negative");
  }
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0 && epsilon > 0.0)) {
    throw ConfigError("invalid Adam hyper-parameters");
  }
}

std::vector<ParameterInfo> parameter_layout(const ModelConfig& cfg) {
  std::vector<ParameterInfo> layout;
  std::size_t offset = 0;
  const auto add = [&](std::string name, int rows, int cols) {
    layout.push_back({std::move(name), rows, cols, offset});
    offset += layout.back().size();
  };
  const int h = cfg.hidden_dim;
  for (int k = 0; k < cfg.num_layers; ++k) {
    const std::string prefix = "gru.l" + std::to_string(k) + ".";
    add(prefix + "weight_ih", 3 * h, k == 0 ? cfg.input_dim : h);
    add(prefix + "weight_hh", 3 * h, h);
    add(prefix + "bias_ih", 3 * h, 1);
    add(prefix + "bias_hh", 3 * h, 1);
  }
  add("head.weight", cfg.num_classes, h);
  add("head.bias", cfg.num_classes, 1);
  return layout;
}

std::size_t parameter_count(const ModelConfig& cfg) {
  const auto layout = parameter_layout(cfg);
  return layout.back().offset + layout.back().size();
}

namespace {

template <typename Scalar>
using MatMap = Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>;
template <typename Scalar>
using ConstMatMap = Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>;

template <typename Scalar>
MatMap<Scalar> view(Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& v, const ParameterInfo& p) {
  return MatMap<Scalar>(v.data() + p.offset, p.rows, p.cols);
}

template <typename Scalar>
ConstMatMap<Scalar> view(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& v, const ParameterInfo& p) {
  return ConstMatMap<Scalar>(v.data() + p.offset, p.rows, p.cols);
}

template <typename Derived>
auto sigmoid(const Eigen::ArrayBase<Derived>& x) {
  using S = typename Derived::Scalar;
  return (S(1) + (-x).exp()).inverse();
}

}  // namespace

/// Activations kept from the forward pass. Columns are time-major blocks of
/// B columns: block t holds step t for every sequence.
template <typename Scalar>
struct GruClassifier<Scalar>::LayerTrace {
  Matrix x;       // layer input, in x TB
  Matrix h_prev;  // H x TB
  Matrix r, z, n; // gates, H x TB
  Matrix gh_n;    // W_hn h_prev + b_hn, H x TB
};

template <typename Scalar>
GruClassifier<Scalar>::GruClassifier(ModelConfig cfg)
    : cfg_(cfg), layout_(parameter_layout(cfg)) {
  cfg_.validate();
  params_ = Vector::Zero(static_cast<Eigen::Index>(parameter_count(cfg_)));
}

template <typename Scalar>
GruClassifier<Scalar> GruClassifier<Scalar>::initialized(ModelConfig cfg, std::uint64_t seed) {
  GruClassifier model(cfg);
  const double bound = 1.0 / std::sqrt(static_cast<double>(cfg.hidden_dim));
  Rng rng(seed);
  for (const auto& p : model.layout_) {
    if (p.cols == 1) continue;  // biases stay zero
    for (std::size_t i = 0; i < p.size(); ++i) {
      model.params_[static_cast<Eigen::Index>(p.offset + i)] =
          static_cast<Scalar>(rng.uniform(-bound, bound));
    }
  }
  return model;
}

template <typename Scalar>
void GruClassifier<Scalar>::check_inputs(std::span<const Matrix> inputs) const {
  if (inputs.size() != static_cast<std::size_t>(cfg_.seq_len)) {
    throw ShapeError("expected " + std::to_string(cfg_.seq_len) + " time steps, got " +
                     std::to_string(inputs.size()));
  }
  const auto batch = inputs.front().cols();
  for (const auto& x : inputs) {
    if (x.rows() != cfg_.input_dim || x.cols() != batch) {
      throw ShapeError("input step has shape " + std::to_string(x.rows()) + "x" +
                       std::to_string(x.cols()) + ", expected " + std::to_string(cfg_.input_dim) +
                       "x" + std::to_string(batch));
    }
  }
  if (batch == 0) throw ShapeError("empty batch");
}

template <typename Scalar>
typename GruClassifier<Scalar>::Matrix GruClassifier<Scalar>::encode(
    std::span<const Matrix> inputs, std::vector<LayerTrace>* traces) const {
  const Eigen::Index steps = cfg_.seq_len;
  const Eigen::Index batch = inputs.front().cols();
  const Eigen::Index h = cfg_.hidden_dim;

  Matrix layer_in(cfg_.input_dim, steps * batch);
  for (Eigen::Index t = 0; t < steps; ++t) layer_in.middleCols(t * batch, batch) = inputs[t];

  Matrix h_t;
  for (int k = 0; k < cfg_.num_layers; ++k) {
    const auto w_ih = view(params_, layout_[4 * k + 0]);
    const auto w_hh = view(params_, layout_[4 * k + 1]);
    const auto b_ih = view(params_, layout_[4 * k + 2]);
    const auto b_hh = view(params_, layout_[4 * k + 3]);

    // Input projections for every step in one product.
    Matrix gi = w_ih * layer_in;
    gi.colwise() += b_ih.col(0);

    LayerTrace trace;
    if (traces) {
      trace.h_prev.resize(h, steps * batch);
      trace.r.resize(h, steps * batch);
      trace.z.resize(h, steps * batch);
      trace.n.resize(h, steps * batch);
      trace.gh_n.resize(h, steps * batch);
    }
    Matrix out(h, steps * batch);
    h_t = Matrix::Zero(h, batch);
    Matrix gh(3 * h, batch);
    for (Eigen::Index t = 0; t < steps; ++t) {
      gh.noalias() = w_hh * h_t;
      gh.colwise() += b_hh.col(0);
      const auto gi_t = gi.middleCols(t * batch, batch);
      const Matrix r = sigmoid(gi_t.topRows(h).array() + gh.topRows(h).array()).matrix();
      const Matrix z = sigmoid(gi_t.middleRows(h, h).array() + gh.middleRows(h, h).array()).matrix();
      const Matrix n =
          (gi_t.bottomRows(h).array() + r.array() * gh.bottomRows(h).array()).tanh().matrix();
      if (traces) {
        trace.h_prev.middleCols(t * batch, batch) = h_t;
        trace.r.middleCols(t * batch, batch) = r;
        trace.z.middleCols(t * batch, batch) = z;
        trace.n.middleCols(t * batch, batch) = n;
        trace.gh_n.middleCols(t * batch, batch) = gh.bottomRows(h);
      }
      h_t = ((Scalar(1) - z.array()) * n.array() + z.array() * h_t.array()).matrix();
      out.middleCols(t * batch, batch) = h_t;
    }
    if (traces) {
      trace.x = std::move(layer_in);
      traces->push_back(std::move(trace));
    }
    layer_in = std::move(out);
  }
  return h_t;  // top layer, last step
}

template <typename Scalar>
typename GruClassifier<Scalar>::Matrix GruClassifier<Scalar>::forward(
    std::span<const Matrix> inputs) const {
  check_inputs(inputs);
  const Matrix h_last = encode(inputs, nullptr);
  const auto w_o = view(params_, layout_[4 * cfg_.num_layers]);
  const auto b_o = view(params_, layout_[4 * cfg_.num_layers + 1]);
  Matrix logits = w_o * h_last;
  logits.colwise() += b_o.col(0);
  const auto max = logits.colwise().maxCoeff();
  Matrix probs = (logits.rowwise() - max).array().exp().matrix();
  const auto sums = probs.colwise().sum();
  for (Eigen::Index b = 0; b < probs.cols(); ++b) probs.col(b) /= sums(b);
  return probs;
}

template <typename Scalar>
Scalar GruClassifier<Scalar>::loss(std::span<const Matrix> inputs, std::span<const int> labels) const {
  return compute(inputs, labels, nullptr);
}

template <typename Scalar>
Scalar GruClassifier<Scalar>::loss_and_gradient(std::span<const Matrix> inputs,
                                                std::span<const int> labels, Vector& grad) const {
  return compute(inputs, labels, &grad);
}

template <typename Scalar>
Scalar GruClassifier<Scalar>::compute(std::span<const Matrix> inputs, std::span<const int> labels,
                                      Vector* grad_out) const {
  check_inputs(inputs);
  const Eigen::Index batch = inputs.front().cols();
  if (labels.size() != static_cast<std::size_t>(batch)) {
    throw ShapeError("label count does not match batch size");
  }
  for (int y : labels) {
    if (y < 0 || y >= cfg_.num_classes) throw ShapeError("label out of range");
  }
  std::vector<LayerTrace> traces;
  const Matrix h_last = encode(inputs, grad_out ? &traces : nullptr);

  const int top = 4 * cfg_.num_layers;
  const auto w_o = view(params_, layout_[top]);
  const auto b_o = view(params_, layout_[top + 1]);
  Matrix logits = w_o * h_last;
  logits.colwise() += b_o.col(0);

  // Softmax cross-entropy via log-sum-exp.
  Matrix dlogits(logits.rows(), batch);
  double total = 0.0;
  for (Eigen::Index b = 0; b < batch; ++b) {
    const Scalar mx = logits.col(b).maxCoeff();
    const auto e = (logits.col(b).array() - mx).exp();
    const Scalar sum = e.sum();
    total += static_cast<double>(std::log(sum) + mx - logits(labels[b], b));
    dlogits.col(b) = (e / sum).matrix();
    dlogits(labels[b], b) -= Scalar(1);
  }
  const Scalar mean_loss = static_cast<Scalar>(total / static_cast<double>(batch));
  if (grad_out == nullptr) return mean_loss;

  Vector& grad = *grad_out;
  grad = Vector::Zero(params_.size());
  dlogits /= static_cast<Scalar>(batch);
  view(grad, layout_[top]).noalias() = dlogits * h_last.transpose();
  view(grad, layout_[top + 1]).col(0) = dlogits.rowwise().sum();

  using Array = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Index steps = cfg_.seq_len;
  const Eigen::Index h = cfg_.hidden_dim;
  // Gradient flowing into each layer's outputs (H x TB); only the last step
  // of the top layer receives the head gradient.
  Matrix d_out = Matrix::Zero(h, steps * batch);
  d_out.middleCols((steps - 1) * batch, batch).noalias() = w_o.transpose() * dlogits;

  for (int k = cfg_.num_layers - 1; k >= 0; --k) {
    const auto& tr = traces[static_cast<std::size_t>(k)];
    const auto w_ih = view(params_, layout_[4 * k + 0]);
    const auto w_hh = view(params_, layout_[4 * k + 1]);

    Matrix d_gi(3 * h, steps * batch);
    Matrix d_gh(3 * h, steps * batch);
    Matrix dh_carry = Matrix::Zero(h, batch);
    for (Eigen::Index t = steps - 1; t >= 0; --t) {
      const auto cols = [&](const Matrix& m) { return m.middleCols(t * batch, batch).array(); };
      const auto r = cols(tr.r), z = cols(tr.z), n = cols(tr.n), gh_n = cols(tr.gh_n),
                 h_prev = cols(tr.h_prev);
      const auto dh = (d_out.middleCols(t * batch, batch) + dh_carry).array();

      const Array da_n = (dh * (Scalar(1) - z)) * (Scalar(1) - n * n);
      const Array da_z = (dh * (h_prev - n)) * z * (Scalar(1) - z);
      const Array da_r = (da_n * gh_n) * r * (Scalar(1) - r);

      auto gi_t = d_gi.middleCols(t * batch, batch);
      auto gh_t = d_gh.middleCols(t * batch, batch);
      gi_t.topRows(h) = da_r.matrix();
      gi_t.middleRows(h, h) = da_z.matrix();
      gi_t.bottomRows(h) = da_n.matrix();
      gh_t.topRows(h) = da_r.matrix();
      gh_t.middleRows(h, h) = da_z.matrix();
      gh_t.bottomRows(h) = (da_n * r).matrix();

      Matrix next = (dh * z).matrix();
      next.noalias() += w_hh.transpose() * gh_t;
      dh_carry = std::move(next);
    }
    view(grad, layout_[4 * k + 0]).noalias() = d_gi * tr.x.transpose();
    view(grad, layout_[4 * k + 1]).noalias() = d_gh * tr.h_prev.transpose();
    view(grad, layout_[4 * k + 2]).col(0) = d_gi.rowwise().sum();
    view(grad, layout_[4 * k + 3]).col(0) = d_gh.rowwise().sum();
    if (k > 0) d_out.noalias() = w_ih.transpose() * d_gi;
  }
  return mean_loss;
}

template class GruClassifier<float>;
template class GruClassifier<double>;

template <typename Scalar>
AdamOptimizer<Scalar>::AdamOptimizer(std::size_t n, const TrainConfig& cfg)
    : lr_(cfg.learning_rate),
      beta1_(cfg.beta1),
      beta2_(cfg.beta2),
      eps_(cfg.epsilon),
      m_(Vector::Zero(static_cast<Eigen::Index>(n))),
      v_(Vector::Zero(static_cast<Eigen::Index>(n))) {}

template <typename Scalar>
void AdamOptimizer<Scalar>::step(Vector& params, const Vector& grad) {
  ++t_;
  const auto b1 = static_cast<Scalar>(beta1_), b2 = static_cast<Scalar>(beta2_);
  m_ = b1 * m_ + (Scalar(1) - b1) * grad;
  v_ = b2 * v_ + (Scalar(1) - b2) * grad.cwiseProduct(grad);
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  const auto step_size = static_cast<Scalar>(lr_ / bc1);
  const auto sqrt_bc2 = static_cast<Scalar>(std::sqrt(bc2));
  const auto eps = static_cast<Scalar>(eps_);
  params.array() -= step_size * m_.array() / (v_.array().sqrt() / sqrt_bc2 + eps);
}

template class AdamOptimizer<float>;
template class AdamOptimizer<double>;

}  // namespace blockpred
