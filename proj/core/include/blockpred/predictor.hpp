#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace blockpred {

struct ModelConfig {
  int input_dim = 28;  // Z
  int hidden_dim = 128;
  int num_layers = 2;
  int num_classes = 2;
  int seq_len = 8;  // r

  /// Throws ConfigError.
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 128;
  int epochs = 100;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  /// Throws ConfigError.
  void validate() const;
};

/// Position of one parameter tensor inside the flat parameter vector.
/// Tensors are stored column-major.
struct ParameterInfo {
  std::string name;
  int rows = 0;
  int cols = 0;
  std::size_t offset = 0;

  std::size_t size() const { return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols); }
};

/// Parameter layout for a config: per layer `gru.l<k>.weight_ih` (3H x in),
/// `gru.l<k>.weight_hh` (3H x H), `gru.l<k>.bias_ih`, `gru.l<k>.bias_hh` (3H),
/// then `head.weight` (C x H) and `head.bias` (C). Gate rows are ordered
/// reset, update, candidate.
std::vector<ParameterInfo> parameter_layout(const ModelConfig& cfg);
std::size_t parameter_count(const ModelConfig& cfg);

/// Stacked GRU encoder with a linear softmax head on the last time step of the
/// top layer. Cell update per layer:
///   r = sigmoid(W_ir x + b_ir + W_hr h + b_hr)
///   z = sigmoid(W_iz x + b_iz + W_hz h + b_hz)
///   n = tanh(W_in x + b_in + r * (W_hn h + b_hn))
///   h' = (1 - z) * n + z * h
/// Gradients are computed by hand with backpropagation through time.
template <typename Scalar>
class GruClassifier {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  /// All parameters zero.
  explicit GruClassifier(ModelConfig cfg);

  /// Weights uniform in [-1/sqrt(H), 1/sqrt(H)], biases zero.
  static GruClassifier initialized(ModelConfig cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  const std::vector<ParameterInfo>& layout() const { return layout_; }
  Vector& parameters() { return params_; }
  const Vector& parameters() const { return params_; }

  /// inputs[t] is input_dim x B (one column per sequence). Returns the
  /// num_classes x B matrix of class probabilities.
  Matrix forward(std::span<const Matrix> inputs) const;

  /// Mean cross-entropy over the batch. Labels are class indices.
  Scalar loss(std::span<const Matrix> inputs, std::span<const int> labels) const;

  /// Mean cross-entropy and its gradient with respect to parameters().
  Scalar loss_and_gradient(std::span<const Matrix> inputs, std::span<const int> labels,
                           Vector& grad) const;

 private:
  struct LayerTrace;
  Scalar compute(std::span<const Matrix> inputs, std::span<const int> labels, Vector* grad) const;
  void check_inputs(std::span<const Matrix> inputs) const;
  Matrix encode(std::span<const Matrix> inputs, std::vector<LayerTrace>* traces) const;

  ModelConfig cfg_;
  std::vector<ParameterInfo> layout_;
  Vector params_;
};

extern template class GruClassifier<float>;
extern template class GruClassifier<double>;

/// Adam with PyTorch's bias-corrected update.
template <typename Scalar>
class AdamOptimizer {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  AdamOptimizer(std::size_t n, const TrainConfig& cfg);
  void step(Vector& params, const Vector& grad);
  std::int64_t steps() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
  Vector m_, v_;
};

extern template class AdamOptimizer<float>;
extern template class AdamOptimizer<double>;

}  // namespace blockpred
