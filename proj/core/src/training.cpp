#include "blockpred/training.hpp"

#include <cmath>
#include <numeric>
#include <ostream>

#include "blockpred/errors.hpp"
#include "blockpred/rng.hpp"

namespace blockpred {

template <typename Scalar>
void SequenceDataset::gather(
    std::span<const std::size_t> indices,
    std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>& out) const {
  out.resize(static_cast<std::size_t>(seq_len));
  const auto b = static_cast<Eigen::Index>(indices.size());
  for (std::size_t t = 0; t < out.size(); ++t) {
    out[t].resize(input_dim, b);
    for (Eigen::Index j = 0; j < b; ++j) {
      out[t].col(j) = steps[t].col(static_cast<Eigen::Index>(indices[static_cast<std::size_t>(j)]))
                          .template cast<Scalar>();
    }
  }
}

template void SequenceDataset::gather<float>(std::span<const std::size_t>,
                                             std::vector<Eigen::MatrixXf>&) const;
template void SequenceDataset::gather<double>(std::span<const std::size_t>,
                                              std::vector<Eigen::MatrixXd>&) const;

SequenceDataset make_sequence_dataset(std::span<const Eigen::MatrixXd> sequences,
                                      std::span<const int> labels) {
  if (sequences.size() != labels.size()) throw LengthError("sequence/label count mismatch");
  SequenceDataset ds;
  if (sequences.empty()) return ds;
  ds.input_dim = static_cast<int>(sequences.front().rows());
  ds.seq_len = static_cast<int>(sequences.front().cols());
  const auto n = static_cast<Eigen::Index>(sequences.size());
  ds.steps.assign(static_cast<std::size_t>(ds.seq_len), Eigen::MatrixXd(ds.input_dim, n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = sequences[static_cast<std::size_t>(i)];
    if (s.rows() != ds.input_dim || s.cols() != ds.seq_len) {
      throw ShapeError("feature sequences differ in shape");
    }
    for (int t = 0; t < ds.seq_len; ++t) ds.steps[static_cast<std::size_t>(t)].col(i) = s.col(t);
  }
  ds.labels.assign(labels.begin(), labels.end());
  return ds;
}

SequenceDataset build_sequence_dataset(const std::vector<SequenceSample>& sequences,
                                       const SequenceFeatureFn& features) {
  std::vector<Eigen::MatrixXd> feats;
  std::vector<int> labels;
  feats.reserve(sequences.size());
  labels.reserve(sequences.size());
  for (const auto& s : sequences) {
    feats.push_back(features(s));
    labels.push_back(to_int(s.label));
  }
  return make_sequence_dataset(feats, labels);
}

namespace {

constexpr std::size_t kEvalBatch = 256;

void check_dims(const SequenceDataset& ds, const ModelConfig& cfg, const char* what) {
  if (ds.size() == 0) return;
  if (ds.input_dim != cfg.input_dim || ds.seq_len != cfg.seq_len) {
    throw ConfigMismatchError(std::string(what) + " has sequences of " + std::to_string(ds.seq_len) +
                              "x" + std::to_string(ds.input_dim) + ", model expects " +
                              std::to_string(cfg.seq_len) + "x" + std::to_string(cfg.input_dim));
  }
}

template <typename Scalar>
std::vector<Prediction> run_inference(const GruClassifier<Scalar>& model, const SequenceDataset& data) {
  std::vector<Prediction> out(data.size());
  std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> batch;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < data.size(); start += kEvalBatch) {
    const std::size_t end = std::min(data.size(), start + kEvalBatch);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    data.gather(idx, batch);
    const auto probs = model.forward(batch);
    for (std::size_t j = 0; j < idx.size(); ++j) {
      const auto col = static_cast<Eigen::Index>(j);
      out[start + j].p_blocked = static_cast<double>(probs(1, col));
      out[start + j].label = probs(1, col) > probs(0, col) ? 1 : 0;
    }
  }
  return out;
}

std::pair<double, double> score(const std::vector<Prediction>& preds, const std::vector<int>& truths) {
  std::vector<int> p(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) p[i] = preds[i].label;
  const auto cm = confusion(p, truths);
  return {accuracy(cm), f1(cm)};
}

}  // namespace

TrainResult train(const SequenceDataset& train_set, const SequenceDataset& val_set,
                  const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                  const EpochCallback& on_epoch) {
  model_cfg.validate();
  train_cfg.validate();
  if (train_set.size() == 0) throw EmptySplitError("training split is empty");
  if (val_set.size() == 0) throw EmptySplitError("validation split is empty");
  check_dims(train_set, model_cfg, "training split");
  check_dims(val_set, model_cfg, "validation split");

  auto model = GruClassifier<float>::initialized(model_cfg, derive_seed(train_cfg.seed, "init"));
  AdamOptimizer<float> adam(static_cast<std::size_t>(model.parameters().size()), train_cfg);
  Rng shuffle_rng(derive_seed(train_cfg.seed, "shuffle"));

  TrainResult result;
  std::tie(result.initial_val_acc, result.initial_val_f1) =
      score(run_inference(model, val_set), val_set.labels);

  Eigen::VectorXf best = model.parameters();
  double best_f1 = -1.0;
  EpochRecord best_record;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<Eigen::MatrixXf> batch;
  std::vector<int> labels;
  Eigen::VectorXf grad;
  const auto bs = static_cast<std::size_t>(train_cfg.batch_size);

  for (int epoch = 1; epoch <= train_cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order.begin(), order.end());
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t end = std::min(order.size(), start + bs);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      train_set.gather(idx, batch);
      labels.resize(idx.size());
      for (std::size_t j = 0; j < idx.size(); ++j) labels[j] = train_set.labels[idx[j]];
      const float loss = model.loss_and_gradient(batch, labels, grad);
      if (!std::isfinite(loss) || !grad.allFinite()) {
        throw DivergenceError("loss became non-finite at epoch " + std::to_string(epoch));
      }
      loss_sum += static_cast<double>(loss) * static_cast<double>(idx.size());
      adam.step(model.parameters(), grad);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    std::tie(rec.val_acc, rec.val_f1) = score(run_inference(model, val_set), val_set.labels);
    result.log.push_back(rec);
    if (rec.val_f1 > best_f1) {
      best_f1 = rec.val_f1;
      best = model.parameters();
      best_record = rec;
    }
    if (on_epoch) on_epoch(rec);
  }

  result.best_epoch = best_record.epoch;
  result.checkpoint.model = model_cfg;
  result.checkpoint.scalar = "float32";
  result.checkpoint.parameters = best.cast<double>();
  result.checkpoint.metadata = {
      {"best_epoch", best_record.epoch},
      {"val_acc", best_record.val_acc},
      {"val_f1", best_record.val_f1},
      {"train_loss", best_record.train_loss},
      {"seed", train_cfg.seed},
      {"epochs", train_cfg.epochs},
      {"learning_rate", train_cfg.learning_rate},
      {"batch_size", train_cfg.batch_size},
      {"optimizer", "adam"},
  };
  return result;
}

std::vector<Prediction> predict(const Checkpoint& ckpt, const SequenceDataset& data) {
  check_dims(data, ckpt.model, "prediction input");
  if (data.size() == 0) return {};
  return run_inference(inference_model(ckpt), data);
}

void write_training_log(const std::vector<EpochRecord>& log, std::ostream& out) {
  out << "epoch,train_loss,val_acc,val_f1\n";
  for (const auto& r : log) {
    out << r.epoch << ',' << format_double(r.train_loss) << ',' << format_double(r.val_acc) << ','
        << format_double(r.val_f1) << '\n';
  }
}

}  // namespace blockpred
