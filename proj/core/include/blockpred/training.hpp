#pragma once

#include <Eigen/Core>
#include <functional>
#include <iosfwd>
#include <vector>

#include "blockpred/checkpoint.hpp"
#include "blockpred/evaluation.hpp"
#include "blockpred/predictor.hpp"

namespace blockpred {

/// Feature sequences stored time-major: steps[t] is input_dim x N.
struct SequenceDataset {
  int seq_len = 0;
  int input_dim = 0;
  std::vector<Eigen::MatrixXd> steps;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  /// Copies the selected sequences into per-step batch matrices.
  template <typename Scalar>
  void gather(std::span<const std::size_t> indices,
              std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>& out) const;
};

/// Builds a dataset by calling `features` for every window.
SequenceDataset build_sequence_dataset(const std::vector<SequenceSample>& sequences,
                                       const SequenceFeatureFn& features);

SequenceDataset make_sequence_dataset(std::span<const Eigen::MatrixXd> sequences,
                                      std::span<const int> labels);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_acc = 0.0;
  double val_f1 = 0.0;
};

struct TrainResult {
  Checkpoint checkpoint;  // parameters of the best-validation-F1 epoch
  std::vector<EpochRecord> log;
  int best_epoch = 0;
  double initial_val_acc = 0.0;
  double initial_val_f1 = 0.0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Mini-batch Adam on mean cross-entropy, training in float32. The train set
/// is reshuffled each epoch from the seed. The returned checkpoint holds the
/// epoch with the best validation F1 (earliest on ties).
/// Throws EmptySplitError, DivergenceError, ConfigMismatchError.
TrainResult train(const SequenceDataset& train_set, const SequenceDataset& val_set,
                  const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                  const EpochCallback& on_epoch = {});

struct Prediction {
  int label = 0;  // argmax; ties go to LOS
  double p_blocked = 0.0;
};

/// Inference in double precision. Batched internally; results do not depend
/// on batch composition or order. Throws ConfigMismatchError.
std::vector<Prediction> predict(const Checkpoint& ckpt, const SequenceDataset& data);

/// Argmax with ties to LOS.
inline int decide(double p_blocked) { return p_blocked > 0.5 ? 1 : 0; }

/// CSV: epoch,train_loss,val_acc,val_f1
void write_training_log(const std::vector<EpochRecord>& log, std::ostream& out);

}  // namespace blockpred
