/*
 * Copyright (c) 2026, the crossmost authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <memory>
#include <string>
#include <vector>

#include "common/config.hpp"
#include "metrics/metrics.hpp"
#include "model/model.hpp"
#include "objectives/objectives.hpp"
#include "synthdata/synthdata.hpp"
#include "trainer/optimizer.hpp"

namespace crossmost::train {

/// Per-step record for the step log.
struct StepLog {
  long step = 0;
  double lr = 0.0;  // head-layer rate applied at this step
  obj::LossBreakdown losses;
  double accepted_frac = 0.0;
  double source_img_frac = 0.0;
};

/// Two-stage pipeline around one student/teacher pair:
///   1. pretrain(): contrastive alignment of the two encoders on the pretrain
///      split, then classifier initialization from exemplar prototypes and
///      teacher <- student.
///   2. run_selftraining(): teacher-labeled self-training on the train split
///      with per-epoch evaluation on the test split.
/// All randomness is drawn from counter streams keyed by config seeds, sample
/// ids and step numbers, so reruns are bit-identical.
class Trainer {
 public:
  Trainer(const RunConfig& cfg, const synth::Dataset& ds);

  model::Model& student() { return student_; }
  model::Model& teacher() { return teacher_; }
  metrics::PseudoStats& pseudo_stats() { return pseudo_stats_; }

  /// Stage 1. Returns the per-epoch mean alignment loss (empty for zero
  /// epochs). Always ends with prototype classifier init and a teacher copy.
  std::vector<double> pretrain();

  /// Overwrites both models from a saved checkpoint directory.
  void init_from_checkpoint(const std::string& dir);

  /// One ordered self-training step: teacher forward on weak inputs, pseudo
  /// labels, student forward on strong masked inputs, weighted loss, optimizer
  /// step, EMA update. `prepare_selftraining` must have been called.
  StepLog selftrain_step(const std::vector<const synth::Sample*>& batch, long step);

  /// Builds the self-training optimizer for `total_steps` updates.
  void prepare_selftraining(long total_steps);

  long selftrain_total_steps() const;

  /// Stage 2 epoch loop. Writes metrics.jsonl (one record per epoch plus the
  /// pre-training record), steps.jsonl, and best/final checkpoints under
  /// `out_dir`. Returns the final evaluation record.
  metrics::MetricRecord run_selftraining(const std::string& out_dir);

  /// Evaluates on the test split with the configured weights (teacher unless
  /// train.eval_student is set).
  metrics::MetricRecord evaluate_test(int epoch);

  /// Mean cosine similarity of matched pairs minus mean over mismatched
  /// pairs, measured on clean view-0 images; positive means aligned.
  struct AlignProbe {
    double diag_mean = 0.0;
    double offdiag_mean = 0.0;
  };
  AlignProbe alignment_probe(const std::vector<synth::Sample>& samples);

 private:
  RunConfig cfg_;
  const synth::Dataset& ds_;
  model::Model student_;
  model::Model teacher_;
  std::unique_ptr<AdamW> opt_;
  metrics::PseudoStats pseudo_stats_;

  model::Model& eval_model();
  Rng stream(std::uint64_t id, const char* tag, std::uint64_t step) const;
};

}  // namespace crossmost::train
