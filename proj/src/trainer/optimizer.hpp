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

#include <functional>
#include <vector>

#include "autodiff/tape.hpp"
#include "model/model.hpp"

namespace crossmost::train {

using Matrix = Eigen::MatrixXd;

/// Schedule multiplier in [0, 1]: linear warmup over the first
/// floor(warmup_frac * total) steps, then cosine decay to zero. `step` counts
/// from 0 for the first update.
double lr_schedule(long step, long total_steps, double warmup_frac);

/// Teacher tracking: every teacher parameter becomes
/// momentum * teacher + (1 - momentum) * student. Shapes must already match.
void ema_update(model::Model& teacher, const model::Model& student, double momentum);

/// Adam with decoupled weight decay and per-layer learning-rate scaling.
/// The rate applied to a parameter at layer id l is
///   lr * schedule(step) * layer_decay^(top_layer - l)
/// where top_layer is the largest layer id among the managed parameters.
/// Weight decay uses the same scaled rate, applied separately from the
/// gradient term, so a zero-gradient parameter still shrinks by
/// rate * weight_decay * value per step.
class AdamW {
 public:
  struct Options {
    double lr = 1e-3;  // peak rate, already batch-size scaled by the caller
    double weight_decay = 0.0;
    double layer_decay = 1.0;  // 1 = uniform across layers
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double warmup_frac = 0.1;
    long total_steps = 1;
  };

  AdamW(std::vector<ad::Parameter*> params, Options opt);

  /// Applies one update from the gradients currently stored on the
  /// parameters, then advances the step counter. Does not clear gradients.
  void step();

  void zero_grad();

  /// Excludes parameters matching `pred` from updates (gradient and decay)
  /// until marked trainable again.
  void set_frozen(const std::function<bool(const ad::Parameter&)>& pred, bool frozen);

  long steps_taken() const { return t_; }

  /// Rate that step() would apply right now to a parameter at `layer_id`.
  double current_rate(int layer_id) const;

 private:
  std::vector<ad::Parameter*> params_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  std::vector<bool> frozen_;
  Options opt_;
  int top_layer_ = 0;
  long t_ = 0;
};

}  // namespace crossmost::train
