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

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "common/config.hpp"
#include "model/model.hpp"
#include "objectives/objectives.hpp"
#include "synthdata/synthdata.hpp"

namespace crossmost::metrics {

using Matrix = Eigen::MatrixXd;

/// One evaluation snapshot. Pseudo-label fields are zero unless the caller
/// fills them from the epoch's PseudoStats.
struct MetricRecord {
  int epoch = 0;
  double acc_image = 0.0;       // single fixed view (view 0)
  double acc_image_star = 0.0;  // renormalized mean of all view embeddings
  double acc_pcl = 0.0;
  double pred_entropy_img = 0.0;
  double pred_entropy_pcl = 0.0;
  double pred_bias_img = 0.0;
  double pred_bias_pcl = 0.0;
  double source_img_frac = 0.0;
  double agreement = 0.0;
  double accepted_frac = 0.0;
};

/// Sharpness of one prediction: sum_c p_c ln(C p_c), the divergence from the
/// uniform distribution. Zero for uniform p, ln C for a one-hot p.
double prediction_entropy(const Eigen::RowVectorXd& p);

/// Imbalance of a prediction set: sum_c j_c ln(C j_c) over the predicted-class
/// frequencies j, with empty classes contributing zero.
double prediction_bias(const std::vector<int>& predictions, int n_classes);

/// Accumulates pseudo-label batches across an epoch.
class PseudoStats {
 public:
  void add(const obj::PseudoBatch& pb);
  void reset();

  /// Fraction of accepted labels sourced from the image branch (0 when none).
  double source_img_frac() const;
  /// Fraction of samples whose two branch argmaxes agree.
  double agreement() const;
  double accepted_frac() const;
  long samples_seen() const { return total_; }

 private:
  long total_ = 0;
  long accepted_ = 0;
  long accepted_img_ = 0;
  long agree_ = 0;
};

/// Clean-input evaluation of one model over a split: accuracies for both
/// branches plus the multi-view image variant, and the entropy/bias
/// diagnostics of each branch's predictions. Uses views_in_use() views.
MetricRecord evaluate(model::Model& m, const std::vector<synth::Sample>& split,
                      const RunConfig& cfg, int epoch);

/// Writes one row per (sample, modality) with the unit-norm embedding, the
/// sample's label and the classifier's prediction. Image rows use view 0.
void dump_embeddings(const std::string& path, model::Model& m,
                     const std::vector<synth::Sample>& split, const RunConfig& cfg);

/// Single-line JSON serialization for the per-epoch log.
std::string to_json_line(const MetricRecord& r);

}  // namespace crossmost::metrics
