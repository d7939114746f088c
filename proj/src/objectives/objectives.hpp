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

#include <vector>

#include <Eigen/Dense>

#include "autodiff/tape.hpp"
#include "common/config.hpp"
#include "common/rng.hpp"

namespace crossmost::obj {

using Matrix = Eigen::MatrixXd;
using ad::Tape;
using ad::Var;

/// Hard labels chosen per sample from the more confident teacher branch,
/// plus the bookkeeping the trainer and metrics log about that choice.
struct PseudoBatch {
  std::vector<int> labels;       // chosen class per sample
  Eigen::VectorXd scores;        // confidence of the chosen branch
  std::vector<bool> source_img;  // true when the image branch supplied the label
  std::vector<bool> accepted;    // scores strictly above the threshold
  std::vector<int> argmax_img;   // per-branch argmaxes, kept for agreement stats
  std::vector<int> argmax_pcl;
};

/// Picks each sample's label from whichever branch is more confident (ties go
/// to the image branch). The pseudo_image_only / pseudo_point_only /
/// pseudo_random modes force the source instead; pseudo_random draws it from
/// `rng` and requires one. Rows of both inputs must sum to 1 within 1e-5.
PseudoBatch joint_pseudo_labels(const Matrix& q_img, const Matrix& q_pcl, double threshold,
                                TrainingMode mode, Rng* rng = nullptr);

/// Cross-entropy of both student branches against the chosen labels, counting
/// only accepted samples but dividing by the full batch size.
Var loss_cls(Tape& t, const PseudoBatch& pseudo, Var img_logits, Var pcl_logits);

/// Single-branch variant: teacher softmax `q` supplies labels, samples with
/// max(q) >= threshold (non-strict) count, divisor is the full batch size.
Var loss_unimodal(Tape& t, const Matrix& q, Var logits, double threshold);

/// Symmetric InfoNCE over the B x B cosine-similarity matrix at temperature
/// tau, averaged over pairs and the two directions. Rows must be unit-norm.
Var loss_align(Tape& t, Var x, Var y, double tau);

/// Pushes both batch-mean prediction distributions towards uniform:
/// -(1/C) sum_c [ln mean_b p_img(b,c) + ln mean_b p_pcl(b,c)], with means
/// clamped at 1e-12 before the log. Inputs are softmax probabilities.
Var loss_fair(Tape& t, Var p_img, Var p_pcl);

/// Mean absolute error of reconstructed masked patches against their pixels.
/// Zero masked rows yields exactly zero.
Var loss_mim(Tape& t, Var pred, const Matrix& target);

/// Mean absolute error of reconstructed masked point groups against their
/// center-relative coordinates. Zero masked rows yields exactly zero.
Var loss_mpm(Tape& t, Var pred, const Matrix& target);

/// Pulls each projected masked token towards its sample's global embedding:
/// mean squared distance per modality, summed over the two modalities.
/// `*_sample[m]` names the batch row the m-th masked token came from.
Var loss_lg_align(Tape& t, Var img_embed, Var img_proj, const std::vector<int>& img_sample,
                  Var pcl_embed, Var pcl_proj, const std::vector<int>& pcl_sample);

/// Scalar loss terms for one step. A default-constructed (null) Var marks a
/// term the current mode disables; it contributes nothing.
struct LossTerms {
  Var cls;
  Var align;
  Var fair;
  Var mim;
  Var mpm;
  Var lg;
};

/// Unweighted per-term values plus the weighted sum, for step logs.
struct LossBreakdown {
  double cls = 0.0;
  double align = 0.0;
  double fair = 0.0;
  double mim = 0.0;
  double mpm = 0.0;
  double lg = 0.0;
  double total = 0.0;
};

/// Weighted sum of the present terms using the configured weights. At least
/// one weight must be positive.
Var total_loss(Tape& t, const LossTerms& terms, const RunConfig::Objective& cfg,
               LossBreakdown* breakdown = nullptr);

}  // namespace crossmost::obj
