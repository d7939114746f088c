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
#include "objectives/objectives.hpp"

#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>

#include "common/error.hpp"

namespace crossmost::obj {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError("objectives: " + msg);
}

void check_rows_normalized(const Matrix& q, const char* which) {
  for (Eigen::Index b = 0; b < q.rows(); ++b) {
    const double s = q.row(b).sum();
    if (!(std::abs(s - 1.0) <= 1e-5)) {
      throw DomainError(std::string("objectives: ") + which + " row " + std::to_string(b) +
                        " sums to " + std::to_string(s) + ", expected 1");
    }
  }
}

// Shared mean-absolute-error body of the two masked-reconstruction losses.
Var masked_mae(Tape& t, Var pred, const Matrix& target, const char* which) {
  require(pred.rows() == target.rows() && pred.cols() == target.cols(),
          std::string(which) + " prediction/target shape mismatch");
  if (pred.rows() == 0) return t.constant(Matrix::Zero(1, 1));
  return ad::mean_all(ad::abs_elem(ad::sub(pred, t.constant(target))));
}

// (1/M) sum_m ||embed[sample[m]] - proj_m||^2, or exactly zero when M = 0.
Var modality_lg_term(Tape& t, Var embed, Var proj, const std::vector<int>& sample) {
  require(static_cast<Eigen::Index>(sample.size()) == proj.rows(),
          "masked-token sample map length mismatch");
  if (proj.rows() == 0) return t.constant(Matrix::Zero(1, 1));
  require(proj.cols() == embed.cols(), "embedding width mismatch in local-global term");
  Var g = ad::gather_rows(embed, sample);
  Var d = ad::sub(g, proj);
  return ad::scale(ad::sum_all(ad::mul(d, d)), 1.0 / static_cast<double>(proj.rows()));
}

// Per-row NLL of counted samples: -sum_b mask_b * logsoftmax(b, label_b).
Var masked_nll(Var logits, const std::vector<int>& labels, const Matrix& mask) {
  Var picked = ad::gather_cols_per_row(ad::log_softmax_rows(logits), labels);
  return ad::neg(ad::sum_all(ad::cmul(picked, mask)));
}

}  // namespace

PseudoBatch joint_pseudo_labels(const Matrix& q_img, const Matrix& q_pcl, double threshold,
                                TrainingMode mode, Rng* rng) {
  require(q_img.rows() == q_pcl.rows() && q_img.cols() == q_pcl.cols(),
          "teacher prediction shapes must match");
  require(q_img.cols() >= 1, "predictions need at least one class");
  if (mode == TrainingMode::kPseudoRandom) {
    require(rng != nullptr, "pseudo_random labeling needs an rng");
  }
  check_rows_normalized(q_img, "image predictions");
  check_rows_normalized(q_pcl, "point predictions");

  const Eigen::Index b_sz = q_img.rows();
  PseudoBatch out;
  out.labels.resize(b_sz);
  out.scores.resize(b_sz);
  out.source_img.resize(b_sz);
  out.accepted.resize(b_sz);
  out.argmax_img.resize(b_sz);
  out.argmax_pcl.resize(b_sz);

  for (Eigen::Index b = 0; b < b_sz; ++b) {
    int ai = 0, ap = 0;
    const double mi = q_img.row(b).maxCoeff(&ai);
    const double mp = q_pcl.row(b).maxCoeff(&ap);
    bool use_img;
    switch (mode) {
      case TrainingMode::kPseudoImageOnly:
        use_img = true;
        break;
      case TrainingMode::kPseudoPointOnly:
        use_img = false;
        break;
      case TrainingMode::kPseudoRandom:
        use_img = rng->uniform() < 0.5;
        break;
      default:
        use_img = mi >= mp;  // ties go to the image branch
        break;
    }
    const double score = use_img ? mi : mp;
    out.labels[b] = use_img ? ai : ap;
    out.scores[b] = score;
    out.source_img[b] = use_img;
    out.accepted[b] = score > threshold;
    out.argmax_img[b] = ai;
    out.argmax_pcl[b] = ap;
  }
  return out;
}

Var loss_cls(Tape& t, const PseudoBatch& pseudo, Var img_logits, Var pcl_logits) {
  const Eigen::Index b_sz = img_logits.rows();
  require(pcl_logits.rows() == b_sz && pcl_logits.cols() == img_logits.cols(),
          "student logit shapes must match");
  require(static_cast<Eigen::Index>(pseudo.labels.size()) == b_sz,
          "pseudo-label batch size mismatch");
  for (int label : pseudo.labels) {
    require(label >= 0 && label < img_logits.cols(), "pseudo-label out of class range");
  }

  (void)t;
  Matrix mask(b_sz, 1);
  for (Eigen::Index b = 0; b < b_sz; ++b) mask(b, 0) = pseudo.accepted[b] ? 1.0 : 0.0;
  Var total = ad::add(masked_nll(img_logits, pseudo.labels, mask),
                      masked_nll(pcl_logits, pseudo.labels, mask));
  return ad::scale(total, 1.0 / static_cast<double>(b_sz));
}

Var loss_unimodal(Tape& t, const Matrix& q, Var logits, double threshold) {
  const Eigen::Index b_sz = logits.rows();
  require(q.rows() == b_sz && q.cols() == logits.cols(),
          "teacher/student shape mismatch");
  check_rows_normalized(q, "teacher predictions");

  (void)t;
  std::vector<int> labels(b_sz);
  Matrix mask(b_sz, 1);
  for (Eigen::Index b = 0; b < b_sz; ++b) {
    int a = 0;
    const double m = q.row(b).maxCoeff(&a);
    labels[b] = a;
    mask(b, 0) = m >= threshold ? 1.0 : 0.0;
  }
  return ad::scale(masked_nll(logits, labels, mask), 1.0 / static_cast<double>(b_sz));
}

Var loss_align(Tape& t, Var x, Var y, double tau) {
  (void)t;
  require(tau > 0.0, "alignment temperature must be positive");
  const Eigen::Index b_sz = x.rows();
  require(y.rows() == b_sz && y.cols() == x.cols(), "embedding shapes must match");
  require(b_sz >= 1, "alignment needs at least one pair");
  for (Eigen::Index b = 0; b < b_sz; ++b) {
    if (std::abs(x.value().row(b).norm() - 1.0) > 1e-3 ||
        std::abs(y.value().row(b).norm() - 1.0) > 1e-3) {
      throw DomainError("objectives: alignment inputs must be unit-norm rows");
    }
  }

  Var sims = ad::scale(ad::matmul_nt(x, y), 1.0 / tau);
  std::vector<int> diag(static_cast<std::size_t>(b_sz));
  std::iota(diag.begin(), diag.end(), 0);
  Var by_row = ad::gather_cols_per_row(ad::log_softmax_rows(sims), diag);
  Var by_col = ad::gather_cols_per_row(ad::log_softmax_rows(ad::transpose(sims)), diag);
  Var summed = ad::add(ad::sum_all(by_row), ad::sum_all(by_col));
  return ad::scale(summed, -0.5 / static_cast<double>(b_sz));
}

Var loss_fair(Tape& t, Var p_img, Var p_pcl) {
  require(p_img.rows() == p_pcl.rows() && p_img.cols() == p_pcl.cols(),
          "prediction shapes must match");
  require(p_img.rows() >= 1 && p_img.cols() >= 1, "predictions must be non-empty");
  (void)t;
  const double c = static_cast<double>(p_img.cols());
  Var logs = ad::add(ad::sum_all(ad::log_clamped(ad::colwise_mean(p_img), 1e-12)),
                     ad::sum_all(ad::log_clamped(ad::colwise_mean(p_pcl), 1e-12)));
  return ad::scale(logs, -1.0 / c);
}

Var loss_mim(Tape& t, Var pred, const Matrix& target) {
  return masked_mae(t, pred, target, "masked-image");
}

Var loss_mpm(Tape& t, Var pred, const Matrix& target) {
  return masked_mae(t, pred, target, "masked-point");
}

Var loss_lg_align(Tape& t, Var img_embed, Var img_proj, const std::vector<int>& img_sample,
                  Var pcl_embed, Var pcl_proj, const std::vector<int>& pcl_sample) {
  return ad::add(modality_lg_term(t, img_embed, img_proj, img_sample),
                 modality_lg_term(t, pcl_embed, pcl_proj, pcl_sample));
}

Var total_loss(Tape& t, const LossTerms& terms, const RunConfig::Objective& cfg,
               LossBreakdown* breakdown) {
  require(cfg.w_cls > 0 || cfg.w_align > 0 || cfg.w_fair > 0 || cfg.w_mim > 0 || cfg.w_mpm > 0 ||
              cfg.w_lg > 0,
          "at least one loss weight must be positive");

  LossBreakdown bd;
  Var total;
  auto fold = [&](Var term, double weight, double* slot) {
    if (term.node == nullptr) return;
    require(term.rows() == 1 && term.cols() == 1, "loss terms must be scalars");
    *slot = ad::item(term);
    Var weighted = ad::scale(term, weight);
    total = total.node == nullptr ? weighted : ad::add(total, weighted);
  };
  fold(terms.cls, cfg.w_cls, &bd.cls);
  fold(terms.align, cfg.w_align, &bd.align);
  fold(terms.fair, cfg.w_fair, &bd.fair);
  fold(terms.mim, cfg.w_mim, &bd.mim);
  fold(terms.mpm, cfg.w_mpm, &bd.mpm);
  fold(terms.lg, cfg.w_lg, &bd.lg);
  if (total.node == nullptr) total = t.constant(Matrix::Zero(1, 1));
  bd.total = ad::item(total);
  if (breakdown != nullptr) *breakdown = bd;
  return total;
}

}  // namespace crossmost::obj
