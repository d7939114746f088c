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
#include "metrics/metrics.hpp"

#include <cmath>
#include <cstddef>
#include <fstream>

#include <json.hpp>

#include "common/error.hpp"

namespace crossmost::metrics {

namespace {

constexpr int kEvalChunk = 64;

Matrix softmax_rows_plain(const Matrix& logits) {
  Matrix p = logits;
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    const double m = p.row(r).maxCoeff();
    p.row(r) = (p.row(r).array() - m).exp();
    p.row(r) /= p.row(r).sum();
  }
  return p;
}

int argmax_row(const Matrix& m, Eigen::Index r) {
  int a = 0;
  m.row(r).maxCoeff(&a);
  return a;
}

// Embeds one chunk of images through the encoder without gradients.
Matrix embed_images(model::Model& m, const std::vector<Matrix>& images, int patch_size) {
  ad::Tape t(false);
  return m.encode_image(t, model::build_image_batch(images, patch_size)).embed.value();
}

Matrix embed_clouds(model::Model& m, const std::vector<Matrix>& clouds, const RunConfig& cfg) {
  ad::Tape t(false);
  return m
      .encode_points(t, model::build_point_batch(clouds, cfg.tok.groups, cfg.tok.group_size))
      .embed.value();
}

Matrix classify_plain(const model::Model& m, const Matrix& embeds, double logit_scale) {
  return logit_scale * (embeds * m.classifier().value.transpose());
}

}  // namespace

double prediction_entropy(const Eigen::RowVectorXd& p) {
  const double c = static_cast<double>(p.size());
  if (p.size() == 0) throw ConfigError("metrics: empty distribution");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p(i) > 0.0) sum += p(i) * std::log(c * p(i));
  }
  return sum;
}

double prediction_bias(const std::vector<int>& predictions, int n_classes) {
  if (n_classes <= 0) throw ConfigError("metrics: class count must be positive");
  if (predictions.empty()) throw ConfigError("metrics: no predictions");
  Eigen::RowVectorXd freq = Eigen::RowVectorXd::Zero(n_classes);
  for (int p : predictions) {
    if (p < 0 || p >= n_classes) throw DomainError("metrics: prediction out of range");
    freq(p) += 1.0;
  }
  freq /= static_cast<double>(predictions.size());
  return prediction_entropy(freq);
}

void PseudoStats::add(const obj::PseudoBatch& pb) {
  for (std::size_t b = 0; b < pb.labels.size(); ++b) {
    ++total_;
    if (pb.argmax_img[b] == pb.argmax_pcl[b]) ++agree_;
    if (pb.accepted[b]) {
      ++accepted_;
      if (pb.source_img[b]) ++accepted_img_;
    }
  }
}

void PseudoStats::reset() { total_ = accepted_ = accepted_img_ = agree_ = 0; }

double PseudoStats::source_img_frac() const {
  return accepted_ == 0 ? 0.0
                        : static_cast<double>(accepted_img_) / static_cast<double>(accepted_);
}

double PseudoStats::agreement() const {
  return total_ == 0 ? 0.0 : static_cast<double>(agree_) / static_cast<double>(total_);
}

double PseudoStats::accepted_frac() const {
  return total_ == 0 ? 0.0 : static_cast<double>(accepted_) / static_cast<double>(total_);
}

MetricRecord evaluate(model::Model& m, const std::vector<synth::Sample>& split,
                      const RunConfig& cfg, int epoch) {
  if (split.empty()) throw ConfigError("metrics: empty evaluation split");
  const int views = cfg.views_in_use();
  const double s = cfg.model.logit_scale;

  long correct_img = 0, correct_star = 0, correct_pcl = 0;
  double ent_img = 0.0, ent_pcl = 0.0;
  std::vector<int> preds_img, preds_pcl;
  preds_img.reserve(split.size());
  preds_pcl.reserve(split.size());

  for (std::size_t base = 0; base < split.size(); base += kEvalChunk) {
    const std::size_t n = std::min<std::size_t>(kEvalChunk, split.size() - base);

    std::vector<Matrix> view0;
    std::vector<Matrix> clouds;
    view0.reserve(n);
    clouds.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const synth::Sample& smp = split[base + i];
      if (static_cast<int>(smp.views.size()) < views) {
        throw ConfigError("metrics: sample has fewer views than requested");
      }
      view0.push_back(smp.views[0].pixels);
      clouds.push_back(smp.points);
    }

    Matrix e0 = embed_images(m, view0, cfg.tok.patch_size);
    Matrix mean_embed = e0;
    for (int v = 1; v < views; ++v) {
      std::vector<Matrix> imgs;
      imgs.reserve(n);
      for (std::size_t i = 0; i < n; ++i) imgs.push_back(split[base + i].views[v].pixels);
      mean_embed += embed_images(m, imgs, cfg.tok.patch_size);
    }
    mean_embed /= static_cast<double>(views);
    for (Eigen::Index r = 0; r < mean_embed.rows(); ++r) {
      const double norm = mean_embed.row(r).norm();
      if (norm > 1e-12) mean_embed.row(r) /= norm;
    }
    Matrix ep = embed_clouds(m, clouds, cfg);

    Matrix li = classify_plain(m, e0, s);
    Matrix lstar = classify_plain(m, mean_embed, s);
    Matrix lp = classify_plain(m, ep, s);
    Matrix pi = softmax_rows_plain(li);
    Matrix pp = softmax_rows_plain(lp);

    for (std::size_t i = 0; i < n; ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      const int label = static_cast<int>(split[base + i].label);
      const int ai = argmax_row(li, r);
      const int astar = argmax_row(lstar, r);
      const int ap = argmax_row(lp, r);
      correct_img += ai == label;
      correct_star += astar == label;
      correct_pcl += ap == label;
      preds_img.push_back(ai);
      preds_pcl.push_back(ap);
      ent_img += prediction_entropy(pi.row(r));
      ent_pcl += prediction_entropy(pp.row(r));
    }
  }

  const double n = static_cast<double>(split.size());
  MetricRecord rec;
  rec.epoch = epoch;
  rec.acc_image = static_cast<double>(correct_img) / n;
  rec.acc_image_star = static_cast<double>(correct_star) / n;
  rec.acc_pcl = static_cast<double>(correct_pcl) / n;
  rec.pred_entropy_img = ent_img / n;
  rec.pred_entropy_pcl = ent_pcl / n;
  rec.pred_bias_img = prediction_bias(preds_img, m.n_classes());
  rec.pred_bias_pcl = prediction_bias(preds_pcl, m.n_classes());
  return rec;
}

void dump_embeddings(const std::string& path, model::Model& m,
                     const std::vector<synth::Sample>& split, const RunConfig& cfg) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("metrics: cannot open " + path);
  out << "sample_id,modality,label,prediction";
  for (int i = 0; i < m.d_embed(); ++i) out << ",e" << i;
  out << "\n";
  out.precision(9);

  const double s = cfg.model.logit_scale;
  for (std::size_t base = 0; base < split.size(); base += kEvalChunk) {
    const std::size_t n = std::min<std::size_t>(kEvalChunk, split.size() - base);
    std::vector<Matrix> view0;
    std::vector<Matrix> clouds;
    for (std::size_t i = 0; i < n; ++i) {
      view0.push_back(split[base + i].views[0].pixels);
      clouds.push_back(split[base + i].points);
    }
    Matrix ei = embed_images(m, view0, cfg.tok.patch_size);
    Matrix ep = embed_clouds(m, clouds, cfg);
    Matrix li = classify_plain(m, ei, s);
    Matrix lp = classify_plain(m, ep, s);
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      const synth::Sample& smp = split[base + i];
      out << smp.sample_id << ",image," << smp.label << "," << argmax_row(li, r);
      for (Eigen::Index c = 0; c < ei.cols(); ++c) out << "," << ei(r, c);
      out << "\n";
      out << smp.sample_id << ",pcl," << smp.label << "," << argmax_row(lp, r);
      for (Eigen::Index c = 0; c < ep.cols(); ++c) out << "," << ep(r, c);
      out << "\n";
    }
  }
  if (!out) throw IoError("metrics: write failed for " + path);
}

std::string to_json_line(const MetricRecord& r) {
  nlohmann::json j{{"epoch", r.epoch},
                   {"acc_image", r.acc_image},
                   {"acc_image_star", r.acc_image_star},
                   {"acc_pcl", r.acc_pcl},
                   {"pred_entropy_img", r.pred_entropy_img},
                   {"pred_entropy_pcl", r.pred_entropy_pcl},
                   {"pred_bias_img", r.pred_bias_img},
                   {"pred_bias_pcl", r.pred_bias_pcl},
                   {"source_img_frac", r.source_img_frac},
                   {"agreement", r.agreement},
                   {"accepted_frac", r.accepted_frac}};
  return j.dump();
}

}  // namespace crossmost::metrics
