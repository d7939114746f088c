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
#include "trainer/trainer.hpp"

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "common/error.hpp"
#include "common/parallel.hpp"
#include "tokenizer/tokenizer.hpp"

namespace crossmost::train {

namespace {

namespace fs = std::filesystem;

long ceil_div(long a, long b) { return (a + b - 1) / b; }

Matrix softmax_rows_plain(const Matrix& logits) {
  Matrix p = logits;
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    const double m = p.row(r).maxCoeff();
    p.row(r) = (p.row(r).array() - m).exp();
    p.row(r) /= p.row(r).sum();
  }
  return p;
}

// Pixel rows of the image batch matching the encoder's masked-token order.
Matrix image_recon_targets(const model::ImageBatch& ib, const model::BranchOut& out) {
  Matrix target(static_cast<Eigen::Index>(out.msk_sample.size()), ib.patches.cols());
  for (std::size_t m = 0; m < out.msk_sample.size(); ++m) {
    target.row(static_cast<Eigen::Index>(m)) =
        ib.patches.row(out.msk_sample[m] * ib.k_tokens + out.msk_token[m]);
  }
  return target;
}

// Center-relative coordinates of each masked group, flattened point-major.
Matrix point_recon_targets(const model::PointBatch& pb, const model::BranchOut& out) {
  const int g = pb.group_size;
  Matrix target(static_cast<Eigen::Index>(out.msk_sample.size()), 3 * g);
  for (std::size_t m = 0; m < out.msk_sample.size(); ++m) {
    const int group_row = out.msk_sample[m] * pb.k_tokens + out.msk_token[m];
    for (int j = 0; j < g; ++j) {
      target.block(static_cast<Eigen::Index>(m), 3 * j, 1, 3) = pb.groups.row(group_row * g + j);
    }
  }
  return target;
}

nlohmann::json step_json(const StepLog& log) {
  return nlohmann::json{{"step", log.step},
                        {"lr", log.lr},
                        {"l_cls", log.losses.cls},
                        {"l_align", log.losses.align},
                        {"l_fair", log.losses.fair},
                        {"l_mim", log.losses.mim},
                        {"l_mpm", log.losses.mpm},
                        {"l_lg", log.losses.lg},
                        {"total", log.losses.total},
                        {"accepted_frac", log.accepted_frac},
                        {"source_img_frac", log.source_img_frac}};
}

}  // namespace

Trainer::Trainer(const RunConfig& cfg, const synth::Dataset& ds)
    : cfg_(cfg), ds_(ds), student_(cfg, cfg.train.seed), teacher_(cfg, cfg.train.seed) {
  cfg_.validate();
  teacher_.copy_values_from(student_);
}

model::Model& Trainer::eval_model() { return cfg_.train.eval_student ? student_ : teacher_; }

Rng Trainer::stream(std::uint64_t id, const char* tag, std::uint64_t step) const {
  return Rng::stream(static_cast<std::uint64_t>(cfg_.train.seed), id, tag, step);
}

std::vector<double> Trainer::pretrain() {
  if (ds_.pretrain.empty()) throw ConfigError("trainer: pretrain split is empty");
  const long n = static_cast<long>(ds_.pretrain.size());
  const long bsz = cfg_.train.pretrain_batch_size;
  const long steps_per_epoch = ceil_div(n, bsz);
  const long total = cfg_.train.pretrain_epochs * steps_per_epoch;
  const int views = cfg_.views_in_use();

  std::vector<double> epoch_losses;
  if (total == 0) {
    model::init_classifier_from_prototypes(student_, ds_.exemplars, cfg_);
    teacher_.copy_values_from(student_);
    return epoch_losses;
  }

  AdamW::Options opt;
  opt.lr = cfg_.effective_pretrain_lr();
  opt.weight_decay = cfg_.train.weight_decay;
  opt.layer_decay = 1.0;  // from-scratch stage, no depth-graded rates
  opt.warmup_frac = cfg_.train.warmup_frac;
  opt.total_steps = total;
  opt_ = std::make_unique<AdamW>(student_.parameters(), opt);

  const long freeze_after =
      static_cast<long>(cfg_.train.pretrain_freeze_image_frac * static_cast<double>(total));
  bool image_frozen = false;

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  long step = 0;
  for (int epoch = 0; epoch < cfg_.train.pretrain_epochs; ++epoch) {
    Rng shuffler = stream(static_cast<std::uint64_t>(epoch), "pre_shuffle", 0);
    shuffler.shuffle(order);
    double loss_sum = 0.0;
    long batches = 0;
    for (long base = 0; base < n; base += bsz) {
      const long cur = std::min(bsz, n - base);
      if (!image_frozen && step >= freeze_after) {
        opt_->set_frozen(
            [](const ad::Parameter& p) { return p.name.rfind("img.", 0) == 0; }, true);
        image_frozen = true;
      }

      std::vector<Matrix> imgs(static_cast<std::size_t>(cur));
      std::vector<Matrix> clouds(static_cast<std::size_t>(cur));
      parallel_for(static_cast<int>(cur), [&](int i) {
        const synth::Sample& s = ds_.pretrain[static_cast<std::size_t>(order[base + i])];
        Rng vr = stream(s.sample_id, "pre_view", static_cast<std::uint64_t>(step));
        const int v = vr.uniform_int(views);
        Rng ir = stream(s.sample_id, "pre_aimg", static_cast<std::uint64_t>(step));
        Rng pr = stream(s.sample_id, "pre_apcl", static_cast<std::uint64_t>(step));
        imgs[i] = synth::augment_img_weak(s.views[static_cast<std::size_t>(v)].pixels, ir,
                                          cfg_.aug);
        clouds[i] = synth::augment_pcl_weak(s.points, pr, cfg_.aug);
      });

      ad::Tape t;
      model::BranchOut io =
          student_.encode_image(t, model::build_image_batch(imgs, cfg_.tok.patch_size));
      model::BranchOut po = student_.encode_points(
          t, model::build_point_batch(clouds, cfg_.tok.groups, cfg_.tok.group_size));
      ad::Var loss = obj::loss_align(t, io.embed, po.embed, cfg_.obj.tau);
      const double value = ad::item(loss);
      if (!std::isfinite(value)) {
        throw NumericsError("trainer: alignment loss diverged at pretrain step " +
                            std::to_string(step));
      }
      loss_sum += value;
      ++batches;
      opt_->zero_grad();
      t.backward(loss);
      opt_->step();
      ++step;
    }
    epoch_losses.push_back(loss_sum / static_cast<double>(batches));
  }

  model::init_classifier_from_prototypes(student_, ds_.exemplars, cfg_);
  teacher_.copy_values_from(student_);
  return epoch_losses;
}

void Trainer::init_from_checkpoint(const std::string& dir) {
  model::load_checkpoint(dir, student_, teacher_);
}

long Trainer::selftrain_total_steps() const {
  const long n = static_cast<long>(ds_.train.size());
  return cfg_.train.epochs * ceil_div(n, cfg_.train.batch_size);
}

void Trainer::prepare_selftraining(long total_steps) {
  AdamW::Options opt;
  opt.lr = cfg_.effective_lr();
  opt.weight_decay = cfg_.train.weight_decay;
  opt.layer_decay = cfg_.train.layer_decay;
  opt.warmup_frac = cfg_.train.warmup_frac;
  opt.total_steps = std::max<long>(1, total_steps);
  opt_ = std::make_unique<AdamW>(student_.parameters(), opt);
}

StepLog Trainer::selftrain_step(const std::vector<const synth::Sample*>& batch, long step) {
  if (opt_ == nullptr) throw ConfigError("trainer: optimizer not prepared");
  if (batch.empty()) throw ConfigError("trainer: empty batch");
  const int views = cfg_.views_in_use();
  const int n = static_cast<int>(batch.size());
  const auto ustep = static_cast<std::uint64_t>(step);

  std::vector<Matrix> weak_imgs(batch.size()), weak_pcls(batch.size());
  std::vector<Matrix> strong_imgs(batch.size()), strong_pcls(batch.size());
  std::vector<std::vector<int>> img_masks(batch.size()), pcl_masks(batch.size());
  parallel_for(n, [&](int i) {
    const synth::Sample& s = *batch[static_cast<std::size_t>(i)];
    Rng vr = stream(s.sample_id, "view", ustep);
    const int v = vr.uniform_int(views);
    const Matrix& pixels = s.views[static_cast<std::size_t>(v)].pixels;

    Rng wi = stream(s.sample_id, "wimg", ustep);
    Rng wp = stream(s.sample_id, "wpcl", ustep);
    weak_imgs[i] = synth::augment_img_weak(pixels, wi, cfg_.aug);
    weak_pcls[i] = synth::augment_pcl_weak(s.points, wp, cfg_.aug);

    Rng si = stream(s.sample_id, "simg", ustep);
    Rng sp = stream(s.sample_id, "spcl", ustep);
    strong_imgs[i] = synth::augment_img_strong(pixels, si, cfg_.aug);
    strong_pcls[i] = synth::augment_pcl_strong(s.points, sp, cfg_.aug);

    Rng mi = stream(s.sample_id, "imask", ustep);
    img_masks[i] =
        tok::mask_image_patches(student_.image_tokens(), cfg_.tok.img_mask_ratio, mi);

    const std::vector<int> centers_idx = tok::fps(strong_pcls[i], cfg_.tok.groups);
    Matrix centers(cfg_.tok.groups, 3);
    for (int k = 0; k < cfg_.tok.groups; ++k) {
      centers.row(k) = strong_pcls[i].row(centers_idx[static_cast<std::size_t>(k)]);
    }
    Rng mp = stream(s.sample_id, "pmask", ustep);
    pcl_masks[i] =
        tok::mask_point_blocks(centers, cfg_.tok.pcl_mask_min, cfg_.tok.pcl_mask_max, mp);
  });

  // (a) Teacher forward on weak, unmasked inputs.
  Matrix q_img, q_pcl;
  {
    ad::Tape t(false);
    model::BranchOut ti =
        teacher_.encode_image(t, model::build_image_batch(weak_imgs, cfg_.tok.patch_size));
    model::BranchOut tp = teacher_.encode_points(
        t, model::build_point_batch(weak_pcls, cfg_.tok.groups, cfg_.tok.group_size));
    q_img = softmax_rows_plain(teacher_.classify(t, ti.embed).value());
    q_pcl = softmax_rows_plain(teacher_.classify(t, tp.embed).value());
  }

  // (b) Joint pseudo-labels.
  Rng source_rng = stream(0, "pseudo_src", ustep);
  const TrainingMode mode = cfg_.mode();
  obj::PseudoBatch pseudo =
      obj::joint_pseudo_labels(q_img, q_pcl, cfg_.obj.threshold, mode, &source_rng);
  pseudo_stats_.add(pseudo);

  // (c) Student forward on strong, masked inputs.
  ad::Tape t;
  model::ImageBatch sb_img =
      model::build_image_batch(strong_imgs, cfg_.tok.patch_size, img_masks);
  model::PointBatch sb_pcl = model::build_point_batch(strong_pcls, cfg_.tok.groups,
                                                      cfg_.tok.group_size, pcl_masks);
  model::BranchOut io = student_.encode_image(t, sb_img);
  model::BranchOut po = student_.encode_points(t, sb_pcl);
  ad::Var logits_img = student_.classify(t, io.embed);
  ad::Var logits_pcl = student_.classify(t, po.embed);

  // (d) Weighted loss. Uni-modal modes drop the label exchange and the
  // cross-modal alignment term; everything else stays on.
  obj::LossTerms terms;
  switch (mode) {
    case TrainingMode::kUnimodalImage:
      terms.cls = obj::loss_unimodal(t, q_img, logits_img, cfg_.obj.threshold);
      break;
    case TrainingMode::kUnimodalPoint:
      terms.cls = obj::loss_unimodal(t, q_pcl, logits_pcl, cfg_.obj.threshold);
      break;
    default:
      terms.cls = obj::loss_cls(t, pseudo, logits_img, logits_pcl);
      terms.align = obj::loss_align(t, io.embed, po.embed, cfg_.obj.tau);
      break;
  }
  terms.fair =
      obj::loss_fair(t, ad::softmax_rows(logits_img), ad::softmax_rows(logits_pcl));
  terms.mim = obj::loss_mim(t, student_.decode_image(t, io.msk_out),
                            image_recon_targets(sb_img, io));
  terms.mpm = obj::loss_mpm(t, student_.decode_points(t, po.msk_out),
                            point_recon_targets(sb_pcl, po));
  terms.lg = obj::loss_lg_align(t, io.embed, student_.project_image(t, io.msk_out),
                                io.msk_sample, po.embed,
                                student_.project_points(t, po.msk_out), po.msk_sample);

  obj::LossBreakdown bd;
  ad::Var total = obj::total_loss(t, terms, cfg_.obj, &bd);
  if (!std::isfinite(bd.total)) {
    throw NumericsError("trainer: self-training loss diverged at step " + std::to_string(step));
  }

  StepLog log;
  log.step = step;
  log.lr = opt_->current_rate(cfg_.model.n_layers + 1);
  log.losses = bd;
  long accepted = 0, from_img = 0;
  for (std::size_t b = 0; b < pseudo.accepted.size(); ++b) {
    accepted += pseudo.accepted[b] ? 1 : 0;
    from_img += (pseudo.accepted[b] && pseudo.source_img[b]) ? 1 : 0;
  }
  log.accepted_frac = static_cast<double>(accepted) / static_cast<double>(n);
  log.source_img_frac =
      accepted == 0 ? 0.0 : static_cast<double>(from_img) / static_cast<double>(accepted);

  // (e) Student update, (f) teacher EMA.
  opt_->zero_grad();
  t.backward(total);
  opt_->step();
  ema_update(teacher_, student_, cfg_.train.ema_momentum);
  return log;
}

metrics::MetricRecord Trainer::evaluate_test(int epoch) {
  return metrics::evaluate(eval_model(), ds_.test, cfg_, epoch);
}

metrics::MetricRecord Trainer::run_selftraining(const std::string& out_dir) {
  fs::create_directories(out_dir);
  {
    std::ofstream cfg_out(fs::path(out_dir) / "config.cfg", std::ios::trunc);
    cfg_out << cfg_.serialize();
    if (!cfg_out) throw IoError("trainer: cannot write config copy in " + out_dir);
  }

  const long n = static_cast<long>(ds_.train.size());
  if (n == 0) throw ConfigError("trainer: train split is empty");
  const long bsz = cfg_.train.batch_size;
  const long total = selftrain_total_steps();
  prepare_selftraining(total);

  std::ofstream metrics_out(fs::path(out_dir) / "metrics.jsonl", std::ios::trunc);
  std::ofstream steps_out(fs::path(out_dir) / "steps.jsonl", std::ios::trunc);
  if (!metrics_out || !steps_out) throw IoError("trainer: cannot open logs in " + out_dir);

  metrics::MetricRecord rec = evaluate_test(0);
  metrics_out << metrics::to_json_line(rec) << "\n";
  metrics_out.flush();

  const std::string best_dir = (fs::path(out_dir) / "ckpt_best").string();
  const std::string final_dir = (fs::path(out_dir) / "ckpt_final").string();
  std::string last_good = "none";
  double best_acc = -1.0;

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  long step = 0;
  for (int epoch = 1; epoch <= cfg_.train.epochs; ++epoch) {
    pseudo_stats_.reset();
    Rng shuffler = stream(static_cast<std::uint64_t>(epoch), "order", 0);
    shuffler.shuffle(order);
    for (long base = 0; base < n; base += bsz) {
      const long cur = std::min(bsz, n - base);
      std::vector<const synth::Sample*> batch;
      batch.reserve(static_cast<std::size_t>(cur));
      for (long i = 0; i < cur; ++i) {
        batch.push_back(&ds_.train[static_cast<std::size_t>(order[base + i])]);
      }
      StepLog log;
      try {
        log = selftrain_step(batch, step);
      } catch (const NumericsError& e) {
        throw NumericsError(std::string(e.what()) + "; last good checkpoint: " + last_good);
      }
      steps_out << step_json(log).dump() << "\n";
      ++step;
    }
    rec = evaluate_test(epoch);
    rec.source_img_frac = pseudo_stats_.source_img_frac();
    rec.agreement = pseudo_stats_.agreement();
    rec.accepted_frac = pseudo_stats_.accepted_frac();
    metrics_out << metrics::to_json_line(rec) << "\n";
    metrics_out.flush();
    if (rec.acc_pcl > best_acc) {
      best_acc = rec.acc_pcl;
      model::save_checkpoint(best_dir, student_, teacher_, cfg_, step);
      last_good = best_dir;
    }
  }

  model::save_checkpoint(final_dir, student_, teacher_, cfg_, step);
  if (!metrics_out || !steps_out) throw IoError("trainer: log write failed in " + out_dir);
  return rec;
}

Trainer::AlignProbe Trainer::alignment_probe(const std::vector<synth::Sample>& samples) {
  if (samples.size() < 2) throw ConfigError("trainer: alignment probe needs >= 2 samples");
  constexpr std::size_t kChunk = 64;
  Matrix xs(static_cast<Eigen::Index>(samples.size()), student_.d_embed());
  Matrix ys(static_cast<Eigen::Index>(samples.size()), student_.d_embed());
  for (std::size_t base = 0; base < samples.size(); base += kChunk) {
    const std::size_t cur = std::min(kChunk, samples.size() - base);
    std::vector<Matrix> imgs, clouds;
    for (std::size_t i = 0; i < cur; ++i) {
      imgs.push_back(samples[base + i].views[0].pixels);
      clouds.push_back(samples[base + i].points);
    }
    ad::Tape t(false);
    xs.middleRows(static_cast<Eigen::Index>(base), static_cast<Eigen::Index>(cur)) =
        student_.encode_image(t, model::build_image_batch(imgs, cfg_.tok.patch_size))
            .embed.value();
    ys.middleRows(static_cast<Eigen::Index>(base), static_cast<Eigen::Index>(cur)) =
        student_
            .encode_points(t, model::build_point_batch(clouds, cfg_.tok.groups,
                                                       cfg_.tok.group_size))
            .embed.value();
  }
  const Matrix sims = xs * ys.transpose();
  const double diag = sims.diagonal().mean();
  const double total = sims.sum();
  const auto b = static_cast<double>(samples.size());
  AlignProbe probe;
  probe.diag_mean = diag;
  probe.offdiag_mean = (total - sims.diagonal().sum()) / (b * b - b);
  return probe;
}

}  // namespace crossmost::train
