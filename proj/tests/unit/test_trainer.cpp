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
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "common/error.hpp"
#include "trainer/trainer.hpp"

using namespace crossmost;
using namespace crossmost::train;

namespace {

namespace fs = std::filesystem;

RunConfig tiny_cfg() {
  RunConfig cfg;
  cfg.data.classes = 4;
  cfg.data.n_points = 128;
  cfg.data.views = 2;
  cfg.data.image_size = 16;
  cfg.data.train_per_class = 8;
  cfg.data.test_per_class = 4;
  cfg.data.pretrain_per_class = 6;
  cfg.data.exemplars_per_class = 2;
  cfg.tok.patch_size = 8;
  cfg.tok.groups = 4;
  cfg.tok.group_size = 4;
  cfg.model.d_model = 16;
  cfg.model.n_layers = 1;
  cfg.model.n_heads = 2;
  cfg.model.d_embed = 8;
  cfg.model.group_hidden = 8;
  cfg.model.pos_hidden = 8;
  cfg.train.batch_size = 16;
  cfg.train.epochs = 2;
  cfg.train.pretrain_epochs = 2;
  cfg.train.pretrain_batch_size = 16;
  return cfg;
}

std::vector<const synth::Sample*> first_batch(const synth::Dataset& ds, int n) {
  std::vector<const synth::Sample*> out;
  for (int i = 0; i < n; ++i) out.push_back(&ds.train[static_cast<std::size_t>(i)]);
  return out;
}

long line_count(const fs::path& p) {
  std::ifstream in(p);
  long n = 0;
  std::string line;
  while (std::getline(in, line)) ++n;
  return n;
}

std::string file_text(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("zero-epoch pretraining only installs the prototype classifier") {
  RunConfig cfg = tiny_cfg();
  cfg.train.pretrain_epochs = 0;
  synth::Dataset ds = synth::generate_dataset(cfg);

  Trainer tr(cfg, ds);
  model::Model fresh(cfg, cfg.train.seed);
  CHECK(tr.pretrain().empty());

  for (std::size_t i = 0; i < fresh.parameters().size(); ++i) {
    const ad::Parameter* p = fresh.parameters()[i];
    if (p->name == "q.weight") continue;  // replaced by exemplar prototypes
    CHECK(tr.student().parameters()[i]->value == p->value);
  }
  CHECK(tr.student().classifier().value != fresh.classifier().value);
  for (Eigen::Index r = 0; r < tr.student().classifier().value.rows(); ++r) {
    CHECK(tr.student().classifier().value.row(r).norm() ==
          doctest::Approx(1.0).epsilon(1e-9));
  }
  // Teacher starts as an exact copy.
  for (std::size_t i = 0; i < fresh.parameters().size(); ++i) {
    CHECK(tr.teacher().parameters()[i]->value == tr.student().parameters()[i]->value);
  }
}

TEST_CASE("pretraining is deterministic and improves pair alignment") {
  RunConfig cfg = tiny_cfg();
  // The tiny corpus yields one optimizer step per epoch, so real alignment
  // needs a long schedule and an aggressive base rate.
  cfg.train.pretrain_epochs = 40;
  cfg.train.pretrain_base_lr = 0.1;
  synth::Dataset ds = synth::generate_dataset(cfg);

  Trainer a(cfg, ds);
  Trainer::AlignProbe before = a.alignment_probe(ds.pretrain);
  std::vector<double> losses_a = a.pretrain();
  REQUIRE(losses_a.size() == 40);
  for (double l : losses_a) CHECK(std::isfinite(l));
  CHECK(losses_a.back() < losses_a.front());

  Trainer::AlignProbe after = a.alignment_probe(ds.pretrain);
  CHECK(after.diag_mean - after.offdiag_mean > before.diag_mean - before.offdiag_mean);
  CHECK(after.diag_mean > after.offdiag_mean);

  Trainer b(cfg, ds);
  std::vector<double> losses_b = b.pretrain();
  CHECK(losses_a == losses_b);
  for (std::size_t i = 0; i < a.student().parameters().size(); ++i) {
    CHECK(a.student().parameters()[i]->value == b.student().parameters()[i]->value);
  }
}

TEST_CASE("image-freeze fraction keeps the image encoder at initialization") {
  RunConfig cfg = tiny_cfg();
  cfg.train.pretrain_epochs = 2;
  cfg.train.pretrain_freeze_image_frac = 0.0;
  synth::Dataset ds = synth::generate_dataset(cfg);

  Trainer tr(cfg, ds);
  model::Model fresh(cfg, cfg.train.seed);
  tr.pretrain();
  bool pcl_moved = false;
  for (std::size_t i = 0; i < fresh.parameters().size(); ++i) {
    const ad::Parameter* p = fresh.parameters()[i];
    if (p->name.rfind("img.", 0) == 0) {
      CHECK(tr.student().parameters()[i]->value == p->value);
    } else if (p->name.rfind("pcl.", 0) == 0 &&
               tr.student().parameters()[i]->value != p->value) {
      pcl_moved = true;
    }
  }
  CHECK(pcl_moved);
}

TEST_CASE("a vacuous objective leaves the student at a fixed point") {
  RunConfig cfg = tiny_cfg();
  cfg.tok.img_mask_ratio = 0.0;  // no masked patches: reconstruction sums over nothing
  cfg.obj.w_cls = 0.0;
  cfg.obj.w_align = 0.0;
  cfg.obj.w_fair = 0.0;
  cfg.obj.w_mpm = 0.0;
  cfg.obj.w_lg = 0.0;
  cfg.train.weight_decay = 0.0;
  cfg.train.ema_momentum = 1.0;
  synth::Dataset ds = synth::generate_dataset(cfg);

  Trainer tr(cfg, ds);
  tr.pretrain();
  std::vector<Matrix> before;
  for (const ad::Parameter* p : tr.student().parameters()) before.push_back(p->value);

  tr.prepare_selftraining(4);
  StepLog log = tr.selftrain_step(first_batch(ds, 16), 0);
  CHECK(log.losses.total == 0.0);
  for (std::size_t i = 0; i < before.size(); ++i) {
    CHECK(tr.student().parameters()[i]->value == before[i]);
    CHECK(tr.teacher().parameters()[i]->value == before[i]);
  }
}

TEST_CASE("ema momentum one freezes the teacher while the student moves") {
  RunConfig cfg = tiny_cfg();
  cfg.train.ema_momentum = 1.0;
  cfg.obj.threshold = 0.1;  // accept almost everything
  synth::Dataset ds = synth::generate_dataset(cfg);

  Trainer tr(cfg, ds);
  tr.pretrain();
  std::vector<Matrix> teacher_before;
  for (const ad::Parameter* p : tr.teacher().parameters()) teacher_before.push_back(p->value);
  const Matrix student_probe = tr.student().find("img.patch.w")->value;

  tr.prepare_selftraining(4);
  StepLog log = tr.selftrain_step(first_batch(ds, 16), 0);
  CHECK(log.losses.total > 0.0);
  CHECK(log.accepted_frac > 0.0);
  for (std::size_t i = 0; i < teacher_before.size(); ++i) {
    CHECK(tr.teacher().parameters()[i]->value == teacher_before[i]);
  }
  CHECK(tr.student().find("img.patch.w")->value != student_probe);
}

TEST_CASE("self-training steps replay bit-identically") {
  RunConfig cfg = tiny_cfg();
  synth::Dataset ds = synth::generate_dataset(cfg);

  Trainer a(cfg, ds);
  Trainer b(cfg, ds);
  a.pretrain();
  b.pretrain();
  a.prepare_selftraining(4);
  b.prepare_selftraining(4);

  for (long step = 0; step < 2; ++step) {
    StepLog la = a.selftrain_step(first_batch(ds, 16), step);
    StepLog lb = b.selftrain_step(first_batch(ds, 16), step);
    CHECK(la.losses.total == lb.losses.total);
    CHECK(la.losses.cls == lb.losses.cls);
    CHECK(la.lr == lb.lr);
    CHECK(la.accepted_frac == lb.accepted_frac);
  }
  for (std::size_t i = 0; i < a.student().parameters().size(); ++i) {
    CHECK(a.student().parameters()[i]->value == b.student().parameters()[i]->value);
    CHECK(a.teacher().parameters()[i]->value == b.teacher().parameters()[i]->value);
  }
}

TEST_CASE("training modes gate the loss terms") {
  RunConfig cfg = tiny_cfg();
  cfg.obj.threshold = 0.1;
  synth::Dataset ds = synth::generate_dataset(cfg);

  auto step_with_mode = [&](const std::string& mode) {
    RunConfig c = cfg;
    c.obj.mode = mode;
    Trainer tr(c, ds);
    tr.pretrain();
    tr.prepare_selftraining(4);
    return tr.selftrain_step(first_batch(ds, 16), 0);
  };

  StepLog cross = step_with_mode("cross_modal");
  CHECK(cross.losses.align > 0.0);
  CHECK(cross.losses.cls > 0.0);
  CHECK(cross.losses.mim > 0.0);
  CHECK(cross.losses.mpm > 0.0);
  CHECK(cross.losses.fair >= 2.0 * std::log(4.0) - 1e-9);

  StepLog uni_img = step_with_mode("unimodal_image");
  CHECK(uni_img.losses.align == 0.0);
  CHECK(uni_img.losses.cls > 0.0);

  StepLog uni_pcl = step_with_mode("unimodal_point");
  CHECK(uni_pcl.losses.align == 0.0);

  StepLog img_only = step_with_mode("pseudo_image_only");
  CHECK(img_only.source_img_frac == 1.0);
  StepLog pcl_only = step_with_mode("pseudo_point_only");
  CHECK(pcl_only.source_img_frac == 0.0);
  StepLog random_src = step_with_mode("pseudo_random");
  CHECK(random_src.source_img_frac > 0.0);
  CHECK(random_src.source_img_frac < 1.0);
}

TEST_CASE("non-finite parameters abort the step with a numerics error") {
  RunConfig cfg = tiny_cfg();
  synth::Dataset ds = synth::generate_dataset(cfg);
  Trainer tr(cfg, ds);
  tr.pretrain();
  tr.prepare_selftraining(4);
  tr.student().find("img.patch.w")->value(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(tr.selftrain_step(first_batch(ds, 16), 0), NumericsError);
}

TEST_CASE("self-training run writes logs, checkpoints and a config copy") {
  RunConfig cfg = tiny_cfg();
  cfg.obj.threshold = 0.3;
  synth::Dataset ds = synth::generate_dataset(cfg);
  const fs::path dir = fs::temp_directory_path() / "crossmost_run_test";
  fs::remove_all(dir);

  Trainer tr(cfg, ds);
  tr.pretrain();
  metrics::MetricRecord final_rec = tr.run_selftraining(dir.string());
  CHECK(final_rec.epoch == cfg.train.epochs);

  CHECK(line_count(dir / "metrics.jsonl") == cfg.train.epochs + 1);
  CHECK(line_count(dir / "steps.jsonl") == tr.selftrain_total_steps());
  CHECK(fs::exists(dir / "ckpt_best" / "manifest.json"));
  CHECK(fs::exists(dir / "ckpt_final" / "manifest.json"));

  RunConfig copy = RunConfig::load_file((dir / "config.cfg").string());
  CHECK(copy.content_hash() == cfg.content_hash());

  // Re-running into a fresh directory reproduces the logs byte for byte.
  const fs::path dir2 = fs::temp_directory_path() / "crossmost_run_test2";
  fs::remove_all(dir2);
  Trainer tr2(cfg, ds);
  tr2.pretrain();
  tr2.run_selftraining(dir2.string());
  CHECK(file_text(dir / "metrics.jsonl") == file_text(dir2 / "metrics.jsonl"));
  CHECK(file_text(dir / "steps.jsonl") == file_text(dir2 / "steps.jsonl"));
  fs::remove_all(dir);
  fs::remove_all(dir2);
}

TEST_CASE("zero-epoch self-training records only the initial evaluation") {
  RunConfig cfg = tiny_cfg();
  cfg.train.epochs = 0;
  synth::Dataset ds = synth::generate_dataset(cfg);
  const fs::path dir = fs::temp_directory_path() / "crossmost_run_zero";
  fs::remove_all(dir);

  Trainer tr(cfg, ds);
  tr.pretrain();
  metrics::MetricRecord rec = tr.run_selftraining(dir.string());
  CHECK(rec.epoch == 0);
  CHECK(line_count(dir / "metrics.jsonl") == 1);
  CHECK(line_count(dir / "steps.jsonl") == 0);
  CHECK(fs::exists(dir / "ckpt_final" / "manifest.json"));
  fs::remove_all(dir);
}

TEST_CASE("checkpoint init replaces both models") {
  RunConfig cfg = tiny_cfg();
  synth::Dataset ds = synth::generate_dataset(cfg);
  const fs::path dir = fs::temp_directory_path() / "crossmost_tr_ckpt";
  fs::remove_all(dir);

  Trainer tr(cfg, ds);
  tr.pretrain();
  model::save_checkpoint(dir.string(), tr.student(), tr.teacher(), cfg, 17);

  RunConfig cfg2 = cfg;
  cfg2.train.seed = 999;  // different random init
  Trainer other(cfg2, ds);
  other.init_from_checkpoint(dir.string());
  for (std::size_t i = 0; i < tr.student().parameters().size(); ++i) {
    const Matrix& want = tr.student().parameters()[i]->value;
    const Matrix& got = other.student().parameters()[i]->value;
    // Checkpoints round through float32.
    CHECK((want.cast<float>().cast<double>() - got).cwiseAbs().maxCoeff() == 0.0);
  }
  fs::remove_all(dir);
}
