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

#include <cstdint>
#include <string>

namespace crossmost {

enum class TrainingMode {
  kCrossModal,
  kUnimodalImage,
  kUnimodalPoint,
  kPseudoRandom,
  kPseudoImageOnly,
  kPseudoPointOnly,
};

std::string to_string(TrainingMode mode);
TrainingMode training_mode_from_string(const std::string& s);

/// Flat key/value run configuration. Serialized as `section.key = value` lines;
/// see docs in README for the schema. Every field can be overridden from a
/// config file or via CLI flags.
struct RunConfig {
  // data.*
  struct Data {
    int classes = 8;
    int n_points = 1024;
    int views = 4;
    int image_size = 32;
    int train_per_class = 200;
    int test_per_class = 30;
    int pretrain_per_class = 60;
    int exemplars_per_class = 4;
    double jitter = 1.0;           // scales per-family parameter ranges
    bool disjoint_classes = false; // pretrain uses a disjoint parameter regime
    std::uint64_t seed = 42;
  } data;

  // aug.*
  struct Aug {
    double weak_rot_deg = 15.0;
    double weak_scale_min = 0.9;
    double weak_scale_max = 1.1;
    double weak_img_min_area = 0.85;
    double strong_crop_min_retain = 0.6;
    double strong_dropout_max = 0.2;
    double strong_rot_deg = 180.0;
    double strong_translate_max = 0.2;
    double strong_scale_min = 0.5;
    double strong_scale_max = 2.0;
    double strong_img_min_area = 0.5;
    int strong_img_ops = 2;
  } aug;

  // tok.*
  struct Tok {
    int groups = 16;      // K sub-clouds per object
    int group_size = 16;  // G points per sub-cloud
    int patch_size = 8;
    double img_mask_ratio = 0.30;
    double pcl_mask_min = 0.30;
    double pcl_mask_max = 0.40;
  } tok;

  // model.*
  struct Model {
    int d_model = 64;
    int n_layers = 2;
    int n_heads = 4;
    int d_embed = 32;
    int ffn_mult = 2;
    int group_hidden = 32;  // per-point hidden width of the sub-cloud encoder
    int pos_hidden = 32;    // hidden width of the center-position MLP
    double logit_scale = 20.0;
  } model;

  // obj.*
  struct Objective {
    double threshold = 0.7;  // pseudo-label confidence threshold T
    double tau = 0.07;       // alignment temperature
    std::string mode = "cross_modal";
    double w_cls = 1.0;
    double w_align = 1.0;
    double w_fair = 1.0;
    double w_mim = 1.0;
    double w_mpm = 1.0;
    double w_lg = 1.0;
  } obj;

  // train.*
  struct Train {
    double base_lr = 0.01;  // effective lr = base_lr * batch_size / 256
    double weight_decay = 0.05;
    double layer_decay = 0.65;
    int batch_size = 32;
    int epochs = 10;
    double warmup_frac = 0.1;
    double ema_momentum = 0.999;
    std::uint64_t seed = 1;
    bool eval_student = false;
    int pretrain_epochs = 30;
    double pretrain_base_lr = 0.004;
    int pretrain_batch_size = 64;
    double pretrain_freeze_image_frac = 1.0;  // freeze image branch after this fraction; 1 = never
  } train;

  // run.*
  struct Run {
    std::string name = "run";
    int views_used = 0;  // 0 = all stored views
  } run;

  /// Parse a `key = value` config file. Unknown keys raise ConfigError.
  static RunConfig load_file(const std::string& path);
  /// Apply a single `section.key=value` assignment.
  void set(const std::string& key, const std::string& value);
  /// Canonical serialization (fixed key order). Hash input for manifests.
  std::string serialize() const;
  /// FNV-1a hash of the canonical serialization, as 16 hex digits.
  std::string content_hash() const;
  /// Range checks across sections; raises ConfigError on violation.
  void validate() const;

  int views_in_use() const { return run.views_used > 0 ? run.views_used : data.views; }
  double effective_lr() const { return train.base_lr * train.batch_size / 256.0; }
  double effective_pretrain_lr() const {
    return train.pretrain_base_lr * train.pretrain_batch_size / 256.0;
  }
  TrainingMode mode() const { return training_mode_from_string(obj.mode); }
};

}  // namespace crossmost
