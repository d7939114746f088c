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
#include <string_view>
#include <vector>

#include "autodiff/tape.hpp"
#include "common/config.hpp"
#include "synthdata/synthdata.hpp"

namespace crossmost::model {

using ad::Matrix;
using ad::Parameter;
using ad::Tape;
using ad::Var;

/// Row-packed image token batch: sample b's patches occupy rows
/// [b*k_tokens, (b+1)*k_tokens). Masks list per-sample masked patch indices.
struct ImageBatch {
  Matrix patches;  // (B*k_tokens) x n_px
  std::vector<std::vector<int>> masks;
  int batch = 0;
  int k_tokens = 0;
};

/// Row-packed point token batch: groups pack G rows per token, k_tokens tokens
/// per sample; centers pack k_tokens rows per sample.
struct PointBatch {
  Matrix groups;   // (B*k_tokens*group_size) x 3, center-relative
  Matrix centers;  // (B*k_tokens) x 3
  std::vector<std::vector<int>> masks;
  int batch = 0;
  int k_tokens = 0;
  int group_size = 0;
};

ImageBatch build_image_batch(const std::vector<Matrix>& images, int patch_size,
                             std::vector<std::vector<int>> masks = {});
PointBatch build_point_batch(const std::vector<Matrix>& clouds, int k_groups, int group_size,
                             std::vector<std::vector<int>> masks = {});

struct BranchOut {
  Var embed;    // B x d_embed, unit rows (normalized projection of [CLS])
  Var cls_raw;  // B x d_model
  Var msk_out;  // M x d_model, trunk outputs at masked positions (M may be 0)
  std::vector<int> msk_sample;  // owning sample per masked row
  std::vector<int> msk_token;   // token index per masked row
};

/// Both modality encoders plus the shared classifier, owning every trainable
/// parameter. Parameter layer ids: 0 = token/positional embeddings, 1..L-1 =
/// transformer blocks, L = heads (final norm, projections, decoders,
/// classifier), with L = n_layers + 1.
class Model {
public:
  Model(const RunConfig& cfg, std::uint64_t init_seed);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  BranchOut encode_image(Tape& t, const ImageBatch& b);
  BranchOut encode_points(Tape& t, const PointBatch& b);
  Var decode_image(Tape& t, Var msk_out);   // affine d_model -> n_px
  Var decode_points(Tape& t, Var msk_out);  // affine d_model -> 3*group_size
  Var project_image(Tape& t, Var h);        // image projection head + row normalize
  Var project_points(Tape& t, Var h);
  Var classify(Tape& t, Var embed);  // logit_scale * embed * classifier^T

  const std::vector<Parameter*>& parameters() const { return order_; }
  Parameter* find(std::string_view name);
  Parameter& classifier() { return q_; }
  const Parameter& classifier() const { return q_; }

  int n_classes() const { return classes_; }
  int image_tokens() const { return k_img_; }
  int n_px() const { return n_px_; }
  int point_tokens() const { return k_pcl_; }
  int group_size() const { return group_size_; }
  int d_embed() const { return mcfg_.d_embed; }
  int d_model() const { return mcfg_.d_model; }

  /// Copies all parameter values (not gradients); architectures must match.
  void copy_values_from(const Model& other);
  /// Throws NumericsError if any parameter is non-finite.
  void check_finite() const;

private:
  struct Lin {
    Parameter w, b;
  };
  struct Norm {
    Parameter g, b;
  };
  struct Block {
    Norm ln1;
    Lin q, k, v, o;
    Norm ln2;
    Lin f1, f2;
  };
  struct Trunk {
    std::vector<Block> blocks;
    Norm ln_f;
    Parameter cls, msk;
    Lin proj;  // to the joint embedding space
    Lin dec;   // masked-token reconstruction decoder
  };

  Var run_trunk(Tape& t, Trunk& tr, Var tokens, int batch, int k_tokens);
  Var linear_of(Tape& t, Lin& l, Var x);
  BranchOut split_outputs(Tape& t, Trunk& tr, Var packed, int batch, int k_tokens,
                          const std::vector<std::vector<int>>& masks);

  RunConfig::Model mcfg_;
  int classes_;
  int k_img_, n_px_;
  int k_pcl_, group_size_;

  Lin patch_proj_;
  Parameter img_pos_;  // k_img x d_model learned positional table
  Trunk img_;

  Lin ge1_, ge2_;  // per-point group encoder (shared across groups)
  Lin pe1_, pe2_;  // center-position MLP
  Trunk pcl_;

  Parameter q_;  // C x d_embed shared classifier

  std::vector<Parameter*> order_;
};

/// Mean of exemplar embeddings (all views plus the point cloud) per class,
/// normalized; written into the classifier rows. Returns the C x d_embed
/// prototype matrix. Throws ConfigError if any class lacks an exemplar.
Matrix init_classifier_from_prototypes(Model& m, const std::vector<synth::Sample>& exemplars,
                                       const RunConfig& cfg);

/// Checkpoint directory: manifest.json plus one little-endian float32 blob per
/// parameter under student/ and teacher/.
void save_checkpoint(const std::string& dir, const Model& student, const Model& teacher,
                     const RunConfig& cfg, std::int64_t step);
/// Loads values into existing models; shapes must match the manifest.
std::int64_t load_checkpoint(const std::string& dir, Model& student, Model& teacher);

}  // namespace crossmost::model
