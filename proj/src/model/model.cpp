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
#include "model/model.hpp"

#include <utility>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "tokenizer/tokenizer.hpp"

namespace crossmost::model {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

}  // namespace

ImageBatch build_image_batch(const std::vector<Matrix>& images, int patch_size,
                             std::vector<std::vector<int>> masks) {
  require(!images.empty(), "build_image_batch: empty batch");
  ImageBatch out;
  out.batch = static_cast<int>(images.size());
  Matrix first = tok::patchify_image(images[0], patch_size);
  out.k_tokens = static_cast<int>(first.rows());
  out.patches.resize(static_cast<Eigen::Index>(out.batch) * out.k_tokens, first.cols());
  out.patches.topRows(out.k_tokens) = first;
  for (int b = 1; b < out.batch; ++b) {
    Matrix p = tok::patchify_image(images[static_cast<std::size_t>(b)], patch_size);
    require(p.rows() == out.k_tokens && p.cols() == first.cols(),
            "build_image_batch: inconsistent image sizes");
    out.patches.middleRows(static_cast<Eigen::Index>(b) * out.k_tokens, out.k_tokens) = p;
  }
  out.masks = std::move(masks);
  require(out.masks.empty() || static_cast<int>(out.masks.size()) == out.batch,
          "build_image_batch: mask list size mismatch");
  return out;
}

PointBatch build_point_batch(const std::vector<Matrix>& clouds, int k_groups, int group_size,
                             std::vector<std::vector<int>> masks) {
  require(!clouds.empty(), "build_point_batch: empty batch");
  PointBatch out;
  out.batch = static_cast<int>(clouds.size());
  out.k_tokens = k_groups;
  out.group_size = group_size;
  out.groups.resize(static_cast<Eigen::Index>(out.batch) * k_groups * group_size, 3);
  out.centers.resize(static_cast<Eigen::Index>(out.batch) * k_groups, 3);
  for (int b = 0; b < out.batch; ++b) {
    const Matrix& pts = clouds[static_cast<std::size_t>(b)];
    tok::PointTokens tk = tok::knn_group(pts, tok::fps(pts, k_groups), group_size);
    out.groups.middleRows(static_cast<Eigen::Index>(b) * k_groups * group_size,
                          static_cast<Eigen::Index>(k_groups) * group_size) = tk.groups;
    out.centers.middleRows(static_cast<Eigen::Index>(b) * k_groups, k_groups) = tk.centers;
  }
  out.masks = std::move(masks);
  require(out.masks.empty() || static_cast<int>(out.masks.size()) == out.batch,
          "build_point_batch: mask list size mismatch");
  return out;
}

Model::Model(const RunConfig& cfg, std::uint64_t init_seed) {
  cfg.validate();
  mcfg_ = cfg.model;
  classes_ = cfg.data.classes;
  const int side = cfg.data.image_size / cfg.tok.patch_size;
  k_img_ = side * side;
  n_px_ = cfg.tok.patch_size * cfg.tok.patch_size;
  k_pcl_ = cfg.tok.groups;
  group_size_ = cfg.tok.group_size;

  Rng rng = Rng::stream(init_seed, 0, "model_init");
  const int d = mcfg_.d_model;
  const int de = mcfg_.d_embed;
  const int head_layer = mcfg_.n_layers + 1;
  // Learned tokens and positions start small but non-negligible relative to
  // fan-in-scaled content. A flat tiny std for every matrix drowns the
  // input-dependent signal in the shared component and the contrastive
  // embeddings collapse.
  constexpr double kTokenStd = 0.1;

  auto normal_fill = [&rng](Matrix& m, double sd) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = rng.normal() * sd;
  };
  auto mk = [&](std::string name, int r, int c, int layer, double sd) {
    Matrix v = Matrix::Zero(r, c);
    if (sd > 0.0) normal_fill(v, sd);
    return Parameter(std::move(name), std::move(v), layer);
  };
  auto mk_ones = [&](std::string name, int c, int layer) {
    return Parameter(std::move(name), Matrix::Ones(1, c), layer);
  };
  auto mk_lin = [&](const std::string& name, int in, int out, int layer) {
    return Lin{mk(name + ".w", in, out, layer, 1.0 / std::sqrt(static_cast<double>(in))),
               mk(name + ".b", 1, out, layer, 0.0)};
  };
  auto mk_norm = [&](const std::string& name, int width, int layer) {
    return Norm{mk_ones(name + ".g", width, layer), mk(name + ".b", 1, width, layer, 0.0)};
  };
  auto mk_trunk = [&](Trunk& tr, const std::string& prefix) {
    tr.blocks.resize(static_cast<std::size_t>(mcfg_.n_layers));
    for (int l = 0; l < mcfg_.n_layers; ++l) {
      Block& blk = tr.blocks[static_cast<std::size_t>(l)];
      const std::string bp = prefix + ".b" + std::to_string(l);
      const int layer = l + 1;
      blk.ln1 = mk_norm(bp + ".ln1", d, layer);
      blk.q = mk_lin(bp + ".q", d, d, layer);
      blk.k = mk_lin(bp + ".k", d, d, layer);
      blk.v = mk_lin(bp + ".v", d, d, layer);
      blk.o = mk_lin(bp + ".o", d, d, layer);
      blk.ln2 = mk_norm(bp + ".ln2", d, layer);
      blk.f1 = mk_lin(bp + ".f1", d, d * mcfg_.ffn_mult, layer);
      blk.f2 = mk_lin(bp + ".f2", d * mcfg_.ffn_mult, d, layer);
    }
    tr.ln_f = mk_norm(prefix + ".lnf", d, head_layer);
    tr.cls = mk(prefix + ".cls", 1, d, 0, kTokenStd);
    tr.msk = mk(prefix + ".msk", 1, d, 0, kTokenStd);
    tr.proj = mk_lin(prefix + ".proj", d, de, head_layer);
  };

  patch_proj_ = mk_lin("img.patch", n_px_, d, 0);
  img_pos_ = mk("img.pos", k_img_, d, 0, kTokenStd);
  mk_trunk(img_, "img");
  img_.dec = mk_lin("img.dec", d, n_px_, head_layer);

  ge1_ = mk_lin("pcl.ge1", 3, cfg.model.group_hidden, 0);
  ge2_ = mk_lin("pcl.ge2", cfg.model.group_hidden, d, 0);
  pe1_ = mk_lin("pcl.pe1", 3, cfg.model.pos_hidden, 0);
  pe2_ = mk_lin("pcl.pe2", cfg.model.pos_hidden, d, 0);
  mk_trunk(pcl_, "pcl");
  pcl_.dec = mk_lin("pcl.dec", d, 3 * group_size_, head_layer);

  // Classifier rows start unit-norm; prototype init overwrites them later.
  q_ = mk("q.weight", classes_, de, head_layer, 1.0);
  for (Eigen::Index r = 0; r < q_.value.rows(); ++r) {
    q_.value.row(r) /= q_.value.row(r).norm();
  }
  q_.zero_grad();

  auto reg = [this](Parameter& p) { order_.push_back(&p); };
  auto reg_lin = [&](Lin& l) {
    reg(l.w);
    reg(l.b);
  };
  auto reg_trunk = [&](Trunk& tr) {
    reg(tr.cls);
    reg(tr.msk);
    for (Block& blk : tr.blocks) {
      reg(blk.ln1.g);
      reg(blk.ln1.b);
      reg_lin(blk.q);
      reg_lin(blk.k);
      reg_lin(blk.v);
      reg_lin(blk.o);
      reg(blk.ln2.g);
      reg(blk.ln2.b);
      reg_lin(blk.f1);
      reg_lin(blk.f2);
    }
    reg(tr.ln_f.g);
    reg(tr.ln_f.b);
    reg_lin(tr.proj);
    reg_lin(tr.dec);
  };
  reg_lin(patch_proj_);
  reg(img_pos_);
  reg_trunk(img_);
  reg_lin(ge1_);
  reg_lin(ge2_);
  reg_lin(pe1_);
  reg_lin(pe2_);
  reg_trunk(pcl_);
  reg(q_);
}

Parameter* Model::find(std::string_view name) {
  for (Parameter* p : order_) {
    if (p->name == name) return p;
  }
  return nullptr;
}

Var Model::linear_of(Tape& t, Lin& l, Var x) {
  return ad::linear(x, t.leaf(l.w), t.leaf(l.b));
}

Var Model::run_trunk(Tape& t, Trunk& tr, Var tokens, int batch, int k_tokens) {
  Var x = ad::prepend_cls(tokens, ad::broadcast_row(t.leaf(tr.cls), batch), k_tokens);
  const int seq = k_tokens + 1;
  for (Block& blk : tr.blocks) {
    Var h = ad::layer_norm(x, t.leaf(blk.ln1.g), t.leaf(blk.ln1.b));
    Var attn = ad::sdp_attention(linear_of(t, blk.q, h), linear_of(t, blk.k, h),
                                 linear_of(t, blk.v, h), batch, seq, mcfg_.n_heads);
    x = ad::add(x, linear_of(t, blk.o, attn));
    Var h2 = ad::layer_norm(x, t.leaf(blk.ln2.g), t.leaf(blk.ln2.b));
    x = ad::add(x, linear_of(t, blk.f2, ad::gelu(linear_of(t, blk.f1, h2))));
  }
  return ad::layer_norm(x, t.leaf(tr.ln_f.g), t.leaf(tr.ln_f.b));
}

BranchOut Model::split_outputs(Tape& t, Trunk& tr, Var packed, int batch, int k_tokens,
                               const std::vector<std::vector<int>>& masks) {
  const int seq = k_tokens + 1;
  BranchOut out;
  std::vector<int> cls_rows(static_cast<std::size_t>(batch));
  for (int b = 0; b < batch; ++b) cls_rows[static_cast<std::size_t>(b)] = b * seq;
  out.cls_raw = ad::gather_rows(packed, cls_rows);
  out.embed = ad::row_l2_normalize(linear_of(t, tr.proj, out.cls_raw));

  std::vector<int> mask_rows;
  for (int b = 0; b < static_cast<int>(masks.size()); ++b) {
    for (int k : masks[static_cast<std::size_t>(b)]) {
      require(k >= 0 && k < k_tokens, "masked token index out of range");
      mask_rows.push_back(b * seq + 1 + k);
      out.msk_sample.push_back(b);
      out.msk_token.push_back(k);
    }
  }
  out.msk_out = ad::gather_rows(packed, mask_rows);
  return out;
}

BranchOut Model::encode_image(Tape& t, const ImageBatch& b) {
  require(b.batch >= 1 && b.k_tokens == k_img_, "encode_image: token count mismatch");
  require(b.patches.rows() == static_cast<Eigen::Index>(b.batch) * k_img_ &&
              b.patches.cols() == n_px_,
          "encode_image: patch matrix shape mismatch");
  Var tok = linear_of(t, patch_proj_, t.constant(b.patches));
  std::vector<int> mask_rows;
  for (int s = 0; s < static_cast<int>(b.masks.size()); ++s) {
    for (int k : b.masks[static_cast<std::size_t>(s)]) mask_rows.push_back(s * k_img_ + k);
  }
  // Masked patches drop their content but keep their positional embedding.
  if (!mask_rows.empty()) tok = ad::replace_rows(tok, mask_rows, t.leaf(img_.msk));
  tok = ad::add(tok, ad::tile_rows(t.leaf(img_pos_), b.batch));
  Var packed = run_trunk(t, img_, tok, b.batch, k_img_);
  return split_outputs(t, img_, packed, b.batch, k_img_, b.masks);
}

BranchOut Model::encode_points(Tape& t, const PointBatch& b) {
  require(b.batch >= 1 && b.k_tokens == k_pcl_ && b.group_size == group_size_,
          "encode_points: token geometry mismatch");
  require(b.groups.rows() ==
                  static_cast<Eigen::Index>(b.batch) * k_pcl_ * group_size_ &&
              b.groups.cols() == 3,
          "encode_points: group matrix shape mismatch");
  require(b.centers.rows() == static_cast<Eigen::Index>(b.batch) * k_pcl_ &&
              b.centers.cols() == 3,
          "encode_points: center matrix shape mismatch");
  Var per_point = linear_of(t, ge2_, ad::relu(linear_of(t, ge1_, t.constant(b.groups))));
  Var tok = ad::group_max(per_point, group_size_);
  std::vector<int> mask_rows;
  for (int s = 0; s < static_cast<int>(b.masks.size()); ++s) {
    for (int k : b.masks[static_cast<std::size_t>(s)]) mask_rows.push_back(s * k_pcl_ + k);
  }
  if (!mask_rows.empty()) tok = ad::replace_rows(tok, mask_rows, t.leaf(pcl_.msk));
  Var pos = linear_of(t, pe2_, ad::relu(linear_of(t, pe1_, t.constant(b.centers))));
  tok = ad::add(tok, pos);
  Var packed = run_trunk(t, pcl_, tok, b.batch, k_pcl_);
  return split_outputs(t, pcl_, packed, b.batch, k_pcl_, b.masks);
}

Var Model::decode_image(Tape& t, Var msk_out) { return linear_of(t, img_.dec, msk_out); }

Var Model::decode_points(Tape& t, Var msk_out) { return linear_of(t, pcl_.dec, msk_out); }

Var Model::project_image(Tape& t, Var h) {
  return ad::row_l2_normalize(linear_of(t, img_.proj, h));
}

Var Model::project_points(Tape& t, Var h) {
  return ad::row_l2_normalize(linear_of(t, pcl_.proj, h));
}

Var Model::classify(Tape& t, Var embed) {
  require(embed.cols() == mcfg_.d_embed, "classify: embedding width mismatch");
  return ad::scale(ad::matmul_nt(embed, t.leaf(q_)), mcfg_.logit_scale);
}

void Model::copy_values_from(const Model& other) {
  require(order_.size() == other.order_.size(), "copy_values_from: architecture mismatch");
  for (std::size_t i = 0; i < order_.size(); ++i) {
    const Parameter* src = other.order_[i];
    Parameter* dst = order_[i];
    require(dst->name == src->name && dst->value.rows() == src->value.rows() &&
                dst->value.cols() == src->value.cols(),
            "copy_values_from: parameter mismatch at " + dst->name);
    dst->value = src->value;
  }
}

void Model::check_finite() const {
  for (const Parameter* p : order_) {
    if (!p->value.allFinite()) {
      throw NumericsError("non-finite values in parameter " + p->name);
    }
  }
}

Matrix init_classifier_from_prototypes(Model& m, const std::vector<synth::Sample>& exemplars,
                                       const RunConfig& cfg) {
  const int c_count = m.n_classes();
  Matrix sum = Matrix::Zero(c_count, m.d_embed());
  std::vector<int> counts(static_cast<std::size_t>(c_count), 0);
  for (const synth::Sample& s : exemplars) {
    if (s.label < 0 || s.label >= c_count) {
      throw ConfigError("exemplar label out of range");
    }
    Tape t(false);
    std::vector<Matrix> imgs;
    imgs.reserve(s.views.size());
    for (const auto& v : s.views) imgs.push_back(v.pixels);
    Var xe = m.encode_image(t, build_image_batch(imgs, cfg.tok.patch_size)).embed;
    for (Eigen::Index r = 0; r < xe.rows(); ++r) sum.row(s.label) += xe.value().row(r);
    Var ye =
        m.encode_points(t, build_point_batch({s.points}, cfg.tok.groups, cfg.tok.group_size))
            .embed;
    sum.row(s.label) += ye.value().row(0);
    counts[static_cast<std::size_t>(s.label)] +=
        static_cast<int>(s.views.size()) + 1;
  }
  for (int c = 0; c < c_count; ++c) {
    if (counts[static_cast<std::size_t>(c)] == 0) {
      throw ConfigError("no exemplar for class " + std::to_string(c));
    }
    sum.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
    const double norm = sum.row(c).norm();
    if (norm < 1e-9) throw DomainError("degenerate class prototype " + std::to_string(c));
    sum.row(c) /= norm;
  }
  m.classifier().value = sum;
  m.classifier().zero_grad();
  return sum;
}

}  // namespace crossmost::model
