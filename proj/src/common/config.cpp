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
#include "common/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <utility>
#include <variant>
#include <vector>

#include "common/error.hpp"
#include "common/rng.hpp"

namespace crossmost {

std::string to_string(TrainingMode mode) {
  switch (mode) {
    case TrainingMode::kCrossModal: return "cross_modal";
    case TrainingMode::kUnimodalImage: return "unimodal_image";
    case TrainingMode::kUnimodalPoint: return "unimodal_point";
    case TrainingMode::kPseudoRandom: return "pseudo_random";
    case TrainingMode::kPseudoImageOnly: return "pseudo_image_only";
    case TrainingMode::kPseudoPointOnly: return "pseudo_point_only";
  }
  throw ConfigError("unreachable training mode");
}

TrainingMode training_mode_from_string(const std::string& s) {
  if (s == "cross_modal") return TrainingMode::kCrossModal;
  if (s == "unimodal_image") return TrainingMode::kUnimodalImage;
  if (s == "unimodal_point") return TrainingMode::kUnimodalPoint;
  if (s == "pseudo_random") return TrainingMode::kPseudoRandom;
  if (s == "pseudo_image_only") return TrainingMode::kPseudoImageOnly;
  if (s == "pseudo_point_only") return TrainingMode::kPseudoPointOnly;
  throw ConfigError("unknown training mode: " + s);
}

namespace {

using FieldRef = std::variant<int*, double*, bool*, std::string*, std::uint64_t*>;

struct Field {
  const char* key;
  FieldRef ref;
};

std::vector<Field> fields(RunConfig& c) {
  return {
      {"data.classes", &c.data.classes},
      {"data.n_points", &c.data.n_points},
      {"data.views", &c.data.views},
      {"data.image_size", &c.data.image_size},
      {"data.train_per_class", &c.data.train_per_class},
      {"data.test_per_class", &c.data.test_per_class},
      {"data.pretrain_per_class", &c.data.pretrain_per_class},
      {"data.exemplars_per_class", &c.data.exemplars_per_class},
      {"data.jitter", &c.data.jitter},
      {"data.disjoint_classes", &c.data.disjoint_classes},
      {"data.seed", &c.data.seed},
      {"aug.weak_rot_deg", &c.aug.weak_rot_deg},
      {"aug.weak_scale_min", &c.aug.weak_scale_min},
      {"aug.weak_scale_max", &c.aug.weak_scale_max},
      {"aug.weak_img_min_area", &c.aug.weak_img_min_area},
      {"aug.strong_crop_min_retain", &c.aug.strong_crop_min_retain},
      {"aug.strong_dropout_max", &c.aug.strong_dropout_max},
      {"aug.strong_rot_deg", &c.aug.strong_rot_deg},
      {"aug.strong_translate_max", &c.aug.strong_translate_max},
      {"aug.strong_scale_min", &c.aug.strong_scale_min},
      {"aug.strong_scale_max", &c.aug.strong_scale_max},
      {"aug.strong_img_min_area", &c.aug.strong_img_min_area},
      {"aug.strong_img_ops", &c.aug.strong_img_ops},
      {"tok.groups", &c.tok.groups},
      {"tok.group_size", &c.tok.group_size},
      {"tok.patch_size", &c.tok.patch_size},
      {"tok.img_mask_ratio", &c.tok.img_mask_ratio},
      {"tok.pcl_mask_min", &c.tok.pcl_mask_min},
      {"tok.pcl_mask_max", &c.tok.pcl_mask_max},
      {"model.d_model", &c.model.d_model},
      {"model.n_layers", &c.model.n_layers},
      {"model.n_heads", &c.model.n_heads},
      {"model.d_embed", &c.model.d_embed},
      {"model.ffn_mult", &c.model.ffn_mult},
      {"model.group_hidden", &c.model.group_hidden},
      {"model.pos_hidden", &c.model.pos_hidden},
      {"model.logit_scale", &c.model.logit_scale},
      {"obj.threshold", &c.obj.threshold},
      {"obj.tau", &c.obj.tau},
      {"obj.mode", &c.obj.mode},
      {"obj.w_cls", &c.obj.w_cls},
      {"obj.w_align", &c.obj.w_align},
      {"obj.w_fair", &c.obj.w_fair},
      {"obj.w_mim", &c.obj.w_mim},
      {"obj.w_mpm", &c.obj.w_mpm},
      {"obj.w_lg", &c.obj.w_lg},
      {"train.base_lr", &c.train.base_lr},
      {"train.weight_decay", &c.train.weight_decay},
      {"train.layer_decay", &c.train.layer_decay},
      {"train.batch_size", &c.train.batch_size},
      {"train.epochs", &c.train.epochs},
      {"train.warmup_frac", &c.train.warmup_frac},
      {"train.ema_momentum", &c.train.ema_momentum},
      {"train.seed", &c.train.seed},
      {"train.eval_student", &c.train.eval_student},
      {"train.pretrain_epochs", &c.train.pretrain_epochs},
      {"train.pretrain_base_lr", &c.train.pretrain_base_lr},
      {"train.pretrain_batch_size", &c.train.pretrain_batch_size},
      {"train.pretrain_freeze_image_frac", &c.train.pretrain_freeze_image_frac},
      {"run.name", &c.run.name},
      {"run.views_used", &c.run.views_used},
  };
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                        (s.front() == '\'' && s.back() == '\''))) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

void assign(const Field& f, const std::string& raw) {
  const std::string v = unquote(trim(raw));
  try {
    std::visit(
        [&](auto* p) {
          using T = std::remove_pointer_t<decltype(p)>;
          if constexpr (std::is_same_v<T, int>) {
            std::size_t pos = 0;
            *p = std::stoi(v, &pos);
            if (pos != v.size()) throw ConfigError("trailing characters");
          } else if constexpr (std::is_same_v<T, double>) {
            std::size_t pos = 0;
            *p = std::stod(v, &pos);
            if (pos != v.size()) throw ConfigError("trailing characters");
          } else if constexpr (std::is_same_v<T, bool>) {
            if (v == "true" || v == "1") *p = true;
            else if (v == "false" || v == "0") *p = false;
            else throw ConfigError("expected true/false");
          } else if constexpr (std::is_same_v<T, std::uint64_t>) {
            std::size_t pos = 0;
            *p = std::stoull(v, &pos);
            if (pos != v.size()) throw ConfigError("trailing characters");
          } else {
            *p = v;
          }
        },
        f.ref);
  } catch (const ConfigError&) {
    throw ConfigError(std::string("bad value for ") + f.key + ": '" + v + "'");
  } catch (const std::exception&) {
    throw ConfigError(std::string("bad value for ") + f.key + ": '" + v + "'");
  }
}

std::string render(const Field& f) {
  std::string out;
  std::visit(
      [&](auto* p) {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<T, bool>) {
          out = *p ? "true" : "false";
        } else if constexpr (std::is_same_v<T, std::string>) {
          out = "\"" + *p + "\"";
        } else if constexpr (std::is_same_v<T, double>) {
          char buf[64];
          std::snprintf(buf, sizeof(buf), "%.17g", *p);
          out = buf;
        } else {
          out = std::to_string(*p);
        }
      },
      f.ref);
  return out;
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  for (const Field& f : fields(*this)) {
    if (key == f.key) {
      assign(f, value);
      return;
    }
  }
  throw ConfigError("unknown config key: " + key);
}

RunConfig RunConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  RunConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    if (s[0] == '[') continue;  // tolerate section headers, keys stay dotted
    std::size_t eq = s.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    std::string key = trim(s.substr(0, eq));
    std::string val = s.substr(eq + 1);
    std::size_t hash = val.find(" #");
    if (hash != std::string::npos) val = val.substr(0, hash);
    cfg.set(key, val);
  }
  cfg.validate();
  return cfg;
}

std::string RunConfig::serialize() const {
  std::ostringstream out;
  auto& self = const_cast<RunConfig&>(*this);
  for (const Field& f : fields(self)) {
    out << f.key << " = " << render(f) << "\n";
  }
  return out.str();
}

std::string RunConfig::content_hash() const {
  std::uint64_t h = Rng::hash_str(serialize());
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void RunConfig::validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  require(data.classes >= 2, "data.classes must be >= 2");
  // Above 24 classes the disjoint per-regime parameter ranges leave the valid
  // geometric envelope (e.g. torus minor radius reaching the major radius).
  require(data.classes <= 24, "data.classes must be <= 24");
  require(data.n_points >= 128, "data.n_points must be >= 128");
  require(data.views >= 1, "data.views must be >= 1");
  require(data.image_size >= 16, "data.image_size must be >= 16");
  require(data.jitter >= 0.0 && data.jitter <= 1.0, "data.jitter must be in [0,1]");
  require(data.train_per_class >= 1, "data.train_per_class must be >= 1");
  require(data.test_per_class >= 1, "data.test_per_class must be >= 1");
  require(data.pretrain_per_class >= 0, "data.pretrain_per_class must be >= 0");
  require(data.exemplars_per_class >= 1, "data.exemplars_per_class must be >= 1");
  require(aug.weak_rot_deg >= 0.0, "aug.weak_rot_deg must be >= 0");
  require(aug.weak_scale_min > 0.0 && aug.weak_scale_min <= aug.weak_scale_max,
          "aug.weak_scale range must be positive and ordered");
  require(aug.weak_img_min_area > 0.0 && aug.weak_img_min_area <= 1.0,
          "aug.weak_img_min_area must be in (0,1]");
  require(aug.strong_crop_min_retain > 0.0 && aug.strong_crop_min_retain <= 1.0,
          "aug.strong_crop_min_retain must be in (0,1]");
  require(aug.strong_dropout_max >= 0.0 && aug.strong_dropout_max < 1.0,
          "aug.strong_dropout_max must be in [0,1)");
  require(aug.strong_rot_deg >= 0.0, "aug.strong_rot_deg must be >= 0");
  require(aug.strong_translate_max >= 0.0, "aug.strong_translate_max must be >= 0");
  require(aug.strong_scale_min > 0.0 && aug.strong_scale_min <= aug.strong_scale_max,
          "aug.strong_scale range must be positive and ordered");
  require(aug.strong_img_min_area > 0.0 && aug.strong_img_min_area <= 1.0,
          "aug.strong_img_min_area must be in (0,1]");
  require(aug.strong_img_ops >= 0 && aug.strong_img_ops <= 4,
          "aug.strong_img_ops must be in [0,4]");
  require(tok.img_mask_ratio >= 0.0 && tok.img_mask_ratio <= 1.0,
          "tok.img_mask_ratio must be in [0,1]");
  require(tok.pcl_mask_min >= 0.0 && tok.pcl_mask_max <= 1.0,
          "tok.pcl_mask range must be within [0,1]");
  require(tok.groups >= 4, "tok.groups must be >= 4");
  require(tok.group_size >= 1 && tok.group_size <= data.n_points,
          "tok.group_size must be in [1, data.n_points]");
  require(tok.groups <= data.n_points, "tok.groups must be <= data.n_points");
  require(data.image_size % tok.patch_size == 0,
          "tok.patch_size must divide data.image_size");
  require(tok.pcl_mask_min <= tok.pcl_mask_max, "tok.pcl_mask_min > tok.pcl_mask_max");
  require(model.d_model % model.n_heads == 0, "model.d_model must be divisible by model.n_heads");
  require(model.d_embed <= model.d_model, "model.d_embed must be <= model.d_model");
  require(model.logit_scale > 0.0, "model.logit_scale must be > 0");
  require(obj.threshold > 0.0 && obj.threshold < 1.0, "obj.threshold must be in (0,1)");
  require(obj.tau > 0.0, "obj.tau must be > 0");
  require(obj.w_cls >= 0 && obj.w_align >= 0 && obj.w_fair >= 0 && obj.w_mim >= 0 &&
              obj.w_mpm >= 0 && obj.w_lg >= 0,
          "loss weights must be non-negative");
  require(obj.w_cls + obj.w_align + obj.w_fair + obj.w_mim + obj.w_mpm + obj.w_lg > 0,
          "at least one loss weight must be positive");
  training_mode_from_string(obj.mode);  // throws on unknown mode
  require(train.ema_momentum >= 0.0 && train.ema_momentum <= 1.0,
          "train.ema_momentum must be in [0,1]");
  require(train.batch_size >= 1, "train.batch_size must be >= 1");
  require(train.epochs >= 0, "train.epochs must be >= 0");
  require(train.warmup_frac >= 0.0 && train.warmup_frac < 1.0,
          "train.warmup_frac must be in [0,1)");
  require(run.views_used >= 0 && run.views_used <= data.views,
          "run.views_used must be in [0, data.views]");
}

}  // namespace crossmost
