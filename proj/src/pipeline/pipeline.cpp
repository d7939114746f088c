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
#include "pipeline/pipeline.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include <json.hpp>

#include "common/error.hpp"
#include "model/model.hpp"
#include "synthdata/synthdata.hpp"
#include "trainer/trainer.hpp"

namespace crossmost::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// A stored dataset must have been generated with the same data section the
/// run config carries; a silent mismatch would corrupt tokenizer shapes and
/// evaluation view counts.
void check_dataset_matches(const RunConfig& cfg, const synth::Dataset& ds,
                           const std::string& data_dir) {
  const std::vector<synth::Sample>* probe = nullptr;
  for (const auto* split : {&ds.train, &ds.test, &ds.pretrain, &ds.exemplars}) {
    if (!split->empty()) {
      probe = split;
      break;
    }
  }
  if (probe == nullptr) throw IoError("pipeline: dataset at " + data_dir + " is empty");
  const synth::Sample& s = probe->front();
  if (static_cast<int>(ds.class_names.size()) != cfg.data.classes ||
      static_cast<int>(s.points.rows()) != cfg.data.n_points ||
      static_cast<int>(s.views.size()) != cfg.data.views ||
      static_cast<int>(s.views[0].pixels.rows()) != cfg.data.image_size) {
    throw ConfigError("pipeline: dataset at " + data_dir +
                      " does not match the data section of the run config");
  }
}

synth::Dataset load_checked(const RunConfig& cfg, const std::string& data_dir) {
  synth::Dataset ds = synth::load_dataset(data_dir);
  check_dataset_matches(cfg, ds, data_dir);
  return ds;
}

std::vector<double> pretrain_with_ds(const RunConfig& cfg, const synth::Dataset& ds,
                                     const std::string& out_dir) {
  train::Trainer tr(cfg, ds);
  std::vector<double> losses = tr.pretrain();
  model::save_checkpoint(out_dir, tr.student(), tr.teacher(), cfg, 0);
  {
    std::ofstream out(fs::path(out_dir) / "config.cfg", std::ios::binary);
    out << cfg.serialize();
    if (!out) throw IoError("pipeline: cannot write config copy under " + out_dir);
  }
  {
    json j;
    j["align_loss_per_epoch"] = losses;
    std::ofstream out(fs::path(out_dir) / "pretrain_log.json", std::ios::binary);
    out << j.dump() << "\n";
    if (!out) throw IoError("pipeline: cannot write pretrain log under " + out_dir);
  }
  return losses;
}

metrics::MetricRecord selftrain_with_ds(const RunConfig& cfg, const synth::Dataset& ds,
                                        const std::string& init_ckpt,
                                        const std::string& out_dir) {
  train::Trainer tr(cfg, ds);
  if (init_ckpt.empty()) {
    tr.pretrain();
  } else {
    tr.init_from_checkpoint(init_ckpt);
  }
  return tr.run_selftraining(out_dir);
}

std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

void generate_data(const RunConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  synth::Dataset ds = synth::generate_dataset(cfg);
  synth::save_dataset(out_dir, ds, cfg);
}

std::vector<double> pretrain(const RunConfig& cfg, const std::string& data_dir,
                             const std::string& out_dir) {
  cfg.validate();
  return pretrain_with_ds(cfg, load_checked(cfg, data_dir), out_dir);
}

metrics::MetricRecord selftrain(const RunConfig& cfg, const std::string& data_dir,
                                const std::string& init_ckpt, const std::string& out_dir) {
  cfg.validate();
  return selftrain_with_ds(cfg, load_checked(cfg, data_dir), init_ckpt, out_dir);
}

metrics::MetricRecord evaluate(const RunConfig& cfg, const std::string& data_dir,
                               const std::string& ckpt_dir, const std::string& embeddings_csv) {
  cfg.validate();
  synth::Dataset ds = load_checked(cfg, data_dir);
  model::Model student(cfg, cfg.train.seed);
  model::Model teacher(cfg, cfg.train.seed);
  const std::int64_t step = model::load_checkpoint(ckpt_dir, student, teacher);
  model::Model& m = cfg.train.eval_student ? student : teacher;
  metrics::MetricRecord rec = metrics::evaluate(m, ds.test, cfg, static_cast<int>(step));
  if (!embeddings_csv.empty()) metrics::dump_embeddings(embeddings_csv, m, ds.test, cfg);
  return rec;
}

std::string data_cache_key(const RunConfig& cfg) {
  RunConfig key;
  key.data = cfg.data;
  return key.content_hash();
}

std::string pretrain_cache_key(const RunConfig& cfg) {
  RunConfig key;
  key.data = cfg.data;
  // Pretraining only applies the weak policies; strong-augmentation settings
  // must not split the cache.
  key.aug.weak_rot_deg = cfg.aug.weak_rot_deg;
  key.aug.weak_scale_min = cfg.aug.weak_scale_min;
  key.aug.weak_scale_max = cfg.aug.weak_scale_max;
  key.aug.weak_img_min_area = cfg.aug.weak_img_min_area;
  key.tok = cfg.tok;
  key.model = cfg.model;
  // The classifier temperature only matters once a classifier exists, which
  // happens after pretraining.
  key.model.logit_scale = RunConfig{}.model.logit_scale;
  key.obj.tau = cfg.obj.tau;
  key.train.seed = cfg.train.seed;
  key.train.weight_decay = cfg.train.weight_decay;
  key.train.warmup_frac = cfg.train.warmup_frac;
  key.train.pretrain_epochs = cfg.train.pretrain_epochs;
  key.train.pretrain_base_lr = cfg.train.pretrain_base_lr;
  key.train.pretrain_batch_size = cfg.train.pretrain_batch_size;
  key.train.pretrain_freeze_image_frac = cfg.train.pretrain_freeze_image_frac;
  key.run.views_used = cfg.run.views_used;
  return key.content_hash();
}

std::vector<AblationCell> load_grid(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("ablate: cannot open grid file " + path);
  json j;
  try {
    f >> j;
  } catch (const std::exception& e) {
    throw ConfigError("ablate: grid file " + path + " is not valid JSON: " + e.what());
  }
  if (!j.is_object() || !j.contains("cells") || !j["cells"].is_array()) {
    throw ConfigError("ablate: grid file must be an object with a \"cells\" array");
  }
  std::vector<AblationCell> cells;
  std::set<std::string> names;
  for (const auto& c : j["cells"]) {
    if (!c.is_object() || !c.contains("name") || !c["name"].is_string()) {
      throw ConfigError("ablate: every cell needs a string \"name\"");
    }
    AblationCell cell;
    cell.name = c["name"].get<std::string>();
    if (cell.name.empty() || cell.name.find('/') != std::string::npos ||
        cell.name.find('\\') != std::string::npos || cell.name.front() == '.') {
      throw ConfigError("ablate: cell name '" + cell.name + "' is not a valid directory name");
    }
    if (!names.insert(cell.name).second) {
      throw ConfigError("ablate: duplicate cell name '" + cell.name + "'");
    }
    if (c.contains("overrides")) {
      if (!c["overrides"].is_object()) {
        throw ConfigError("ablate: cell '" + cell.name + "' overrides must be an object");
      }
      for (const auto& [k, v] : c["overrides"].items()) {
        cell.overrides.emplace_back(k, v.is_string() ? v.get<std::string>() : v.dump());
      }
    }
    cells.push_back(std::move(cell));
  }
  if (cells.empty()) throw ConfigError("ablate: grid has no cells");
  return cells;
}

void ablate(const RunConfig& base, const std::string& grid_path, const std::string& out_root) {
  const std::vector<AblationCell> cells = load_grid(grid_path);
  fs::create_directories(out_root);

  // Datasets are large; keep only the most recently used one in memory.
  std::string cached_data_key;
  synth::Dataset cached_ds;
  std::set<std::string> pretrained;

  std::string csv = "run,mode,views,acc_image,acc_image_star,acc_pcl,epochs\n";
  for (const AblationCell& cell : cells) {
    RunConfig cfg = base;
    cfg.run.name = cell.name;
    for (const auto& [k, v] : cell.overrides) cfg.set(k, v);
    cfg.validate();

    const std::string dkey = data_cache_key(cfg);
    const fs::path data_dir = fs::path(out_root) / "data" / dkey;
    if (!fs::exists(data_dir / "train" / "meta.json")) generate_data(cfg, data_dir.string());
    if (cached_data_key != dkey) {
      cached_ds = load_checked(cfg, data_dir.string());
      cached_data_key = dkey;
    }

    const std::string pkey = pretrain_cache_key(cfg);
    const fs::path pre_dir = fs::path(out_root) / "pretrain" / pkey;
    if (!pretrained.count(pkey) && !fs::exists(pre_dir / "manifest.json")) {
      pretrain_with_ds(cfg, cached_ds, pre_dir.string());
    }
    pretrained.insert(pkey);

    const fs::path run_dir = fs::path(out_root) / "runs" / cell.name;
    metrics::MetricRecord rec = selftrain_with_ds(cfg, cached_ds, pre_dir.string(), run_dir.string());

    csv += cell.name + "," + cfg.obj.mode + "," + std::to_string(cfg.views_in_use()) + "," +
           fmt6(rec.acc_image) + "," + fmt6(rec.acc_image_star) + "," + fmt6(rec.acc_pcl) + "," +
           std::to_string(cfg.train.epochs) + "\n";
  }

  std::ofstream out(fs::path(out_root) / "summary.csv", std::ios::binary);
  out << csv;
  if (!out) throw IoError("ablate: cannot write summary.csv under " + out_root);
}

}  // namespace crossmost::pipeline
