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

#include <string>
#include <utility>
#include <vector>

#include "common/config.hpp"
#include "metrics/metrics.hpp"

namespace crossmost::pipeline {

/// Generates the synthetic dataset for `cfg` and writes it under `out_dir`
/// (one subdirectory per split).
void generate_data(const RunConfig& cfg, const std::string& out_dir);

/// Stage-1 alignment pretraining on a stored dataset. Writes a checkpoint
/// plus a config copy and the per-epoch loss log into `out_dir`. Returns the
/// per-epoch mean alignment loss.
std::vector<double> pretrain(const RunConfig& cfg, const std::string& data_dir,
                             const std::string& out_dir);

/// Stage-2 self-training. `init_ckpt` names a pretraining checkpoint; when
/// empty, stage 1 runs in-process first. Run artifacts (config copy, per-epoch
/// and per-step logs, best/final checkpoints) land in `out_dir`. Returns the
/// final test-split record.
metrics::MetricRecord selftrain(const RunConfig& cfg, const std::string& data_dir,
                                const std::string& init_ckpt, const std::string& out_dir);

/// Test-split evaluation of a stored checkpoint with the weights selected by
/// `train.eval_student`. When `embeddings_csv` is non-empty, also writes one
/// embedding row per (sample, modality). The record's epoch field carries the
/// checkpoint's step counter.
metrics::MetricRecord evaluate(const RunConfig& cfg, const std::string& data_dir,
                               const std::string& ckpt_dir, const std::string& embeddings_csv);

/// Hash over the config fields dataset generation reads (the data section).
/// Cells of an ablation grid that share this key share one stored dataset.
std::string data_cache_key(const RunConfig& cfg);

/// Hash over the config fields stage-1 pretraining reads (data, augmentation,
/// tokenizer and model sections plus the pretraining hyperparameters, the
/// alignment temperature, the training seed and the view budget). Cells that
/// share this key share one pretraining checkpoint.
std::string pretrain_cache_key(const RunConfig& cfg);

/// One cell of an ablation grid: a run name plus config overrides applied on
/// top of the base config.
struct AblationCell {
  std::string name;
  std::vector<std::pair<std::string, std::string>> overrides;
};

/// Parses a grid file of the form {"cells": [{"name": ..., "overrides":
/// {...}}, ...]}. Names must be unique, non-empty and free of path
/// separators; override values may be JSON strings, numbers or booleans.
std::vector<AblationCell> load_grid(const std::string& path);

/// Runs every cell of a grid: datasets and pretraining checkpoints are cached
/// under `out_root` by their cache keys, each cell's self-training run lands
/// in `out_root/runs/<name>`, and `out_root/summary.csv` collects one row per
/// cell in grid order.
void ablate(const RunConfig& base, const std::string& grid_path, const std::string& out_root);

}  // namespace crossmost::pipeline
