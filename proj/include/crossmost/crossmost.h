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

/* C interface to the crossmost training library.
 *
 * Every entry point returns a cm_status; nonzero means failure and
 * cm_last_error() carries a human-readable message for the calling thread.
 * Configurations are opaque handles created from defaults or a config file
 * and adjusted through key/value assignments. All pipeline stages are
 * deterministic functions of the configuration: rerunning a stage with the
 * same inputs reproduces its outputs byte for byte (timestamps excluded).
 */
#ifndef CROSSMOST_CROSSMOST_H_
#define CROSSMOST_CROSSMOST_H_

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cm_status {
  CM_OK = 0,
  CM_ERR_CONFIG = 1,   /* invalid configuration, argument or grid file */
  CM_ERR_IO = 2,       /* file or directory access failure */
  CM_ERR_DOMAIN = 3,   /* runtime input outside an operation's contract */
  CM_ERR_NAN = 4,      /* non-finite loss or parameter during training */
  CM_ERR_INTERNAL = 5, /* unexpected failure */
} cm_status;

/* Opaque run configuration. */
typedef struct cm_config cm_config;

/* Evaluation numbers for one checkpoint or run. Accuracies are fractions in
 * [0, 1]; entropy and bias diagnostics use natural log. The pseudo-label
 * fields are zero when the record does not come from a training epoch. */
typedef struct cm_metrics {
  int64_t epoch;
  double acc_image;        /* single-view image accuracy (view 0) */
  double acc_image_star;   /* accuracy of the renormalized mean view embedding */
  double acc_pcl;          /* point-branch accuracy */
  double pred_entropy_img; /* mean prediction sharpness, image branch */
  double pred_entropy_pcl;
  double pred_bias_img; /* predicted-class imbalance, image branch */
  double pred_bias_pcl;
  double source_img_frac; /* accepted pseudo-labels sourced from the image branch */
  double agreement;       /* fraction of samples with agreeing branch argmaxes */
  double accepted_frac;   /* fraction of pseudo-labels above the confidence gate */
} cm_metrics;

/* Message of the most recent failing call on this thread; the empty string
 * when no call has failed. The pointer stays valid until the next failure. */
const char* cm_last_error(void);

/* Creates a configuration with default values. */
cm_status cm_config_create(cm_config** out);

/* Parses a `section.key = value` config file. Unknown keys fail. */
cm_status cm_config_load(const char* path, cm_config** out);

/* Applies one assignment, e.g. cm_config_set(c, "obj.mode", "unimodal_point"). */
cm_status cm_config_set(cm_config* cfg, const char* key, const char* value);

/* Range-checks the configuration without running anything. */
cm_status cm_config_validate(const cm_config* cfg);

/* Writes the 16-hex-digit content hash plus NUL; buf_len must be >= 17. */
cm_status cm_config_hash(const cm_config* cfg, char* buf, size_t buf_len);

void cm_config_free(cm_config* cfg);

/* Generates the synthetic dataset and stores it under out_dir, one
 * subdirectory per split. */
cm_status cm_generate_data(const cm_config* cfg, const char* out_dir);

/* Stage 1: contrastive alignment pretraining on the stored dataset, ending
 * with prototype classifier initialization. Writes a checkpoint, a config
 * copy and a loss log into out_dir. */
cm_status cm_pretrain(const cm_config* cfg, const char* data_dir, const char* out_dir);

/* Stage 2: teacher-labeled self-training. init_ckpt_dir names a stage-1
 * checkpoint; NULL or "" runs stage 1 in-process first. Run artifacts land in
 * out_dir; the final test-split record is written to *out_metrics when that
 * pointer is non-NULL. */
cm_status cm_selftrain(const cm_config* cfg, const char* data_dir, const char* init_ckpt_dir,
                       const char* out_dir, cm_metrics* out_metrics);

/* Evaluates a stored checkpoint on the test split. embeddings_csv may be
 * NULL; when set, one embedding row per (sample, modality) is written there. */
cm_status cm_eval(const cm_config* cfg, const char* data_dir, const char* ckpt_dir,
                  const char* embeddings_csv, cm_metrics* out_metrics);

/* Runs every cell of a JSON ablation grid ({"cells": [{"name", "overrides"}]})
 * on top of the base configuration. Datasets and pretraining checkpoints are
 * cached under out_root; out_root/summary.csv collects one row per cell. */
cm_status cm_ablate(const cm_config* base, const char* grid_path, const char* out_root);

#ifdef __cplusplus
}
#endif

#endif /* CROSSMOST_CROSSMOST_H_ */
