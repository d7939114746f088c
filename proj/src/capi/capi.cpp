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
#include "crossmost/crossmost.h"

#include <cstring>
#include <string>

#include "common/config.hpp"
#include "common/error.hpp"
#include "pipeline/pipeline.hpp"

struct cm_config {
  crossmost::RunConfig cfg;
};

namespace {

thread_local std::string t_last_error;

/// Runs `fn` and maps the library's exception hierarchy onto status codes.
template <typename Fn>
cm_status guarded(Fn&& fn) {
  try {
    fn();
    return CM_OK;
  } catch (const crossmost::ConfigError& e) {
    t_last_error = e.what();
    return CM_ERR_CONFIG;
  } catch (const crossmost::IoError& e) {
    t_last_error = e.what();
    return CM_ERR_IO;
  } catch (const crossmost::DomainError& e) {
    t_last_error = e.what();
    return CM_ERR_DOMAIN;
  } catch (const crossmost::NumericsError& e) {
    t_last_error = e.what();
    return CM_ERR_NAN;
  } catch (const std::exception& e) {
    t_last_error = e.what();
    return CM_ERR_INTERNAL;
  } catch (...) {
    t_last_error = "unknown error";
    return CM_ERR_INTERNAL;
  }
}

cm_status bad_arg(const char* what) {
  t_last_error = std::string("null or missing argument: ") + what;
  return CM_ERR_CONFIG;
}

void fill_metrics(cm_metrics* out, const crossmost::metrics::MetricRecord& r) {
  if (out == nullptr) return;
  out->epoch = r.epoch;
  out->acc_image = r.acc_image;
  out->acc_image_star = r.acc_image_star;
  out->acc_pcl = r.acc_pcl;
  out->pred_entropy_img = r.pred_entropy_img;
  out->pred_entropy_pcl = r.pred_entropy_pcl;
  out->pred_bias_img = r.pred_bias_img;
  out->pred_bias_pcl = r.pred_bias_pcl;
  out->source_img_frac = r.source_img_frac;
  out->agreement = r.agreement;
  out->accepted_frac = r.accepted_frac;
}

std::string opt_str(const char* s) { return s == nullptr ? std::string() : std::string(s); }

}  // namespace

extern "C" {

const char* cm_last_error(void) { return t_last_error.c_str(); }

cm_status cm_config_create(cm_config** out) {
  if (out == nullptr) return bad_arg("out");
  *out = nullptr;
  return guarded([&] { *out = new cm_config(); });
}

cm_status cm_config_load(const char* path, cm_config** out) {
  if (path == nullptr) return bad_arg("path");
  if (out == nullptr) return bad_arg("out");
  *out = nullptr;
  return guarded([&] {
    auto cfg = crossmost::RunConfig::load_file(path);
    cfg.validate();
    *out = new cm_config{cfg};
  });
}

cm_status cm_config_set(cm_config* cfg, const char* key, const char* value) {
  if (cfg == nullptr) return bad_arg("cfg");
  if (key == nullptr) return bad_arg("key");
  if (value == nullptr) return bad_arg("value");
  return guarded([&] { cfg->cfg.set(key, value); });
}

cm_status cm_config_validate(const cm_config* cfg) {
  if (cfg == nullptr) return bad_arg("cfg");
  return guarded([&] { cfg->cfg.validate(); });
}

cm_status cm_config_hash(const cm_config* cfg, char* buf, size_t buf_len) {
  if (cfg == nullptr) return bad_arg("cfg");
  if (buf == nullptr) return bad_arg("buf");
  return guarded([&] {
    const std::string h = cfg->cfg.content_hash();
    if (buf_len < h.size() + 1) {
      throw crossmost::ConfigError("cm_config_hash: buffer must hold at least 17 bytes");
    }
    std::memcpy(buf, h.c_str(), h.size() + 1);
  });
}

void cm_config_free(cm_config* cfg) { delete cfg; }

cm_status cm_generate_data(const cm_config* cfg, const char* out_dir) {
  if (cfg == nullptr) return bad_arg("cfg");
  if (out_dir == nullptr) return bad_arg("out_dir");
  return guarded([&] { crossmost::pipeline::generate_data(cfg->cfg, out_dir); });
}

cm_status cm_pretrain(const cm_config* cfg, const char* data_dir, const char* out_dir) {
  if (cfg == nullptr) return bad_arg("cfg");
  if (data_dir == nullptr) return bad_arg("data_dir");
  if (out_dir == nullptr) return bad_arg("out_dir");
  return guarded([&] { crossmost::pipeline::pretrain(cfg->cfg, data_dir, out_dir); });
}

cm_status cm_selftrain(const cm_config* cfg, const char* data_dir, const char* init_ckpt_dir,
                       const char* out_dir, cm_metrics* out_metrics) {
  if (cfg == nullptr) return bad_arg("cfg");
  if (data_dir == nullptr) return bad_arg("data_dir");
  if (out_dir == nullptr) return bad_arg("out_dir");
  return guarded([&] {
    auto rec = crossmost::pipeline::selftrain(cfg->cfg, data_dir, opt_str(init_ckpt_dir), out_dir);
    fill_metrics(out_metrics, rec);
  });
}

cm_status cm_eval(const cm_config* cfg, const char* data_dir, const char* ckpt_dir,
                  const char* embeddings_csv, cm_metrics* out_metrics) {
  if (cfg == nullptr) return bad_arg("cfg");
  if (data_dir == nullptr) return bad_arg("data_dir");
  if (ckpt_dir == nullptr) return bad_arg("ckpt_dir");
  return guarded([&] {
    auto rec =
        crossmost::pipeline::evaluate(cfg->cfg, data_dir, ckpt_dir, opt_str(embeddings_csv));
    fill_metrics(out_metrics, rec);
  });
}

cm_status cm_ablate(const cm_config* base, const char* grid_path, const char* out_root) {
  if (base == nullptr) return bad_arg("base");
  if (grid_path == nullptr) return bad_arg("grid_path");
  if (out_root == nullptr) return bad_arg("out_root");
  return guarded([&] { crossmost::pipeline::ablate(base->cfg, grid_path, out_root); });
}

}  // extern "C"
