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

// Command-line front end over the C library. Configuration precedence, lowest
// to highest: built-in defaults, --config file, --set assignments, dedicated
// flags (--seed/--mode/--views/--disjoint-classes). Worker threads follow the
// CROSSMOST_THREADS environment variable (0 or unset = all cores).
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <crossmost/crossmost.h>

namespace {

const char* status_name(cm_status st) {
  switch (st) {
    case CM_OK: return "ok";
    case CM_ERR_CONFIG: return "config";
    case CM_ERR_IO: return "io";
    case CM_ERR_DOMAIN: return "domain";
    case CM_ERR_NAN: return "numerics";
    case CM_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

// One exit code per failure class so scripts can branch on the cause.
int exit_code(cm_status st) {
  switch (st) {
    case CM_OK: return 0;
    case CM_ERR_CONFIG: return 2;
    case CM_ERR_IO: return 3;
    case CM_ERR_DOMAIN: return 4;
    case CM_ERR_NAN: return 5;
    case CM_ERR_INTERNAL: return 6;
  }
  return 6;
}

int fail(cm_status st) {
  std::fprintf(stderr, "error [%s]: %s\n", status_name(st), cm_last_error());
  return exit_code(st);
}

struct ConfigOpts {
  std::string config_path;
  std::vector<std::string> sets;
  long long seed = -1;
  std::string mode;
  int views = -1;
  bool disjoint = false;
};

void add_config_opts(CLI::App* cmd, ConfigOpts* o) {
  cmd->add_option("--config", o->config_path, "config file of `section.key = value` lines");
  cmd->add_option("--set", o->sets, "extra `section.key=value` assignment (repeatable)");
  cmd->add_option("--seed", o->seed, "override train.seed");
  cmd->add_option("--mode", o->mode,
                  "override obj.mode (cross_modal, unimodal_image, unimodal_point, "
                  "pseudo_random, pseudo_image_only, pseudo_point_only)");
  cmd->add_option("--views", o->views, "override run.views_used (0 = all stored views)");
  cmd->add_flag("--disjoint-classes", o->disjoint,
                "pretrain split draws from a disjoint shape-parameter regime");
}

/// Builds the configuration handle from file + overrides. On failure prints
/// the error, stores the exit code in *rc and returns nullptr.
cm_config* build_config(const ConfigOpts& o, int* rc) {
  cm_config* cfg = nullptr;
  cm_status st = o.config_path.empty() ? cm_config_create(&cfg)
                                       : cm_config_load(o.config_path.c_str(), &cfg);
  if (st != CM_OK) {
    *rc = fail(st);
    return nullptr;
  }
  auto apply = [&](const std::string& key, const std::string& value) {
    if (st == CM_OK) st = cm_config_set(cfg, key.c_str(), value.c_str());
  };
  for (const std::string& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      std::fprintf(stderr, "error [config]: --set expects section.key=value, got '%s'\n",
                   kv.c_str());
      cm_config_free(cfg);
      *rc = exit_code(CM_ERR_CONFIG);
      return nullptr;
    }
    apply(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.seed >= 0) apply("train.seed", std::to_string(o.seed));
  if (!o.mode.empty()) apply("obj.mode", o.mode);
  if (o.views >= 0) apply("run.views_used", std::to_string(o.views));
  if (o.disjoint) apply("data.disjoint_classes", "true");
  if (st == CM_OK) st = cm_config_validate(cfg);
  if (st != CM_OK) {
    cm_config_free(cfg);
    *rc = fail(st);
    return nullptr;
  }
  return cfg;
}

void print_metrics(const cm_metrics& m) {
  std::printf(
      "{\"epoch\":%lld,\"acc_image\":%.6f,\"acc_image_star\":%.6f,\"acc_pcl\":%.6f,"
      "\"pred_entropy_img\":%.6f,\"pred_entropy_pcl\":%.6f,\"pred_bias_img\":%.6f,"
      "\"pred_bias_pcl\":%.6f,\"source_img_frac\":%.6f,\"agreement\":%.6f,"
      "\"accepted_frac\":%.6f}\n",
      static_cast<long long>(m.epoch), m.acc_image, m.acc_image_star, m.acc_pcl,
      m.pred_entropy_img, m.pred_entropy_pcl, m.pred_bias_img, m.pred_bias_pcl,
      m.source_img_frac, m.agreement, m.accepted_frac);
}

int run_gen_data(const ConfigOpts& o, const std::string& out_dir) {
  int rc = 0;
  cm_config* cfg = build_config(o, &rc);
  if (cfg == nullptr) return rc;
  const cm_status st = cm_generate_data(cfg, out_dir.c_str());
  cm_config_free(cfg);
  if (st != CM_OK) return fail(st);
  std::printf("dataset written to %s\n", out_dir.c_str());
  return 0;
}

int run_pretrain(const ConfigOpts& o, const std::string& data_dir, const std::string& out_dir) {
  int rc = 0;
  cm_config* cfg = build_config(o, &rc);
  if (cfg == nullptr) return rc;
  const cm_status st = cm_pretrain(cfg, data_dir.c_str(), out_dir.c_str());
  cm_config_free(cfg);
  if (st != CM_OK) return fail(st);
  std::printf("pretraining checkpoint written to %s\n", out_dir.c_str());
  return 0;
}

int run_selftrain(const ConfigOpts& o, const std::string& data_dir, const std::string& init_ckpt,
                  const std::string& out_dir) {
  int rc = 0;
  cm_config* cfg = build_config(o, &rc);
  if (cfg == nullptr) return rc;
  cm_metrics m;
  const cm_status st = cm_selftrain(cfg, data_dir.c_str(),
                                    init_ckpt.empty() ? nullptr : init_ckpt.c_str(),
                                    out_dir.c_str(), &m);
  cm_config_free(cfg);
  if (st != CM_OK) return fail(st);
  print_metrics(m);
  return 0;
}

int run_eval(ConfigOpts o, const std::string& data_dir, const std::string& ckpt_dir,
             const std::string& embeddings_csv) {
  namespace fs = std::filesystem;
  if (o.config_path.empty()) {
    // Checkpoint directories written by this tool carry a config copy, either
    // beside the manifest (pretrain) or one level up (run checkpoints).
    for (const fs::path& cand :
         {fs::path(ckpt_dir) / "config.cfg", fs::path(ckpt_dir).parent_path() / "config.cfg"}) {
      if (fs::exists(cand)) {
        o.config_path = cand.string();
        break;
      }
    }
    if (o.config_path.empty()) {
      std::fprintf(stderr,
                   "error [config]: no --config given and no config.cfg found in or above %s\n",
                   ckpt_dir.c_str());
      return exit_code(CM_ERR_CONFIG);
    }
  }
  int rc = 0;
  cm_config* cfg = build_config(o, &rc);
  if (cfg == nullptr) return rc;
  cm_metrics m;
  const cm_status st = cm_eval(cfg, data_dir.c_str(), ckpt_dir.c_str(),
                               embeddings_csv.empty() ? nullptr : embeddings_csv.c_str(), &m);
  cm_config_free(cfg);
  if (st != CM_OK) return fail(st);
  print_metrics(m);
  return 0;
}

int run_ablate(const ConfigOpts& o, const std::string& grid_path, const std::string& out_root) {
  int rc = 0;
  cm_config* cfg = build_config(o, &rc);
  if (cfg == nullptr) return rc;
  const cm_status st = cm_ablate(cfg, grid_path.c_str(), out_root.c_str());
  cm_config_free(cfg);
  if (st != CM_OK) return fail(st);
  std::printf("summary written to %s/summary.csv\n", out_root.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"crossmost: cross-modal self-training on synthetic shapes"};
  app.require_subcommand(1);
  app.footer("Exit codes: 0 ok, 2 config, 3 io, 4 domain, 5 numerics, 6 internal.\n"
             "CROSSMOST_THREADS limits worker threads (0 or unset = all cores).");

  int rc = 0;

  ConfigOpts gen_o;
  std::string gen_out;
  CLI::App* gen = app.add_subcommand("gen-data", "generate and store the synthetic dataset");
  add_config_opts(gen, &gen_o);
  gen->add_option("--out", gen_out, "output dataset directory")->required();
  gen->callback([&] { rc = run_gen_data(gen_o, gen_out); });

  ConfigOpts pre_o;
  std::string pre_data, pre_out;
  CLI::App* pre = app.add_subcommand("pretrain", "stage 1: contrastive alignment pretraining");
  add_config_opts(pre, &pre_o);
  pre->add_option("--data", pre_data, "stored dataset directory")->required();
  pre->add_option("--out", pre_out, "output checkpoint directory")->required();
  pre->callback([&] { rc = run_pretrain(pre_o, pre_data, pre_out); });

  ConfigOpts st_o;
  std::string st_data, st_init, st_out;
  CLI::App* st = app.add_subcommand("selftrain", "stage 2: teacher-labeled self-training");
  add_config_opts(st, &st_o);
  st->add_option("--data", st_data, "stored dataset directory")->required();
  st->add_option("--init", st_init, "stage-1 checkpoint to start from (default: pretrain in-process)");
  st->add_option("--out", st_out, "output run directory")->required();
  st->callback([&] { rc = run_selftrain(st_o, st_data, st_init, st_out); });

  ConfigOpts ev_o;
  std::string ev_data, ev_ckpt, ev_csv;
  CLI::App* ev = app.add_subcommand("eval", "evaluate a stored checkpoint on the test split");
  add_config_opts(ev, &ev_o);
  ev->add_option("--data", ev_data, "stored dataset directory")->required();
  ev->add_option("--ckpt", ev_ckpt, "checkpoint directory")->required();
  ev->add_option("--dump-embeddings", ev_csv, "also write per-sample embeddings to this CSV");
  ev->callback([&] { rc = run_eval(ev_o, ev_data, ev_ckpt, ev_csv); });

  ConfigOpts ab_o;
  std::string ab_grid, ab_out;
  CLI::App* ab = app.add_subcommand("ablate", "run a JSON grid of config overrides");
  add_config_opts(ab, &ab_o);
  ab->add_option("--grid", ab_grid, "grid file: {\"cells\": [{\"name\", \"overrides\"}]}")->required();
  ab->add_option("--out", ab_out, "output root (cached data/pretrain, runs/, summary.csv)")->required();
  ab->callback([&] { rc = run_ablate(ab_o, ab_grid, ab_out); });

  CLI11_PARSE(app, argc, argv);
  return rc;
}
