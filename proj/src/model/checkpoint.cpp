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
#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "common/binio.hpp"
#include "common/error.hpp"
#include "model/model.hpp"

namespace crossmost::model {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void save_weights(const fs::path& dir, const std::vector<Parameter*>& params) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string());
  for (const Parameter* p : params) {
    std::ofstream out(dir / (p->name + ".bin"), std::ios::binary);
    if (!out) throw IoError("cannot write " + (dir / (p->name + ".bin")).string());
    io::write_matrix_f32(out, p->value);
    if (!out) throw IoError("write failure in " + dir.string());
  }
}

void load_weights(const fs::path& dir, const std::vector<Parameter*>& params,
                  const json& shapes) {
  for (Parameter* p : params) {
    const auto it = shapes.find(p->name);
    if (it == shapes.end()) throw ConfigError("checkpoint lacks parameter " + p->name);
    const auto rows = (*it)[0].get<Eigen::Index>();
    const auto cols = (*it)[1].get<Eigen::Index>();
    if (rows != p->value.rows() || cols != p->value.cols()) {
      throw ConfigError("checkpoint shape mismatch for " + p->name);
    }
    std::ifstream in(dir / (p->name + ".bin"), std::ios::binary);
    if (!in) throw IoError("cannot open " + (dir / (p->name + ".bin")).string());
    p->value = io::read_matrix_f32(in, rows, cols);
    p->zero_grad();
  }
}

}  // namespace

void save_checkpoint(const std::string& dir, const Model& student, const Model& teacher,
                     const RunConfig& cfg, std::int64_t step) {
  const fs::path root(dir);
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw IoError("cannot create directory " + root.string());

  json manifest;
  manifest["step"] = step;
  manifest["config_hash"] = cfg.content_hash();
  json shapes = json::object();
  for (const Parameter* p : student.parameters()) {
    shapes[p->name] = {p->value.rows(), p->value.cols()};
  }
  manifest["shapes"] = shapes;
  {
    std::ofstream out(root / "manifest.json");
    if (!out) throw IoError("cannot write " + (root / "manifest.json").string());
    out << manifest.dump(2) << "\n";
  }
  save_weights(root / "student", student.parameters());
  save_weights(root / "teacher", teacher.parameters());
}

std::int64_t load_checkpoint(const std::string& dir, Model& student, Model& teacher) {
  const fs::path root(dir);
  std::ifstream in(root / "manifest.json");
  if (!in) throw IoError("cannot open " + (root / "manifest.json").string());
  json manifest = json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (manifest.is_discarded() || !manifest.contains("shapes")) {
    throw IoError("invalid checkpoint manifest in " + root.string());
  }
  load_weights(root / "student", student.parameters(), manifest["shapes"]);
  load_weights(root / "teacher", teacher.parameters(), manifest["shapes"]);
  return manifest.value("step", static_cast<std::int64_t>(0));
}

}  // namespace crossmost::model
