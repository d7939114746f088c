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
#include "synthdata/synthdata.hpp"

namespace crossmost::synth {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* kSplitNames[4] = {"pretrain", "train", "test", "exemplars"};

std::vector<Sample> make_split(const RunConfig& cfg, const char* tag, int per_class,
                               double jitter, int regime_shift, std::uint64_t& next_id) {
  std::vector<Sample> out;
  out.reserve(static_cast<std::size_t>(per_class) * cfg.data.classes);
  for (int c = 0; c < cfg.data.classes; ++c) {
    for (int i = 0; i < per_class; ++i) {
      Sample s;
      s.sample_id = next_id++;
      s.label = c;
      ShapeSpec spec;
      spec.class_id = c;
      spec.seed = Rng::stream(cfg.data.seed, s.sample_id, tag).next_u64();
      spec.jitter = jitter;
      spec.regime_shift = regime_shift;
      s.points = generate_shape(spec, cfg.data.n_points);
      s.views = render_views(s.points, cfg.data.views, cfg.data.image_size);
      out.push_back(std::move(s));
    }
  }
  return out;
}

void save_split(const fs::path& dir, const std::string& name, const std::vector<Sample>& samples,
                const Dataset& ds, const RunConfig& cfg) {
  const fs::path split_dir = dir / name;
  std::error_code ec;
  fs::create_directories(split_dir, ec);
  if (ec) throw IoError("cannot create directory " + split_dir.string());

  json meta;
  meta["split"] = name;
  meta["n_samples"] = samples.size();
  meta["classes"] = cfg.data.classes;
  meta["class_names"] = ds.class_names;
  meta["n_points"] = cfg.data.n_points;
  meta["views"] = cfg.data.views;
  meta["image_size"] = cfg.data.image_size;
  meta["data_seed"] = cfg.data.seed;
  meta["config_hash"] = cfg.content_hash();
  meta["config"] = cfg.serialize();
  {
    std::ofstream out(split_dir / "meta.json");
    if (!out) throw IoError("cannot write " + (split_dir / "meta.json").string());
    out << meta.dump(2) << "\n";
  }

  std::ofstream bin(split_dir / "samples.bin", std::ios::binary);
  if (!bin) throw IoError("cannot write " + (split_dir / "samples.bin").string());
  for (const Sample& s : samples) {
    io::write_u64(bin, s.sample_id);
    io::write_u32(bin, static_cast<std::uint32_t>(s.label));
    io::write_u32(bin, static_cast<std::uint32_t>(s.points.rows()));
    io::write_u32(bin, static_cast<std::uint32_t>(s.views.size()));
    io::write_u32(bin, static_cast<std::uint32_t>(s.views.empty() ? 0 : s.views[0].pixels.rows()));
    io::write_matrix_f32(bin, s.points);
    for (const ViewImage& v : s.views) io::write_matrix_f32(bin, v.pixels);
  }
  if (!bin) throw IoError("write failure on " + (split_dir / "samples.bin").string());
}

}  // namespace

Dataset generate_dataset(const RunConfig& cfg) {
  cfg.validate();
  Dataset ds;
  ds.class_names.reserve(static_cast<std::size_t>(cfg.data.classes));
  for (int c = 0; c < cfg.data.classes; ++c) {
    std::string name = family_name(family_for_class(c));
    const int regime = regime_for_class(c);
    if (regime > 0) name += "_r" + std::to_string(regime);
    ds.class_names.push_back(std::move(name));
  }

  // Fixed split order keeps sample ids stable and globally unique.
  std::uint64_t next_id = 0;
  ds.pretrain = make_split(cfg, "pretrain", cfg.data.pretrain_per_class, cfg.data.jitter,
                           cfg.data.disjoint_classes ? 1 : 0, next_id);
  ds.train = make_split(cfg, "train", cfg.data.train_per_class, cfg.data.jitter, 0, next_id);
  ds.test = make_split(cfg, "test", cfg.data.test_per_class, cfg.data.jitter, 0, next_id);
  // Exemplars are canonical midpoint-parameter shapes used to seed the
  // classifier; zero jitter pins each one to its class's defining geometry.
  ds.exemplars =
      make_split(cfg, "exemplars", cfg.data.exemplars_per_class, 0.0, 0, next_id);
  return ds;
}

void save_dataset(const std::string& dir, const Dataset& ds, const RunConfig& cfg) {
  const fs::path root(dir);
  save_split(root, kSplitNames[0], ds.pretrain, ds, cfg);
  save_split(root, kSplitNames[1], ds.train, ds, cfg);
  save_split(root, kSplitNames[2], ds.test, ds, cfg);
  save_split(root, kSplitNames[3], ds.exemplars, ds, cfg);
}

std::vector<Sample> load_split_file(const std::string& path) {
  std::ifstream bin(path, std::ios::binary);
  if (!bin) throw IoError("cannot open " + path);
  std::vector<Sample> out;
  while (true) {
    bin.peek();
    if (bin.eof()) break;
    Sample s;
    s.sample_id = io::read_u64(bin);
    s.label = static_cast<int>(io::read_u32(bin));
    const auto n = static_cast<Eigen::Index>(io::read_u32(bin));
    const auto v = static_cast<Eigen::Index>(io::read_u32(bin));
    const auto p = static_cast<Eigen::Index>(io::read_u32(bin));
    if (n == 0 || v == 0 || p == 0) throw IoError("corrupt sample header in " + path);
    s.points = io::read_matrix_f32(bin, n, 3);
    s.views.reserve(static_cast<std::size_t>(v));
    for (Eigen::Index i = 0; i < v; ++i) {
      ViewImage img;
      img.pixels = io::read_matrix_f32(bin, p, p);
      img.view_id = static_cast<int>(i);
      img.azimuth_deg = 360.0 * static_cast<double>(i) / static_cast<double>(v);
      img.elevation_deg = 30.0;
      s.views.push_back(std::move(img));
    }
    out.push_back(std::move(s));
  }
  return out;
}

Dataset load_dataset(const std::string& dir) {
  const fs::path root(dir);
  Dataset ds;
  const fs::path train_meta = root / "train" / "meta.json";
  std::ifstream meta_in(train_meta);
  if (!meta_in) throw IoError("cannot open " + train_meta.string());
  json meta = json::parse(meta_in, nullptr, /*allow_exceptions=*/false);
  if (meta.is_discarded()) throw IoError("invalid JSON in " + train_meta.string());
  if (!meta.contains("class_names")) throw IoError("missing class_names in " + train_meta.string());
  ds.class_names = meta["class_names"].get<std::vector<std::string>>();

  ds.pretrain = load_split_file((root / "pretrain" / "samples.bin").string());
  ds.train = load_split_file((root / "train" / "samples.bin").string());
  ds.test = load_split_file((root / "test" / "samples.bin").string());
  ds.exemplars = load_split_file((root / "exemplars" / "samples.bin").string());
  return ds;
}

}  // namespace crossmost::synth
