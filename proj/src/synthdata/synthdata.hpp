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

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "common/config.hpp"
#include "common/rng.hpp"

namespace crossmost::synth {

using Matrix = Eigen::MatrixXd;

enum class Family {
  kSphere,
  kBox,
  kCone,
  kCylinder,
  kTorus,
  kPyramid,
  kEllipsoid,
  kCapsule,
};
constexpr int kFamilyCount = 8;

std::string family_name(Family f);
Family family_for_class(int class_id);
/// Classes beyond the family count reuse families with disjoint parameter
/// ranges; the regime index selects the range block.
int regime_for_class(int class_id);

struct ShapeSpec {
  int class_id = 0;
  std::uint64_t seed = 0;
  double jitter = 1.0;   // width multiplier on parameter ranges; 0 = canonical shape
  int regime_shift = 0;  // extra range-block offset (e.g. pretrain on unseen variants)
};

// Low-level surface samplers, unnormalized. Dimensions are half-extents for
// the box, full heights for cone/cylinder/pyramid, half-length for capsule.
Matrix sample_sphere(Rng& rng, int n, double r);
Matrix sample_box(Rng& rng, int n, double ax, double ay, double az);
Matrix sample_cone(Rng& rng, int n, double r, double h);
Matrix sample_cylinder(Rng& rng, int n, double r, double h);
Matrix sample_torus(Rng& rng, int n, double major, double minor);
Matrix sample_pyramid(Rng& rng, int n, double half_base, double h);
Matrix sample_ellipsoid(Rng& rng, int n, double ax, double ay, double az);
Matrix sample_capsule(Rng& rng, int n, double r, double half_len);

/// Subtract the centroid, then scale so the farthest point sits on the unit
/// sphere. Throws DomainError on a degenerate (single-point) cloud.
void normalize_unit_sphere(Matrix& pts);

/// N surface points of the class's family, parameters drawn from the class's
/// range block, unit-sphere normalized. Pure function of (spec, n_points).
Matrix generate_shape(const ShapeSpec& spec, int n_points);

struct ViewImage {
  Matrix pixels;  // P x P, row 0 = top; background exactly 0, foreground in (0,1]
  int view_id = 0;
  double azimuth_deg = 0.0;
  double elevation_deg = 0.0;
};

/// Orthographic depth renders at v equally spaced azimuths, elevation fixed at
/// 30 degrees. Nearest point wins each pixel; nearer points are brighter.
std::vector<ViewImage> render_views(const Matrix& pts, int v, int p);

// Augmentation policies. Point-cloud inputs/outputs are N x 3; images are
// P x P in [0,1]. Shapes never change; draws come only from the given rng.
Matrix augment_pcl_weak(const Matrix& pts, Rng& rng, const RunConfig::Aug& a);
Matrix augment_pcl_strong(const Matrix& pts, Rng& rng, const RunConfig::Aug& a);
Matrix augment_img_weak(const Matrix& img, Rng& rng, const RunConfig::Aug& a);
Matrix augment_img_strong(const Matrix& img, Rng& rng, const RunConfig::Aug& a);

struct Sample {
  std::uint64_t sample_id = 0;
  int label = 0;  // evaluation only; training never reads it
  Matrix points;  // N x 3, unit-sphere frame
  std::vector<ViewImage> views;
};

struct Dataset {
  std::vector<std::string> class_names;
  std::vector<Sample> pretrain;   // alignment pretraining pool
  std::vector<Sample> train;      // unlabeled adaptation pool
  std::vector<Sample> test;       // class-balanced evaluation set
  std::vector<Sample> exemplars;  // canonical per-class shapes for classifier init
};

/// Deterministic function of the config (data.* and aug-independent). Sample
/// ids are unique across splits.
Dataset generate_dataset(const RunConfig& cfg);

/// Writes one directory per split: meta.json plus samples.bin (little-endian
/// record stream, header {sample_id:u64, label:u32, N:u32, V:u32, P:u32}
/// followed by float32 points then view pixels).
void save_dataset(const std::string& dir, const Dataset& ds, const RunConfig& cfg);
Dataset load_dataset(const std::string& dir);
std::vector<Sample> load_split_file(const std::string& path);

}  // namespace crossmost::synth
