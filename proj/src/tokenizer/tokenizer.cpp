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
#include <algorithm>
#include <cmath>
#include <numeric>

#include "common/error.hpp"
#include "tokenizer/tokenizer.hpp"

namespace crossmost::tok {

std::vector<int> fps(const Matrix& points, int k) {
  const int n = static_cast<int>(points.rows());
  if (k < 1 || k > n) throw DomainError("fps: k must be in [1, N]");
  if (!points.allFinite()) throw DomainError("fps: non-finite coordinates");

  std::vector<int> picked;
  picked.reserve(static_cast<std::size_t>(k));
  picked.push_back(0);
  Eigen::VectorXd min_dist = (points.rowwise() - points.row(0)).rowwise().squaredNorm();
  for (int step = 1; step < k; ++step) {
    int best = 0;
    double best_dist = -1.0;
    for (int i = 0; i < n; ++i) {
      if (min_dist(i) > best_dist) {  // strict: ties keep the lowest index
        best_dist = min_dist(i);
        best = i;
      }
    }
    picked.push_back(best);
    min_dist =
        min_dist.cwiseMin((points.rowwise() - points.row(best)).rowwise().squaredNorm());
  }
  return picked;
}

PointTokens knn_group(const Matrix& points, const std::vector<int>& center_indices, int g) {
  const int n = static_cast<int>(points.rows());
  const int k = static_cast<int>(center_indices.size());
  if (g < 1 || g > n) throw DomainError("knn_group: g must be in [1, N]");

  PointTokens out;
  out.center_indices = center_indices;
  out.centers.resize(k, 3);
  out.groups.resize(static_cast<Eigen::Index>(k) * g, 3);

  std::vector<int> order(static_cast<std::size_t>(n));
  for (int c = 0; c < k; ++c) {
    const int ci = center_indices[static_cast<std::size_t>(c)];
    if (ci < 0 || ci >= n) throw DomainError("knn_group: center index out of range");
    const Eigen::RowVector3d center = points.row(ci);
    out.centers.row(c) = center;
    Eigen::VectorXd dist = (points.rowwise() - center).rowwise().squaredNorm();
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + g, order.end(), [&](int a, int b) {
      if (dist(a) != dist(b)) return dist(a) < dist(b);
      return a < b;
    });
    for (int j = 0; j < g; ++j) {
      out.groups.row(static_cast<Eigen::Index>(c) * g + j) =
          points.row(order[static_cast<std::size_t>(j)]) - center;
    }
  }
  return out;
}

Matrix patchify_image(const Matrix& img, int patch_size) {
  const int p = static_cast<int>(img.rows());
  if (img.cols() != p) throw ConfigError("patchify_image: image must be square");
  if (patch_size < 1 || p % patch_size != 0)
    throw ConfigError("patchify_image: patch size must divide the image side");
  const int per_side = p / patch_size;
  Matrix patches(per_side * per_side, patch_size * patch_size);
  for (int pr = 0; pr < per_side; ++pr) {
    for (int pc = 0; pc < per_side; ++pc) {
      const int idx = pr * per_side + pc;
      for (int r = 0; r < patch_size; ++r) {
        for (int c = 0; c < patch_size; ++c) {
          patches(idx, r * patch_size + c) = img(pr * patch_size + r, pc * patch_size + c);
        }
      }
    }
  }
  return patches;
}

Matrix unpatchify_image(const Matrix& patches, int patch_size, int p) {
  const int per_side = p / patch_size;
  if (p % patch_size != 0 || patches.rows() != per_side * per_side ||
      patches.cols() != patch_size * patch_size) {
    throw ConfigError("unpatchify_image: inconsistent dimensions");
  }
  Matrix img(p, p);
  for (int pr = 0; pr < per_side; ++pr) {
    for (int pc = 0; pc < per_side; ++pc) {
      const int idx = pr * per_side + pc;
      for (int r = 0; r < patch_size; ++r) {
        for (int c = 0; c < patch_size; ++c) {
          img(pr * patch_size + r, pc * patch_size + c) = patches(idx, r * patch_size + c);
        }
      }
    }
  }
  return img;
}

std::vector<int> mask_image_patches(int k_img, double ratio, Rng& rng) {
  if (k_img < 1) throw DomainError("mask_image_patches: need at least one patch");
  const int m = std::clamp(static_cast<int>(std::lround(ratio * k_img)), 0, k_img);
  std::vector<int> out = rng.sample_distinct(k_img, m);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> mask_point_block_at(const Matrix& centers, int seed_index, int m) {
  const int k = static_cast<int>(centers.rows());
  if (seed_index < 0 || seed_index >= k)
    throw DomainError("mask_point_block_at: seed out of range");
  if (m < 1 || m > k) throw DomainError("mask_point_block_at: block size out of range");
  Eigen::VectorXd dist =
      (centers.rowwise() - centers.row(seed_index)).rowwise().squaredNorm();
  std::vector<int> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + m, order.end(), [&](int a, int b) {
    if (dist(a) != dist(b)) return dist(a) < dist(b);
    return a < b;
  });
  order.resize(static_cast<std::size_t>(m));
  std::sort(order.begin(), order.end());
  return order;
}

std::vector<int> mask_point_blocks(const Matrix& centers, double ratio_min, double ratio_max,
                                   Rng& rng) {
  const int k = static_cast<int>(centers.rows());
  if (k < 4) throw ConfigError("mask_point_blocks: need at least 4 centers");
  if (!(ratio_min <= ratio_max))
    throw ConfigError("mask_point_blocks: ratio_min must be <= ratio_max");
  const double rho = rng.uniform(ratio_min, ratio_max);
  const int seed = static_cast<int>(rng.uniform_int(k));
  const int m = std::clamp(static_cast<int>(std::lround(rho * k)), 1, k);
  return mask_point_block_at(centers, seed, m);
}

}  // namespace crossmost::tok
