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
#include <vector>

#include "common/rng.hpp"

namespace crossmost::tok {

using Matrix = Eigen::MatrixXd;

/// Greedy farthest-point sampling. Starts at index 0, then repeatedly picks
/// the point with the largest distance to the selected set; ties resolve to
/// the lowest index. Returns k indices in pick order.
std::vector<int> fps(const Matrix& points, int k);

/// One tokenized point cloud: K center-relative sub-clouds of G points each.
struct PointTokens {
  Matrix groups;   // (K*G) x 3, group k in rows [k*G, (k+1)*G), center-relative
  Matrix centers;  // K x 3 absolute center coordinates
  std::vector<int> center_indices;
};

/// For each center, the g nearest points (Euclidean, ties by index; the center
/// itself is its own nearest neighbor) with the center subtracted.
PointTokens knn_group(const Matrix& points, const std::vector<int>& center_indices, int g);

/// Row-major non-overlapping patches, each flattened row-major:
/// (P/ps)^2 x ps^2.
Matrix patchify_image(const Matrix& img, int patch_size);

/// Inverse of patchify_image for a p x p image.
Matrix unpatchify_image(const Matrix& patches, int patch_size, int p);

/// Uniform subset of round(ratio * k_img) patch indices, ascending.
std::vector<int> mask_image_patches(int k_img, double ratio, Rng& rng);

/// The block at a given seed center: the seed plus its m-1 nearest centers
/// (ties by index), ascending.
std::vector<int> mask_point_block_at(const Matrix& centers, int seed_index, int m);

/// Spatially contiguous center block: ratio ~ U[ratio_min, ratio_max], random
/// seed center, block size round(ratio * K), ascending indices.
std::vector<int> mask_point_blocks(const Matrix& centers, double ratio_min, double ratio_max,
                                   Rng& rng);

}  // namespace crossmost::tok
