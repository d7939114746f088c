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
#include <cmath>
#include <limits>

#include "common/error.hpp"
#include "synthdata/synthdata.hpp"

namespace crossmost::synth {

namespace {
constexpr double kDegToRad = 0.017453292519943295769;
constexpr double kElevationDeg = 30.0;
}  // namespace

std::vector<ViewImage> render_views(const Matrix& pts, int v, int p) {
  if (pts.rows() == 0) throw DomainError("render_views: empty point cloud");
  if (v < 1) throw ConfigError("render_views: need at least one view");
  if (p < 16) throw ConfigError("render_views: need at least 16 pixels per side");

  std::vector<ViewImage> views;
  views.reserve(static_cast<std::size_t>(v));
  const double el = kElevationDeg * kDegToRad;
  for (int i = 0; i < v; ++i) {
    const double az_deg = 360.0 * i / v;
    const double az = az_deg * kDegToRad;
    // Camera sits at +cam looking inward; right stays horizontal.
    const Eigen::RowVector3d cam(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az),
                                 std::sin(el));
    const Eigen::RowVector3d right(-std::sin(az), std::cos(az), 0.0);
    const Eigen::RowVector3d up = cam.cross(right);

    Matrix pixels = Matrix::Zero(p, p);
    Matrix zbuf = Matrix::Constant(p, p, std::numeric_limits<double>::infinity());
    for (Eigen::Index k = 0; k < pts.rows(); ++k) {
      const Eigen::RowVector3d q = pts.row(k);
      const double x = q.dot(right);
      const double y = q.dot(up);
      const double depth = -q.dot(cam);  // smaller = nearer to the camera
      const int col = std::clamp(static_cast<int>(std::floor((x + 1.0) * 0.5 * p)), 0, p - 1);
      const int row = std::clamp(static_cast<int>(std::floor((1.0 - y) * 0.5 * p)), 0, p - 1);
      if (depth < zbuf(row, col)) {
        zbuf(row, col) = depth;
        // Unit-sphere frame keeps depth in [-1,1]; map near->1.0, far->0.1 so
        // every foreground pixel stays strictly positive.
        const double d = std::clamp(depth, -1.0, 1.0);
        pixels(row, col) = 0.1 + 0.45 * (1.0 - d);
      }
    }
    views.push_back(ViewImage{std::move(pixels), i, az_deg, kElevationDeg});
  }
  return views;
}

}  // namespace crossmost::synth
