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
#include "synthdata/synthdata.hpp"

namespace crossmost::synth {

namespace {

constexpr double kDegToRad = 0.017453292519943295769;

Eigen::RowVector3d unit_dir(Rng& rng) {
  while (true) {
    Eigen::RowVector3d d(rng.normal(), rng.normal(), rng.normal());
    const double n = d.norm();
    if (n > 1e-9) return d / n;
  }
}

Eigen::Matrix3d rot_x(double a) {
  Eigen::Matrix3d m;
  m << 1, 0, 0, 0, std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a);
  return m;
}

Eigen::Matrix3d rot_y(double a) {
  Eigen::Matrix3d m;
  m << std::cos(a), 0, std::sin(a), 0, 1, 0, -std::sin(a), 0, std::cos(a);
  return m;
}

Eigen::Matrix3d rot_z(double a) {
  Eigen::Matrix3d m;
  m << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
  return m;
}

Eigen::Matrix3d axis_angle(const Eigen::RowVector3d& axis, double angle) {
  Eigen::Matrix3d k;
  k << 0, -axis(2), axis(1), axis(2), 0, -axis(0), -axis(1), axis(0), 0;
  return Eigen::Matrix3d::Identity() + std::sin(angle) * k +
         (1.0 - std::cos(angle)) * (k * k);
}

/// Bilinear sample of a square crop window, resized back to p x p. The source
/// coordinate convention makes a full-window crop an exact identity.
Matrix resample_crop(const Matrix& img, double x0, double y0, double side, int p) {
  Matrix out(p, p);
  const double step = side / p;
  for (int r = 0; r < p; ++r) {
    const double sy = (r + 0.5) * step + y0 - 0.5;
    const int y_lo = std::clamp(static_cast<int>(std::floor(sy)), 0, p - 1);
    const int y_hi = std::min(y_lo + 1, p - 1);
    const double fy = std::clamp(sy - y_lo, 0.0, 1.0);
    for (int c = 0; c < p; ++c) {
      const double sx = (c + 0.5) * step + x0 - 0.5;
      const int x_lo = std::clamp(static_cast<int>(std::floor(sx)), 0, p - 1);
      const int x_hi = std::min(x_lo + 1, p - 1);
      const double fx = std::clamp(sx - x_lo, 0.0, 1.0);
      const double top = img(y_lo, x_lo) * (1.0 - fx) + img(y_lo, x_hi) * fx;
      const double bot = img(y_hi, x_lo) * (1.0 - fx) + img(y_hi, x_hi) * fx;
      out(r, c) = top * (1.0 - fy) + bot * fy;
    }
  }
  return out;
}

Matrix random_resized_crop(const Matrix& img, Rng& rng, double min_area) {
  const int p = static_cast<int>(img.rows());
  const double area = rng.uniform(min_area, 1.0);
  const double side = std::sqrt(area) * p;
  const double x0 = rng.uniform(0.0, p - side);
  const double y0 = rng.uniform(0.0, p - side);
  return resample_crop(img, x0, y0, side, p);
}

void clamp01(Matrix& img) {
  img = img.cwiseMax(0.0).cwiseMin(1.0);
}

}  // namespace

Matrix augment_pcl_weak(const Matrix& pts, Rng& rng, const RunConfig::Aug& a) {
  const double cap = a.weak_rot_deg * kDegToRad;
  const double rx = rng.uniform(-cap, cap);
  const double ry = rng.uniform(-cap, cap);
  const double rz = rng.uniform(-cap, cap);
  const double s = rng.uniform(a.weak_scale_min, a.weak_scale_max);
  const Eigen::Matrix3d r = rot_z(rz) * rot_y(ry) * rot_x(rx);
  return pts * r.transpose() * s;
}

Matrix augment_pcl_strong(const Matrix& pts, Rng& rng, const RunConfig::Aug& a) {
  const int n = static_cast<int>(pts.rows());

  // Crop: keep the ceil(rho*n) points deepest into a random half-space, then
  // refill to n by resampling kept points. Ties resolve to the lower index so
  // rho = 1 reproduces the input exactly.
  const double rho = rng.uniform(a.strong_crop_min_retain, 1.0);
  const int keep = std::min(n, static_cast<int>(std::ceil(rho * n)));
  const Eigen::RowVector3d crop_dir = unit_dir(rng);
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  {
    Eigen::VectorXd score = pts * crop_dir.transpose();
    std::stable_sort(order.begin(), order.end(),
                     [&](int i, int j) { return score(i) > score(j); });
  }
  order.resize(static_cast<std::size_t>(keep));
  std::sort(order.begin(), order.end());
  Matrix cur(n, 3);
  for (int i = 0; i < keep; ++i) cur.row(i) = pts.row(order[static_cast<std::size_t>(i)]);
  for (int i = keep; i < n; ++i)
    cur.row(i) = cur.row(static_cast<int>(rng.uniform_int(keep)));

  // Dropout: drop floor(delta*n) random points, then refill from survivors.
  const double delta = rng.uniform(0.0, a.strong_dropout_max);
  const int drop = std::min(n - 1, static_cast<int>(std::floor(delta * n)));
  if (drop > 0) {
    std::vector<int> dropped = rng.sample_distinct(n, drop);
    std::vector<char> gone(static_cast<std::size_t>(n), 0);
    for (int d : dropped) gone[static_cast<std::size_t>(d)] = 1;
    Matrix next(n, 3);
    int m = 0;
    for (int i = 0; i < n; ++i) {
      if (!gone[static_cast<std::size_t>(i)]) next.row(m++) = cur.row(i);
    }
    for (int i = m; i < n; ++i)
      next.row(i) = next.row(static_cast<int>(rng.uniform_int(m)));
    cur = std::move(next);
  }

  const Eigen::RowVector3d axis = unit_dir(rng);
  const double angle = rng.uniform(0.0, a.strong_rot_deg * kDegToRad);
  cur = cur * axis_angle(axis, angle).transpose();

  const Eigen::RowVector3d tdir = unit_dir(rng);
  const double tmag = rng.uniform(0.0, a.strong_translate_max);
  cur.rowwise() += tdir * tmag;

  cur *= rng.uniform(a.strong_scale_min, a.strong_scale_max);
  return cur;
}

Matrix augment_img_weak(const Matrix& img, Rng& rng, const RunConfig::Aug& a) {
  if (img.rows() != img.cols()) throw DomainError("augment_img_weak: image must be square");
  return random_resized_crop(img, rng, a.weak_img_min_area);
}

Matrix augment_img_strong(const Matrix& img, Rng& rng, const RunConfig::Aug& a) {
  if (img.rows() != img.cols()) throw DomainError("augment_img_strong: image must be square");
  Matrix out = random_resized_crop(img, rng, a.strong_img_min_area);
  if (rng.uniform() < 0.5) out = out.rowwise().reverse().eval();

  const int n_ops = std::min(4, a.strong_img_ops);
  for (int op : rng.sample_distinct(4, n_ops)) {
    switch (op) {
      case 0:  // invert
        out = (1.0 - out.array()).matrix();
        break;
      case 1: {  // contrast about the image mean
        const double f = rng.uniform(0.2, 1.8);
        const double mean = out.mean();
        out = (mean + f * (out.array() - mean)).matrix();
        break;
      }
      case 2:  // brightness
        out = (out.array() + rng.uniform(-0.3, 0.3)).matrix();
        break;
      case 3: {  // posterize to 2..8 levels; keeps 0 and 1 fixed
        const double levels = static_cast<double>(2 + rng.uniform_int(7));
        out = (out.array() * (levels - 1.0)).round() / (levels - 1.0);
        break;
      }
      default:
        break;
    }
    clamp01(out);
  }
  return out;
}

}  // namespace crossmost::synth
