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

#include "common/error.hpp"
#include "synthdata/synthdata.hpp"

namespace crossmost::synth {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

Eigen::RowVector3d unit_dir(Rng& rng) {
  while (true) {
    Eigen::RowVector3d d(rng.normal(), rng.normal(), rng.normal());
    const double n = d.norm();
    if (n > 1e-9) return d / n;
  }
}

/// Parameter draw from range block k: blocks are centered at mid*(1 + 0.6k)
/// with half-width range*jitter, disjoint for jitter <= 1.
double draw_param(Rng& rng, double mid, double range, int block, double jitter) {
  const double center = mid * (1.0 + 0.6 * block);
  const double r = range * jitter;
  return rng.uniform(center - r, center + r);
}

}  // namespace

std::string family_name(Family f) {
  switch (f) {
    case Family::kSphere: return "sphere";
    case Family::kBox: return "box";
    case Family::kCone: return "cone";
    case Family::kCylinder: return "cylinder";
    case Family::kTorus: return "torus";
    case Family::kPyramid: return "pyramid";
    case Family::kEllipsoid: return "ellipsoid";
    case Family::kCapsule: return "capsule";
  }
  throw ConfigError("unknown shape family");
}

Family family_for_class(int class_id) {
  if (class_id < 0) throw ConfigError("class_id must be non-negative");
  return static_cast<Family>(class_id % kFamilyCount);
}

int regime_for_class(int class_id) {
  if (class_id < 0) throw ConfigError("class_id must be non-negative");
  return class_id / kFamilyCount;
}

Matrix sample_sphere(Rng& rng, int n, double r) {
  Matrix pts(n, 3);
  for (int i = 0; i < n; ++i) pts.row(i) = unit_dir(rng) * r;
  return pts;
}

Matrix sample_box(Rng& rng, int n, double ax, double ay, double az) {
  // Face pair areas; the pair normal to axis 0 has area 4*ay*az per face.
  const double areas[3] = {ay * az, ax * az, ax * ay};
  const double total = 2.0 * (areas[0] + areas[1] + areas[2]);
  const double half[3] = {ax, ay, az};
  Matrix pts(n, 3);
  for (int i = 0; i < n; ++i) {
    double u = rng.uniform(0.0, total);
    int axis = 0;
    double sign = 1.0;
    for (int a = 0; a < 3; ++a) {
      if (u < 2.0 * areas[a]) {
        axis = a;
        sign = u < areas[a] ? 1.0 : -1.0;
        break;
      }
      u -= 2.0 * areas[a];
    }
    const int b = (axis + 1) % 3;
    const int c = (axis + 2) % 3;
    Eigen::RowVector3d p;
    p(axis) = sign * half[axis];
    p(b) = rng.uniform(-half[b], half[b]);
    p(c) = rng.uniform(-half[c], half[c]);
    pts.row(i) = p;
  }
  return pts;
}

Matrix sample_cone(Rng& rng, int n, double r, double h) {
  const double base_area = M_PI * r * r;
  const double lateral_area = M_PI * r * std::sqrt(r * r + h * h);
  Matrix pts(n, 3);
  for (int i = 0; i < n; ++i) {
    const double phi = rng.uniform(0.0, kTwoPi);
    if (rng.uniform(0.0, base_area + lateral_area) < base_area) {
      const double rho = r * std::sqrt(rng.uniform());
      pts.row(i) << rho * std::cos(phi), rho * std::sin(phi), 0.0;
    } else {
      // Radius shrinks linearly with height, so area density does too.
      const double s = std::sqrt(rng.uniform());
      pts.row(i) << r * s * std::cos(phi), r * s * std::sin(phi), h * (1.0 - s);
    }
  }
  return pts;
}

Matrix sample_cylinder(Rng& rng, int n, double r, double h) {
  const double side_area = kTwoPi * r * h;
  const double cap_area = M_PI * r * r;
  Matrix pts(n, 3);
  for (int i = 0; i < n; ++i) {
    const double phi = rng.uniform(0.0, kTwoPi);
    const double u = rng.uniform(0.0, side_area + 2.0 * cap_area);
    if (u < side_area) {
      pts.row(i) << r * std::cos(phi), r * std::sin(phi), rng.uniform(-h / 2.0, h / 2.0);
    } else {
      const double z = u < side_area + cap_area ? h / 2.0 : -h / 2.0;
      const double rho = r * std::sqrt(rng.uniform());
      pts.row(i) << rho * std::cos(phi), rho * std::sin(phi), z;
    }
  }
  return pts;
}

Matrix sample_torus(Rng& rng, int n, double major, double minor) {
  Matrix pts(n, 3);
  for (int i = 0; i < n; ++i) {
    double theta;
    // Rejection keeps the sampling uniform in surface area: the outer rim of
    // the tube is longer than the inner rim by (major + minor cos) / major.
    while (true) {
      theta = rng.uniform(0.0, kTwoPi);
      if (rng.uniform() < (major + minor * std::cos(theta)) / (major + minor)) break;
    }
    const double phi = rng.uniform(0.0, kTwoPi);
    const double ring = major + minor * std::cos(theta);
    pts.row(i) << ring * std::cos(phi), ring * std::sin(phi), minor * std::sin(theta);
  }
  return pts;
}

Matrix sample_pyramid(Rng& rng, int n, double half_base, double h) {
  const double a = half_base;
  const double base_area = 4.0 * a * a;
  const double face_area = a * std::sqrt(h * h + a * a);  // per triangular face
  const double total = base_area + 4.0 * face_area;
  const Eigen::RowVector3d apex(0.0, 0.0, h);
  const Eigen::RowVector3d corners[4] = {
      {a, a, 0.0}, {-a, a, 0.0}, {-a, -a, 0.0}, {a, -a, 0.0}};
  Matrix pts(n, 3);
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform(0.0, total);
    if (u < base_area) {
      pts.row(i) << rng.uniform(-a, a), rng.uniform(-a, a), 0.0;
    } else {
      const int face = std::min(3, static_cast<int>((u - base_area) / face_area));
      const Eigen::RowVector3d& v0 = corners[face];
      const Eigen::RowVector3d& v1 = corners[(face + 1) % 4];
      double s = rng.uniform();
      double t = rng.uniform();
      if (s + t > 1.0) {
        s = 1.0 - s;
        t = 1.0 - t;
      }
      pts.row(i) = v0 + s * (v1 - v0) + t * (apex - v0);
    }
  }
  return pts;
}

Matrix sample_ellipsoid(Rng& rng, int n, double ax, double ay, double az) {
  // Direction mapping is not exactly area-uniform; the mild pole bias is
  // irrelevant for class identity and keeps the sampler draw-count fixed.
  Matrix pts(n, 3);
  for (int i = 0; i < n; ++i) {
    const Eigen::RowVector3d d = unit_dir(rng);
    pts.row(i) << ax * d(0), ay * d(1), az * d(2);
  }
  return pts;
}

Matrix sample_capsule(Rng& rng, int n, double r, double half_len) {
  const double side_area = kTwoPi * r * (2.0 * half_len);
  const double caps_area = 2.0 * kTwoPi * r * r;  // two hemispheres
  Matrix pts(n, 3);
  for (int i = 0; i < n; ++i) {
    if (rng.uniform(0.0, side_area + caps_area) < side_area) {
      const double phi = rng.uniform(0.0, kTwoPi);
      pts.row(i) << r * std::cos(phi), r * std::sin(phi), rng.uniform(-half_len, half_len);
    } else {
      const Eigen::RowVector3d d = unit_dir(rng);
      const double zc = d(2) >= 0.0 ? half_len : -half_len;
      pts.row(i) = r * d + Eigen::RowVector3d(0.0, 0.0, zc);
    }
  }
  return pts;
}

void normalize_unit_sphere(Matrix& pts) {
  if (pts.rows() < 2) throw DomainError("normalize_unit_sphere: need at least 2 points");
  const Eigen::RowVector3d centroid = pts.colwise().mean();
  pts.rowwise() -= centroid;
  const double max_norm = pts.rowwise().norm().maxCoeff();
  if (max_norm < 1e-12) throw DomainError("normalize_unit_sphere: degenerate cloud");
  pts /= max_norm;
}

Matrix generate_shape(const ShapeSpec& spec, int n_points) {
  if (n_points < 128) throw ConfigError("generate_shape: n_points must be >= 128");
  if (spec.class_id < 0) throw ConfigError("generate_shape: negative class_id");
  if (spec.jitter < 0.0) throw ConfigError("generate_shape: negative jitter");
  const Family fam = family_for_class(spec.class_id);
  const int block = regime_for_class(spec.class_id) + spec.regime_shift;
  Rng rng = Rng::stream(spec.seed, static_cast<std::uint64_t>(spec.class_id), "shape");
  const double j = spec.jitter;

  Matrix pts;
  switch (fam) {
    case Family::kSphere:
      // Radius normalizes away; spheres have no free aspect parameters.
      pts = sample_sphere(rng, n_points, 1.0);
      break;
    case Family::kBox: {
      const double ay = draw_param(rng, 0.55, 0.15, block, j);
      const double az = draw_param(rng, 0.30, 0.10, block, j);
      pts = sample_box(rng, n_points, 1.0, ay, az);
      break;
    }
    case Family::kCone: {
      const double r = draw_param(rng, 0.70, 0.10, block, j);
      const double h = draw_param(rng, 1.60, 0.20, block, j);
      pts = sample_cone(rng, n_points, r, h);
      break;
    }
    case Family::kCylinder: {
      const double r = draw_param(rng, 0.50, 0.10, block, j);
      const double h = draw_param(rng, 1.80, 0.20, block, j);
      pts = sample_cylinder(rng, n_points, r, h);
      break;
    }
    case Family::kTorus: {
      const double minor = draw_param(rng, 0.30, 0.08, block, j);
      pts = sample_torus(rng, n_points, 1.0, minor);
      break;
    }
    case Family::kPyramid: {
      const double a = draw_param(rng, 0.90, 0.15, block, j);
      const double h = draw_param(rng, 1.30, 0.20, block, j);
      pts = sample_pyramid(rng, n_points, a, h);
      break;
    }
    case Family::kEllipsoid: {
      const double ay = draw_param(rng, 0.60, 0.10, block, j);
      const double az = draw_param(rng, 0.35, 0.08, block, j);
      pts = sample_ellipsoid(rng, n_points, 1.0, ay, az);
      break;
    }
    case Family::kCapsule: {
      const double r = draw_param(rng, 0.45, 0.08, block, j);
      const double hl = draw_param(rng, 0.80, 0.15, block, j);
      pts = sample_capsule(rng, n_points, r, hl);
      break;
    }
  }
  normalize_unit_sphere(pts);
  return pts;
}

}  // namespace crossmost::synth
