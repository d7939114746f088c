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
#include <doctest.h>

#include <cmath>

#include "common/error.hpp"
#include "fd_check.hpp"
#include "trainer/optimizer.hpp"

using namespace crossmost;
using namespace crossmost::train;
using cmtest::randm;

namespace {

RunConfig tiny_cfg() {
  RunConfig cfg;
  cfg.data.classes = 4;
  cfg.data.n_points = 128;
  cfg.data.image_size = 16;
  cfg.tok.patch_size = 8;
  cfg.tok.groups = 4;
  cfg.tok.group_size = 4;
  cfg.model.d_model = 16;
  cfg.model.n_layers = 1;
  cfg.model.n_heads = 2;
  cfg.model.d_embed = 8;
  cfg.model.group_hidden = 8;
  cfg.model.pos_hidden = 8;
  return cfg;
}

}  // namespace

TEST_CASE("learning-rate schedule ramps then decays") {
  CHECK(lr_schedule(0, 100, 0.1) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(lr_schedule(4, 100, 0.1) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(lr_schedule(9, 100, 0.1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(lr_schedule(10, 100, 0.1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(lr_schedule(55, 100, 0.1) == doctest::Approx(0.5).epsilon(1e-12));

  // Monotone decreasing after warmup, bounded in [0, 1].
  double prev = 2.0;
  for (long s = 10; s < 100; ++s) {
    const double v = lr_schedule(s, 100, 0.1);
    CHECK(v <= prev);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    prev = v;
  }

  // Zero warmup starts at full rate.
  CHECK(lr_schedule(0, 50, 0.0) == 1.0);

  CHECK_THROWS_AS(lr_schedule(100, 100, 0.1), ConfigError);
  CHECK_THROWS_AS(lr_schedule(-1, 100, 0.1), ConfigError);
  CHECK_THROWS_AS(lr_schedule(0, 0, 0.1), ConfigError);
  CHECK_THROWS_AS(lr_schedule(0, 10, 1.0), ConfigError);
}

TEST_CASE("ema update is an elementwise convex combination") {
  RunConfig cfg = tiny_cfg();
  model::Model teacher(cfg, 1);
  model::Model student(cfg, 2);

  // Momentum 1 freezes the teacher.
  Matrix before = teacher.parameters()[0]->value;
  ema_update(teacher, student, 1.0);
  CHECK(teacher.parameters()[0]->value == before);

  // Momentum 0 copies the student.
  ema_update(teacher, student, 0.0);
  for (std::size_t i = 0; i < teacher.parameters().size(); ++i) {
    CHECK(teacher.parameters()[i]->value == student.parameters()[i]->value);
  }

  // Scalar probe: 0.5 * 2 + 0.5 * 4 = 3.
  teacher.parameters()[0]->value(0, 0) = 2.0;
  student.parameters()[0]->value(0, 0) = 4.0;
  ema_update(teacher, student, 0.5);
  CHECK(teacher.parameters()[0]->value(0, 0) == 3.0);

  // With a frozen student the teacher-student gap decays by the momentum
  // factor each step.
  teacher.parameters()[0]->value(0, 0) = 2.0;
  student.parameters()[0]->value(0, 0) = 4.0;
  double gap = 2.0;
  for (int k = 0; k < 5; ++k) {
    ema_update(teacher, student, 0.9);
    const double now = std::abs(teacher.parameters()[0]->value(0, 0) - 4.0);
    CHECK(now == doctest::Approx(0.9 * gap).epsilon(1e-12));
    gap = now;
  }

  CHECK_THROWS_AS(ema_update(teacher, student, 1.5), ConfigError);
  CHECK_THROWS_AS(ema_update(teacher, student, -0.1), ConfigError);
}

TEST_CASE("weight decay is decoupled from the gradient") {
  Rng rng(500);
  ad::Parameter p("p", randm(rng, 3, 3), 0);
  const Matrix before = p.value;

  AdamW::Options opt;
  opt.lr = 0.1;
  opt.weight_decay = 0.05;
  opt.warmup_frac = 0.0;
  opt.total_steps = 10;
  AdamW adam({&p}, opt);

  // Zero gradient: the parameter shrinks by exactly rate * wd * value.
  adam.zero_grad();
  const double rate = adam.current_rate(0);
  CHECK(rate == doctest::Approx(0.1 * 1.0).epsilon(1e-15));  // step 0, no warmup
  adam.step();
  CHECK((p.value - (before - rate * 0.05 * before)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("first update moves by roughly the signed rate") {
  Rng rng(501);
  ad::Parameter p("p", randm(rng, 2, 2), 0);
  const Matrix before = p.value;

  AdamW::Options opt;
  opt.lr = 0.01;
  opt.warmup_frac = 0.0;
  opt.total_steps = 100;
  AdamW adam({&p}, opt);

  p.grad = Matrix::Constant(2, 2, 2.0);
  adam.step();
  // mhat/vhat cancel to sign(g) up to the eps term on the first step.
  const Matrix delta = before - p.value;
  for (Eigen::Index i = 0; i < delta.size(); ++i) {
    CHECK(delta(i) == doctest::Approx(0.01).epsilon(1e-6));
  }
  CHECK(adam.steps_taken() == 1);
}

TEST_CASE("layer-wise rate scaling") {
  Rng rng(502);
  ad::Parameter low("low", randm(rng, 2, 2), 0);
  ad::Parameter mid("mid", randm(rng, 2, 2), 2);
  ad::Parameter top("top", randm(rng, 2, 2), 3);
  const Matrix low0 = low.value, top0 = top.value;

  AdamW::Options opt;
  opt.lr = 0.2;
  opt.weight_decay = 0.1;
  opt.layer_decay = 0.65;
  opt.warmup_frac = 0.0;
  opt.total_steps = 5;
  AdamW adam({&low, &mid, &top}, opt);

  CHECK(adam.current_rate(3) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(adam.current_rate(2) == doctest::Approx(0.2 * 0.65).epsilon(1e-15));
  CHECK(adam.current_rate(0) == doctest::Approx(0.2 * 0.65 * 0.65 * 0.65).epsilon(1e-15));

  // Decay-only step sizes inherit the same per-layer ratio exactly.
  adam.zero_grad();
  adam.step();
  const Matrix dlow = low0 - low.value;
  const Matrix dtop = top0 - top.value;
  for (Eigen::Index i = 0; i < dlow.size(); ++i) {
    CHECK(dlow(i) / low0(i) == doctest::Approx((dtop(i) / top0(i)) * 0.65 * 0.65 * 0.65)
                                   .epsilon(1e-12));
  }
}

TEST_CASE("frozen parameters do not move") {
  Rng rng(503);
  ad::Parameter a("img.patch.w", randm(rng, 2, 2), 0);
  ad::Parameter b("pcl.ge1.w", randm(rng, 2, 2), 0);
  AdamW::Options opt;
  opt.lr = 0.1;
  opt.weight_decay = 0.05;
  opt.warmup_frac = 0.0;
  opt.total_steps = 10;
  AdamW adam({&a, &b}, opt);
  adam.set_frozen([](const ad::Parameter& p) { return p.name.rfind("img.", 0) == 0; }, true);

  const Matrix a0 = a.value, b0 = b.value;
  a.grad = Matrix::Constant(2, 2, 1.0);
  b.grad = Matrix::Constant(2, 2, 1.0);
  adam.step();
  CHECK(a.value == a0);
  CHECK(b.value != b0);

  adam.set_frozen([](const ad::Parameter&) { return true; }, false);
  a.grad = Matrix::Constant(2, 2, 1.0);
  b.grad = Matrix::Constant(2, 2, 1.0);
  adam.step();
  CHECK(a.value != a0);
}

TEST_CASE("optimizer rejects invalid options") {
  Rng rng(504);
  ad::Parameter p("p", randm(rng, 2, 2), 0);
  AdamW::Options opt;
  opt.lr = -0.1;
  CHECK_THROWS_AS(AdamW({&p}, opt), ConfigError);
  opt.lr = 0.1;
  opt.layer_decay = 0.0;
  CHECK_THROWS_AS(AdamW({&p}, opt), ConfigError);
  opt.layer_decay = 1.0;
  CHECK_THROWS_AS(AdamW({}, opt), ConfigError);
}
