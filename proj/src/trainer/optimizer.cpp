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
#include "trainer/optimizer.hpp"

#include <cmath>
#include <utility>

#include "common/error.hpp"

namespace crossmost::train {

double lr_schedule(long step, long total_steps, double warmup_frac) {
  if (total_steps <= 0) throw ConfigError("optimizer: total_steps must be positive");
  if (step < 0 || step >= total_steps) throw ConfigError("optimizer: step outside schedule");
  if (warmup_frac < 0.0 || warmup_frac >= 1.0) {
    throw ConfigError("optimizer: warmup fraction must be in [0, 1)");
  }
  const long warm = static_cast<long>(warmup_frac * static_cast<double>(total_steps));
  if (step < warm) {
    return static_cast<double>(step + 1) / static_cast<double>(warm);
  }
  const double span = static_cast<double>(total_steps - warm);
  const double progress = static_cast<double>(step - warm) / span;
  return 0.5 * (1.0 + std::cos(M_PI * progress));
}

void ema_update(model::Model& teacher, const model::Model& student, double momentum) {
  if (momentum < 0.0 || momentum > 1.0) {
    throw ConfigError("optimizer: ema momentum must be in [0, 1]");
  }
  const auto& tp = teacher.parameters();
  const auto& sp = student.parameters();
  if (tp.size() != sp.size()) throw ConfigError("optimizer: ema model size mismatch");
  for (std::size_t i = 0; i < tp.size(); ++i) {
    if (tp[i]->value.rows() != sp[i]->value.rows() ||
        tp[i]->value.cols() != sp[i]->value.cols()) {
      throw ConfigError("optimizer: ema shape mismatch at " + tp[i]->name);
    }
    tp[i]->value = momentum * tp[i]->value + (1.0 - momentum) * sp[i]->value;
  }
}

AdamW::AdamW(std::vector<ad::Parameter*> params, Options opt)
    : params_(std::move(params)), opt_(opt) {
  if (opt_.lr < 0) throw ConfigError("optimizer: negative learning rate");
  if (opt_.layer_decay <= 0 || opt_.layer_decay > 1.0) {
    throw ConfigError("optimizer: layer decay must be in (0, 1]");
  }
  if (params_.empty()) throw ConfigError("optimizer: no parameters");
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (ad::Parameter* p : params_) {
    m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    top_layer_ = std::max(top_layer_, p->layer_id);
  }
  frozen_.assign(params_.size(), false);
}

double AdamW::current_rate(int layer_id) const {
  const double sched = lr_schedule(t_, opt_.total_steps, opt_.warmup_frac);
  return opt_.lr * sched * std::pow(opt_.layer_decay, top_layer_ - layer_id);
}

void AdamW::step() {
  const double b1t = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_ + 1));
  const double b2t = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_ + 1));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (frozen_[i]) continue;
    ad::Parameter& p = *params_[i];
    const double rate = current_rate(p.layer_id);
    if (p.grad.size() == 0) p.grad = Matrix::Zero(p.value.rows(), p.value.cols());
    m_[i] = opt_.beta1 * m_[i] + (1.0 - opt_.beta1) * p.grad;
    v_[i] = opt_.beta2 * v_[i] + (1.0 - opt_.beta2) * p.grad.cwiseProduct(p.grad);
    const Matrix mhat = m_[i] / b1t;
    const Matrix vhat = v_[i] / b2t;
    // Decay is decoupled: it scales the parameter directly, not the gradient.
    p.value -= rate * opt_.weight_decay * p.value;
    p.value -= rate * (mhat.array() / (vhat.array().sqrt() + opt_.eps)).matrix();
  }
  ++t_;
}

void AdamW::zero_grad() {
  for (ad::Parameter* p : params_) p->zero_grad();
}

void AdamW::set_frozen(const std::function<bool(const ad::Parameter&)>& pred, bool frozen) {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (pred(*params_[i])) frozen_[i] = frozen;
  }
}

}  // namespace crossmost::train
