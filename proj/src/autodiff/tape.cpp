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
#include "autodiff/tape.hpp"

#include <cmath>

#include "common/error.hpp"

namespace crossmost::ad {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

void accum(Node* n, const Matrix& g) {
  if (n->grad.size() == 0) {
    n->grad = g;
  } else {
    n->grad += g;
  }
}

void check(bool ok, const char* msg) {
  if (!ok) throw ConfigError(std::string("autodiff: ") + msg);
}

}  // namespace

Var Tape::make(Matrix value) {
  nodes_.emplace_back();
  nodes_.back().value = std::move(value);
  return Var{&nodes_.back(), this};
}

Var Tape::leaf(Parameter& p) {
  Var v = make(p.value);
  v.node->param = &p;
  return v;
}

Var Tape::constant(Matrix v) { return make(std::move(v)); }

void Tape::backward(Var loss) {
  check(grad_, "backward on a no-grad tape");
  check(loss.value().rows() == 1 && loss.value().cols() == 1, "loss must be 1x1");
  loss.node->grad = Matrix::Ones(1, 1);
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (it->grad.size() != 0 && it->backward) it->backward(*it);
  }
  for (Node& n : nodes_) {
    if (n.param != nullptr && n.grad.size() != 0) n.param->grad += n.grad;
  }
}

double item(Var v) {
  check(v.value().size() == 1, "item() on non-scalar");
  return v.value()(0, 0);
}

Var add(Var a, Var b) {
  check(a.rows() == b.rows() && a.cols() == b.cols(), "add: shape mismatch");
  Var out = a.tape->make(a.value() + b.value());
  if (a.tape->grad_enabled()) {
    Node* an = a.node;
    Node* bn = b.node;
    out.node->backward = [an, bn](Node& n) {
      accum(an, n.grad);
      accum(bn, n.grad);
    };
  }
  return out;
}

Var sub(Var a, Var b) {
  check(a.rows() == b.rows() && a.cols() == b.cols(), "sub: shape mismatch");
  Var out = a.tape->make(a.value() - b.value());
  if (a.tape->grad_enabled()) {
    Node* an = a.node;
    Node* bn = b.node;
    out.node->backward = [an, bn](Node& n) {
      accum(an, n.grad);
      accum(bn, Matrix(-n.grad));
    };
  }
  return out;
}

Var neg(Var a) { return scale(a, -1.0); }

Var scale(Var a, double c) {
  Var out = a.tape->make(a.value() * c);
  if (a.tape->grad_enabled()) {
    Node* an = a.node;
    out.node->backward = [an, c](Node& n) { accum(an, Matrix(n.grad * c)); };
  }
  return out;
}

Var add_scalar(Var a, double c) {
  Var out = a.tape->make(a.value().array() + c);
  if (a.tape->grad_enabled()) {
    Node* an = a.node;
    out.node->backward = [an](Node& n) { accum(an, n.grad); };
  }
  return out;
}

Var mul(Var a, Var b) {
  check(a.rows() == b.rows() && a.cols() == b.cols(), "mul: shape mismatch");
  Var out = a.tape->make(a.value().cwiseProduct(b.value()));
  if (a.tape->grad_enabled()) {
    Node* an = a.node;
    Node* bn = b.node;
    out.node->backward = [an, bn](Node& n) {
      accum(an, Matrix(n.grad.cwiseProduct(bn->value)));
      accum(bn, Matrix(n.grad.cwiseProduct(an->value)));
    };
  }
  return out;
}

Var cmul(Var a, const Matrix& m) {
  check(a.rows() == m.rows() && a.cols() == m.cols(), "cmul: shape mismatch");
  Var out = a.tape->make(a.value().cwiseProduct(m));
  if (a.tape->grad_enabled()) {
    Node* an = a.node;
    Matrix mc = m;
    out.node->backward = [an, mc](Node& n) { accum(an, Matrix(n.grad.cwiseProduct(mc))); };
  }
  return out;
}

Var matmul(Var a, Var b) {
  check(a.cols() == b.rows(), "matmul: inner dim mismatch");
  Var out = a.tape->make(a.value() * b.value());
  if (a.tape->grad_enabled()) {
    Node* an = a.node;
    Node* bn = b.node;
    out.node->backward = [an, bn](Node& n) {
      accum(an, Matrix(n.grad * bn->value.transpose()));
      accum(bn, Matrix(an->value.transpose() * n.grad));
    };
  }
  return out;
}

Var matmul_nt(Var a, Var b) {
  check(a.cols() == b.cols(), "matmul_nt: inner dim mismatch");
  Var out = a.tape->make(a.value() * b.value().transpose());
  if (a.tape->grad_enabled()) {
    Node* an = a.node;
    Node* bn = b.node;
    out.node->backward = [an, bn](Node& n) {
      accum(an, Matrix(n.grad * bn->value));
      accum(bn, Matrix(n.grad.transpose() * an->value));
    };
  }
  return out;
}

Var transpose(Var a) {
  Var out = a.tape->make(a.value().transpose());
  if (a.tape->grad_enabled()) {
    Node* an = a.node;
    out.node->backward = [an](Node& n) { accum(an, Matrix(n.grad.transpose())); };
  }
  return out;
}

Var linear(Var x, Var w, Var b) {
  check(x.cols() == w.rows(), "linear: inner dim mismatch");
  check(b.rows() == 1 && b.cols() == w.cols(), "linear: bias must be 1 x out");
  Matrix v = x.value() * w.value();
  v.rowwise() += b.value().row(0);
  Var out = x.tape->make(std::move(v));
  if (x.tape->grad_enabled()) {
    Node* xn = x.node;
    Node* wn = w.node;
    Node* bn = b.node;
    out.node->backward = [xn, wn, bn](Node& n) {
      accum(xn, Matrix(n.grad * wn->value.transpose()));
      accum(wn, Matrix(xn->value.transpose() * n.grad));
      accum(bn, Matrix(n.grad.colwise().sum()));
    };
  }
  return out;
}

Var relu(Var a) {
  Var out = a.tape->make(a.value().cwiseMax(0.0));
  if (a.tape->grad_enabled()) {
    Node* an = a.node;
    out.node->backward = [an](Node& n) {
      Matrix g = n.grad;
      for (Eigen::Index i = 0; i < g.size(); ++i) {
        if (an->value(i) <= 0.0) g(i) = 0.0;
      }
      accum(an, g);
    };
  }
  return out;
}

Var gelu(Var a) {
  Matrix v = a.value().unaryExpr(
      [](double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); });
  Var out = a.tape->make(std::move(v));
  if (a.tape->grad_enabled()) {
    Node* an = a.node;
    out.node->backward = [an](Node& n) {
      Matrix d = an->value.unaryExpr([](double x) {
        const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
        const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
        return cdf + x * pdf;
      });
      accum(an, Matrix(n.grad.cwiseProduct(d)));
    };
  }
  return out;
}

Var abs_elem(Var a) {
  Var out = a.tape->make(a.value().cwiseAbs());
  if (a.tape->grad_enabled()) {
    Node* an = a.node;
    out.node->backward = [an](Node& n) {
      Matrix s = an->value.unaryExpr(
          [](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
      accum(an, Matrix(n.grad.cwiseProduct(s)));
    };
  }
  return out;
}

Var log_clamped(Var a, double floor_val) {
  Matrix v = a.value().unaryExpr(
      [floor_val](double x) { return std::log(std::max(x, floor_val)); });
  Var out = a.tape->make(std::move(v));
  if (a.tape->grad_enabled()) {
    Node* an = a.node;
    out.node->backward = [an, floor_val](Node& n) {
      Matrix d = an->value.unaryExpr(
          [floor_val](double x) { return x > floor_val ? 1.0 / x : 0.0; });
      accum(an, Matrix(n.grad.cwiseProduct(d)));
    };
  }
  return out;
}

Var layer_norm(Var x, Var gamma, Var beta, double eps) {
  const Eigen::Index d = x.cols();
  check(gamma.rows() == 1 && gamma.cols() == d, "layer_norm: gamma must be 1 x d");
  check(beta.rows() == 1 && beta.cols() == d, "layer_norm: beta must be 1 x d");
  Matrix xhat(x.rows(), d);
  Eigen::VectorXd inv(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mean = x.value().row(r).mean();
    const double var =
        (x.value().row(r).array() - mean).square().sum() / static_cast<double>(d);
    inv(r) = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = (x.value().row(r).array() - mean) * inv(r);
  }
  Matrix v = xhat.array().rowwise() * gamma.value().row(0).array();
  v.rowwise() += beta.value().row(0);
  Var out = x.tape->make(std::move(v));
  if (x.tape->grad_enabled()) {
    Node* xn = x.node;
    Node* gn = gamma.node;
    Node* bn = beta.node;
    out.node->backward = [xn, gn, bn, xhat, inv, d](Node& n) {
      accum(bn, Matrix(n.grad.colwise().sum()));
      accum(gn, Matrix(n.grad.cwiseProduct(xhat).colwise().sum()));
      Matrix dx(n.grad.rows(), d);
      const double dd = static_cast<double>(d);
      for (Eigen::Index r = 0; r < n.grad.rows(); ++r) {
        Eigen::RowVectorXd dxhat =
            n.grad.row(r).array() * gn->value.row(0).array();
        const double s1 = dxhat.sum();
        const double s2 = (dxhat.array() * xhat.row(r).array()).sum();
        dx.row(r) =
            (dxhat.array() - s1 / dd - xhat.row(r).array() * s2 / dd) * inv(r);
      }
      accum(xn, dx);
    };
  }
  return out;
}

Var softmax_rows(Var x) {
  Matrix y(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    Eigen::RowVectorXd e = (x.value().row(r).array() - x.value().row(r).maxCoeff()).exp();
    y.row(r) = e / e.sum();
  }
  Var out = x.tape->make(std::move(y));
  if (x.tape->grad_enabled()) {
    Node* xn = x.node;
    out.node->backward = [xn](Node& n) {
      Matrix dx(n.grad.rows(), n.grad.cols());
      for (Eigen::Index r = 0; r < n.grad.rows(); ++r) {
        const double dot = n.grad.row(r).dot(n.value.row(r));
        dx.row(r) = n.value.row(r).array() * (n.grad.row(r).array() - dot);
      }
      accum(xn, dx);
    };
  }
  return out;
}

Var log_softmax_rows(Var x) {
  Matrix y(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double m = x.value().row(r).maxCoeff();
    const double lse = m + std::log((x.value().row(r).array() - m).exp().sum());
    y.row(r) = x.value().row(r).array() - lse;
  }
  Var out = x.tape->make(std::move(y));
  if (x.tape->grad_enabled()) {
    Node* xn = x.node;
    out.node->backward = [xn](Node& n) {
      Matrix dx(n.grad.rows(), n.grad.cols());
      for (Eigen::Index r = 0; r < n.grad.rows(); ++r) {
        const double gsum = n.grad.row(r).sum();
        dx.row(r) = n.grad.row(r).array() - n.value.row(r).array().exp() * gsum;
      }
      accum(xn, dx);
    };
  }
  return out;
}

Var row_l2_normalize(Var x, double eps) {
  Matrix y(x.rows(), x.cols());
  Eigen::VectorXd norms(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    norms(r) = std::max(x.value().row(r).norm(), eps);
    y.row(r) = x.value().row(r) / norms(r);
  }
  Var out = x.tape->make(std::move(y));
  if (x.tape->grad_enabled()) {
    Node* xn = x.node;
    out.node->backward = [xn, norms](Node& n) {
      Matrix dx(n.grad.rows(), n.grad.cols());
      for (Eigen::Index r = 0; r < n.grad.rows(); ++r) {
        const double dot = n.grad.row(r).dot(n.value.row(r));
        dx.row(r) = (n.grad.row(r) - n.value.row(r) * dot) / norms(r);
      }
      accum(xn, dx);
    };
  }
  return out;
}

Var sum_all(Var a) {
  Var out = a.tape->make(Matrix::Constant(1, 1, a.value().sum()));
  if (a.tape->grad_enabled()) {
    Node* an = a.node;
    out.node->backward = [an](Node& n) {
      accum(an, Matrix(Matrix::Constant(an->value.rows(), an->value.cols(), n.grad(0, 0))));
    };
  }
  return out;
}

Var mean_all(Var a) {
  const double inv = 1.0 / static_cast<double>(a.value().size());
  Var out = a.tape->make(Matrix::Constant(1, 1, a.value().sum() * inv));
  if (a.tape->grad_enabled()) {
    Node* an = a.node;
    out.node->backward = [an, inv](Node& n) {
      accum(an,
            Matrix(Matrix::Constant(an->value.rows(), an->value.cols(), n.grad(0, 0) * inv)));
    };
  }
  return out;
}

Var colwise_mean(Var a) {
  Var out = a.tape->make(a.value().colwise().mean());
  if (a.tape->grad_enabled()) {
    Node* an = a.node;
    const double inv = 1.0 / static_cast<double>(a.rows());
    out.node->backward = [an, inv](Node& n) {
      Matrix g(an->value.rows(), an->value.cols());
      g.rowwise() = n.grad.row(0) * inv;
      accum(an, g);
    };
  }
  return out;
}

Var gather_rows(Var a, std::vector<int> idx) {
  Matrix v(static_cast<Eigen::Index>(idx.size()), a.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    check(idx[i] >= 0 && idx[i] < a.rows(), "gather_rows: index out of range");
    v.row(static_cast<Eigen::Index>(i)) = a.value().row(idx[i]);
  }
  Var out = a.tape->make(std::move(v));
  if (a.tape->grad_enabled()) {
    Node* an = a.node;
    out.node->backward = [an, idx](Node& n) {
      Matrix g = Matrix::Zero(an->value.rows(), an->value.cols());
      for (std::size_t i = 0; i < idx.size(); ++i) {
        g.row(idx[i]) += n.grad.row(static_cast<Eigen::Index>(i));
      }
      accum(an, g);
    };
  }
  return out;
}

Var gather_cols_per_row(Var a, std::vector<int> cols) {
  check(static_cast<Eigen::Index>(cols.size()) == a.rows(),
        "gather_cols_per_row: needs one column per row");
  Matrix v(a.rows(), 1);
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    check(cols[static_cast<std::size_t>(r)] >= 0 &&
              cols[static_cast<std::size_t>(r)] < a.cols(),
          "gather_cols_per_row: column out of range");
    v(r, 0) = a.value()(r, cols[static_cast<std::size_t>(r)]);
  }
  Var out = a.tape->make(std::move(v));
  if (a.tape->grad_enabled()) {
    Node* an = a.node;
    out.node->backward = [an, cols](Node& n) {
      Matrix g = Matrix::Zero(an->value.rows(), an->value.cols());
      for (Eigen::Index r = 0; r < g.rows(); ++r) {
        g(r, cols[static_cast<std::size_t>(r)]) = n.grad(r, 0);
      }
      accum(an, g);
    };
  }
  return out;
}

Var tile_rows(Var a, int times) {
  const Eigen::Index r = a.rows();
  Matrix v(r * times, a.cols());
  for (int t = 0; t < times; ++t) v.middleRows(t * r, r) = a.value();
  Var out = a.tape->make(std::move(v));
  if (a.tape->grad_enabled()) {
    Node* an = a.node;
    out.node->backward = [an, times, r](Node& n) {
      Matrix g = Matrix::Zero(r, an->value.cols());
      for (int t = 0; t < times; ++t) g += n.grad.middleRows(t * r, r);
      accum(an, g);
    };
  }
  return out;
}

Var broadcast_row(Var a, int rows) {
  check(a.rows() == 1, "broadcast_row: input must be 1 x d");
  Matrix v(rows, a.cols());
  v.rowwise() = a.value().row(0);
  Var out = a.tape->make(std::move(v));
  if (a.tape->grad_enabled()) {
    Node* an = a.node;
    out.node->backward = [an](Node& n) { accum(an, Matrix(n.grad.colwise().sum())); };
  }
  return out;
}

Var prepend_cls(Var tokens, Var cls_rows, int seq_len) {
  check(tokens.rows() % seq_len == 0, "prepend_cls: tokens not divisible by seq_len");
  const int batch = static_cast<int>(tokens.rows()) / seq_len;
  check(cls_rows.rows() == batch, "prepend_cls: one cls row per sample required");
  const Eigen::Index d = tokens.cols();
  Matrix v(static_cast<Eigen::Index>(batch) * (seq_len + 1), d);
  for (int b = 0; b < batch; ++b) {
    v.row(static_cast<Eigen::Index>(b) * (seq_len + 1)) = cls_rows.value().row(b);
    v.middleRows(static_cast<Eigen::Index>(b) * (seq_len + 1) + 1, seq_len) =
        tokens.value().middleRows(static_cast<Eigen::Index>(b) * seq_len, seq_len);
  }
  Var out = tokens.tape->make(std::move(v));
  if (tokens.tape->grad_enabled()) {
    Node* tn = tokens.node;
    Node* cn = cls_rows.node;
    out.node->backward = [tn, cn, batch, seq_len, d](Node& n) {
      Matrix gt(static_cast<Eigen::Index>(batch) * seq_len, d);
      Matrix gc(batch, d);
      for (int b = 0; b < batch; ++b) {
        gc.row(b) = n.grad.row(static_cast<Eigen::Index>(b) * (seq_len + 1));
        gt.middleRows(static_cast<Eigen::Index>(b) * seq_len, seq_len) =
            n.grad.middleRows(static_cast<Eigen::Index>(b) * (seq_len + 1) + 1, seq_len);
      }
      accum(tn, gt);
      accum(cn, gc);
    };
  }
  return out;
}

Var replace_rows(Var x, std::vector<int> rows, Var filler) {
  check(filler.rows() == 1 && filler.cols() == x.cols(), "replace_rows: filler must be 1 x d");
  Matrix v = x.value();
  for (int r : rows) {
    check(r >= 0 && r < x.rows(), "replace_rows: row out of range");
    v.row(r) = filler.value().row(0);
  }
  Var out = x.tape->make(std::move(v));
  if (x.tape->grad_enabled()) {
    Node* xn = x.node;
    Node* fn = filler.node;
    out.node->backward = [xn, fn, rows](Node& n) {
      Matrix gx = n.grad;
      Matrix gf = Matrix::Zero(1, n.grad.cols());
      for (int r : rows) {
        gf.row(0) += n.grad.row(r);
        gx.row(r).setZero();
      }
      accum(xn, gx);
      accum(fn, gf);
    };
  }
  return out;
}

Var group_max(Var x, int group_size) {
  check(x.rows() % group_size == 0, "group_max: rows not divisible by group size");
  const Eigen::Index n_groups = x.rows() / group_size;
  const Eigen::Index d = x.cols();
  Matrix v(n_groups, d);
  std::vector<int> argmax(static_cast<std::size_t>(n_groups * d));
  for (Eigen::Index gidx = 0; gidx < n_groups; ++gidx) {
    for (Eigen::Index c = 0; c < d; ++c) {
      Eigen::Index best = gidx * group_size;
      double bestv = x.value()(best, c);
      for (int k = 1; k < group_size; ++k) {
        const Eigen::Index r = gidx * group_size + k;
        if (x.value()(r, c) > bestv) {
          bestv = x.value()(r, c);
          best = r;
        }
      }
      v(gidx, c) = bestv;
      argmax[static_cast<std::size_t>(gidx * d + c)] = static_cast<int>(best);
    }
  }
  Var out = x.tape->make(std::move(v));
  if (x.tape->grad_enabled()) {
    Node* xn = x.node;
    out.node->backward = [xn, argmax, d](Node& n) {
      Matrix g = Matrix::Zero(xn->value.rows(), xn->value.cols());
      for (Eigen::Index gidx = 0; gidx < n.grad.rows(); ++gidx) {
        for (Eigen::Index c = 0; c < d; ++c) {
          g(argmax[static_cast<std::size_t>(gidx * d + c)], c) += n.grad(gidx, c);
        }
      }
      accum(xn, g);
    };
  }
  return out;
}

Var sdp_attention(Var q, Var k, Var v, int batch, int seq_len, int n_heads) {
  const Eigen::Index d = q.cols();
  check(d % n_heads == 0, "sdp_attention: d_model not divisible by heads");
  check(q.rows() == static_cast<Eigen::Index>(batch) * seq_len, "sdp_attention: bad q rows");
  const Eigen::Index dh = d / n_heads;
  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));
  Matrix out_v(q.rows(), d);
  std::vector<Matrix> attn;
  const bool grad = q.tape->grad_enabled();
  if (grad) attn.reserve(static_cast<std::size_t>(batch) * n_heads);
  for (int b = 0; b < batch; ++b) {
    const Eigen::Index r0 = static_cast<Eigen::Index>(b) * seq_len;
    for (int h = 0; h < n_heads; ++h) {
      const Eigen::Index c0 = static_cast<Eigen::Index>(h) * dh;
      Matrix scores = q.value().block(r0, c0, seq_len, dh) *
                      k.value().block(r0, c0, seq_len, dh).transpose() * inv_sqrt_dh;
      for (Eigen::Index r = 0; r < seq_len; ++r) {
        Eigen::RowVectorXd e = (scores.row(r).array() - scores.row(r).maxCoeff()).exp();
        scores.row(r) = e / e.sum();
      }
      out_v.block(r0, c0, seq_len, dh) = scores * v.value().block(r0, c0, seq_len, dh);
      if (grad) attn.push_back(std::move(scores));
    }
  }
  Var out = q.tape->make(std::move(out_v));
  if (grad) {
    Node* qn = q.node;
    Node* kn = k.node;
    Node* vn = v.node;
    out.node->backward = [qn, kn, vn, attn, batch, seq_len, n_heads, dh,
                          inv_sqrt_dh](Node& n) {
      Matrix gq = Matrix::Zero(qn->value.rows(), qn->value.cols());
      Matrix gk = Matrix::Zero(gq.rows(), gq.cols());
      Matrix gv = Matrix::Zero(gq.rows(), gq.cols());
      for (int b = 0; b < batch; ++b) {
        const Eigen::Index r0 = static_cast<Eigen::Index>(b) * seq_len;
        for (int h = 0; h < n_heads; ++h) {
          const Eigen::Index c0 = static_cast<Eigen::Index>(h) * dh;
          const Matrix& a = attn[static_cast<std::size_t>(b) * n_heads + h];
          Matrix dout = n.grad.block(r0, c0, seq_len, dh);
          gv.block(r0, c0, seq_len, dh) = a.transpose() * dout;
          Matrix da = dout * vn->value.block(r0, c0, seq_len, dh).transpose();
          Matrix ds(seq_len, seq_len);
          for (Eigen::Index r = 0; r < seq_len; ++r) {
            const double dot = da.row(r).dot(a.row(r));
            ds.row(r) = a.row(r).array() * (da.row(r).array() - dot);
          }
          gq.block(r0, c0, seq_len, dh) =
              ds * kn->value.block(r0, c0, seq_len, dh) * inv_sqrt_dh;
          gk.block(r0, c0, seq_len, dh) =
              ds.transpose() * qn->value.block(r0, c0, seq_len, dh) * inv_sqrt_dh;
        }
      }
      accum(qn, gq);
      accum(kn, gk);
      accum(vn, gv);
    };
  }
  return out;
}

}  // namespace crossmost::ad
