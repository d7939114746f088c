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
#include <deque>
#include <functional>
#include <string>
#include <vector>

namespace crossmost::ad {

using Matrix = Eigen::MatrixXd;

/// A named trainable tensor. Gradients accumulate into `grad` when a tape that
/// referenced the parameter runs backward. `layer_id` drives layer-wise
/// learning-rate decay (0 = input-most).
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  int layer_id = 0;

  Parameter() = default;
  Parameter(std::string n, Matrix v, int layer)
      : name(std::move(n)), value(std::move(v)), grad(Matrix::Zero(value.rows(), value.cols())),
        layer_id(layer) {}

  void zero_grad() { grad.setZero(); }
};

class Tape;

struct Node {
  Matrix value;
  Matrix grad;  // sized lazily on first accumulation
  Parameter* param = nullptr;
  std::function<void(Node&)> backward;
};

/// Value handle into a tape. Cheap to copy; valid while the tape lives.
struct Var {
  Node* node = nullptr;
  Tape* tape = nullptr;

  const Matrix& value() const { return node->value; }
  Eigen::Index rows() const { return node->value.rows(); }
  Eigen::Index cols() const { return node->value.cols(); }
};

/// Arena of one forward pass. Nodes are processed in reverse creation order
/// during backward, so every consumer's gradient lands before its producer's
/// backward runs. Construct with grad_enabled=false for inference-only passes
/// (no lambdas recorded, much lighter).
class Tape {
public:
  explicit Tape(bool grad_enabled = true) : grad_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool grad_enabled() const { return grad_; }
  std::size_t size() const { return nodes_.size(); }

  Var leaf(Parameter& p);
  Var constant(Matrix v);

  /// Seeds d(loss)/d(loss) = 1 (loss must be 1x1), sweeps the tape, then
  /// scatters leaf gradients into their Parameters.
  void backward(Var loss);

  /// Accumulated gradient of a node (valid after backward). Zero-sized if the
  /// node was never reached.
  const Matrix& grad_of(Var v) const { return v.node->grad; }

  Var make(Matrix value);

private:
  std::deque<Node> nodes_;
  bool grad_;
};

double item(Var v);

// Arithmetic
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var neg(Var a);
Var scale(Var a, double c);
Var add_scalar(Var a, double c);
Var mul(Var a, Var b);                      // elementwise
Var cmul(Var a, const Matrix& m);           // elementwise by constant
Var matmul(Var a, Var b);
Var matmul_nt(Var a, Var b);                // a * b^T
Var transpose(Var a);
Var linear(Var x, Var w, Var b);            // x*w + row-broadcast b (1 x out)

// Nonlinearities
Var relu(Var a);
Var gelu(Var a);
Var abs_elem(Var a);
Var log_clamped(Var a, double floor_val);

// Normalization / softmax
Var layer_norm(Var x, Var gamma, Var beta, double eps = 1e-5);
Var softmax_rows(Var x);
Var log_softmax_rows(Var x);
Var row_l2_normalize(Var x, double eps = 1e-12);

// Reductions
Var sum_all(Var a);
Var mean_all(Var a);
Var colwise_mean(Var a);  // B x C -> 1 x C

// Structure
Var gather_rows(Var a, std::vector<int> idx);
Var gather_cols_per_row(Var a, std::vector<int> cols);  // out(b,0) = a(b, cols[b])
Var tile_rows(Var a, int times);
Var broadcast_row(Var a, int rows);                     // 1 x d -> rows x d
Var prepend_cls(Var tokens, Var cls_rows, int seq_len); // per-sample [cls; tokens]
Var replace_rows(Var x, std::vector<int> rows, Var filler);  // filler is 1 x d
Var group_max(Var x, int group_size);                   // (N*G) x d -> N x d columnwise max

/// Block-diagonal multi-head scaled dot-product attention over row-packed
/// sequences: q/k/v are (batch*seq_len) x d, heads split d into equal slices.
Var sdp_attention(Var q, Var k, Var v, int batch, int seq_len, int n_heads);

}  // namespace crossmost::ad
