#pragma once

#include <algorithm>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "nsp/placement.hpp"

namespace nsp {

class Psn;

/// Row-major dense matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }
  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Symmetric-normalized propagation matrix D^-1/2 (A + I) D^-1/2 of an
/// undirected graph, stored sparse.
class Propagation {
 public:
  Propagation() = default;
  Propagation(std::size_t nodes, std::vector<std::pair<NodeId, NodeId>> edges);
  static Propagation from_psn(const Psn& psn);

  std::size_t nodes() const { return nodes_; }
  std::span<const std::pair<NodeId, NodeId>> edges() const { return edges_; }

  /// out = P * h (out is resized).
  void apply(const Matrix& h, Matrix& out) const;
  Matrix dense() const;

 private:
  std::size_t nodes_ = 0;
  std::vector<std::pair<NodeId, NodeId>> edges_;
  std::vector<std::size_t> row_start_;
  std::vector<std::size_t> col_;
  std::vector<double> val_;
};

enum class Activation : std::uint32_t { Tanh = 0, Relu = 1 };

/// Shape of an actor or critic network.
///
/// node features -> `gcn_depth` graph-convolution layers of `gcn_width`
/// -> flatten; NSPR features -> dense(`nspr_units`); concatenated vector of
/// width gcn_width * nodes + nspr_units -> dense(nodes). The actor emits
/// those `nodes` scores linearly; the critic applies the activation and
/// adds one linear output neuron.
struct NetSpec {
  std::size_t nodes = 0;
  std::size_t node_features = 4;
  std::size_t nspr_features = 4;
  std::size_t gcn_width = 60;
  std::size_t gcn_depth = 3;
  std::size_t nspr_units = 4;
  Activation activation = Activation::Tanh;
  bool value_head = false;

  std::size_t head_inputs() const { return gcn_width * nodes + nspr_units; }
  std::size_t outputs() const { return value_head ? 1 : nodes; }
  bool operator==(const NetSpec&) const = default;
};

NetSpec actor_spec(std::size_t nodes, std::size_t gcn_width = 60, std::size_t gcn_depth = 3);
NetSpec critic_spec(std::size_t nodes, std::size_t gcn_width = 60, std::size_t gcn_depth = 3);

struct Features {
  Matrix nodes;               ///< |N| x node_features
  std::vector<double> nspr;   ///< nspr_features
};

/// Activations kept from a forward pass for the backward pass.
struct Trace {
  std::vector<Matrix> propagated;  ///< P * H_l, input of each GCN layer's weights
  std::vector<Matrix> hidden;      ///< H_{l+1} after activation
  std::vector<double> nspr_hidden;
  std::vector<double> concat;
  std::vector<double> head;        ///< head layer output (activated for the critic)
  std::vector<double> output;
};

/// GCN encoding alone: `weights` / `biases` per layer, H <- act(P H W + b).
Matrix gcn_forward(const Matrix& node_features, const Propagation& prop, std::span<const Matrix> weights,
                   std::span<const Matrix> biases, Activation act);

class Network {
 public:
  Network() = default;
  /// Weights uniform in +-1/sqrt(fan_in) from `seed`, biases zero.
  Network(NetSpec spec, Propagation prop, std::uint64_t seed);
  /// Takes ownership of existing parameters (checkpoint restore).
  Network(NetSpec spec, Propagation prop, std::vector<Matrix> params);

  const NetSpec& spec() const { return spec_; }
  const Propagation& propagation() const { return prop_; }
  std::vector<Matrix>& params() { return params_; }
  const std::vector<Matrix>& params() const { return params_; }

  // Parameter layout: [W_0, b_0, ..., W_{K-1}, b_{K-1}, W_nspr, b_nspr,
  // W_head, b_head, (W_value, b_value)]. GCN weights are in x out, dense
  // weights out x in, biases 1 x out.
  std::size_t gcn_weight(std::size_t layer) const { return 2 * layer; }
  std::size_t gcn_bias(std::size_t layer) const { return 2 * layer + 1; }
  std::size_t nspr_weight() const { return 2 * spec_.gcn_depth; }
  std::size_t nspr_bias() const { return nspr_weight() + 1; }
  std::size_t head_weight() const { return nspr_weight() + 2; }
  std::size_t head_bias() const { return nspr_weight() + 3; }
  std::size_t value_weight() const { return nspr_weight() + 4; }
  std::size_t value_bias() const { return nspr_weight() + 5; }

  Trace forward(const Features& x) const;
  /// Graph embedding (|N| x gcn_width) for node features.
  Matrix embed(const Matrix& node_features) const;

  /// Adds d(loss)/d(params) to `grads` given d(loss)/d(output).
  void backward(const Features& x, const Trace& trace, std::span<const double> d_output,
                std::vector<Matrix>& grads) const;

  std::vector<Matrix> zero_grads() const;
  std::size_t parameter_count() const;

 private:
  void check_features(const Features& x) const;

  NetSpec spec_;
  Propagation prop_;
  std::vector<Matrix> params_;
};

/// pi(a) = exp(z_a) / sum_b exp(z_b), computed with the max shifted out.
std::vector<double> softmax(std::span<const double> z);

double global_norm(const std::vector<Matrix>& grads);
/// Rescales so the global L2 norm is at most `max_norm`; returns the norm
/// before clipping.
double clip_global_norm(std::vector<Matrix>& grads, double max_norm);

class Adam {
 public:
  Adam() = default;
  Adam(const std::vector<Matrix>& params, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  void step(std::vector<Matrix>& params, const std::vector<Matrix>& grads);
  double learning_rate() const { return lr_; }
  std::int64_t steps() const { return t_; }

 private:
  double lr_ = 1e-3;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  std::int64_t t_ = 0;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
};

/// Binary checkpoint, little-endian:
///   char[8]  "NSPCKPT\0"
///   u32      format version (1)
///   u32      activation (0 tanh, 1 relu)
///   u32      value head (0/1)
///   u64 x 6  nodes, node_features, nspr_features, gcn_width, gcn_depth, nspr_units
///   u64      edge count, then per edge u32 a, u32 b
///   u64      tensor count, then per tensor u64 rows, u64 cols, f64[rows*cols]
void save_checkpoint(std::ostream& out, const Network& net);
/// Throws std::runtime_error on malformed input.
Network load_checkpoint(std::istream& in);

}  // namespace nsp
