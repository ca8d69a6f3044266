#include "nsp/neural.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "nsp/kernels.hpp"
#include "nsp/rng.hpp"
#include "nsp/topology.hpp"

namespace nsp {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

Propagation::Propagation(std::size_t nodes, std::vector<std::pair<NodeId, NodeId>> edges)
    : nodes_(nodes), edges_(std::move(edges)) {
  std::vector<std::vector<std::size_t>> adj(nodes);
  for (const auto& [a, b] : edges_) {
    if (a < 0 || b < 0 || static_cast<std::size_t>(a) >= nodes || static_cast<std::size_t>(b) >= nodes || a == b) {
      throw std::invalid_argument("propagation edge out of range or self-loop");
    }
    adj[static_cast<std::size_t>(a)].push_back(static_cast<std::size_t>(b));
    adj[static_cast<std::size_t>(b)].push_back(static_cast<std::size_t>(a));
  }
  std::vector<double> inv_sqrt_deg(nodes);
  for (std::size_t i = 0; i < nodes; ++i) {
    std::sort(adj[i].begin(), adj[i].end());
    inv_sqrt_deg[i] = 1.0 / std::sqrt(static_cast<double>(adj[i].size() + 1));
  }
  row_start_.assign(nodes + 1, 0);
  for (std::size_t i = 0; i < nodes; ++i) {
    // Self loop merged in id order with the neighbours.
    std::vector<std::size_t> cols = adj[i];
    cols.insert(std::lower_bound(cols.begin(), cols.end(), i), i);
    for (const std::size_t j : cols) {
      col_.push_back(j);
      val_.push_back(inv_sqrt_deg[i] * inv_sqrt_deg[j]);
    }
    row_start_[i + 1] = col_.size();
  }
}

Propagation Propagation::from_psn(const Psn& psn) {
  std::vector<std::pair<NodeId, NodeId>> edges;
  edges.reserve(psn.link_count());
  for (const auto& l : psn.links()) edges.emplace_back(l.a, l.b);
  return Propagation(psn.node_count(), std::move(edges));
}

void Propagation::apply(const Matrix& h, Matrix& out) const {
  if (h.rows() != nodes_) throw std::invalid_argument("propagation: row count does not match graph size");
  out = Matrix(nodes_, h.cols());
  const auto& k = kernels::current();
  for (std::size_t i = 0; i < nodes_; ++i) {
    double* dst = out.data() + i * h.cols();
    for (std::size_t e = row_start_[i]; e < row_start_[i + 1]; ++e) {
      k.axpy(val_[e], h.data() + col_[e] * h.cols(), dst, h.cols());
    }
  }
}

Matrix Propagation::dense() const {
  Matrix m(nodes_, nodes_);
  for (std::size_t i = 0; i < nodes_; ++i) {
    for (std::size_t e = row_start_[i]; e < row_start_[i + 1]; ++e) m(i, col_[e]) = val_[e];
  }
  return m;
}

NetSpec actor_spec(std::size_t nodes, std::size_t gcn_width, std::size_t gcn_depth) {
  NetSpec s;
  s.nodes = nodes;
  s.gcn_width = gcn_width;
  s.gcn_depth = gcn_depth;
  s.activation = Activation::Tanh;
  s.value_head = false;
  return s;
}

NetSpec critic_spec(std::size_t nodes, std::size_t gcn_width, std::size_t gcn_depth) {
  NetSpec s = actor_spec(nodes, gcn_width, gcn_depth);
  s.activation = Activation::Relu;
  s.value_head = true;
  return s;
}

namespace {

inline double activate(Activation act, double x) {
  return act == Activation::Tanh ? std::tanh(x) : (x > 0.0 ? x : 0.0);
}

/// Derivative expressed through the activation's output.
inline double activate_grad(Activation act, double y) {
  return act == Activation::Tanh ? 1.0 - y * y : (y > 0.0 ? 1.0 : 0.0);
}

void gcn_layer(const Matrix& h, const Propagation& prop, const Matrix& w, const Matrix& b, Activation act,
               Matrix& propagated, Matrix& out) {
  if (w.rows() != h.cols() || b.cols() != w.cols()) throw std::invalid_argument("gcn layer: dimension mismatch");
  prop.apply(h, propagated);
  out = Matrix(h.rows(), w.cols());
  for (std::size_t i = 0; i < out.rows(); ++i) std::copy(b.data(), b.data() + b.cols(), out.row(i).begin());
  kernels::current().gemm_nn(h.rows(), w.cols(), w.rows(), propagated.data(), w.data(), out.data());
  for (auto& v : out.values()) v = activate(act, v);
}

}  // namespace

Matrix gcn_forward(const Matrix& node_features, const Propagation& prop, std::span<const Matrix> weights,
                   std::span<const Matrix> biases, Activation act) {
  if (weights.size() != biases.size() || weights.empty()) throw std::invalid_argument("gcn: need K >= 1 layers");
  Matrix h = node_features;
  Matrix propagated;
  Matrix next;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    gcn_layer(h, prop, weights[l], biases[l], act, propagated, next);
    h = std::move(next);
  }
  return h;
}

Network::Network(NetSpec spec, Propagation prop, std::uint64_t seed) : spec_(spec), prop_(std::move(prop)) {
  if (spec_.gcn_depth < 1) throw std::invalid_argument("gcn depth must be >= 1");
  if (prop_.nodes() != spec_.nodes) throw std::invalid_argument("propagation size does not match spec");
  Rng rng(seed);
  auto uniform_init = [&rng](std::size_t rows, std::size_t cols, std::size_t fan_in) {
    Matrix m(rows, cols);
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (auto& v : m.values()) v = (2.0 * rng.uniform() - 1.0) * bound;
    return m;
  };

  std::size_t in = spec_.node_features;
  for (std::size_t l = 0; l < spec_.gcn_depth; ++l) {
    params_.push_back(uniform_init(in, spec_.gcn_width, in));
    params_.emplace_back(1, spec_.gcn_width);
    in = spec_.gcn_width;
  }
  params_.push_back(uniform_init(spec_.nspr_units, spec_.nspr_features, spec_.nspr_features));
  params_.emplace_back(1, spec_.nspr_units);
  params_.push_back(uniform_init(spec_.nodes, spec_.head_inputs(), spec_.head_inputs()));
  params_.emplace_back(1, spec_.nodes);
  if (spec_.value_head) {
    params_.push_back(uniform_init(1, spec_.nodes, spec_.nodes));
    params_.emplace_back(1, 1);
  }
}

Network::Network(NetSpec spec, Propagation prop, std::vector<Matrix> params)
    : spec_(spec), prop_(std::move(prop)), params_(std::move(params)) {
  const Network shape(spec_, prop_, 0);
  if (shape.params_.size() != params_.size()) throw std::invalid_argument("parameter count does not match spec");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (!shape.params_[i].same_shape(params_[i])) throw std::invalid_argument("parameter shape does not match spec");
  }
}

void Network::check_features(const Features& x) const {
  if (x.nodes.rows() != spec_.nodes || x.nodes.cols() != spec_.node_features) {
    throw std::invalid_argument("node features have the wrong shape");
  }
  if (x.nspr.size() != spec_.nspr_features) throw std::invalid_argument("NSPR features have the wrong width");
}

Matrix Network::embed(const Matrix& node_features) const {
  std::vector<Matrix> w;
  std::vector<Matrix> b;
  for (std::size_t l = 0; l < spec_.gcn_depth; ++l) {
    w.push_back(params_[gcn_weight(l)]);
    b.push_back(params_[gcn_bias(l)]);
  }
  return gcn_forward(node_features, prop_, w, b, spec_.activation);
}

Trace Network::forward(const Features& x) const {
  check_features(x);
  const auto& k = kernels::current();
  const Activation act = spec_.activation;
  Trace t;
  t.propagated.resize(spec_.gcn_depth);
  t.hidden.resize(spec_.gcn_depth);

  const Matrix* h = &x.nodes;
  for (std::size_t l = 0; l < spec_.gcn_depth; ++l) {
    gcn_layer(*h, prop_, params_[gcn_weight(l)], params_[gcn_bias(l)], act, t.propagated[l], t.hidden[l]);
    h = &t.hidden[l];
  }

  const Matrix& wn = params_[nspr_weight()];
  const Matrix& bn = params_[nspr_bias()];
  t.nspr_hidden.resize(spec_.nspr_units);
  for (std::size_t u = 0; u < spec_.nspr_units; ++u) {
    t.nspr_hidden[u] = activate(act, bn(0, u) + k.dot(wn.row(u).data(), x.nspr.data(), spec_.nspr_features));
  }

  t.concat.resize(spec_.head_inputs());
  std::copy(h->data(), h->data() + h->size(), t.concat.begin());
  std::copy(t.nspr_hidden.begin(), t.nspr_hidden.end(), t.concat.begin() + static_cast<std::ptrdiff_t>(h->size()));

  const Matrix& wh = params_[head_weight()];
  const Matrix& bh = params_[head_bias()];
  t.head.resize(spec_.nodes);
  for (std::size_t r = 0; r < spec_.nodes; ++r) {
    t.head[r] = bh(0, r) + k.dot(wh.row(r).data(), t.concat.data(), t.concat.size());
  }

  if (spec_.value_head) {
    for (auto& v : t.head) v = activate(act, v);
    const Matrix& wv = params_[value_weight()];
    t.output = {params_[value_bias()](0, 0) + k.dot(wv.data(), t.head.data(), t.head.size())};
  } else {
    t.output = t.head;
  }
  return t;
}

void Network::backward(const Features& x, const Trace& t, std::span<const double> d_output,
                       std::vector<Matrix>& grads) const {
  check_features(x);
  if (d_output.size() != spec_.outputs()) throw std::invalid_argument("output gradient has the wrong width");
  if (grads.size() != params_.size()) throw std::invalid_argument("gradient store does not match parameters");
  const auto& k = kernels::current();
  const Activation act = spec_.activation;

  std::vector<double> d_head(spec_.nodes);
  if (spec_.value_head) {
    const double dv = d_output[0];
    const Matrix& wv = params_[value_weight()];
    k.axpy(dv, t.head.data(), grads[value_weight()].data(), spec_.nodes);
    grads[value_bias()](0, 0) += dv;
    for (std::size_t r = 0; r < spec_.nodes; ++r) d_head[r] = dv * wv(0, r) * activate_grad(act, t.head[r]);
  } else {
    std::copy(d_output.begin(), d_output.end(), d_head.begin());
  }

  const Matrix& wh = params_[head_weight()];
  Matrix& gwh = grads[head_weight()];
  Matrix& gbh = grads[head_bias()];
  std::vector<double> d_concat(spec_.head_inputs(), 0.0);
  for (std::size_t r = 0; r < spec_.nodes; ++r) {
    if (d_head[r] == 0.0) continue;
    k.axpy(d_head[r], t.concat.data(), gwh.row(r).data(), t.concat.size());
    k.axpy(d_head[r], wh.row(r).data(), d_concat.data(), d_concat.size());
    gbh(0, r) += d_head[r];
  }

  const std::size_t graph_width = spec_.gcn_width * spec_.nodes;
  Matrix& gwn = grads[nspr_weight()];
  Matrix& gbn = grads[nspr_bias()];
  for (std::size_t u = 0; u < spec_.nspr_units; ++u) {
    const double d_pre = d_concat[graph_width + u] * activate_grad(act, t.nspr_hidden[u]);
    if (d_pre == 0.0) continue;
    k.axpy(d_pre, x.nspr.data(), gwn.row(u).data(), spec_.nspr_features);
    gbn(0, u) += d_pre;
  }

  Matrix d_h(spec_.nodes, spec_.gcn_width);
  std::copy(d_concat.begin(), d_concat.begin() + static_cast<std::ptrdiff_t>(graph_width), d_h.data());
  for (std::size_t l = spec_.gcn_depth; l-- > 0;) {
    const Matrix& out = t.hidden[l];
    Matrix d_pre(out.rows(), out.cols());
    for (std::size_t i = 0; i < out.size(); ++i) d_pre.data()[i] = d_h.data()[i] * activate_grad(act, out.data()[i]);

    const Matrix& w = params_[gcn_weight(l)];
    const Matrix& p = t.propagated[l];
    // dW += P^T dQ, db += column sums of dQ
    k.gemm_tn(w.rows(), w.cols(), spec_.nodes, p.data(), d_pre.data(), grads[gcn_weight(l)].data());
    Matrix& gb = grads[gcn_bias(l)];
    for (std::size_t i = 0; i < d_pre.rows(); ++i) k.axpy(1.0, d_pre.row(i).data(), gb.data(), gb.cols());

    if (l == 0) break;
    // dP = dQ W^T, then dH = P^T dP (P is symmetric).
    Matrix d_prop(spec_.nodes, w.rows());
    k.gemm_nt(spec_.nodes, w.rows(), w.cols(), d_pre.data(), w.data(), d_prop.data());
    prop_.apply(d_prop, d_h);
  }
}

std::vector<Matrix> Network::zero_grads() const {
  std::vector<Matrix> g;
  g.reserve(params_.size());
  for (const auto& p : params_) g.emplace_back(p.rows(), p.cols());
  return g;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.size();
  return n;
}

std::vector<double> softmax(std::span<const double> z) {
  std::vector<double> p(z.size());
  if (z.empty()) return p;
  const double top = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    p[i] = std::exp(z[i] - top);
    sum += p[i];
  }
  for (auto& v : p) v /= sum;
  return p;
}

double global_norm(const std::vector<Matrix>& grads) {
  double sq = 0.0;
  const auto& k = kernels::current();
  for (const auto& g : grads) sq += k.dot(g.data(), g.data(), g.size());
  return std::sqrt(sq);
}

double clip_global_norm(std::vector<Matrix>& grads, double max_norm) {
  const double norm = global_norm(grads);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto& g : grads) {
      for (auto& v : g.values()) v *= scale;
    }
  }
  return norm;
}

Adam::Adam(const std::vector<Matrix>& params, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& p : params) {
    m_.emplace_back(p.rows(), p.cols());
    v_.emplace_back(p.rows(), p.cols());
  }
}

void Adam::step(std::vector<Matrix>& params, const std::vector<Matrix>& grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) throw std::invalid_argument("adam: shape mismatch");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  const double step = lr_ * std::sqrt(c2) / c1;
  for (std::size_t i = 0; i < params.size(); ++i) {
    double* p = params[i].data();
    double* m = m_[i].data();
    double* v = v_[i].data();
    const double* g = grads[i].data();
    for (std::size_t j = 0; j < params[i].size(); ++j) {
      m[j] = beta1_ * m[j] + (1.0 - beta1_) * g[j];
      v[j] = beta2_ * v[j] + (1.0 - beta2_) * g[j] * g[j];
      p[j] -= step * m[j] / (std::sqrt(v[j]) + eps_);
    }
  }
}

namespace {

constexpr char kMagic[8] = {'N', 'S', 'P', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kCheckpointVersion = 1;

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("checkpoint truncated");
  return v;
}

}  // namespace

void save_checkpoint(std::ostream& out, const Network& net) {
  const auto& s = net.spec();
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.activation));
  put<std::uint32_t>(out, s.value_head ? 1U : 0U);
  for (const std::size_t v : {s.nodes, s.node_features, s.nspr_features, s.gcn_width, s.gcn_depth, s.nspr_units}) {
    put<std::uint64_t>(out, v);
  }
  const auto edges = net.propagation().edges();
  put<std::uint64_t>(out, edges.size());
  for (const auto& [a, b] : edges) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(a));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(b));
  }
  put<std::uint64_t>(out, net.params().size());
  for (const auto& p : net.params()) {
    put<std::uint64_t>(out, p.rows());
    put<std::uint64_t>(out, p.cols());
    out.write(reinterpret_cast<const char*>(p.data()), static_cast<std::streamsize>(p.size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("checkpoint write failed");
}

Network load_checkpoint(std::istream& in) {
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw std::runtime_error("not a checkpoint file");
  const auto version = get<std::uint32_t>(in);
  if (version != kCheckpointVersion) throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));

  NetSpec s;
  const auto act = get<std::uint32_t>(in);
  if (act > 1) throw std::runtime_error("unknown activation in checkpoint");
  s.activation = static_cast<Activation>(act);
  s.value_head = get<std::uint32_t>(in) != 0;
  s.nodes = get<std::uint64_t>(in);
  s.node_features = get<std::uint64_t>(in);
  s.nspr_features = get<std::uint64_t>(in);
  s.gcn_width = get<std::uint64_t>(in);
  s.gcn_depth = get<std::uint64_t>(in);
  s.nspr_units = get<std::uint64_t>(in);

  const auto edge_count = get<std::uint64_t>(in);
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (std::uint64_t e = 0; e < edge_count; ++e) {
    const auto a = get<std::uint32_t>(in);
    const auto b = get<std::uint32_t>(in);
    edges.emplace_back(static_cast<NodeId>(a), static_cast<NodeId>(b));
  }

  const auto tensor_count = get<std::uint64_t>(in);
  std::vector<Matrix> params;
  for (std::uint64_t i = 0; i < tensor_count; ++i) {
    const auto rows = get<std::uint64_t>(in);
    const auto cols = get<std::uint64_t>(in);
    Matrix m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!in) throw std::runtime_error("checkpoint truncated");
    params.push_back(std::move(m));
  }
  return Network(s, Propagation(s.nodes, std::move(edges)), std::move(params));
}

}  // namespace nsp
