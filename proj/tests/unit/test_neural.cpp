#include <cmath>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "nsp/kernels.hpp"
#include "nsp/neural.hpp"
#include "nsp/rng.hpp"
#include "nsp/topology.hpp"

using namespace nsp;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = 2.0 * rng.uniform() - 1.0;
  return v;
}

// Textbook triple loops.
std::vector<double> naive_nn(std::size_t m, std::size_t n, std::size_t k, const std::vector<double>& a,
                             const std::vector<double>& b) {
  std::vector<double> c(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t p = 0; p < k; ++p) c[i * n + j] += a[i * k + p] * b[p * n + j];
  return c;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

void check_table(const kernels::Ops& ops, Rng& rng) {
  for (std::size_t trial = 0; trial < 40; ++trial) {
    const std::size_t m = 1 + rng.below(13);
    const std::size_t n = 1 + rng.below(19);
    const std::size_t k = 1 + rng.below(17);
    const auto a = random_vec(rng, m * k);
    const auto b = random_vec(rng, k * n);
    const auto want = naive_nn(m, n, k, a, b);

    std::vector<double> c(m * n, 0.0);
    ops.gemm_nn(m, n, k, a.data(), b.data(), c.data());
    CHECK(max_abs_diff(c, want) < 1e-12);

    // A stored transposed (k x m)
    std::vector<double> at(k * m);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t p = 0; p < k; ++p) at[p * m + i] = a[i * k + p];
    std::fill(c.begin(), c.end(), 0.0);
    ops.gemm_tn(m, n, k, at.data(), b.data(), c.data());
    CHECK(max_abs_diff(c, want) < 1e-12);

    // B stored transposed (n x k)
    std::vector<double> bt(n * k);
    for (std::size_t p = 0; p < k; ++p)
      for (std::size_t j = 0; j < n; ++j) bt[j * k + p] = b[p * n + j];
    std::fill(c.begin(), c.end(), 1.0);
    ops.gemm_nt(m, n, k, a.data(), bt.data(), c.data());
    for (auto& x : c) x -= 1.0;  // accumulates into C
    CHECK(max_abs_diff(c, want) < 1e-12);

    const auto x = random_vec(rng, k);
    const auto y = random_vec(rng, k);
    double dot = 0.0;
    for (std::size_t i = 0; i < k; ++i) dot += x[i] * y[i];
    CHECK(std::abs(ops.dot(x.data(), y.data(), k) - dot) < 1e-12);

    auto z = y;
    ops.axpy(0.5, x.data(), z.data(), k);
    for (std::size_t i = 0; i < k; ++i) CHECK(z[i] == doctest::Approx(y[i] + 0.5 * x[i]).epsilon(1e-15));
  }
}

// Undirected 6-node graph with a triangle and a tail.
const std::vector<std::pair<NodeId, NodeId>> kSix{{0, 1}, {1, 2}, {0, 2}, {2, 3}, {3, 4}, {4, 5}};

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("scalar kernels against naive loops") {
    Rng rng(1);
    check_table(kernels::scalar::table(), rng);
  }

#if defined(NSP_HAVE_AVX2)
  TEST_CASE("avx2 kernels against naive loops") {
    if (!kernels::supported(kernels::Backend::Avx2)) return;
    Rng rng(1);
    check_table(kernels::avx2::table(), rng);
  }

  TEST_CASE("scalar and avx2 agree on network sized products") {
    if (!kernels::supported(kernels::Backend::Avx2)) return;
    Rng rng(2);
    const std::size_t m = 147, n = 60, k = 60;
    const auto a = random_vec(rng, m * k);
    const auto b = random_vec(rng, k * n);
    std::vector<double> c1(m * n, 0.0), c2(m * n, 0.0);
    kernels::scalar::table().gemm_nn(m, n, k, a.data(), b.data(), c1.data());
    kernels::avx2::table().gemm_nn(m, n, k, a.data(), b.data(), c2.data());
    CHECK(max_abs_diff(c1, c2) < 1e-12);
  }

  TEST_CASE("forward pass agrees across backends") {
    if (!kernels::supported(kernels::Backend::Avx2)) return;
    const Psn psn = build_reference_psn(TopologyConfig{});
    const Network net(actor_spec(psn.node_count()), Propagation::from_psn(psn), 3);
    Rng rng(4);
    Features f{Matrix(psn.node_count(), 4), random_vec(rng, 4)};
    for (auto& v : f.nodes.values()) v = rng.uniform();
    const auto before = kernels::active();
    kernels::select(kernels::Backend::Scalar);
    const auto a = net.forward(f).output;
    kernels::select(kernels::Backend::Avx2);
    const auto b = net.forward(f).output;
    kernels::select(before);
    CHECK(max_abs_diff(a, b) < 1e-10);
  }
#endif

  TEST_CASE("backend selection") {
    CHECK(kernels::supported(kernels::Backend::Scalar));
    const auto before = kernels::active();
    kernels::select(kernels::Backend::Scalar);
    CHECK(kernels::active() == kernels::Backend::Scalar);
    kernels::select(before);
    CHECK(kernels::active() == before);
  }
}

TEST_SUITE("neural") {
  TEST_CASE("propagation matrix of a path graph") {
    const Propagation p(3, {{0, 1}, {1, 2}});
    const Matrix d = p.dense();
    // degrees with self loops: 2, 3, 2
    CHECK(d(0, 0) == doctest::Approx(0.5));
    CHECK(d(0, 1) == doctest::Approx(1.0 / std::sqrt(6.0)));
    CHECK(d(1, 1) == doctest::Approx(1.0 / 3.0));
    CHECK(d(0, 2) == 0.0);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) CHECK(d(i, j) == d(j, i));
  }

  TEST_CASE("isolated node zero fixed point") {
    const Propagation p(1, {});
    Matrix x(1, 1, 0.0);
    std::vector<Matrix> w{Matrix(1, 1, 1.0)};
    std::vector<Matrix> b{Matrix(1, 1, 0.0)};
    CHECK(gcn_forward(x, p, w, b, Activation::Tanh)(0, 0) == 0.0);
    CHECK(gcn_forward(x, p, w, b, Activation::Relu)(0, 0) == 0.0);
  }

  TEST_CASE("embedding and output shapes on the default substrate") {
    const Psn psn = build_reference_psn(TopologyConfig{});
    const Network actor(actor_spec(psn.node_count()), Propagation::from_psn(psn), 1);
    const Network critic(critic_spec(psn.node_count()), Propagation::from_psn(psn), 2);
    const Matrix emb = actor.embed(Matrix(psn.node_count(), 4, 0.5));
    CHECK(emb.rows() == 147);
    CHECK(emb.cols() == 60);
    Features f{Matrix(psn.node_count(), 4, 0.5), {0.5, 0.5, 0.1, 1.0}};
    CHECK(actor.forward(f).output.size() == 147);
    CHECK(critic.forward(f).output.size() == 1);
  }

  TEST_CASE("zero weights give zero scores") {
    const Psn psn = build_reference_psn(TopologyConfig{});
    Network net(actor_spec(psn.node_count(), 8, 2), Propagation::from_psn(psn), 1);
    for (auto& p : net.params()) p.fill(0.0);
    Features f{Matrix(psn.node_count(), 4, 0.7), {0.5, 0.5, 0.1, 1.0}};
    for (double z : net.forward(f).output) CHECK(z == 0.0);
  }

  TEST_CASE("finite outputs over random states") {
    const Psn psn = build_reference_psn(TopologyConfig{});
    const Network net(actor_spec(psn.node_count()), Propagation::from_psn(psn), 9);
    Rng rng(9);
    for (int i = 0; i < 50; ++i) {
      Features f{Matrix(psn.node_count(), 4), {rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()}};
      for (auto& v : f.nodes.values()) v = rng.uniform();
      for (double z : net.forward(f).output) CHECK(std::isfinite(z));
    }
  }

  TEST_CASE("permutation equivariance") {
    const std::vector<std::size_t> perm{3, 5, 0, 4, 1, 2};  // new id of node i
    std::vector<std::pair<NodeId, NodeId>> permuted;
    for (auto [a, b] : kSix) permuted.emplace_back(perm[a], perm[b]);
    const Propagation p(6, kSix);
    const Propagation q(6, permuted);

    Rng rng(12);
    const std::size_t width = 7;
    std::vector<Matrix> w, b;
    for (std::size_t l = 0; l < 3; ++l) {
      Matrix wl(l == 0 ? 4 : width, width);
      for (auto& v : wl.values()) v = rng.uniform() - 0.5;
      Matrix bl(1, width);
      for (auto& v : bl.values()) v = rng.uniform() - 0.5;
      w.push_back(wl);
      b.push_back(bl);
    }
    Matrix x(6, 4), xp(6, 4);
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t c = 0; c < 4; ++c) xp(perm[i], c) = x(i, c) = rng.uniform();

    for (auto act : {Activation::Tanh, Activation::Relu}) {
      const Matrix h = gcn_forward(x, p, w, b, act);
      const Matrix hp = gcn_forward(xp, q, w, b, act);
      for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t c = 0; c < width; ++c) CHECK(std::abs(hp(perm[i], c) - h(i, c)) <= 1e-12);
    }
  }

  TEST_CASE("softmax examples") {
    const auto u = softmax(std::vector<double>{0, 0, 0});
    for (double p : u) CHECK(p == doctest::Approx(1.0 / 3.0));
    const auto two = softmax(std::vector<double>{std::log(2.0), 0.0});
    CHECK(two[0] == doctest::Approx(2.0 / 3.0));
    CHECK(two[1] == doctest::Approx(1.0 / 3.0));
    Rng rng(5);
    for (int i = 0; i < 100; ++i) {
      auto z = random_vec(rng, 10);
      for (auto& v : z) v *= 50.0;
      const auto p = softmax(z);
      CHECK(std::abs(std::accumulate(p.begin(), p.end(), 0.0) - 1.0) <= 1e-12);
      auto shifted = z;
      for (auto& v : shifted) v += 123.0;
      const auto q = softmax(shifted);
      for (std::size_t k = 0; k < p.size(); ++k) CHECK(q[k] == doctest::Approx(p[k]).epsilon(1e-12));
    }
  }

  TEST_CASE("gradient of a constant loss is zero") {
    const Propagation p(6, kSix);
    const Network net(actor_spec(6, 5, 2), p, 3);
    Features f{Matrix(6, 4, 0.3), {0.1, 0.2, 0.3, 0.4}};
    auto grads = net.zero_grads();
    const auto t = net.forward(f);
    net.backward(f, t, std::vector<double>(6, 0.0), grads);
    CHECK(global_norm(grads) == 0.0);
  }

  TEST_CASE("network gradients match finite differences") {
    const Propagation p(6, kSix);
    for (const NetSpec& spec : {actor_spec(6, 5, 3), critic_spec(6, 5, 3)}) {
      Network net(spec, p, 17);
      Rng rng(23);
      Features f{Matrix(6, 4), random_vec(rng, 4)};
      for (auto& v : f.nodes.values()) v = rng.uniform();
      const auto c = random_vec(rng, spec.outputs());
      auto loss = [&] {
        const auto out = net.forward(f).output;
        double s = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) s += c[i] * out[i];
        return s;
      };
      auto grads = net.zero_grads();
      net.backward(f, net.forward(f), c, grads);
      const double h = 1e-6;
      for (std::size_t t = 0; t < net.params().size(); ++t) {
        for (std::size_t i = 0; i < net.params()[t].size(); ++i) {
          double& w = net.params()[t].values()[i];
          const double saved = w;
          w = saved + h;
          const double up = loss();
          w = saved - h;
          const double down = loss();
          w = saved;
          const double fd = (up - down) / (2 * h);
          const double an = grads[t].values()[i];
          CHECK(std::abs(fd - an) <= 1e-6 * std::max(1.0, std::abs(fd)));
        }
      }
    }
  }

  TEST_CASE("initialization bounds") {
    const Propagation p(6, kSix);
    const Network net(actor_spec(6, 5, 3), p, 1);
    const auto& params = net.params();
    for (std::size_t l = 0; l < 3; ++l) {
      const auto& w = params[net.gcn_weight(l)];
      const double bound = 1.0 / std::sqrt(static_cast<double>(w.rows()));
      for (double v : w.values()) CHECK(std::abs(v) <= bound);
      for (double v : params[net.gcn_bias(l)].values()) CHECK(v == 0.0);
    }
    const auto& head = params[net.head_weight()];
    const double bound = 1.0 / std::sqrt(static_cast<double>(head.cols()));
    for (double v : head.values()) CHECK(std::abs(v) <= bound);
  }

  TEST_CASE("global norm clipping") {
    std::vector<Matrix> g{Matrix(1, 2, 3.0), Matrix(1, 1, 4.0)};
    // sqrt(9 + 9 + 16)
    const double before = clip_global_norm(g, 1.0);
    CHECK(before == doctest::Approx(std::sqrt(34.0)));
    CHECK(global_norm(g) == doctest::Approx(1.0));
    std::vector<Matrix> small{Matrix(1, 1, 0.5)};
    clip_global_norm(small, 1.0);
    CHECK(small[0](0, 0) == 0.5);
  }

  TEST_CASE("adam first step moves by the learning rate") {
    std::vector<Matrix> params{Matrix(1, 2, 1.0)};
    Adam opt(params, 0.1);
    std::vector<Matrix> grads{Matrix(1, 2)};
    grads[0](0, 0) = 2.0;
    grads[0](0, 1) = -0.5;
    opt.step(params, grads);
    CHECK(params[0](0, 0) == doctest::Approx(0.9).epsilon(1e-6));
    CHECK(params[0](0, 1) == doctest::Approx(1.1).epsilon(1e-6));
    CHECK(opt.steps() == 1);
  }

  TEST_CASE("checkpoint round trip") {
    const Propagation p(6, kSix);
    const Network net(critic_spec(6, 5, 2), p, 8);
    std::stringstream buf;
    save_checkpoint(buf, net);
    const Network back = load_checkpoint(buf);
    CHECK(back.spec() == net.spec());
    CHECK(back.params() == net.params());
    Features f{Matrix(6, 4, 0.25), {0.1, 0.2, 0.3, 0.4}};
    CHECK(back.forward(f).output == net.forward(f).output);

    std::stringstream bad("NOTACKPT");
    CHECK_THROWS_AS(load_checkpoint(bad), std::runtime_error);
    std::string truncated;
    {
      std::stringstream full;
      save_checkpoint(full, net);
      truncated = full.str().substr(0, 100);
    }
    std::stringstream t(truncated);
    CHECK_THROWS_AS(load_checkpoint(t), std::runtime_error);
  }
}
