#include <doctest.h>

#include <cmath>

#include "gial/encoders.hpp"
#include "gial/error.hpp"
#include "test_support.hpp"

using namespace gial;
using testing::fd_max_error;
using testing::project;
using testing::random_away_from_zero;
using testing::random_matrix;

namespace {

Graph from_pairs(std::size_t n, std::vector<std::pair<std::size_t, std::size_t>> e) {
  return Graph(n, std::span<const std::pair<std::size_t, std::size_t>>(e));
}

Graph five_nodes() { return from_pairs(5, {{0, 1}, {1, 2}, {2, 3}, {1, 3}}); }  // node 4 isolated

Graph permuted(const Graph& g, const std::vector<std::size_t>& perm) {
  // new index of old node i is perm[i]
  std::vector<std::pair<std::size_t, std::size_t>> e;
  for (const Edge& x : g.edges()) e.emplace_back(perm[x.u], perm[x.v]);
  return Graph(g.node_count(), std::span<const std::pair<std::size_t, std::size_t>>(e));
}

Matrix permute_rows(const Matrix& m, const std::vector<std::size_t>& perm) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t c = 0; c < m.cols(); ++c) out(perm[i], c) = m(i, c);
  return out;
}

}  // namespace

TEST_CASE("gcn layer with identity operands is the identity on nonnegative input") {
  Tape tape;
  const Matrix r = random_matrix(4, 4, 3, 0.0, 2.0);
  Var out = gcn_layer(tape.constant(r), tape.constant(Matrix::identity(4)), tape.constant(Matrix::identity(4)),
                      tape.constant(Matrix{{kPreluInitialSlope}}));
  CHECK(out.value() == r);
  CHECK_THROWS_AS(gcn_layer(tape.constant(r), tape.constant(Matrix::identity(3)), tape.constant(Matrix::identity(4)),
                            tape.constant(Matrix{{0.25}})),
                  DimensionError);
}

TEST_CASE("isolated node output depends only on its own row") {
  const GraphContext ctx = make_graph_context(five_nodes());
  Rng rng = derive_rng(1, 1);
  Encoder enc({EncoderKind::gcn, 3, 4, 2, 1}, rng);
  Matrix x = random_matrix(5, 3, 8);
  Tape t1;
  const Matrix base = enc.forward(t1, t1.constant(x), ctx).value();
  for (std::size_t c = 0; c < 3; ++c) x(0, c) += 1.0;
  for (std::size_t c = 0; c < 3; ++c) x(3, c) -= 0.5;
  Tape t2;
  const Matrix moved = enc.forward(t2, t2.constant(x), ctx).value();
  for (std::size_t c = 0; c < 4; ++c) CHECK(moved(4, c) == base(4, c));
}

TEST_CASE("gcn layer gradient") {
  const GraphContext ctx = make_graph_context(five_nodes());
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Parameter r("r", random_away_from_zero(5, 3, seed));
    Parameter w("w", random_away_from_zero(3, 4, seed + 10));
    Parameter slope("slope", Matrix{{0.25}}, false);
    auto f = [&](Tape& t) {
      return project(gcn_layer(t.param(r), t.constant(ctx.norm_adj), t.param(w), t.param(slope)), seed);
    };
    CHECK(fd_max_error(f, {&r, &w, &slope}) < 1e-4);
  }
}

TEST_CASE("single-node attention") {
  Tape tape;
  const Matrix r = {{0.3, -0.7}};
  const Matrix w = {{1.0, -2.0, 0.5}, {0.25, 1.0, -1.0}};
  auto head = gat_head(tape.constant(r), Matrix{{1.0}}, tape.constant(w), tape.constant(Matrix{{1}, {2}, {3}}),
                       tape.constant(Matrix{{-1}, {0}, {1}}));
  CHECK(head.attention.value() == Matrix{{1.0}});
  std::vector<AttentionHeadVars> heads = {{tape.constant(w), tape.constant(Matrix{{1}, {2}, {3}}),
                                           tape.constant(Matrix{{-1}, {0}, {1}})}};
  Var out = gat_layer(tape.constant(r), Matrix{{1.0}}, heads, HeadMerge::average, tape.constant(Matrix{{0.25}}));
  const Matrix wr = matmul(r, w);
  for (std::size_t c = 0; c < 3; ++c) {
    const double expect = wr[c] >= 0 ? wr[c] : 0.25 * wr[c];
    CHECK(out.value()[c] == doctest::Approx(expect).epsilon(1e-14));
  }
}

TEST_CASE("attention rows normalize over the receptive field") {
  const Graph g = five_nodes();
  const Matrix mask = receptive_field_mask(g);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Tape tape;
    auto head = gat_head(tape.constant(random_matrix(5, 3, seed)), mask, tape.constant(random_matrix(3, 4, seed + 1)),
                         tape.constant(random_matrix(4, 1, seed + 2, -3, 3)),
                         tape.constant(random_matrix(4, 1, seed + 3, -3, 3)));
    const Matrix& a = head.attention.value();
    for (std::size_t i = 0; i < 5; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < 5; ++j) {
        if (mask(i, j) == 0.0) CHECK(a(i, j) == 0.0);
        s += a(i, j);
      }
      CHECK(std::abs(s - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("attention layer gradient including the attention vector") {
  const Matrix mask = receptive_field_mask(five_nodes());
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Parameter r("r", random_away_from_zero(5, 3, seed));
    std::vector<Parameter> w, as, ad;
    for (int k = 0; k < 2; ++k) {
      w.emplace_back("w", random_away_from_zero(3, 4, seed * 10 + k));
      as.emplace_back("as", random_away_from_zero(4, 1, seed * 20 + k));
      ad.emplace_back("ad", random_away_from_zero(4, 1, seed * 30 + k));
    }
    Parameter slope("slope", Matrix{{0.25}}, false);
    for (HeadMerge merge : {HeadMerge::concat, HeadMerge::average}) {
      auto f = [&](Tape& t) {
        std::vector<AttentionHeadVars> heads;
        for (int k = 0; k < 2; ++k) heads.push_back({t.param(w[k]), t.param(as[k]), t.param(ad[k])});
        Var out = gat_layer(t.param(r), mask, heads, merge, t.param(slope));
        CHECK(out.cols() == (merge == HeadMerge::concat ? 8u : 4u));
        return project(out, seed);
      };
      CHECK(fd_max_error(f, {&r, &w[0], &w[1], &as[0], &as[1], &ad[0], &ad[1], &slope}) < 1e-4);
    }
  }
}

TEST_CASE("encoder stacks and shapes") {
  Rng rng = derive_rng(3, 0);
  Encoder gat({EncoderKind::gat, 6, 5, 3, 4}, rng);
  const auto params = gat.parameters();
  // 3 layers × (4 heads × 3 tensors + slope)
  CHECK(params.size() == 3 * (4 * 3 + 1));
  CHECK(params[0]->value.rows() == 6);
  CHECK(params[0]->value.cols() == 5);
  // Second layer consumes the concatenation of four heads.
  CHECK(params[13]->value.rows() == 20);
  const GraphContext ctx = make_graph_context(five_nodes());
  Tape tape;
  Var out = gat.forward(tape, tape.constant(random_matrix(5, 6, 1)), ctx);
  CHECK(out.rows() == 5);
  CHECK(out.cols() == 5);
  CHECK(out.value().all_finite());

  Rng rng2 = derive_rng(3, 0);
  Encoder gcn({EncoderKind::gcn, 6, 5, 2, 1}, rng2);
  for (Parameter* p : gcn.parameters()) {
    if (p->value.size() == 1) {
      CHECK(p->value[0] == kPreluInitialSlope);
      CHECK_FALSE(p->decay);
      continue;
    }
    const double bound = 1.0 / std::sqrt(static_cast<double>(p->value.rows()));
    for (double v : p->value.values()) CHECK(std::abs(v) <= bound);
  }

  CHECK(encoder_kind_from_string("gat") == EncoderKind::gat);
  CHECK_THROWS_AS(encoder_kind_from_string("mlp"), ContractViolation);
}

TEST_CASE("encoder gradient through two layers") {
  const GraphContext ctx = make_graph_context(five_nodes());
  const Matrix x = random_matrix(5, 3, 4);
  for (EncoderKind kind : {EncoderKind::gcn, EncoderKind::gat}) {
    Rng rng = derive_rng(9, 0);
    Encoder enc({kind, 3, 4, 2, 2}, rng);
    auto f = [&](Tape& t) { return project(enc.forward(t, t.constant(x), ctx), 2); };
    CHECK(fd_max_error(f, enc.parameters()) < 1e-4);
  }
}

TEST_CASE("encoders are permutation equivariant") {
  const Graph g = from_pairs(7, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 0}, {5, 6}, {1, 5}});
  const std::vector<std::size_t> perm = {3, 6, 0, 5, 1, 4, 2};
  const Matrix x = random_matrix(7, 4, 12);
  for (EncoderKind kind : {EncoderKind::gcn, EncoderKind::gat}) {
    Rng rng = derive_rng(5, 0);
    Encoder enc({kind, 4, 3, 2, 2}, rng);
    Tape t1, t2;
    const Matrix a = enc.forward(t1, t1.constant(x), make_graph_context(g)).value();
    const Matrix b = enc.forward(t2, t2.constant(permute_rows(x, perm)), make_graph_context(permuted(g, perm))).value();
    CHECK(max_abs_diff(permute_rows(a, perm), b) < 1e-10);
  }
}

TEST_CASE("receptive field grows one hop per layer") {
  const Graph path = from_pairs(6, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}});
  const GraphContext ctx = make_graph_context(path);
  for (EncoderKind kind : {EncoderKind::gcn, EncoderKind::gat}) {
    for (std::size_t layers = 1; layers <= 3; ++layers) {
      Rng rng = derive_rng(2, layers);
      Encoder enc({kind, 3, 4, layers, 1}, rng);
      Matrix x = random_matrix(6, 3, 77, 0.2, 1.0);
      Tape t1;
      const Matrix before = enc.forward(t1, t1.constant(x), ctx).value();
      for (std::size_t c = 0; c < 3; ++c) x(0, c) += 0.7;
      Tape t2;
      const Matrix after = enc.forward(t2, t2.constant(x), ctx).value();
      for (std::size_t i = 0; i < 6; ++i) {
        double change = 0.0;
        for (std::size_t c = 0; c < 4; ++c) change = std::max(change, std::abs(after(i, c) - before(i, c)));
        if (i > layers) CHECK(change == 0.0);
        else CHECK(change > 0.0);
      }
    }
  }
}

TEST_CASE("summary readout") {
  Tape tape;
  const Matrix s0 = summary_readout(tape.constant(Matrix(4, 3))).value();
  CHECK(s0 == Matrix(1, 3, 0.5));
  const Matrix one = {{0.4, -1.2}};
  const Matrix s1 = summary_readout(tape.constant(one)).value();
  CHECK(s1[0] == doctest::Approx(1.0 / (1.0 + std::exp(-0.4))).epsilon(1e-15));
  CHECK(s1[1] == doctest::Approx(1.0 / (1.0 + std::exp(1.2))).epsilon(1e-15));

  const Matrix r = random_matrix(6, 3, 1);
  const Matrix a = summary_readout(tape.constant(r)).value();
  const Matrix b = summary_readout(tape.constant(permute_rows(r, {5, 4, 3, 2, 1, 0}))).value();
  CHECK(max_abs_diff(a, b) < 1e-15);
  CHECK_THROWS_AS(summary_readout(tape.constant(Matrix(0, 3))), ContractViolation);
}
