#include <doctest.h>

#include <cmath>
#include <limits>
#include <set>

#include "gial/autodiff.hpp"
#include "gial/error.hpp"
#include "gial/format.hpp"
#include "gial/grad_check.hpp"
#include "gial/optim.hpp"
#include "gial/random.hpp"
#include "test_support.hpp"

using namespace gial;
using testing::fd_max_error;
using testing::project;
using testing::random_away_from_zero;
using testing::random_matrix;

TEST_CASE("matmul hand cases") {
  const Matrix m = {{1, 2, 3}, {4, 5, 6}};
  CHECK(matmul(Matrix::identity(2), m) == m);
  CHECK(matmul(Matrix{{1, 2}, {3, 4}}, Matrix{{1}, {1}}) == Matrix{{3}, {7}});
  CHECK(matmul_tn(m, m) == matmul(m.transposed(), m));
  CHECK(matmul_nt(m, m) == matmul(m, m.transposed()));
  CHECK_THROWS_AS(matmul(m, m), DimensionError);

  Tape tape;
  CHECK_THROWS_AS(matmul(tape.constant(m), tape.constant(m)), DimensionError);
  CHECK_THROWS_AS(tape.constant(m) + tape.constant(m.transposed()), DimensionError);
}

TEST_CASE("activation values") {
  Tape tape;
  CHECK(sigmoid(tape.constant(Matrix{{0}})).item() == 0.5);
  const Matrix sm = softmax_rows(tape.constant(Matrix{{0, 0, 0}})).value();
  for (double v : sm.values()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  Var slope = tape.constant(Matrix{{0.25}});
  CHECK(prelu(tape.constant(Matrix{{-2}}), slope).item() == -0.5);
  CHECK(prelu(tape.constant(Matrix{{3}}), slope).item() == 3.0);
  CHECK(leaky_relu(tape.constant(Matrix{{-1}}), 0.2).item() == doctest::Approx(-0.2));

  const Matrix extreme = sigmoid(tape.constant(Matrix{{-1000, 1000, -40}})).value();
  CHECK(extreme.all_finite());
  CHECK(extreme[0] >= 0.0);
  CHECK(extreme[1] == 1.0);
}

TEST_CASE("softmax rows sum to one") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Tape tape;
    Matrix x = random_matrix(6, 9, seed, -30.0, 30.0);
    const Matrix p = softmax_rows(tape.constant(x)).value();
    Matrix mask = random_matrix(6, 9, seed + 50, 0.0, 1.0);
    for (std::size_t r = 0; r < mask.rows(); ++r) {
      for (std::size_t c = 0; c < mask.cols(); ++c) mask(r, c) = (mask(r, c) > 0.5 || c == r) ? 1.0 : 0.0;
    }
    const Matrix q = masked_softmax_rows(tape.constant(x), mask).value();
    for (std::size_t r = 0; r < 6; ++r) {
      double s = 0.0, t = 0.0;
      for (std::size_t c = 0; c < 9; ++c) {
        s += p(r, c);
        t += q(r, c);
        if (mask(r, c) == 0.0) CHECK(q(r, c) == 0.0);
      }
      CHECK(std::abs(s - 1.0) <= 1e-12);
      CHECK(std::abs(t - 1.0) <= 1e-12);
    }
  }
}

namespace {

// One operation under test: builds an output from parameter leaves.
struct OpCase {
  const char* name;
  std::vector<std::pair<std::size_t, std::size_t>> shapes;
  std::function<Var(Tape&, std::vector<Var>&)> build;
  bool positive = false;  // inputs drawn from (0.1, 1)
};

std::vector<OpCase> op_cases() {
  Matrix mask = {{1, 1, 0, 0}, {1, 1, 1, 0}, {0, 1, 1, 1}, {0, 0, 1, 1}};
  std::vector<std::size_t> rows = {2, 0, 2, 1};
  return {
      {"matmul", {{3, 3}, {3, 3}}, [](Tape&, auto& v) { return matmul(v[0], v[1]); }},
      {"add", {{3, 4}, {3, 4}}, [](Tape&, auto& v) { return v[0] + v[1]; }},
      {"sub", {{3, 4}, {3, 4}}, [](Tape&, auto& v) { return v[0] - v[1]; }},
      {"hadamard", {{3, 4}, {3, 4}}, [](Tape&, auto& v) { return hadamard(v[0], v[1]); }},
      {"scale", {{3, 4}}, [](Tape&, auto& v) { return scale(v[0], -1.7); }},
      {"affine", {{3, 4}}, [](Tape&, auto& v) { return affine(v[0], 0.3, 2.0); }},
      {"add_row", {{3, 4}, {1, 4}}, [](Tape&, auto& v) { return add_row(v[0], v[1]); }},
      {"transpose", {{3, 4}}, [](Tape&, auto& v) { return transpose(v[0]); }},
      {"concat_cols", {{3, 2}, {3, 3}}, [](Tape&, auto& v) { return concat_cols(std::span<const Var>(v)); }},
      {"concat_rows", {{2, 3}, {4, 3}}, [](Tape&, auto& v) { return concat_rows(std::span<const Var>(v)); }},
      {"gather_rows", {{3, 4}}, [rows](Tape&, auto& v) { return gather_rows(v[0], rows); }},
      {"prelu", {{3, 4}, {1, 1}}, [](Tape&, auto& v) { return prelu(v[0], v[1]); }},
      {"leaky_relu", {{3, 4}}, [](Tape&, auto& v) { return leaky_relu(v[0], 0.2); }},
      {"sigmoid", {{3, 4}}, [](Tape&, auto& v) { return sigmoid(v[0]); }},
      {"softmax_rows", {{3, 4}}, [](Tape&, auto& v) { return softmax_rows(v[0]); }},
      {"masked_softmax_rows", {{4, 4}}, [mask](Tape&, auto& v) { return masked_softmax_rows(v[0], mask); }},
      {"outer_sum", {{3, 1}, {1, 4}}, [](Tape&, auto& v) { return outer_sum(v[0], v[1]); }},
      {"column_mean", {{3, 4}}, [](Tape&, auto& v) { return column_mean(v[0]); }},
      {"sum", {{3, 4}}, [](Tape&, auto& v) { return sum(v[0]); }},
      {"mean", {{3, 4}}, [](Tape&, auto& v) { return mean(v[0]); }},
      {"square", {{3, 4}}, [](Tape&, auto& v) { return square(v[0]); }},
      {"log_clamped", {{3, 4}}, [](Tape&, auto& v) { return log_clamped(v[0]); }, true},
  };
}

}  // namespace

TEST_CASE("every operation matches finite differences on 20 seeds") {
  for (const OpCase& op : op_cases()) {
    CAPTURE(op.name);
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      std::vector<Parameter> params;
      params.reserve(op.shapes.size());
      for (std::size_t k = 0; k < op.shapes.size(); ++k) {
        auto [r, c] = op.shapes[k];
        Matrix m = op.positive ? random_matrix(r, c, seed * 31 + k, 0.1, 1.0)
                               : random_away_from_zero(r, c, seed * 31 + k);
        params.emplace_back("p" + std::to_string(k), m);
      }
      std::vector<Parameter*> ptrs;
      for (auto& p : params) ptrs.push_back(&p);
      auto f = [&](Tape& tape) {
        std::vector<Var> vars;
        for (auto& p : params) vars.push_back(tape.param(p));
        return project(op.build(tape, vars), seed);
      };
      worst = std::max(worst, fd_max_error(f, ptrs));
    }
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("gradients accumulate across uses and backward is single-shot") {
  Parameter x("x", Matrix{{3.0}});
  Tape tape;
  Var v = tape.param(x);
  Var loss = hadamard(v, v) + v;  // x² + x
  tape.backward(loss);
  CHECK(x.grad[0] == 7.0);
  CHECK(x.has_grad);
  CHECK_THROWS_AS(tape.backward(loss), ContractViolation);
  CHECK(x.grad[0] == 7.0);

  Tape other;
  CHECK_THROWS_AS(other.backward(other.constant(Matrix(2, 1))), ContractViolation);
}

TEST_CASE("detach blocks gradient and log clamp counts saturation") {
  Parameter x("x", Matrix{{2.0}});
  Tape tape;
  Var v = tape.param(x);
  tape.backward(hadamard(detach(v), v));
  CHECK(x.grad[0] == 2.0);

  Tape t2;
  Var l = log_clamped(t2.constant(Matrix{{0.0, 1.0, 1e-20}}));
  CHECK(t2.saturated_logs() == 2);
  CHECK(l.value()[0] == doctest::Approx(std::log(1e-12)));
}

TEST_CASE("adam") {
  SUBCASE("zero gradient leaves parameters unchanged") {
    Parameter p("w", random_matrix(3, 3, 1));
    const Matrix before = p.value;
    Adam adam;
    for (int i = 0; i < 10; ++i) {
      p.zero_grad();
      p.has_grad = true;
      adam.step(std::vector<Parameter*>{&p});
    }
    CHECK(p.value == before);
    CHECK(adam.state(p)->step == 10);
  }
  SUBCASE("first step with unit gradient moves by the learning rate") {
    Parameter p("w", Matrix{{0.5}});
    p.grad = Matrix{{1.0}};
    p.has_grad = true;
    Adam adam({0.001});
    adam.step(std::vector<Parameter*>{&p});
    // m̂ = 1, v̂ = 1 after bias correction
    CHECK(std::abs((0.5 - p.value[0]) - 0.001 / (1.0 + 1e-8)) < 1e-15);
  }
  SUBCASE("missing gradient") {
    Parameter p("w", Matrix{{0.5}});
    Adam adam;
    CHECK_THROWS_AS(adam.step(std::vector<Parameter*>{&p}), ContractViolation);
  }
  SUBCASE("quadratic decreases monotonically") {
    Parameter p("x", Matrix{{2.0}});
    Adam adam({0.01});
    double previous = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 100; ++i) {
      p.zero_grad();
      Tape tape;
      Var x = tape.param(p);
      Var loss = square(affine(x, 1.0, -0.5));
      CHECK(loss.item() < previous);
      previous = loss.item();
      tape.backward(loss);
      adam.step(std::vector<Parameter*>{&p});
    }
  }
  SUBCASE("l2 applies to decayed parameters only") {
    Parameter w("w", Matrix{{1.0}}, true);
    Parameter b("b", Matrix{{1.0}}, false);
    Adam adam({0.001, 0.9, 0.999, 1e-8, 0.1});
    for (auto* p : {&w, &b}) {
      p->zero_grad();
      p->has_grad = true;
    }
    adam.step(std::vector<Parameter*>{&w, &b});
    CHECK(w.value[0] < 1.0);
    CHECK(b.value[0] == 1.0);
  }
}

TEST_CASE("grad_check") {
  Parameter x("x", Matrix{{3.0}});
  auto sq = [&](Tape& t) { return square(t.param(x)); };
  const auto r = grad_check(sq, std::vector<Parameter*>{&x});
  CHECK(x.grad[0] == doctest::Approx(6.0));
  CHECK(r.max_relative_error < 1e-6);
  CHECK(r.coordinates == 1);
  CHECK(x.value[0] == 3.0);

  auto constant = [&](Tape& t) { return sum(hadamard(t.param(x), t.constant(Matrix{{0.0}}))); };
  CHECK(grad_check(constant, std::vector<Parameter*>{&x}).max_relative_error < 1e-12);
  CHECK(x.grad[0] == 0.0);

  auto vector_valued = [&](Tape& t) { return concat_cols(std::vector<Var>{t.param(x), t.param(x)}); };
  CHECK_THROWS_AS(grad_check(vector_valued, std::vector<Parameter*>{&x}), ContractViolation);

  // Agrees with the test-side oracle on a composite.
  Parameter a("a", random_away_from_zero(4, 3, 5)), b("b", random_away_from_zero(3, 2, 6));
  auto composite = [&](Tape& t) {
    return mean(sigmoid(matmul(softmax_rows(t.param(a)), t.param(b))));
  };
  std::vector<Parameter*> ps{&a, &b};
  const double ours = grad_check(composite, ps).max_relative_error;
  const double theirs = fd_max_error(composite, ps);
  CHECK(ours < 1e-8);
  CHECK(theirs < 1e-8);

  // A deliberately wrong gradient is caught.
  Parameter y("y", Matrix{{1.5}});
  auto wrong = [&](Tape& t) {
    Var v = t.param(y);
    const std::size_t parent = v.id();
    return t.push(Matrix{{v.value()[0] * v.value()[0]}}, {parent}, [parent](Tape& tp, std::size_t self) {
      tp.grad_buffer(parent)[0] += 3.0 * tp.value(parent)[0] * tp.output_grad(self)[0];
    });
  };
  const auto caught = grad_check(wrong, std::vector<Parameter*>{&y});
  CHECK(caught.max_relative_error > 0.1);
  CHECK(caught.worst.find("y") != std::string::npos);
}

TEST_CASE("format and parse doubles") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) {
    double back = 0.0;
    REQUIRE(parse_double(format_double(v), back));
    CHECK(back == v);
  }
  double out = 0.0;
  CHECK_FALSE(parse_double("1.5x", out));
  CHECK_FALSE(parse_double("", out));
  CHECK(parse_double("+2", out));
  CHECK(out == 2.0);
}

TEST_CASE("seeded sampling") {
  Rng a = derive_rng(42, 1), b = derive_rng(42, 1), c = derive_rng(42, 2);
  CHECK(a() == b());
  CHECK(a() != c());
  Rng r = derive_rng(7, 0);
  for (int i = 0; i < 1000; ++i) {
    const double u = uniform01(r);
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(uniform_index(r, 5) < 5);
  }
  const auto perm = random_permutation(50, r);
  CHECK(std::set<std::size_t>(perm.begin(), perm.end()).size() == 50);
  CHECK(*std::max_element(perm.begin(), perm.end()) == 49);

  // Moments of the normal sampler over a long run.
  double s = 0.0, s2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = normal(r);
    s += z;
    s2 += z * z;
  }
  CHECK(std::abs(s / n) < 0.01);
  CHECK(std::abs(s2 / n - 1.0) < 0.02);
}
