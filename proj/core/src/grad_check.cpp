#include "gial/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "gial/error.hpp"

namespace gial {

namespace {

double evaluate(const Objective& f) {
  Tape tape;
  Var loss = f(tape);
  if (loss.rows() != 1 || loss.cols() != 1) {
    throw ContractViolation("grad_check: objective must be scalar, got " + loss.value().shape_string());
  }
  return loss.value()[0];
}

}  // namespace

GradCheckResult grad_check(const Objective& f, std::span<Parameter* const> params, double h) {
  for (Parameter* p : params) p->zero_grad();
  {
    Tape tape;
    Var loss = f(tape);
    tape.backward(loss);  // throws ContractViolation for non-scalar loss
  }

  GradCheckResult result;
  for (Parameter* p : params) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double original = p->value[i];
      p->value[i] = original + h;
      const double up = evaluate(f);
      p->value[i] = original - h;
      const double down = evaluate(f);
      p->value[i] = original;

      const double numeric = (up - down) / (2.0 * h);
      const double analytic = p->grad[i];
      const double denom = std::max({1.0, std::abs(analytic), std::abs(numeric)});
      const double err = std::abs(analytic - numeric) / denom;
      ++result.coordinates;
      if (result.worst.empty() || err > result.max_relative_error) {
        result.max_relative_error = err;
        result.worst = p->name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return result;
}

}  // namespace gial
