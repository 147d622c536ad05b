#include "gial/optim.hpp"

#include <cmath>

#include "gial/error.hpp"

namespace gial {

void Adam::step(std::span<Parameter* const> params) {
  for (Parameter* p : params) {
    if (!p->has_grad) throw ContractViolation("Adam::step: parameter '" + p->name + "' has no gradient");
    if (!p->grad.same_shape(p->value)) {
      throw DimensionError("Adam::step: gradient shape " + p->grad.shape_string() + " for '" + p->name +
                           "' of shape " + p->value.shape_string());
    }
  }
  for (Parameter* p : params) {
    AdamState& s = states_[p];
    if (s.first_moment.empty()) {
      s.first_moment = Matrix(p->value.rows(), p->value.cols());
      s.second_moment = Matrix(p->value.rows(), p->value.cols());
    }
    ++s.step;
    const double b1 = options_.beta1, b2 = options_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(s.step));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(s.step));
    const double l2 = p->decay ? options_.l2_weight : 0.0;
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double g = p->grad[i] + l2 * p->value[i];
      s.first_moment[i] = b1 * s.first_moment[i] + (1.0 - b1) * g;
      s.second_moment[i] = b2 * s.second_moment[i] + (1.0 - b2) * g * g;
      const double m_hat = s.first_moment[i] / c1;
      const double v_hat = s.second_moment[i] / c2;
      p->value[i] -= options_.learning_rate * m_hat / (std::sqrt(v_hat) + options_.epsilon);
    }
  }
}

const AdamState* Adam::state(const Parameter& p) const {
  auto it = states_.find(&p);
  return it == states_.end() ? nullptr : &it->second;
}

}  // namespace gial
