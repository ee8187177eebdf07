// Forming the signed-sum equation from a sign assignment and solving it.
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "quantag/types.hpp"

namespace quantag {

struct EquationTerm {
    Sign sign = Sign::Zero;
    Rational value;
};

// sum_i sign_i * value_i + unknown_sign * x = 0
struct Equation {
    std::vector<EquationTerm> constants;
    Sign unknown_sign = Sign::Plus;
};

class EquationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Builds the equation for quantities `qs` under assignment `y` (one sign per
// quantity, unknown sign must be +1 or -1). Zero-signed constants are kept.
Equation form_equation(const std::vector<Quantity>& qs, const SignAssignment& y);

// x = -(sum_i s_i q_i) / s_x, exact.
Rational solve(const Equation& e);

// Display form in the style "7341 - 4221 - x = 0".
std::string render_equation(const Equation& e);

}  // namespace quantag
