#include "quantag/equation.hpp"

#include <cctype>
#include <cstdlib>

namespace quantag {

std::optional<Rational> Rational::parse_decimal(const std::string& s) {
    if (s.empty()) return std::nullopt;
    std::size_t i = 0;
    bool neg = false;
    if (s[i] == '-' || s[i] == '+') {
        neg = (s[i] == '-');
        ++i;
    }
    long long intpart = 0, fracpart = 0, scale = 1;
    bool any_digit = false;
    for (; i < s.size() && std::isdigit(static_cast<unsigned char>(s[i])); ++i) {
        intpart = intpart * 10 + (s[i] - '0');
        any_digit = true;
    }
    if (i < s.size() && s[i] == '.') {
        ++i;
        for (; i < s.size() && std::isdigit(static_cast<unsigned char>(s[i])); ++i) {
            if (scale > 1000000000000LL) return std::nullopt;  // too many digits
            fracpart = fracpart * 10 + (s[i] - '0');
            scale *= 10;
            any_digit = true;
        }
    }
    if (!any_digit || i != s.size()) return std::nullopt;
    Rational r(intpart * scale + fracpart, scale);
    return neg ? -r : r;
}

std::string Rational::to_string() const {
    long long d = den_;
    long long mul = 1;
    while (d % 2 == 0) { d /= 2; mul *= 5; }
    while (d % 5 == 0) { d /= 5; mul *= 2; }
    if (d != 1) return std::to_string(num_) + "/" + std::to_string(den_);
    long long scaled = num_ * mul;
    long long denom = den_ * mul;  // now a power of ten
    if (denom == 1) return std::to_string(scaled);
    bool neg = scaled < 0;
    unsigned long long mag = neg ? static_cast<unsigned long long>(-scaled)
                                 : static_cast<unsigned long long>(scaled);
    std::string digits = std::to_string(mag);
    std::string dstr = std::to_string(denom);
    std::size_t places = dstr.size() - 1;
    while (digits.size() <= places) digits.insert(digits.begin(), '0');
    digits.insert(digits.size() - places, ".");
    while (digits.back() == '0') digits.pop_back();
    if (digits.back() == '.') digits.pop_back();
    return (neg ? "-" : "") + digits;
}

Equation form_equation(const std::vector<Quantity>& qs, const SignAssignment& y) {
    if (y.signs.size() != qs.size())
        throw EquationError("sign assignment length does not match quantity count");
    Equation e;
    bool saw_unknown = false;
    for (std::size_t i = 0; i < qs.size(); ++i) {
        if (qs[i].is_unknown) {
            if (y.signs[i] == Sign::Zero)
                throw EquationError("unknown quantity cannot carry sign 0");
            if (saw_unknown) throw EquationError("multiple unknown quantities");
            saw_unknown = true;
            e.unknown_sign = y.signs[i];
        } else {
            e.constants.push_back({y.signs[i], *qs[i].value});
        }
    }
    if (!saw_unknown) throw EquationError("no unknown quantity in assignment");
    return e;
}

Rational solve(const Equation& e) {
    Rational acc;
    for (const auto& term : e.constants) {
        if (term.sign == Sign::Plus) acc = acc + term.value;
        else if (term.sign == Sign::Minus) acc = acc - term.value;
    }
    // s_x is +-1, so dividing by it is multiplying by it.
    return e.unknown_sign == Sign::Plus ? -acc : acc;
}

std::string render_equation(const Equation& e) {
    std::string out;
    bool first = true;
    for (const auto& term : e.constants) {
        if (term.sign == Sign::Zero) continue;
        if (first) {
            if (term.sign == Sign::Minus) out += "-";
            out += term.value.to_string();
            first = false;
        } else {
            out += term.sign == Sign::Plus ? " + " : " - ";
            out += term.value.to_string();
        }
    }
    if (first) {
        out += e.unknown_sign == Sign::Plus ? "x" : "-x";
    } else {
        out += e.unknown_sign == Sign::Plus ? " + x" : " - x";
    }
    out += " = 0";
    return out;
}

}  // namespace quantag
