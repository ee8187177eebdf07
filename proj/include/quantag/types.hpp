// Core domain types: signs, exact rationals, quantities, problems.
#pragma once

#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace quantag {

enum class Sign : int8_t { Minus = -1, Zero = 0, Plus = 1 };

inline int sign_value(Sign s) { return static_cast<int>(s); }

inline char sign_char(Sign s) {
    switch (s) {
        case Sign::Plus: return '+';
        case Sign::Zero: return '0';
        case Sign::Minus: return '-';
    }
    return '?';
}

inline Sign sign_from_int(int v) {
    if (v > 0) return Sign::Plus;
    if (v < 0) return Sign::Minus;
    return Sign::Zero;
}

inline Sign flipped(Sign s) { return sign_from_int(-sign_value(s)); }

// Exact rational on int64. Dataset values are short decimals, so this never
// gets anywhere near overflow; normalization keeps gcd(num, den) = 1, den > 0.
class Rational {
  public:
    Rational() = default;
    Rational(long long num, long long den) : num_(num), den_(den) { normalize(); }
    static Rational from_int(long long v) { return Rational(v, 1); }

    // Parses "7341", "3.5", "0.25". Caller strips grouping commas first.
    static std::optional<Rational> parse_decimal(const std::string& s);

    long long num() const { return num_; }
    long long den() const { return den_; }

    double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

    // Exact decimal rendering; falls back to "num/den" if the reduced
    // denominator has a prime factor other than 2 or 5.
    std::string to_string() const;

    Rational operator-() const { return Rational(-num_, den_); }
    Rational operator+(const Rational& o) const {
        return Rational(num_ * o.den_ + o.num_ * den_, den_ * o.den_);
    }
    Rational operator-(const Rational& o) const { return *this + (-o); }
    Rational operator*(const Rational& o) const { return Rational(num_ * o.num_, den_ * o.den_); }
    bool operator==(const Rational& o) const { return num_ == o.num_ && den_ == o.den_; }
    bool operator!=(const Rational& o) const { return !(*this == o); }
    bool operator<(const Rational& o) const { return num_ * o.den_ < o.num_ * den_; }
    bool is_negative() const { return num_ < 0; }
    bool is_zero() const { return num_ == 0; }

  private:
    void normalize() {
        if (den_ == 0) throw std::invalid_argument("rational with zero denominator");
        if (den_ < 0) { num_ = -num_; den_ = -den_; }
        long long g = std::gcd(num_ < 0 ? -num_ : num_, den_);
        if (g > 1) { num_ /= g; den_ /= g; }
    }
    long long num_ = 0;
    long long den_ = 1;
};

struct Quantity {
    std::optional<Rational> value;  // absent for the unknown
    int anchor = -1;                // token index into Problem.tokens
    bool is_unknown = false;
    std::string surface;
};

struct SignAssignment {
    std::vector<Sign> signs;  // one per quantity, in Q order

    bool operator==(const SignAssignment& o) const { return signs == o.signs; }
    std::string to_string() const {
        std::string s;
        for (Sign x : signs) { s.push_back(sign_char(x)); }
        return s;
    }
};

// [begin, end) token range of one sentence.
struct SentenceRange {
    int begin = 0;
    int end = 0;
};

struct Problem {
    std::string id;
    std::string text;
    std::vector<std::string> tokens;
    std::vector<SentenceRange> sentences;
    std::vector<Quantity> quantities;  // ordered by anchor; exactly one unknown
    std::optional<std::string> gold_equation_text;
    std::optional<SignAssignment> gold_signs;
    std::optional<double> gold_solution;

    int unknown_index() const {
        for (std::size_t i = 0; i < quantities.size(); ++i)
            if (quantities[i].is_unknown) return static_cast<int>(i);
        return -1;
    }
    int num_constants() const {
        int m = 0;
        for (const auto& q : quantities) m += q.is_unknown ? 0 : 1;
        return m;
    }
    // Index of the sentence containing token index `tok`.
    int sentence_of(int tok) const {
        for (std::size_t s = 0; s < sentences.size(); ++s)
            if (tok >= sentences[s].begin && tok < sentences[s].end) return static_cast<int>(s);
        return -1;
    }
};

}  // namespace quantag
