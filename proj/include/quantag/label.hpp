// The 9 signed span labels plus the outside label of the relaxed variant.
#pragma once

#include <cstdint>
#include <string>

#include "quantag/types.hpp"

namespace quantag {

enum class LabelKind : uint8_t { L = 0, N = 1, R = 2, O = 3 };

struct Label {
    LabelKind kind = LabelKind::O;
    Sign sign = Sign::Zero;  // meaningless for O

    bool operator==(const Label& o) const {
        if (kind != o.kind) return false;
        return kind == LabelKind::O || sign == o.sign;
    }

    // Fixed order L+ < L0 < L- < N+ < N0 < N- < R+ < R0 < R- < O,
    // used for deterministic MAP tie-breaking.
    int order() const {
        if (kind == LabelKind::O) return 9;
        int sign_rank = sign == Sign::Plus ? 0 : (sign == Sign::Zero ? 1 : 2);
        return static_cast<int>(kind) * 3 + sign_rank;
    }

    std::string to_string() const {
        switch (kind) {
            case LabelKind::L: return std::string("L") + sign_char(sign);
            case LabelKind::N: return std::string("N") + sign_char(sign);
            case LabelKind::R: return std::string("R") + sign_char(sign);
            case LabelKind::O: return "O";
        }
        return "?";
    }
};

inline Label make_label(LabelKind k, Sign s) { return Label{k, s}; }

constexpr Sign kAllSigns[3] = {Sign::Plus, Sign::Zero, Sign::Minus};

}  // namespace quantag
