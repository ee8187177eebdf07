// Merged token windows around quantities (the working sequence t).
#pragma once

#include <string>
#include <vector>

#include "quantag/types.hpp"

namespace quantag {

// J = kFullWindow means the window spans the whole problem text.
constexpr int kFullWindow = -1;

struct TokenSequenceItem {
    std::string token;
    int source_index = 0;  // index into Problem.tokens
};

struct QuantityMark {
    int position = 0;        // position in the merged sequence
    int quantity_index = 0;  // index into Problem.quantities
};

struct TokenSequence {
    std::vector<TokenSequenceItem> items;
    std::vector<QuantityMark> quantity_marks;  // in Q order
    int window = 1;                            // J, or kFullWindow

    int size() const { return static_cast<int>(items.size()); }
    // -1 when the position carries no quantity.
    int quantity_at(int pos) const {
        for (const auto& m : quantity_marks)
            if (m.position == pos) return m.quantity_index;
        return -1;
    }
};

// Union of the per-quantity windows [anchor-(J-1), anchor+(J-1)], clipped to
// the text, in source order.
TokenSequence build_token_sequence(const Problem& problem, int window);

}  // namespace quantag
