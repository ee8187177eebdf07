#include "quantag/windowing.hpp"

#include <algorithm>
#include <stdexcept>

namespace quantag {

TokenSequence build_token_sequence(const Problem& problem, int window) {
    if (window != kFullWindow && window < 1)
        throw std::invalid_argument("window half-width must be >= 1 or FULL");
    if (problem.quantities.empty())
        throw std::invalid_argument("problem has no extracted quantities");

    int n_tokens = static_cast<int>(problem.tokens.size());
    std::vector<char> keep(n_tokens, 0);
    if (window == kFullWindow) {
        std::fill(keep.begin(), keep.end(), 1);
    } else {
        for (const auto& q : problem.quantities) {
            int lo = std::max(0, q.anchor - (window - 1));
            int hi = std::min(n_tokens - 1, q.anchor + (window - 1));
            for (int i = lo; i <= hi; ++i) keep[i] = 1;
        }
    }

    TokenSequence t;
    t.window = window;
    std::vector<int> pos_of(n_tokens, -1);
    for (int i = 0; i < n_tokens; ++i) {
        if (!keep[i]) continue;
        pos_of[i] = t.size();
        t.items.push_back({problem.tokens[i], i});
    }
    for (std::size_t qi = 0; qi < problem.quantities.size(); ++qi) {
        int p = pos_of[problem.quantities[qi].anchor];
        t.quantity_marks.push_back({p, static_cast<int>(qi)});
    }
    return t;
}

}  // namespace quantag
