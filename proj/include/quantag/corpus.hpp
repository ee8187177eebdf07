// Dataset ingestion: tokenization, quantity extraction, gold-sign derivation.
#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "quantag/equation.hpp"
#include "quantag/types.hpp"

namespace quantag {

class DataError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

enum class DatasetFormat { Native, AddSub };

// One linear equation in one unknown, canonicalized to sum-of-terms = 0.
struct ParsedEquation {
    std::vector<std::pair<Sign, Rational>> constant_terms;
    Sign unknown_sign = Sign::Plus;
};

struct TokenizeResult {
    std::vector<std::string> tokens;
    std::vector<SentenceRange> sentences;
};

// Whitespace split with leading/trailing punctuation detached; numeric tokens
// keep internal commas and decimal points; sentences end at . ! ? tokens.
TokenizeResult tokenize(const std::string& text);

// Word -> value lexicon used for number words ("five" -> 5). The default
// covers zero..twenty and the decade words.
const std::map<std::string, long long>& default_number_lexicon();

// Constants (digit tokens and lexicon hits) in text order plus the unknown
// anchored in the question sentence. Returns nullopt and fills `why` when
// fewer than two constants are found or anchors collide.
std::optional<std::vector<Quantity>> extract_quantities(
    const std::vector<std::string>& tokens, const std::vector<SentenceRange>& sentences,
    std::string* why = nullptr,
    const std::map<std::string, long long>* number_lexicon = nullptr);

// Parses "X = 7341 - 4221" / "22 + x = 55" style strings (whitespace-free
// forms accepted) into sum = 0 form. Throws DataError on anything else.
ParsedEquation parse_equation_text(const std::string& s);

// Aligns the equation's constant terms to text quantities (leftmost unmatched
// value first), picks s_x so the solved value matches `gold_solution` when
// given, then flips globally so the first nonzero constant sign is +1.
// Returns nullopt + reason when a term has no matching quantity or no s_x
// choice reproduces the gold solution.
std::optional<SignAssignment> derive_gold_signs(const std::vector<Quantity>& quantities,
                                                const ParsedEquation& eq,
                                                std::optional<double> gold_solution,
                                                std::string* why = nullptr);

struct ParseStats {
    int total_records = 0;
    int parsed = 0;
    int skipped = 0;
    std::vector<std::pair<std::string, std::string>> skip_reasons;  // (id, reason)
};

struct ParseOptions {
    DatasetFormat format = DatasetFormat::Native;
    const std::map<std::string, long long>* number_lexicon = nullptr;
    bool quiet = false;  // suppress per-record warnings on stderr
};

// Reads a JSON dataset file. Records that fail quantity extraction or
// gold-sign derivation are skipped and counted. Zero usable problems is a
// hard error.
std::vector<Problem> parse_dataset(const std::string& path, const ParseOptions& opts,
                                   ParseStats* stats = nullptr);

// Loads a {"word": value, ...} JSON object for --lexicon overrides.
std::map<std::string, long long> load_number_lexicon(const std::string& path);

}  // namespace quantag
