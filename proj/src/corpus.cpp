#include "quantag/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iostream>

#include "json.hpp"
#include "quantag/util.hpp"

namespace quantag {

namespace {

bool is_detachable_punct(char c) {
    static const std::string puncts = ".,?!;:\"'()";
    return puncts.find(c) != std::string::npos;
}

bool is_sentence_end(const std::string& tok) {
    return tok == "." || tok == "!" || tok == "?";
}

void emit_chunk(const std::string& chunk, std::vector<std::string>& out) {
    std::size_t lo = 0, hi = chunk.size();
    std::vector<std::string> trailing;
    while (lo < hi && is_detachable_punct(chunk[lo])) {
        out.push_back(std::string(1, chunk[lo]));
        ++lo;
    }
    while (hi > lo && is_detachable_punct(chunk[hi - 1])) {
        trailing.insert(trailing.begin(), std::string(1, chunk[hi - 1]));
        --hi;
    }
    if (hi > lo) out.push_back(chunk.substr(lo, hi - lo));
    out.insert(out.end(), trailing.begin(), trailing.end());
}

}  // namespace

TokenizeResult tokenize(const std::string& text) {
    TokenizeResult res;
    std::string chunk;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!chunk.empty()) { emit_chunk(chunk, res.tokens); chunk.clear(); }
        } else {
            chunk.push_back(c);
        }
    }
    if (!chunk.empty()) emit_chunk(chunk, res.tokens);

    int start = 0;
    for (int i = 0; i < static_cast<int>(res.tokens.size()); ++i) {
        if (is_sentence_end(res.tokens[i])) {
            res.sentences.push_back({start, i + 1});
            start = i + 1;
        }
    }
    if (start < static_cast<int>(res.tokens.size()))
        res.sentences.push_back({start, static_cast<int>(res.tokens.size())});
    return res;
}

const std::map<std::string, long long>& default_number_lexicon() {
    static const std::map<std::string, long long> lex = {
        {"zero", 0},     {"one", 1},       {"two", 2},       {"three", 3},
        {"four", 4},     {"five", 5},      {"six", 6},       {"seven", 7},
        {"eight", 8},    {"nine", 9},      {"ten", 10},      {"eleven", 11},
        {"twelve", 12},  {"thirteen", 13}, {"fourteen", 14}, {"fifteen", 15},
        {"sixteen", 16}, {"seventeen", 17},{"eighteen", 18}, {"nineteen", 19},
        {"twenty", 20},  {"thirty", 30},   {"forty", 40},    {"fifty", 50},
        {"sixty", 60},   {"seventy", 70},  {"eighty", 80},   {"ninety", 90},
    };
    return lex;
}

namespace {

// Digit token with optional grouping commas and one decimal point.
std::optional<Rational> numeric_token_value(const std::string& tok) {
    if (tok.empty() || !std::isdigit(static_cast<unsigned char>(tok[0]))) return std::nullopt;
    std::string stripped;
    for (char c : tok) {
        if (c == ',') continue;
        stripped.push_back(c);
    }
    return Rational::parse_decimal(stripped);
}

bool is_interrogative(const std::string& tok) {
    std::string low = lowercased(tok);
    return low == "how" || low == "what" || low == "who" || low == "when";
}

}  // namespace

std::optional<std::vector<Quantity>> extract_quantities(
    const std::vector<std::string>& tokens, const std::vector<SentenceRange>& sentences,
    std::string* why, const std::map<std::string, long long>* number_lexicon) {
    auto fail = [&](const std::string& msg) -> std::optional<std::vector<Quantity>> {
        if (why) *why = msg;
        return std::nullopt;
    };
    if (sentences.empty()) return fail("no sentences");
    const auto& lex = number_lexicon ? *number_lexicon : default_number_lexicon();

    std::vector<Quantity> constants;
    for (int i = 0; i < static_cast<int>(tokens.size()); ++i) {
        std::optional<Rational> val = numeric_token_value(tokens[i]);
        if (!val) {
            auto it = lex.find(lowercased(tokens[i]));
            if (it != lex.end()) val = Rational::from_int(it->second);
        }
        if (val) {
            Quantity q;
            q.value = *val;
            q.anchor = i;
            q.is_unknown = false;
            q.surface = tokens[i];
            constants.push_back(std::move(q));
        }
    }
    if (static_cast<int>(constants.size()) < 2)
        return fail("fewer than 2 constant quantities");

    // Question sentence: last one containing "?", else the last sentence.
    int qs = static_cast<int>(sentences.size()) - 1;
    for (int s = static_cast<int>(sentences.size()) - 1; s >= 0; --s) {
        bool has_qmark = false;
        for (int i = sentences[s].begin; i < sentences[s].end; ++i)
            if (tokens[i] == "?") { has_qmark = true; break; }
        if (has_qmark) { qs = s; break; }
    }
    int anchor = sentences[qs].begin;
    for (int i = sentences[qs].begin; i < sentences[qs].end; ++i) {
        if (is_interrogative(tokens[i])) { anchor = i; break; }
    }

    Quantity unknown;
    unknown.anchor = anchor;
    unknown.is_unknown = true;
    unknown.surface = tokens[anchor];

    std::vector<Quantity> out;
    bool inserted = false;
    for (auto& c : constants) {
        if (!inserted && unknown.anchor < c.anchor) {
            out.push_back(unknown);
            inserted = true;
        }
        if (c.anchor == unknown.anchor)
            return fail("unknown anchor collides with a constant quantity");
        out.push_back(std::move(c));
    }
    if (!inserted) out.push_back(unknown);
    return out;
}

ParsedEquation parse_equation_text(const std::string& s) {
    std::string compact;
    for (char c : s)
        if (!std::isspace(static_cast<unsigned char>(c))) compact.push_back(c);
    std::size_t eq = compact.find('=');
    if (eq == std::string::npos || compact.find('=', eq + 1) != std::string::npos)
        throw DataError("equation must contain exactly one '='");
    std::string lhs = compact.substr(0, eq);
    std::string rhs = compact.substr(eq + 1);

    auto is_unknown_side = [](const std::string& side) { return side == "X" || side == "x"; };

    // Terms of "t1 (+|-) t2 ..." with each term a decimal numeral.
    auto parse_terms = [](const std::string& side) {
        std::vector<std::pair<Sign, Rational>> terms;
        if (side.empty()) throw DataError("empty equation side");
        std::size_t i = 0;
        Sign sign = Sign::Plus;
        bool expect_term = true;
        while (i < side.size()) {
            if (expect_term) {
                std::size_t j = i;
                while (j < side.size() &&
                       (std::isdigit(static_cast<unsigned char>(side[j])) || side[j] == '.'))
                    ++j;
                if (j == i) throw DataError("expected numeral in equation");
                auto val = Rational::parse_decimal(side.substr(i, j - i));
                if (!val) throw DataError("bad numeral in equation");
                terms.push_back({sign, *val});
                i = j;
                expect_term = false;
            } else {
                if (side[i] == '+') sign = Sign::Plus;
                else if (side[i] == '-') sign = Sign::Minus;
                else throw DataError("unsupported operator in equation");
                ++i;
                expect_term = true;
            }
        }
        if (expect_term) throw DataError("dangling operator in equation");
        return terms;
    };

    ParsedEquation pe;
    if (is_unknown_side(lhs)) {
        // X = rhs  ->  X - rhs = 0
        pe.unknown_sign = Sign::Plus;
        for (auto& [sg, val] : parse_terms(rhs)) pe.constant_terms.push_back({flipped(sg), val});
    } else if (is_unknown_side(rhs)) {
        // lhs = X  ->  lhs - X = 0
        pe.unknown_sign = Sign::Minus;
        pe.constant_terms = parse_terms(lhs);
    } else {
        throw DataError("unknown quantity must be alone on one side");
    }
    if (pe.constant_terms.empty()) throw DataError("equation has no constant terms");
    return pe;
}

std::optional<SignAssignment> derive_gold_signs(const std::vector<Quantity>& quantities,
                                                const ParsedEquation& eq,
                                                std::optional<double> gold_solution,
                                                std::string* why) {
    auto fail = [&](const std::string& msg) -> std::optional<SignAssignment> {
        if (why) *why = msg;
        return std::nullopt;
    };
    SignAssignment y;
    y.signs.assign(quantities.size(), Sign::Zero);
    std::vector<bool> matched(quantities.size(), false);

    int unk = -1;
    for (std::size_t i = 0; i < quantities.size(); ++i)
        if (quantities[i].is_unknown) unk = static_cast<int>(i);
    if (unk < 0) return fail("no unknown quantity");
    y.signs[unk] = eq.unknown_sign;

    for (const auto& [sg, val] : eq.constant_terms) {
        bool found = false;
        for (std::size_t i = 0; i < quantities.size(); ++i) {
            if (quantities[i].is_unknown || matched[i]) continue;
            if (*quantities[i].value == val) {
                matched[i] = true;
                y.signs[i] = sg;
                found = true;
                break;
            }
        }
        if (!found) return fail("equation constant " + val.to_string() + " not found in text");
    }

    if (gold_solution) {
        auto solves = [&](const SignAssignment& cand) {
            Rational x = solve(form_equation(quantities, cand));
            return std::abs(x.to_double() - *gold_solution) <= 1e-4;
        };
        if (!solves(y)) {
            y.signs[unk] = flipped(y.signs[unk]);
            if (!solves(y)) return fail("derived equation does not reproduce gold solution");
        }
    }

    // Normalize the global flip: first nonzero constant sign becomes +1.
    for (std::size_t i = 0; i < quantities.size(); ++i) {
        if (quantities[i].is_unknown || y.signs[i] == Sign::Zero) continue;
        if (y.signs[i] == Sign::Minus)
            for (auto& s : y.signs) s = flipped(s);
        break;
    }
    return y;
}

namespace {

using nlohmann::json;

std::string record_id(const json& rec, int index) {
    for (const char* key : {"id", "iIndex"}) {
        if (rec.contains(key)) {
            const auto& v = rec[key];
            if (v.is_string()) return v.get<std::string>();
            if (v.is_number_integer()) return std::to_string(v.get<long long>());
        }
    }
    return "record" + std::to_string(index);
}

const json* field(const json& rec, std::initializer_list<const char*> names) {
    for (const char* n : names)
        if (rec.contains(n)) return &rec[n];
    return nullptr;
}

}  // namespace

std::vector<Problem> parse_dataset(const std::string& path, const ParseOptions& opts,
                                   ParseStats* stats) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset file: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw DataError("malformed JSON in " + path + ": " + e.what());
    }
    if (!doc.is_array()) throw DataError("dataset root must be a JSON array: " + path);

    ParseStats local;
    std::vector<Problem> problems;
    int index = 0;
    for (const auto& rec : doc) {
        ++index;
        ++local.total_records;
        std::string id = record_id(rec, index);
        auto skip = [&](const std::string& reason) {
            ++local.skipped;
            local.skip_reasons.push_back({id, reason});
            if (!opts.quiet)
                std::cerr << "warning: skipping problem " << id << ": " << reason << "\n";
        };
        if (!rec.is_object()) { skip("record is not an object"); continue; }
        const json* text = field(rec, {"text", "sQuestion"});
        if (!text || !text->is_string()) { skip("missing text field"); continue; }

        Problem p;
        p.id = id;
        p.text = text->get<std::string>();
        auto tk = tokenize(p.text);
        p.tokens = std::move(tk.tokens);
        p.sentences = std::move(tk.sentences);

        std::string why;
        auto qs = extract_quantities(p.tokens, p.sentences, &why, opts.number_lexicon);
        if (!qs) { skip(why); continue; }
        p.quantities = std::move(*qs);

        const json* sols = field(rec, {"solutions", "lSolutions"});
        if (sols && sols->is_array() && !sols->empty() && (*sols)[0].is_number())
            p.gold_solution = (*sols)[0].get<double>();

        const json* eqs = field(rec, {"equations", "lEquations"});
        if (eqs && eqs->is_array() && !eqs->empty() && (*eqs)[0].is_string()) {
            p.gold_equation_text = (*eqs)[0].get<std::string>();
            try {
                ParsedEquation pe = parse_equation_text(*p.gold_equation_text);
                auto signs = derive_gold_signs(p.quantities, pe, p.gold_solution, &why);
                if (!signs) { skip(why); continue; }
                p.gold_signs = std::move(*signs);
            } catch (const DataError& e) {
                skip(e.what());
                continue;
            }
        }
        ++local.parsed;
        problems.push_back(std::move(p));
    }
    if (stats) *stats = local;
    if (problems.empty()) throw DataError("no usable problems in " + path);
    return problems;
}

std::map<std::string, long long> load_number_lexicon(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open lexicon file: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw DataError("malformed lexicon JSON: " + std::string(e.what()));
    }
    if (!doc.is_object()) throw DataError("lexicon must be a JSON object");
    std::map<std::string, long long> lex;
    for (auto it = doc.begin(); it != doc.end(); ++it)
        lex[lowercased(it.key())] = it.value().get<long long>();
    return lex;
}

}  // namespace quantag
