#include "quantag/features.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include "json.hpp"
#include "quantag/util.hpp"

namespace quantag {

void FeatureVector::finalize() {
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end(),
                            [](const auto& a, const auto& b) { return a.first == b.first; }),
                items.end());
}

std::optional<uint32_t> FeatureDictionary::intern(const std::string& name) {
    auto it = index_.find(name);
    if (it != index_.end()) return it->second;
    if (frozen_) return std::nullopt;
    uint32_t id = static_cast<uint32_t>(names_.size());
    index_.emplace(name, id);
    names_.push_back(name);
    return id;
}

std::optional<uint32_t> FeatureDictionary::lookup(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

FeatureDictionary FeatureDictionary::from_names(std::vector<std::string> names) {
    FeatureDictionary d;
    d.names_ = std::move(names);
    for (uint32_t i = 0; i < d.names_.size(); ++i) d.index_.emplace(d.names_[i], i);
    d.frozen_ = true;
    return d;
}

int question_sentence_index(const std::vector<std::string>& tokens,
                            const std::vector<SentenceRange>& sentences) {
    if (sentences.empty()) return -1;
    for (int s = static_cast<int>(sentences.size()) - 1; s >= 0; --s) {
        for (int i = sentences[s].begin; i < sentences[s].end; ++i)
            if (tokens[i] == "?") return s;
    }
    return static_cast<int>(sentences.size()) - 1;
}

namespace {

// Inflection-folded sign-cue lexicon.
const std::map<std::string, std::string>& keyword_classes() {
    static const std::map<std::string, std::string> kw = {
        {"total", "total"},        {"totals", "total"},      {"altogether", "altogether"},
        {"sum", "sum"},            {"sums", "sum"},          {"left", "left"},
        {"remain", "remain"},      {"remains", "remain"},    {"remained", "remain"},
        {"remaining", "remain"},   {"more", "more"},         {"fewer", "fewer"},
        {"gave", "gave"},          {"give", "gave"},         {"gives", "gave"},
        {"given", "gave"},         {"received", "received"}, {"receive", "received"},
        {"receives", "received"},  {"spent", "spent"},       {"spend", "spent"},
        {"spends", "spent"},       {"now", "now"},           {"began", "began"},
        {"begin", "began"},        {"begins", "began"},      {"beginning", "began"},
        {"each", "each"},
    };
    return kw;
}

const std::set<std::string>& verb_lexicon() {
    static const std::set<std::string> verbs = {
        "is",     "are",    "was",     "were",    "be",      "been",    "has",
        "have",   "had",    "do",      "does",    "did",     "get",     "gets",
        "got",    "buy",    "buys",    "bought",  "sell",    "sells",   "sold",
        "give",   "gives",  "gave",    "given",   "take",    "takes",   "took",
        "find",   "finds",  "found",   "lose",    "loses",   "lost",    "pick",
        "picks",  "picked", "plant",   "plants",  "planted", "eat",     "eats",
        "ate",    "spend",  "spends",  "spent",   "pay",     "pays",    "paid",
        "add",    "adds",   "added",   "remove",  "removes", "removed", "leave",
        "leaves", "left",   "receive", "receives","received","put",     "puts",
        "grow",   "grows",  "grew",    "go",      "goes",    "went",    "make",
        "makes",  "made",   "need",    "needs",   "needed",  "remain",  "remains",
        "remained","contain","contains","contained","use",   "uses",    "used",
        "will",   "plan",   "plans",   "planned", "bring",   "brings",  "brought",
        "catch",  "catches","caught",  "win",     "wins",    "won",     "collect",
        "collects","collected",
    };
    return verbs;
}

const std::set<std::string>& noun_stopwords() {
    static const std::set<std::string> stop = {
        "a",    "an",   "the",  "of",   "in",   "on",    "at",    "to",   "his",
        "her",  "their","its",  "my",   "your", "more",  "many",  "much", "some",
        "all",  "few",  "fewer","other","than", "and",   "or",    "with", "from",
        "by",   "were", "there","still","then",
    };
    return stop;
}

bool surface_is_verb(const std::string& lower) {
    if (verb_lexicon().count(lower)) return true;
    return lower.size() > 3 && lower.compare(lower.size() - 2, 2, "ed") == 0;
}

bool alphabetic(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s)
        if (!std::isalpha(static_cast<unsigned char>(c))) return false;
    return true;
}

std::string token_shape(const std::string& s) {
    std::string shape;
    for (char c : s) {
        unsigned char u = static_cast<unsigned char>(c);
        if (std::isdigit(u)) shape.push_back('d');
        else if (std::isupper(u)) shape.push_back('A');
        else if (std::islower(u)) shape.push_back('a');
        else shape.push_back(c);
    }
    return shape;
}

bool digit_token(const std::string& s) {
    if (s.empty() || !std::isdigit(static_cast<unsigned char>(s[0]))) return false;
    for (char c : s)
        if (!std::isdigit(static_cast<unsigned char>(c)) && c != ',' && c != '.') return false;
    return true;
}

}  // namespace

FeatureExtractor::FeatureExtractor(const Problem& problem, FeatureDictionary* dict,
                                   const AnnotationSidecar* sidecar)
    : problem_(&problem), dict_(dict), sidecar_(sidecar) {
    question_sentence_ = question_sentence_index(problem.tokens, problem.sentences);

    for (const auto& q : problem.quantities) {
        if (q.is_unknown) continue;
        if (!const_max_ || *const_max_ < *q.value) const_max_ = q.value;
        if (!const_min_ || *q.value < *const_min_) const_min_ = q.value;
    }

    token_lower_.reserve(problem.tokens.size());
    for (const auto& tok : problem.tokens) token_lower_.push_back(lowercased(tok));

    keyword_class_.assign(problem.tokens.size(), "");
    is_verb_.assign(problem.tokens.size(), 0);
    for (std::size_t i = 0; i < token_lower_.size(); ++i) {
        auto it = keyword_classes().find(token_lower_[i]);
        if (it != keyword_classes().end()) keyword_class_[i] = it->second;
        is_verb_[i] = surface_is_verb(token_lower_[i]) ? 1 : 0;
    }

    // First plausible unit noun after each quantity, within its sentence.
    head_noun_.assign(problem.quantities.size(), "");
    unit_noun_.assign(problem.quantities.size(), "");
    for (std::size_t qi = 0; qi < problem.quantities.size(); ++qi) {
        int anchor = problem.quantities[qi].anchor;
        int sent = problem.sentence_of(anchor);
        if (sent < 0) continue;
        for (int i = anchor + 1; i < problem.sentences[sent].end; ++i) {
            const std::string& low = token_lower_[i];
            if (!alphabetic(problem.tokens[i])) continue;
            if (noun_stopwords().count(low) || is_verb_[i]) continue;
            head_noun_[qi] = low;
            break;
        }
        if (sidecar_ && !sidecar_->pos.empty()) {
            for (int i = anchor + 1; i < problem.sentences[sent].end; ++i) {
                if (sidecar_->pos[i].rfind("NN", 0) == 0) {
                    unit_noun_[qi] = token_lower_[i];
                    break;
                }
            }
        }
    }
}

void FeatureExtractor::add(FeatureVector& fv, const std::string& name) const {
    if (auto id = dict_->intern(name)) fv.add(*id);
}

void FeatureExtractor::quantity_node_features(FeatureVector& fv, const std::string& lbl,
                                              const TokenSequence& t, int position,
                                              int quantity_index) const {
    const Quantity& q = problem_->quantities[quantity_index];
    if (q.is_unknown) add(fv, lbl + "|unk");
    std::size_t nq = problem_->quantities.size();
    const char* ord = quantity_index == 0 ? "first"
                      : quantity_index == static_cast<int>(nq) - 1 ? "last"
                                                                   : "mid";
    add(fv, lbl + "|ord=" + ord);
    if (!q.is_unknown) {
        if (const_max_ && *q.value == *const_max_) add(fv, lbl + "|qmax");
        if (const_min_ && *q.value == *const_min_) add(fv, lbl + "|qmin");
    }

    // Nearest verb inside this quantity's window, left on ties.
    int n_src = static_cast<int>(problem_->tokens.size());
    int radius = t.window == kFullWindow ? n_src : t.window - 1;
    for (int d = 1; d <= radius; ++d) {
        int l = q.anchor - d, r = q.anchor + d;
        if (l >= 0 && is_verb_[l]) { add(fv, lbl + "|v=" + token_lower_[l]); break; }
        if (r < n_src && is_verb_[r]) { add(fv, lbl + "|v=" + token_lower_[r]); break; }
    }
    if (!head_noun_[quantity_index].empty())
        add(fv, lbl + "|hn=" + head_noun_[quantity_index]);

    if (sidecar_) {
        if (!sidecar_->deps.empty()) {
            for (const auto& arc : sidecar_->deps) {
                if (arc.dep == q.anchor) {
                    add(fv, lbl + "|dep=" + arc.rel);
                    auto cat = sidecar_->concepts.find(arc.head);
                    if (cat != sidecar_->concepts.end())
                        add(fv, lbl + "|vcat=" + cat->second);
                    break;
                }
            }
        }
        int unk = problem_->unknown_index();
        if (unk >= 0 && !q.is_unknown && !unit_noun_[quantity_index].empty() &&
            unit_noun_[quantity_index] == unit_noun_[unk])
            add(fv, lbl + "|unit_match");
    }
    (void)position;
}

FeatureVector FeatureExtractor::node_features(const TokenSequence& t, int position,
                                              Label label) const {
    FeatureVector fv;
    const std::string lbl = label.to_string();
    const TokenSequenceItem& item = t.items[position];
    int src = item.source_index;

    add(fv, lbl + "|w=" + token_lower_[src]);
    add(fv, lbl + "|sh=" + token_shape(item.token));
    if (digit_token(item.token)) add(fv, lbl + "|digit");

    // Signed distance to the nearest quantity mark, bucketed to [-3, 3].
    int best = 0, best_abs = -1;
    for (const auto& m : t.quantity_marks) {
        int d = position - m.position;
        int ad = d < 0 ? -d : d;
        if (best_abs < 0 || ad < best_abs) { best = d; best_abs = ad; }
    }
    int bucket = std::clamp(best, -3, 3);
    add(fv, lbl + "|dist=" + std::to_string(bucket));

    if (problem_->sentence_of(src) == question_sentence_) add(fv, lbl + "|inq");
    if (!keyword_class_[src].empty()) add(fv, lbl + "|kw=" + keyword_class_[src]);
    if (sidecar_ && !sidecar_->pos.empty()) add(fv, lbl + "|pos=" + sidecar_->pos[src]);

    if (label.kind == LabelKind::N) {
        int qi = t.quantity_at(position);
        if (qi >= 0) quantity_node_features(fv, lbl, t, position, qi);
    }
    fv.finalize();
    return fv;
}

FeatureVector FeatureExtractor::edge_features(const TokenSequence& /*t*/, Label from, Label to,
                                              int /*position*/) const {
    FeatureVector fv;
    add(fv, "bg=" + from.to_string() + ">" + to.to_string());
    // Span-boundary sign pairs.
    bool boundary = (from.kind == LabelKind::N && to.kind == LabelKind::N) ||
                    (from.kind == LabelKind::N && to.kind == LabelKind::L) ||
                    (from.kind == LabelKind::R && to.kind == LabelKind::L);
    if (boundary)
        add(fv, std::string("sp=") + sign_char(from.sign) + ">" + sign_char(to.sign));
    fv.finalize();
    return fv;
}

FeatureVector FeatureExtractor::segment_features(const TokenSequence& t, int u, int v,
                                                 Sign sign) const {
    if (u > v) throw std::invalid_argument("segment with u > v");
    int mark_pos = -1, mark_qi = -1;
    for (const auto& m : t.quantity_marks) {
        if (m.position >= u && m.position <= v) {
            if (mark_pos >= 0)
                throw std::invalid_argument("segment spans more than one quantity");
            mark_pos = m.position;
            mark_qi = m.quantity_index;
        }
    }
    if (mark_pos < 0) throw std::invalid_argument("segment contains no quantity mark");

    FeatureVector fv;
    const std::string sgn(1, sign_char(sign));
    int len = v - u + 1;
    const char* bucket = len == 1 ? "1" : len == 2 ? "2" : len == 3 ? "3"
                         : len <= 5 ? "4-5" : "6+";
    add(fv, "seg|len=" + std::string(bucket) + "|s=" + sgn);
    for (int i = u; i <= v; ++i) {
        int src = t.items[i].source_index;
        add(fv, "seg|bow=" + token_lower_[src] + "|s=" + sgn);
        if (!keyword_class_[src].empty())
            add(fv, "seg|kw=" + keyword_class_[src] + "|s=" + sgn);
    }
    add(fv, "seg|first=" + token_lower_[t.items[u].source_index] + "|s=" + sgn);
    add(fv, "seg|last=" + token_lower_[t.items[v].source_index] + "|s=" + sgn);

    // The contained quantity keeps its N-style features.
    std::string nlbl = make_label(LabelKind::N, sign).to_string();
    add(fv, nlbl + "|w=" + token_lower_[t.items[mark_pos].source_index]);
    quantity_node_features(fv, nlbl, t, mark_pos, mark_qi);
    fv.finalize();
    return fv;
}

FeatureVector FeatureExtractor::segment_pair_features(Sign from, Sign to) const {
    FeatureVector fv;
    add(fv, std::string("segsp=") + sign_char(from) + ">" + sign_char(to));
    fv.finalize();
    return fv;
}

std::map<std::string, AnnotationSidecar> load_annotations(const std::string& path,
                                                          const std::vector<Problem>& problems) {
    std::ifstream in(path);
    if (!in) throw AnnotationError("cannot open annotations file: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw AnnotationError("malformed annotations JSON: " + std::string(e.what()));
    }
    if (!doc.is_array()) throw AnnotationError("annotations root must be a JSON array");

    std::map<std::string, const Problem*> by_id;
    for (const auto& p : problems) by_id[p.id] = &p;

    std::map<std::string, AnnotationSidecar> out;
    for (const auto& rec : doc) {
        if (!rec.is_object() || !rec.contains("id")) continue;
        std::string id = rec["id"].is_string() ? rec["id"].get<std::string>()
                                               : std::to_string(rec["id"].get<long long>());
        AnnotationSidecar sc;
        if (rec.contains("tokens")) sc.tokens = rec["tokens"].get<std::vector<std::string>>();
        if (rec.contains("pos")) sc.pos = rec["pos"].get<std::vector<std::string>>();
        if (rec.contains("lemmas")) sc.lemmas = rec["lemmas"].get<std::vector<std::string>>();
        if (rec.contains("deps")) {
            for (const auto& a : rec["deps"]) {
                DependencyArc arc;
                arc.head = a.value("head", -1);
                arc.dep = a.value("dep", -1);
                arc.rel = a.value("rel", "");
                sc.deps.push_back(std::move(arc));
            }
        }
        if (rec.contains("concepts")) {
            for (const auto& c : rec["concepts"])
                sc.concepts[c.value("token", -1)] = c.value("category", "");
        }

        auto it = by_id.find(id);
        if (it != by_id.end()) {
            const Problem& p = *it->second;
            if (sc.tokens != p.tokens)
                throw AnnotationError("annotation token mismatch for problem " + id);
            if (!sc.pos.empty() && sc.pos.size() != p.tokens.size())
                throw AnnotationError("annotation pos length mismatch for problem " + id);
            for (const auto& arc : sc.deps) {
                if (arc.dep < 0 || arc.dep >= static_cast<int>(p.tokens.size()) ||
                    arc.head < -1 || arc.head >= static_cast<int>(p.tokens.size()))
                    throw AnnotationError("annotation arc out of range for problem " + id);
            }
        }
        out.emplace(std::move(id), std::move(sc));
    }
    return out;
}

}  // namespace quantag
