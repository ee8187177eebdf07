// Sparse feature extraction over token sequences, labels and segments.
#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "quantag/label.hpp"
#include "quantag/types.hpp"
#include "quantag/windowing.hpp"

namespace quantag {

struct FeatureVector {
    // (dictionary index, value); indicator features carry 1.0.
    std::vector<std::pair<uint32_t, double>> items;

    void add(uint32_t index, double value = 1.0) { items.push_back({index, value}); }
    // Sorts by index and collapses duplicates (indicators stay 1.0).
    void finalize();
    std::size_t size() const { return items.size(); }
};

class FeatureDictionary {
  public:
    // Returns the index for `name`, growing the dictionary unless frozen.
    // Frozen + unseen -> nullopt (the feature is dropped).
    std::optional<uint32_t> intern(const std::string& name);
    std::optional<uint32_t> lookup(const std::string& name) const;

    void freeze() { frozen_ = true; }
    bool frozen() const { return frozen_; }
    std::size_t size() const { return names_.size(); }
    const std::vector<std::string>& names() const { return names_; }

    // Rebuilds from a saved name list (used by model loading); frozen.
    static FeatureDictionary from_names(std::vector<std::string> names);

  private:
    std::unordered_map<std::string, uint32_t> index_;
    std::vector<std::string> names_;
    bool frozen_ = false;
};

struct DependencyArc {
    int head = -1;  // token index; -1 for root
    int dep = -1;
    std::string rel;
};

// External per-problem annotations (POS, lemmas, parses, concept categories)
// produced by outside tools and loaded from a sidecar file.
struct AnnotationSidecar {
    std::vector<std::string> tokens;
    std::vector<std::string> pos;
    std::vector<std::string> lemmas;
    std::vector<DependencyArc> deps;
    std::map<int, std::string> concepts;  // token index -> category
};

// Parses the sidecar file and validates token lists against the problems.
// A mismatching token list is a hard error naming the problem id.
std::map<std::string, AnnotationSidecar> load_annotations(const std::string& path,
                                                          const std::vector<Problem>& problems);

class AnnotationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Per-problem extractor. Holds the problem context (question sentence,
// constant extremes, keyword hits) so the per-node calls stay cheap.
class FeatureExtractor {
  public:
    FeatureExtractor(const Problem& problem, FeatureDictionary* dict,
                     const AnnotationSidecar* sidecar = nullptr);

    FeatureVector node_features(const TokenSequence& t, int position, Label label) const;
    FeatureVector edge_features(const TokenSequence& t, Label from, Label to,
                                int position) const;
    // QT(s) segments [u, v] with one quantity mark inside.
    FeatureVector segment_features(const TokenSequence& t, int u, int v, Sign sign) const;
    // Adjacency features between consecutive segments.
    FeatureVector segment_pair_features(Sign from, Sign to) const;

    const Problem& problem() const { return *problem_; }

  private:
    void add(FeatureVector& fv, const std::string& name) const;
    void quantity_node_features(FeatureVector& fv, const std::string& lbl,
                                const TokenSequence& t, int position, int quantity_index) const;

    const Problem* problem_;
    FeatureDictionary* dict_;
    const AnnotationSidecar* sidecar_;
    int question_sentence_ = -1;
    std::optional<Rational> const_max_, const_min_;
    std::vector<std::string> keyword_class_;  // per source token; "" if none
    std::vector<std::string> token_lower_;    // per source token
    std::vector<char> is_verb_;               // surface heuristic, per source token
    std::vector<std::string> head_noun_;      // per quantity; "" if none
    std::vector<std::string> unit_noun_;      // sidecar-based; per quantity
};

// Question sentence = last sentence containing "?", else the last sentence.
int question_sentence_index(const std::vector<std::string>& tokens,
                            const std::vector<SentenceRange>& sentences);

}  // namespace quantag
