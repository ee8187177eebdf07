// Variant-specific labeled DAGs over the token sequence. Paths are exactly
// the admissible (sign assignment, span segmentation) pairs.
#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "quantag/features.hpp"
#include "quantag/label.hpp"
#include "quantag/windowing.hpp"

namespace quantag {

enum class Variant { QT, QTS, QTR, QTFIX };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);

class LatticeError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Deduplicated feature vectors with lattice-local feature ids; `global_ids`
// maps local -> dictionary index and is sorted ascending.
struct FeaturePool {
    std::vector<FeatureVector> vecs;
    std::vector<uint32_t> global_ids;
};

struct LatticeNode {
    int position = 0;       // position in t (segment start for QTS)
    int end_position = 0;   // == position except for QTS segments
    int mark_position = -1; // quantity-mark position inside [position, end_position]
    int quantity_index = -1;  // index into Q when this node fixes a quantity's sign
    Label label;              // N_sign for segments and QTFIX nodes
    uint32_t feat = 0;        // index into pool.vecs
};

struct LatticeEdge {
    uint32_t from = 0;
    uint32_t to = 0;
    uint32_t feat = 0;
};

struct Lattice {
    Variant variant = Variant::QT;
    int n = 0;                // |t|
    int num_quantities = 0;
    int unknown_quantity = -1;
    std::vector<LatticeNode> nodes;  // in topological order
    std::vector<LatticeEdge> edges;
    std::vector<uint32_t> start_nodes;
    std::vector<uint32_t> end_nodes;
    std::shared_ptr<const FeaturePool> pool;

    // CSR adjacency; entries are edge indices.
    std::vector<uint32_t> in_offsets, in_edges;
    std::vector<uint32_t> out_offsets, out_edges;

    // Per-position label expansion of a node (single label, or the segment's
    // L..N..R rendering); used for span recovery and MAP tie-breaking.
    std::vector<Label> node_expansion(uint32_t node_id) const;

    std::size_t memory_edges() const { return edges.size(); }
};

Lattice build_lattice(const TokenSequence& t, Variant variant, const FeatureExtractor& fx);

// Sub-lattice whose paths are exactly those inducing `y`. Latent boundaries
// (and O placements) stay free. Throws on inadmissible y.
Lattice clamp(const Lattice& lat, const SignAssignment& y);

// Number of start->end paths by the counting recurrence.
double count_paths(const Lattice& lat);

struct LatticePath {
    std::vector<uint32_t> nodes;
    SignAssignment signs;
    std::vector<Label> labels;  // per-position expansion over t (QTFIX: per quantity)
    // Per quantity: [start, end] position range of its span in t.
    std::vector<std::pair<int, int>> spans;
    double score = 0.0;  // filled by scoring/decoding
};

// Every distinct start->end path once. Refuses when the counting recurrence
// estimates more than `limit` paths.
std::vector<LatticePath> enumerate_paths(const Lattice& lat, std::size_t limit);

// Recovers signs/spans/labels for a node id sequence.
LatticePath make_path(const Lattice& lat, std::vector<uint32_t> node_ids);

// w . f summed over the path's nodes and edges.
double score_path(const Lattice& lat, const LatticePath& path, const std::vector<double>& weights);

// Plain-text adjacency listing for the CLI `paths` command.
std::string debug_dump(const Lattice& lat);

}  // namespace quantag
