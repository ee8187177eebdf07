#include "quantag/lattice.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace quantag {

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::QT: return "qt";
        case Variant::QTS: return "qts";
        case Variant::QTR: return "qtr";
        case Variant::QTFIX: return "qtfix";
    }
    return "?";
}

Variant variant_from_name(const std::string& name) {
    if (name == "qt") return Variant::QT;
    if (name == "qts") return Variant::QTS;
    if (name == "qtr") return Variant::QTR;
    if (name == "qtfix") return Variant::QTFIX;
    throw LatticeError("unknown variant: " + name);
}

namespace {

// Interns feature vectors during construction; rewrites dictionary ids to
// lattice-local ids at the end so inference touches a compact index space.
class PoolBuilder {
  public:
    uint32_t intern(FeatureVector fv) {
        auto it = index_.find(fv.items);
        if (it != index_.end()) return it->second;
        uint32_t id = static_cast<uint32_t>(vecs_.size());
        index_.emplace(fv.items, id);
        vecs_.push_back(std::move(fv));
        return id;
    }

    std::shared_ptr<FeaturePool> finalize() {
        auto pool = std::make_shared<FeaturePool>();
        for (const auto& fv : vecs_)
            for (const auto& [gid, _] : fv.items) pool->global_ids.push_back(gid);
        std::sort(pool->global_ids.begin(), pool->global_ids.end());
        pool->global_ids.erase(
            std::unique(pool->global_ids.begin(), pool->global_ids.end()),
            pool->global_ids.end());
        pool->vecs = std::move(vecs_);
        for (auto& fv : pool->vecs) {
            for (auto& [id, _] : fv.items) {
                auto it = std::lower_bound(pool->global_ids.begin(), pool->global_ids.end(), id);
                id = static_cast<uint32_t>(it - pool->global_ids.begin());
            }
        }
        return pool;
    }

  private:
    std::map<std::vector<std::pair<uint32_t, double>>, uint32_t> index_;
    std::vector<FeatureVector> vecs_;
};

bool transition_allowed(Variant variant, Label a, Label b) {
    switch (a.kind) {
        case LabelKind::L:
            return (b.kind == LabelKind::L || b.kind == LabelKind::N) && a.sign == b.sign;
        case LabelKind::N:
            if (b.kind == LabelKind::R) return a.sign == b.sign;
            if (b.kind == LabelKind::L || b.kind == LabelKind::N) return true;
            return b.kind == LabelKind::O && variant == Variant::QTR;
        case LabelKind::R:
            if (b.kind == LabelKind::R) return a.sign == b.sign;
            if (b.kind == LabelKind::L || b.kind == LabelKind::N) return true;
            return b.kind == LabelKind::O && variant == Variant::QTR;
        case LabelKind::O:
            return b.kind == LabelKind::O || b.kind == LabelKind::L || b.kind == LabelKind::N;
    }
    return false;
}

void build_adjacency(Lattice& lat) {
    std::size_t nn = lat.nodes.size(), ne = lat.edges.size();
    lat.in_offsets.assign(nn + 1, 0);
    lat.out_offsets.assign(nn + 1, 0);
    for (const auto& e : lat.edges) {
        ++lat.in_offsets[e.to + 1];
        ++lat.out_offsets[e.from + 1];
    }
    for (std::size_t i = 1; i <= nn; ++i) {
        lat.in_offsets[i] += lat.in_offsets[i - 1];
        lat.out_offsets[i] += lat.out_offsets[i - 1];
    }
    lat.in_edges.resize(ne);
    lat.out_edges.resize(ne);
    std::vector<uint32_t> in_fill(lat.in_offsets.begin(), lat.in_offsets.end() - 1);
    std::vector<uint32_t> out_fill(lat.out_offsets.begin(), lat.out_offsets.end() - 1);
    for (uint32_t ei = 0; ei < ne; ++ei) {
        lat.in_edges[in_fill[lat.edges[ei].to]++] = ei;
        lat.out_edges[out_fill[lat.edges[ei].from]++] = ei;
    }
}

std::vector<Sign> allowed_signs(bool is_unknown) {
    if (is_unknown) return {Sign::Plus, Sign::Minus};
    return {Sign::Plus, Sign::Zero, Sign::Minus};
}

void build_chain_variant(Lattice& lat, const TokenSequence& t, const FeatureExtractor& fx,
                         PoolBuilder& pool) {
    const bool relaxed = lat.variant == Variant::QTR;
    int n = t.size();
    std::vector<std::vector<uint32_t>> at_pos(n);
    const auto& quantities = fx.problem().quantities;

    for (int pos = 0; pos < n; ++pos) {
        int qi = t.quantity_at(pos);
        auto add_node = [&](Label lbl, int quantity_index) {
            LatticeNode node;
            node.position = node.end_position = pos;
            node.mark_position = quantity_index >= 0 ? pos : -1;
            node.quantity_index = quantity_index;
            node.label = lbl;
            node.feat = pool.intern(fx.node_features(t, pos, lbl));
            at_pos[pos].push_back(static_cast<uint32_t>(lat.nodes.size()));
            lat.nodes.push_back(node);
        };
        if (qi >= 0) {
            for (Sign s : allowed_signs(quantities[qi].is_unknown))
                add_node(make_label(LabelKind::N, s), qi);
        } else {
            for (LabelKind k : {LabelKind::L, LabelKind::R})
                for (Sign s : kAllSigns) add_node(make_label(k, s), -1);
            if (relaxed) add_node(Label{LabelKind::O, Sign::Zero}, -1);
        }
    }

    for (int pos = 1; pos < n; ++pos) {
        for (uint32_t a : at_pos[pos - 1]) {
            for (uint32_t b : at_pos[pos]) {
                if (!transition_allowed(lat.variant, lat.nodes[a].label, lat.nodes[b].label))
                    continue;
                uint32_t feat = pool.intern(
                    fx.edge_features(t, lat.nodes[a].label, lat.nodes[b].label, pos));
                lat.edges.push_back({a, b, feat});
            }
        }
    }

    for (uint32_t v : at_pos[0]) {
        LabelKind k = lat.nodes[v].label.kind;
        if (k == LabelKind::L || k == LabelKind::N || k == LabelKind::O)
            lat.start_nodes.push_back(v);
    }
    for (uint32_t v : at_pos[n - 1]) {
        LabelKind k = lat.nodes[v].label.kind;
        if (k == LabelKind::N || k == LabelKind::R || k == LabelKind::O)
            lat.end_nodes.push_back(v);
    }
}

void build_semi_markov(Lattice& lat, const TokenSequence& t, const FeatureExtractor& fx,
                       PoolBuilder& pool) {
    int n = t.size();
    const auto& marks = t.quantity_marks;
    int k = static_cast<int>(marks.size());
    const auto& quantities = fx.problem().quantities;

    // seg_starting_at[pos] -> node ids of segments with u == pos.
    std::vector<std::vector<uint32_t>> seg_starting_at(n);
    std::vector<std::vector<uint32_t>> group(k);

    for (int j = 0; j < k; ++j) {
        int p = marks[j].position;
        int qi = marks[j].quantity_index;
        int u_lo = j == 0 ? 0 : marks[j - 1].position + 1;
        int v_hi = j == k - 1 ? n - 1 : marks[j + 1].position - 1;
        for (int u = u_lo; u <= p; ++u) {
            for (int v = p; v <= v_hi; ++v) {
                for (Sign s : allowed_signs(quantities[qi].is_unknown)) {
                    LatticeNode node;
                    node.position = u;
                    node.end_position = v;
                    node.mark_position = p;
                    node.quantity_index = qi;
                    node.label = make_label(LabelKind::N, s);
                    node.feat = pool.intern(fx.segment_features(t, u, v, s));
                    uint32_t id = static_cast<uint32_t>(lat.nodes.size());
                    lat.nodes.push_back(node);
                    group[j].push_back(id);
                    seg_starting_at[u].push_back(id);
                }
            }
        }
    }

    for (int j = 0; j + 1 < k; ++j) {
        for (uint32_t a : group[j]) {
            int next_start = lat.nodes[a].end_position + 1;
            if (next_start >= n) continue;
            for (uint32_t b : seg_starting_at[next_start]) {
                uint32_t feat = pool.intern(
                    fx.segment_pair_features(lat.nodes[a].label.sign, lat.nodes[b].label.sign));
                lat.edges.push_back({a, b, feat});
            }
        }
    }

    for (uint32_t v : group[0])
        if (lat.nodes[v].position == 0) lat.start_nodes.push_back(v);
    for (uint32_t v : group[k - 1])
        if (lat.nodes[v].end_position == n - 1) lat.end_nodes.push_back(v);
}

void build_fixed_window(Lattice& lat, const TokenSequence& t, const FeatureExtractor& fx,
                        PoolBuilder& pool) {
    const auto& marks = t.quantity_marks;
    int k = static_cast<int>(marks.size());
    const auto& problem = fx.problem();
    int n_src = static_cast<int>(problem.tokens.size());

    std::vector<int> pos_of_src(n_src, -1);
    for (int pos = 0; pos < t.size(); ++pos) pos_of_src[t.items[pos].source_index] = pos;

    std::vector<std::vector<uint32_t>> group(k);
    for (int j = 0; j < k; ++j) {
        int qi = marks[j].quantity_index;
        int anchor = problem.quantities[qi].anchor;
        int radius = t.window == kFullWindow ? n_src : t.window - 1;
        int src_lo = std::max(0, anchor - radius);
        int src_hi = std::min(n_src - 1, anchor + radius);

        for (Sign s : allowed_signs(problem.quantities[qi].is_unknown)) {
            FeatureVector agg;
            for (int src = src_lo; src <= src_hi; ++src) {
                int pos = pos_of_src[src];
                if (pos < 0) continue;  // outside the merged sequence
                LabelKind kind = src < anchor   ? LabelKind::L
                                 : src == anchor ? LabelKind::N
                                                 : LabelKind::R;
                FeatureVector part = fx.node_features(t, pos, make_label(kind, s));
                for (auto& item : part.items) agg.items.push_back(item);
            }
            agg.finalize();
            LatticeNode node;
            node.position = pos_of_src[src_lo] >= 0 ? pos_of_src[src_lo] : marks[j].position;
            node.end_position = pos_of_src[src_hi] >= 0 ? pos_of_src[src_hi] : marks[j].position;
            node.mark_position = marks[j].position;
            node.quantity_index = qi;
            node.label = make_label(LabelKind::N, s);
            node.feat = pool.intern(std::move(agg));
            group[j].push_back(static_cast<uint32_t>(lat.nodes.size()));
            lat.nodes.push_back(node);
        }
    }

    for (int j = 0; j + 1 < k; ++j) {
        for (uint32_t a : group[j]) {
            for (uint32_t b : group[j + 1]) {
                uint32_t feat = pool.intern(fx.edge_features(
                    t, lat.nodes[a].label, lat.nodes[b].label, lat.nodes[b].mark_position));
                lat.edges.push_back({a, b, feat});
            }
        }
    }
    lat.start_nodes = group[0];
    lat.end_nodes = group[k - 1];
}

}  // namespace

Lattice build_lattice(const TokenSequence& t, Variant variant, const FeatureExtractor& fx) {
    if (t.quantity_marks.empty()) throw LatticeError("token sequence has no quantity marks");
    Lattice lat;
    lat.variant = variant;
    lat.n = t.size();
    lat.num_quantities = static_cast<int>(t.quantity_marks.size());
    for (const auto& m : t.quantity_marks)
        if (fx.problem().quantities[m.quantity_index].is_unknown)
            lat.unknown_quantity = m.quantity_index;

    PoolBuilder pool;
    switch (variant) {
        case Variant::QT:
        case Variant::QTR:
            build_chain_variant(lat, t, fx, pool);
            break;
        case Variant::QTS:
            build_semi_markov(lat, t, fx, pool);
            break;
        case Variant::QTFIX:
            build_fixed_window(lat, t, fx, pool);
            break;
    }
    lat.pool = pool.finalize();
    build_adjacency(lat);
    return lat;
}

Lattice clamp(const Lattice& lat, const SignAssignment& y) {
    if (static_cast<int>(y.signs.size()) != lat.num_quantities)
        throw LatticeError("sign assignment length does not match quantity count");
    if (lat.unknown_quantity >= 0 && y.signs[lat.unknown_quantity] == Sign::Zero)
        throw LatticeError("unknown quantity cannot be clamped to sign 0");

    Lattice out;
    out.variant = lat.variant;
    out.n = lat.n;
    out.num_quantities = lat.num_quantities;
    out.unknown_quantity = lat.unknown_quantity;
    out.pool = lat.pool;

    std::vector<uint32_t> remap(lat.nodes.size(), UINT32_MAX);
    for (uint32_t v = 0; v < lat.nodes.size(); ++v) {
        const auto& node = lat.nodes[v];
        if (node.quantity_index >= 0 && node.label.sign != y.signs[node.quantity_index])
            continue;
        remap[v] = static_cast<uint32_t>(out.nodes.size());
        out.nodes.push_back(node);
    }
    for (const auto& e : lat.edges) {
        if (remap[e.from] == UINT32_MAX || remap[e.to] == UINT32_MAX) continue;
        out.edges.push_back({remap[e.from], remap[e.to], e.feat});
    }
    for (uint32_t v : lat.start_nodes)
        if (remap[v] != UINT32_MAX) out.start_nodes.push_back(remap[v]);
    for (uint32_t v : lat.end_nodes)
        if (remap[v] != UINT32_MAX) out.end_nodes.push_back(remap[v]);
    build_adjacency(out);
    return out;
}

double count_paths(const Lattice& lat) {
    std::vector<double> cnt(lat.nodes.size(), 0.0);
    std::vector<char> is_start(lat.nodes.size(), 0);
    for (uint32_t v : lat.start_nodes) is_start[v] = 1;
    for (uint32_t v = 0; v < lat.nodes.size(); ++v) {
        double c = is_start[v] ? 1.0 : 0.0;
        for (uint32_t i = lat.in_offsets[v]; i < lat.in_offsets[v + 1]; ++i)
            c += cnt[lat.edges[lat.in_edges[i]].from];
        cnt[v] = c;
    }
    double total = 0.0;
    for (uint32_t v : lat.end_nodes) total += cnt[v];
    return total;
}

std::vector<Label> Lattice::node_expansion(uint32_t node_id) const {
    const LatticeNode& node = nodes[node_id];
    if (variant != Variant::QTS) return {node.label};
    std::vector<Label> out;
    for (int pos = node.position; pos <= node.end_position; ++pos) {
        LabelKind k = pos < node.mark_position    ? LabelKind::L
                      : pos == node.mark_position ? LabelKind::N
                                                  : LabelKind::R;
        out.push_back(make_label(k, node.label.sign));
    }
    return out;
}

LatticePath make_path(const Lattice& lat, std::vector<uint32_t> node_ids) {
    LatticePath path;
    path.signs.signs.assign(lat.num_quantities, Sign::Zero);
    for (uint32_t v : node_ids) {
        auto expansion = lat.node_expansion(v);
        path.labels.insert(path.labels.end(), expansion.begin(), expansion.end());
        const auto& node = lat.nodes[v];
        if (node.quantity_index >= 0) path.signs.signs[node.quantity_index] = node.label.sign;
    }

    // Span recovery.
    path.spans.assign(lat.num_quantities, {-1, -1});
    if (lat.variant == Variant::QTS || lat.variant == Variant::QTFIX) {
        for (uint32_t v : node_ids) {
            const auto& node = lat.nodes[v];
            if (node.quantity_index >= 0)
                path.spans[node.quantity_index] = {node.position, node.end_position};
        }
    } else {
        int slot = 0;
        for (int pos = 0; pos < static_cast<int>(path.labels.size()); ++pos) {
            if (path.labels[pos].kind != LabelKind::N) continue;
            Sign s = path.labels[pos].sign;
            int a = pos, b = pos;
            while (a > 0 && path.labels[a - 1].kind == LabelKind::L &&
                   path.labels[a - 1].sign == s)
                --a;
            while (b + 1 < static_cast<int>(path.labels.size()) &&
                   path.labels[b + 1].kind == LabelKind::R && path.labels[b + 1].sign == s)
                ++b;
            path.spans[slot++] = {a, b};
        }
    }
    path.nodes = std::move(node_ids);
    return path;
}

std::vector<LatticePath> enumerate_paths(const Lattice& lat, std::size_t limit) {
    double est = count_paths(lat);
    if (est > static_cast<double>(limit))
        throw LatticeError("path count " + std::to_string(static_cast<long long>(est)) +
                           " exceeds enumeration limit " + std::to_string(limit));

    std::vector<char> is_end(lat.nodes.size(), 0);
    for (uint32_t v : lat.end_nodes) is_end[v] = 1;

    std::vector<LatticePath> out;
    std::vector<uint32_t> current;
    auto dfs = [&](auto&& self, uint32_t v) -> void {
        current.push_back(v);
        if (is_end[v]) out.push_back(make_path(lat, current));
        for (uint32_t i = lat.out_offsets[v]; i < lat.out_offsets[v + 1]; ++i)
            self(self, lat.edges[lat.out_edges[i]].to);
        current.pop_back();
    };
    for (uint32_t v : lat.start_nodes) dfs(dfs, v);
    return out;
}

double score_path(const Lattice& lat, const LatticePath& path,
                  const std::vector<double>& weights) {
    const auto& pool = *lat.pool;
    auto vec_score = [&](uint32_t feat) {
        double s = 0.0;
        for (const auto& [lid, val] : pool.vecs[feat].items) s += weights[pool.global_ids[lid]] * val;
        return s;
    };
    double total = 0.0;
    for (uint32_t v : path.nodes) total += vec_score(lat.nodes[v].feat);
    for (std::size_t i = 0; i + 1 < path.nodes.size(); ++i) {
        // Locate the edge between consecutive path nodes.
        uint32_t u = path.nodes[i], v = path.nodes[i + 1];
        for (uint32_t ei = lat.out_offsets[u]; ei < lat.out_offsets[u + 1]; ++ei) {
            const auto& e = lat.edges[lat.out_edges[ei]];
            if (e.to == v) {
                total += vec_score(e.feat);
                break;
            }
        }
    }
    return total;
}

std::string debug_dump(const Lattice& lat) {
    std::ostringstream os;
    os << "variant=" << variant_name(lat.variant) << " n=" << lat.n
       << " quantities=" << lat.num_quantities << " nodes=" << lat.nodes.size()
       << " edges=" << lat.edges.size() << " paths=" << count_paths(lat) << "\n";
    for (uint32_t v = 0; v < lat.nodes.size(); ++v) {
        const auto& node = lat.nodes[v];
        os << "  node " << v << " [" << node.position;
        if (node.end_position != node.position) os << ".." << node.end_position;
        os << "] " << node.label.to_string();
        if (node.quantity_index >= 0) os << " q" << node.quantity_index;
        os << " ->";
        for (uint32_t i = lat.out_offsets[v]; i < lat.out_offsets[v + 1]; ++i)
            os << " " << lat.edges[lat.out_edges[i]].to;
        os << "\n";
    }
    os << "  start:";
    for (uint32_t v : lat.start_nodes) os << " " << v;
    os << "\n  end:";
    for (uint32_t v : lat.end_nodes) os << " " << v;
    os << "\n";
    return os.str();
}

}  // namespace quantag
