#include "coarsen/lattice.hpp"

#include <algorithm>
#include <cstdlib>
#include <map>
#include <stdexcept>
#include <string>
#include <tuple>

namespace coarsen {

namespace {

SparsityPattern::Entry ordered(Index i, Index j) {
    return i <= j ? SparsityPattern::Entry{i, j} : SparsityPattern::Entry{j, i};
}

void require_dims(Index width, Index height) {
    if (width < 1 || height < 1) {
        throw std::invalid_argument("grid dimensions must be positive, got " +
                                    std::to_string(width) + "x" + std::to_string(height));
    }
}

}  // namespace

SparsityPattern::SparsityPattern(Index dim) : dim_(dim) {
    if (dim < 0) throw std::invalid_argument("pattern dimension must be non-negative");
}

SparsityPattern::SparsityPattern(Index dim, std::vector<Entry> entries)
    : dim_(dim), entries_(std::move(entries)) {
    for (auto& e : entries_) {
        if (e.first < 0 || e.second < 0 || e.first >= dim_ || e.second >= dim_) {
            throw std::invalid_argument("pattern entry out of range");
        }
        e = ordered(e.first, e.second);
    }
    std::sort(entries_.begin(), entries_.end());
    entries_.erase(std::unique(entries_.begin(), entries_.end()), entries_.end());
}

SparsityPattern SparsityPattern::from_nonzeros(const Matrix& a) {
    std::vector<Entry> entries;
    for (Index j = 0; j < a.cols(); ++j) {
        for (Index i = 0; i <= j; ++i) {
            if (a(i, j) != 0.0 || a(j, i) != 0.0) entries.emplace_back(i, j);
        }
    }
    return SparsityPattern(a.rows(), std::move(entries));
}

Index SparsityPattern::position(Index i, Index j) const {
    const auto key = ordered(i, j);
    const auto it = std::lower_bound(entries_.begin(), entries_.end(), key);
    if (it == entries_.end() || *it != key) return -1;
    return static_cast<Index>(it - entries_.begin());
}

bool SparsityPattern::contains(Index i, Index j) const { return position(i, j) >= 0; }

Matrix SparsityPattern::mask(const Matrix& a) const {
    if (a.rows() != dim_ || a.cols() != dim_) {
        throw std::invalid_argument("mask: matrix does not match pattern dimension");
    }
    Matrix out = Matrix::Zero(dim_, dim_);
    for (const auto& [i, j] : entries_) {
        out(i, j) = a(i, j);
        out(j, i) = a(j, i);
    }
    return out;
}

bool SparsityPattern::is_subset_of(const SparsityPattern& other) const {
    if (dim_ != other.dim_) return false;
    return std::includes(other.entries_.begin(), other.entries_.end(), entries_.begin(),
                         entries_.end());
}

double stencil_diagonal(double lambda) { return lambda - 4.0; }

SparseMatrix build_helmholtz(const StencilSpec& spec) {
    require_dims(spec.width, spec.height);
    const Index n = spec.width * spec.height;
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(5 * n));
    const double diag = stencil_diagonal(spec.lambda);
    for (Index y = 0; y < spec.height; ++y) {
        for (Index x = 0; x < spec.width; ++x) {
            const Index k = y * spec.width + x;
            triplets.emplace_back(k, k, diag);
            if (x > 0) triplets.emplace_back(k, k - 1, 1.0);
            if (x + 1 < spec.width) triplets.emplace_back(k, k + 1, 1.0);
            if (y > 0) triplets.emplace_back(k, k - spec.width, 1.0);
            if (y + 1 < spec.height) triplets.emplace_back(k, k + spec.width, 1.0);
        }
    }
    SparseMatrix a(n, n);
    a.setFromTriplets(triplets.begin(), triplets.end());
    return a;
}

Vector checkerboard_diagonal(Index width, Index height) {
    require_dims(width, height);
    Vector d(width * height);
    for (Index y = 0; y < height; ++y) {
        for (Index x = 0; x < width; ++x) d(y * width + x) = ((x + y) % 2 == 0) ? 1.0 : -1.0;
    }
    return d;
}

SparsityPattern stencil_pattern(Index width, Index height) {
    require_dims(width, height);
    std::vector<SparsityPattern::Entry> entries;
    for (Index y = 0; y < height; ++y) {
        for (Index x = 0; x < width; ++x) {
            const Index k = y * width + x;
            entries.emplace_back(k, k);
            if (x + 1 < width) entries.emplace_back(k, k + 1);
            if (y + 1 < height) entries.emplace_back(k, k + width);
        }
    }
    return SparsityPattern(width * height, std::move(entries));
}

SupernodeLayout build_supernode_layout(Index width, Index height, Index p, Index q) {
    require_dims(width, height);
    if (p < 1 || q < 1) throw std::invalid_argument("supernode dimensions must be positive");
    if (width % p != 0 || height % q != 0) {
        throw std::invalid_argument("grid must tile exactly into p x q supernodes");
    }
    SupernodeLayout layout;
    layout.p = p;
    layout.q = q;
    layout.supernodes_x = width / p;
    layout.supernodes_y = height / q;
    const Index count = layout.supernodes_x * layout.supernodes_y;
    layout.node_of_supernode.resize(static_cast<std::size_t>(count));
    layout.supernode_of_node.assign(static_cast<std::size_t>(width * height), -1);
    for (Index sy = 0; sy < layout.supernodes_y; ++sy) {
        for (Index sx = 0; sx < layout.supernodes_x; ++sx) {
            const Index s = sy * layout.supernodes_x + sx;
            auto& members = layout.node_of_supernode[static_cast<std::size_t>(s)];
            for (Index j = 0; j < q; ++j) {
                for (Index i = 0; i < p; ++i) {
                    const Index node = (sy * q + j) * width + (sx * p + i);
                    members.push_back(node);
                    layout.supernode_of_node[static_cast<std::size_t>(node)] = s;
                }
            }
            if (sx + 1 < layout.supernodes_x) layout.adjacency.emplace_back(s, s + 1);
            if (sy + 1 < layout.supernodes_y) {
                layout.adjacency.emplace_back(s, s + layout.supernodes_x);
            }
        }
    }
    return layout;
}

SparsityPattern supernode_fill_pattern(const SupernodeLayout& layout) {
    const auto n = static_cast<Index>(layout.supernode_of_node.size());
    std::vector<SparsityPattern::Entry> entries;
    auto connect = [&](const std::vector<Index>& a, const std::vector<Index>& b) {
        for (Index i : a) {
            for (Index j : b) entries.emplace_back(i, j);
        }
    };
    for (const auto& members : layout.node_of_supernode) connect(members, members);
    for (const auto& [s, t] : layout.adjacency) {
        connect(layout.node_of_supernode[static_cast<std::size_t>(s)],
                layout.node_of_supernode[static_cast<std::size_t>(t)]);
    }
    return SparsityPattern(n, std::move(entries));
}

SparsityPattern decoupled_pattern(const SparsityPattern& base, Index c) {
    if (c < 0 || c >= base.dim()) {
        throw std::invalid_argument("decoupled index " + std::to_string(c) + " out of range");
    }
    if (!base.contains(c, c)) {
        throw std::invalid_argument("decoupled node must keep its diagonal entry");
    }
    std::vector<SparsityPattern::Entry> kept;
    kept.reserve(base.entries().size());
    for (const auto& e : base.entries()) {
        if (e.first != e.second && (e.first == c || e.second == c)) continue;
        kept.push_back(e);
    }
    return SparsityPattern(base.dim(), std::move(kept));
}

LocalProblem extract_local_scalar(Index m, double lambda) {
    return extract_local_supernode(m, 1, 1, lambda);
}

LocalProblem extract_local_supernode(Index m, Index p, Index q, double lambda) {
    if (m < 1) throw std::invalid_argument("hop radius must be at least 1");
    if (p < 1 || q < 1) throw std::invalid_argument("supernode dimensions must be positive");

    struct Node {
        GridCoord at;
        GridCoord super;
        int hops;
    };
    std::vector<Node> nodes;
    const int mi = static_cast<int>(m);
    for (int sy = -mi; sy <= mi; ++sy) {
        for (int sx = -mi; sx <= mi; ++sx) {
            const int hops = std::abs(sx) + std::abs(sy);
            if (hops > mi) continue;
            for (int j = 0; j < static_cast<int>(q); ++j) {
                for (int i = 0; i < static_cast<int>(p); ++i) {
                    nodes.push_back({{sx * static_cast<int>(p) + i, sy * static_cast<int>(q) + j},
                                     {sx, sy},
                                     hops});
                }
            }
        }
    }
    // Interior (hops < m) before boundary; within each, by hops, node distance, y, x.
    auto key = [mi](const Node& n) {
        return std::make_tuple(n.hops == mi, n.hops, std::abs(n.at.x) + std::abs(n.at.y), n.at.y,
                               n.at.x);
    };
    std::sort(nodes.begin(), nodes.end(),
              [&](const Node& a, const Node& b) { return key(a) < key(b); });

    const auto n = static_cast<Index>(nodes.size());
    LocalProblem problem;
    problem.lambda = lambda;
    problem.supernode_dims = {p, q};
    problem.radius = m;
    problem.a_ll = Matrix::Zero(n, n);
    problem.coords.reserve(nodes.size());

    std::vector<SparsityPattern::Entry> fill;
    for (Index a = 0; a < n; ++a) {
        const Node& na = nodes[static_cast<std::size_t>(a)];
        problem.coords.push_back(na.at);
        (na.hops < mi ? problem.interior : problem.boundary).push_back(a);
        problem.a_ll(a, a) = stencil_diagonal(lambda);
        for (Index b = a; b < n; ++b) {
            const Node& nb = nodes[static_cast<std::size_t>(b)];
            const int node_gap = std::abs(na.at.x - nb.at.x) + std::abs(na.at.y - nb.at.y);
            const int super_gap = std::abs(na.super.x - nb.super.x) + std::abs(na.super.y - nb.super.y);
            if (node_gap == 1) {
                problem.a_ll(a, b) = 1.0;
                problem.a_ll(b, a) = 1.0;
            }
            if (super_gap <= 1) fill.emplace_back(a, b);
        }
    }
    // The decoupled node sits at the origin and sorts first.
    problem.decoupled = 0;
    problem.target_pattern = decoupled_pattern(SparsityPattern(n, std::move(fill)), 0);
    return problem;
}

}  // namespace coarsen
