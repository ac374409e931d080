#pragma once

// Five-point Helmholtz stencil matrices, sparsity patterns, supernode layouts
// and extraction of self-contained local problems.

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace coarsen {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

/// Five-point stencil with diagonal (lambda - 4) and unit axis couplings.
/// width/height only matter for global embeddings.
struct StencilSpec {
    double lambda = 0.0;
    Index width = 1;
    Index height = 1;
};

/// Symmetric set of admissible nonzero positions, stored as sorted unordered
/// pairs (i <= j). Diagonal positions are explicit members.
class SparsityPattern {
public:
    using Entry = std::pair<Index, Index>;

    SparsityPattern() = default;
    explicit SparsityPattern(Index dim);

    /// Builds from arbitrary (i, j) pairs; order and duplicates are normalized.
    SparsityPattern(Index dim, std::vector<Entry> entries);

    /// Pattern of the nonzeros of a dense symmetric matrix (upper triangle).
    static SparsityPattern from_nonzeros(const Matrix& a);

    Index dim() const { return dim_; }
    Index size() const { return static_cast<Index>(entries_.size()); }
    const std::vector<Entry>& entries() const { return entries_; }

    bool contains(Index i, Index j) const;

    /// Position of (i, j) in entries(), or -1.
    Index position(Index i, Index j) const;

    /// Zeroes every entry of a square matrix outside the pattern.
    Matrix mask(const Matrix& a) const;

    bool is_subset_of(const SparsityPattern& other) const;

    friend bool operator==(const SparsityPattern&, const SparsityPattern&) = default;

private:
    Index dim_ = 0;
    std::vector<Entry> entries_;
};

struct GridCoord {
    int x = 0;
    int y = 0;
    friend bool operator==(const GridCoord&, const GridCoord&) = default;
};

/// Tiling of a width x height grid by p x q rectangles. Supernode indices are
/// row-major over the supernode grid; member lists are row-major inside each
/// rectangle.
struct SupernodeLayout {
    Index p = 1;
    Index q = 1;
    Index supernodes_x = 0;
    Index supernodes_y = 0;
    std::vector<std::vector<Index>> node_of_supernode;
    std::vector<Index> supernode_of_node;
    std::vector<std::pair<Index, Index>> adjacency;
};

struct LocalProblem {
    Matrix a_ll;
    std::vector<Index> interior;
    std::vector<Index> boundary;
    Index decoupled = 0;
    SparsityPattern target_pattern;
    std::vector<GridCoord> coords;
    double lambda = 0.0;
    std::array<Index, 2> supernode_dims{1, 1};
    /// Hop radius used for extraction (in supernode hops for supernode problems).
    Index radius = 0;

    Index n_local() const { return a_ll.rows(); }
    Index n_interior() const { return static_cast<Index>(interior.size()); }
    Index n_boundary() const { return static_cast<Index>(boundary.size()); }
};

double stencil_diagonal(double lambda);

/// Global (width*height)^2 matrix in row-major node order with Dirichlet
/// truncation at the domain edges.
SparseMatrix build_helmholtz(const StencilSpec& spec);

/// Signs (-1)^(x+y) in row-major node order.
Vector checkerboard_diagonal(Index width, Index height);

/// Node pattern of the raw five-point stencil on a width x height grid.
SparsityPattern stencil_pattern(Index width, Index height);

SupernodeLayout build_supernode_layout(Index width, Index height, Index p, Index q);

/// Pattern in which every node couples to every member of its own and of
/// each adjacent supernode.
SparsityPattern supernode_fill_pattern(const SupernodeLayout& layout);

/// Removes every off-diagonal pair touching c; keeps (c, c).
SparsityPattern decoupled_pattern(const SparsityPattern& base, Index c);

/// Diamond of all nodes within m hops of the decoupled node.
LocalProblem extract_local_scalar(Index m, double lambda);

/// All nodes of the p x q supernodes within m supernode hops of the
/// supernode holding the decoupled node.
LocalProblem extract_local_supernode(Index m, Index p, Index q, double lambda);

/// Node count 2m^2 + 2m + 1 of a hop diamond.
constexpr Index diamond_size(Index m) { return 2 * m * m + 2 * m + 1; }

}  // namespace coarsen
