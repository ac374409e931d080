#pragma once

// Linearized minimization of the Y-side error norm.
//
// Each outer step expands (Y + dY, Atilde + dA) to first order, rotates the
// residual into the row space Q of K = P_I Atilde Y and its complement Qn,
// cancels the Q/Q and Q/Qn blocks in closed form through dY, and solves the
// remaining Qn/Qn block for a pattern-restricted dA through its normal
// equations. The step length comes from an exact degree-6 line search.

#include <array>
#include <vector>

#include "coarsen/lattice.hpp"
#include "coarsen/transform.hpp"

namespace coarsen {

struct SvdFactors {
    Matrix u;
    Vector sigma;
    Matrix v;
};

/// Divide-and-conquer SVD, recomputed with one-sided Jacobi when the fast path
/// returns non-finite factors. `options` takes Eigen::Compute* flags; pass 0
/// for singular values only. NumericalFailure if both attempts fail.
SvdFactors robust_svd(const Matrix& a, unsigned options);

struct SubspaceSplit {
    Matrix q;       ///< n_L x r, orthonormal basis of the row space of K
    Matrix q_null;  ///< n_L x (n_L - r), orthonormal complement
    Matrix left;    ///< n_I x r left singular vectors matching q
    Vector sigma;   ///< the r retained singular values of K, descending

    Index rank() const { return q.cols(); }
};

struct NormalSystem {
    Index dim = 0;  ///< n_L of the local problem
    Matrix matrix;  ///< n_A x n_A
    Vector rhs;
    std::vector<SparsityPattern::Entry> basis_map;
};

/// How the spectrum of the normal matrix N is split into null and retained
/// parts. Both cutoffs are expressed for the singular values of the underlying
/// least-squares operator, sqrt(sigma_N / sigma_N_max), since N squares them.
struct TruncationPolicy {
    enum class Kind { relative, gap };
    Kind kind = Kind::relative;
    /// Kind::relative: directions with sqrt(sigma_N / sigma_N_max) below this are null.
    double relative_threshold = 1e-8;
    /// Raise the relative cutoff to sqrt(n_A * eps) when that is larger; the
    /// null directions of a squared system are only resolved to that level.
    bool roundoff_floor = true;
    /// Kind::gap: cut at the widest consecutive ratio among values below this.
    double gap_search_ceiling = 1e-3;
};

struct SolveDiagnostics {
    Vector sigma;  ///< descending singular values of N
    Index null_dim = 0;
    /// Largest truncated over smallest retained operator singular value
    /// (sqrt scale); 0 when nothing is truncated.
    double gap_ratio = 0.0;
    /// sigma_max / sigma_min over the retained subspace of N
    double cond_retained = 1.0;
    /// sqrt(cond_retained), the condition of the un-squared least-squares operator
    double cond_eq7 = 1.0;
    /// ||V_null^T rhs|| / ||rhs|| (0 for a zero rhs)
    double rhs_null_fraction = 0.0;
};

struct DaSolution {
    Matrix da;
    SolveDiagnostics diagnostics;
};

struct LineSearchOptions {
    double alpha_max = 4.0;
    /// Maximum number of window contractions around a small optimum.
    int refinements = 12;
};

struct LineSearchResult {
    double alpha = 0.0;
    double error = 0.0;
    /// Coefficients c_0..c_6 of g(alpha) = ||R(alpha)||_F^2.
    std::array<double, 7> coefficients{};
    double evaluate(double alpha) const;
};

SubspaceSplit split_spaces(const LocalProblem& problem, const TransformPair& pair,
                           double rank_tol = 1e-12);

NormalSystem build_normal_system(const LocalProblem& problem, const TransformPair& pair,
                                 const SubspaceSplit& split);

/// Normal system built from an explicit residual (avoids recomputing R).
NormalSystem build_normal_system(const LocalProblem& problem, const TransformPair& pair,
                                 const SubspaceSplit& split, const Matrix& residual);

/// Splits the spectrum of N into null/retained parts without solving.
SolveDiagnostics classify_spectrum(const Vector& sigma, const TruncationPolicy& policy);

DaSolution solve_for_da(const NormalSystem& system, const TruncationPolicy& policy = {});

/// dY = 1/2 (K^+)^T (R - Y^T dA Y)(I + Qn Qn^T).
Matrix compute_dy(const LocalProblem& problem, const TransformPair& pair, const Matrix& da,
                  const SubspaceSplit& split);

Matrix compute_dy(const TransformPair& pair, const Matrix& residual, const Matrix& da,
                  const SubspaceSplit& split);

/// First-order residual R - Y^T dA Y - K^T dY - dY^T K.
Matrix linearized_residual(const TransformPair& pair, const Matrix& residual, const Matrix& dy,
                           const Matrix& da);

/// Squared Frobenius norms of the Q/Q, Q/Qn (counted once) and Qn/Qn blocks of
/// the rotated linearized residual.
struct RotatedBlocks {
    double span_span = 0.0;
    double span_null = 0.0;
    double null_null = 0.0;
    double total() const { return span_span + 2.0 * span_null + null_null; }
};

RotatedBlocks rotated_blocks(const TransformPair& pair, const Matrix& residual, const Matrix& dy,
                             const Matrix& da, const SubspaceSplit& split);

LineSearchResult line_search(const LocalProblem& problem, const TransformPair& pair,
                             const Matrix& dy, const Matrix& da,
                             const LineSearchOptions& options = {});

struct LinearizedOptions {
    int max_iter = 200;
    /// Converged once the relative error change stays below this for
    /// `stall_iterations` consecutive steps.
    double rel_change_tol = 1e-10;
    int stall_iterations = 3;
    double abs_tol = 1e-13;
    double rank_tol = 1e-12;
    TruncationPolicy truncation{};
    LineSearchOptions line_search{};
    /// When the accepted step length falls below `fallback_alpha`, the step is
    /// recomputed with these stronger relative thresholds in order and the
    /// first one that lowers the error is taken. Empty disables the fallback.
    std::vector<double> fallback_thresholds{1e-6, 1e-4, 1e-2};
    double fallback_alpha = 0.1;
    /// Keep the full normal-matrix spectrum of every iteration.
    bool keep_spectra = false;
};

struct LinearizedResult {
    TransformPair pair;
    ConvergenceTrace trace;
    /// One entry per step taken; diagnostics[k] describes the state at trace
    /// iteration k.
    std::vector<SolveDiagnostics> diagnostics;
    std::vector<Index> ranks;
    bool converged = false;
    /// Step at which the stopping rule first held.
    int iterations = 0;
    /// Set when a detected null dimension differed from n_I for full-rank K.
    bool null_dim_mismatch = false;
    /// Steps whose accepted update came from a fallback threshold.
    int fallback_steps = 0;
};

LinearizedResult linearized_minimize(const LocalProblem& problem,
                                     const LinearizedOptions& options = {});

/// Same iteration from an arbitrary starting pair.
LinearizedResult linearized_minimize(const LocalProblem& problem, TransformPair start,
                                     const LinearizedOptions& options = {});

}  // namespace coarsen
