#pragma once

// Measurements built on top of single transformations: normal-system spectra,
// spatial decay of (Y, Atilde), parameter sweeps and verification of a local
// transformation embedded in a global grid.

#include <optional>
#include <string>
#include <vector>

#include "coarsen/lattice.hpp"
#include "coarsen/linearized.hpp"
#include "coarsen/transform.hpp"

namespace coarsen {

struct SpectrumReport {
    Vector sigma;  ///< descending singular values of the normal matrix N
    Index null_dim = 0;
    double gap_ratio = 0.0;
    double cond_retained = 1.0;
    double cond_eq7_estimate = 1.0;

    Index retained() const { return sigma.size() - null_dim; }
    /// Least-squares operator singular values sqrt(sigma / sigma_max).
    Vector operator_sigma_normalized() const;
};

SpectrumReport spectrum_at(const LocalProblem& problem, const TransformPair& pair,
                           const TruncationPolicy& policy = {}, double rank_tol = 1e-12);

struct DecayRecord {
    Index node = 0;
    double distance = 0.0;
    double y_deviation = 0.0;
    double a_deviation = 0.0;
};

/// Column deviations of the row-normalized (Y, Atilde) from (I, A_LL).
std::vector<DecayRecord> spatial_decay(const LocalProblem& problem, const TransformPair& pair);

struct GlobalReport {
    Index width = 0;
    Index height = 0;
    /// ||A_LL - Y^T Atilde Y||_F of the local problem.
    double local_error = 0.0;
    /// ||A - Y_g^T Atilde_g Y_g||_F over the whole grid.
    double global_error = 0.0;
    /// ||X_L^T A_LL X_L - Atilde||_F and its global counterpart ||X^T A X - Atilde_g||_F.
    double local_x_error = 0.0;
    double global_x_error = 0.0;
    /// Largest off-diagonal magnitude in the decoupled row/column of X^T A X.
    double max_decoupled_offdiag = 0.0;
    /// max |(X^T A X - A)_ij| over the local/external coupling block.
    double coupling_deviation = 0.0;
    /// max |(X^T A X - A)_ij| over the external block.
    double external_deviation = 0.0;
};

/// Grid of (2m + 5)^2 nodes (scaled by the supernode shape) with the
/// decoupled node centred.
StencilSpec verification_grid(const LocalProblem& problem);

/// Grid position of the decoupled node inside verification_grid(problem).
GridCoord verification_center(const LocalProblem& problem);

/// Embeds X = Y^-1 of the row-normalized pair around `center` and compares
/// X^T A X with A whose local block is replaced by Atilde.
GlobalReport global_verify(const StencilSpec& spec, GridCoord center, const LocalProblem& problem,
                           const TransformPair& pair);

/// ||A^-1 - X Atilde_g^-1 X^T||_F computed densely; grids are capped at 15 x 15.
double inverse_discrepancy(const StencilSpec& spec, GridCoord center, const LocalProblem& problem,
                           const TransformPair& pair);

struct SweepRecord {
    double lambda = 0.0;
    Index m = 0;
    Index p = 1;
    Index q = 1;
    double error = 0.0;
    int iterations = 0;
    double cond_y = 0.0;
    double cond_eq7 = 0.0;
    Index null_dim = 0;
    Index n_l = 0;
    Index n_a_tilde = 0;
    bool converged = false;
    /// Empty on success; otherwise the failure and no numeric fields are meaningful.
    std::string failure;

    bool ok() const { return failure.empty(); }
};

struct SweepOptions {
    LinearizedOptions minimizer{};
    unsigned jobs = 1;
};

/// One linearized minimization per (lambda, m); records are ordered by lambda
/// then m regardless of how many jobs run.
std::vector<SweepRecord> run_sweep(const std::vector<double>& lambdas, const std::vector<Index>& ms,
                                   Index p, Index q, const SweepOptions& options = {});

/// Builds the local problem a sweep uses for (m, p, q, lambda).
LocalProblem sweep_problem(Index m, Index p, Index q, double lambda);

struct DecayFit {
    double slope = 0.0;  ///< d log(error) / dm
    double intercept = 0.0;
    double r_squared = 0.0;
    std::vector<Index> used;

    /// Exponential decay rate, -slope.
    double rate() const { return -slope; }
};

/// Least-squares line through (m, log error). With `drop_stagnated`, a point
/// whose error changed by less than 10% from its predecessor is left out.
DecayFit fit_decay_rate(const std::vector<Index>& ms, const std::vector<double>& errors,
                        bool drop_stagnated = false);

}  // namespace coarsen
