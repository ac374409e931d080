#pragma once

// Unknowns of a single local transformation, the Y-side error norm
// ||A_LL - Y^T Atilde Y||_F with its gradient, the steepest-descent baseline,
// and the interior diagonal gauge.

#include <optional>
#include <vector>

#include "coarsen/errors.hpp"
#include "coarsen/lattice.hpp"

namespace coarsen {

/// y_rows holds the interior rows of Y (n_I x n_L); boundary rows of the full
/// Y are identity rows. a_tilde is symmetric and zero outside the target
/// pattern.
struct TransformPair {
    Matrix y_rows;
    Matrix a_tilde;
};

struct ErrorReport {
    Matrix residual;
    double norm = 0.0;
};

struct IterationRecord {
    int iteration = 0;
    double error = 0.0;
    double alpha = 0.0;
    std::optional<double> cond_eq7;
};

struct ConvergenceTrace {
    std::vector<IterationRecord> iterations;

    bool empty() const { return iterations.empty(); }
    double final_error() const { return iterations.empty() ? 0.0 : iterations.back().error; }
};

/// A numerical failure during an iterative minimization. Carries the
/// iterations completed before the failure.
class MinimizationFailure : public NumericalFailure {
public:
    MinimizationFailure(const std::string& what, ConvergenceTrace partial)
        : NumericalFailure(what), trace_(std::move(partial)) {}

    const ConvergenceTrace& trace() const { return trace_; }

private:
    ConvergenceTrace trace_;
};

/// Gradient of ||R||_F^2. grad_a is stored symmetrically: entry (i, j) and
/// (j, i) both hold the derivative with respect to the shared variable.
struct Gradient {
    Matrix grad_y;
    Matrix grad_a;
};

/// Full n_L x n_L Y: interior rows from the pair, identity rows on the boundary.
Matrix full_y(const TransformPair& pair);

/// Y = I and Atilde = A_LL restricted to the target pattern.
TransformPair initial_guess(const LocalProblem& problem);

/// R = A_LL - Y^T Atilde Y, assembled so that R is exactly symmetric.
ErrorReport residual_and_error(const LocalProblem& problem, const TransformPair& pair);

/// Residual for an explicit full Y (used by the line search and oracles).
Matrix residual_for(const Matrix& a_ll, const Matrix& y, const Matrix& a_tilde);

Gradient objective_gradient(const LocalProblem& problem, const TransformPair& pair);

struct SteepestDescentOptions {
    int max_iter = 1000;
    /// Stop once |e_k - e_{k-1}| < tol * e_{k-1}.
    double tol = 1e-12;
};

struct SteepestDescentResult {
    TransformPair pair;
    ConvergenceTrace trace;
    bool converged = false;
};

/// Follows the negative gradient with an exact line search. Iteration 0 of the
/// trace is the initial guess.
SteepestDescentResult steepest_descent(const LocalProblem& problem,
                                       const SteepestDescentOptions& options = {});

/// (Y, Atilde) -> (D^-1 Y, D Atilde D) with D the identity extended by d on
/// the interior positions.
TransformPair interior_scaling(const TransformPair& pair, const Vector& d);

/// Gauge fix: scales every interior row of Y to unit 2-norm.
TransformPair row_normalized(const TransformPair& pair);

/// 2-norm condition number of the row-normalized full Y.
double condition_of_y(const TransformPair& pair);

}  // namespace coarsen
