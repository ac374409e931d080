#include "coarsen/transform.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/SVD>

#include "coarsen/linearized.hpp"

namespace coarsen {

namespace {

// Steepest-descent directions are rescaled so that a unit step moves the
// variables by about ||R||; the line search window is then generous.
constexpr double kDescentAlphaMax = 1e3;

}  // namespace

Matrix full_y(const TransformPair& pair) {
    const Index n_i = pair.y_rows.rows();
    const Index n_l = pair.y_rows.cols();
    Matrix y = Matrix::Identity(n_l, n_l);
    y.topRows(n_i) = pair.y_rows;
    return y;
}

TransformPair initial_guess(const LocalProblem& problem) {
    const Index n_l = problem.n_local();
    TransformPair pair;
    pair.y_rows = Matrix::Identity(n_l, n_l).topRows(problem.n_interior());
    pair.a_tilde = problem.target_pattern.mask(problem.a_ll);
    return pair;
}

Matrix residual_for(const Matrix& a_ll, const Matrix& y, const Matrix& a_tilde) {
    const Matrix t = y.transpose() * a_tilde * y;
    return a_ll - 0.5 * (t + t.transpose());
}

ErrorReport residual_and_error(const LocalProblem& problem, const TransformPair& pair) {
    if (pair.y_rows.rows() != problem.n_interior() || pair.y_rows.cols() != problem.n_local() ||
        pair.a_tilde.rows() != problem.n_local() || pair.a_tilde.cols() != problem.n_local()) {
        throw std::invalid_argument("transform pair does not match the local problem");
    }
    ErrorReport report;
    report.residual = residual_for(problem.a_ll, full_y(pair), pair.a_tilde);
    report.norm = report.residual.norm();
    return report;
}

Gradient objective_gradient(const LocalProblem& problem, const TransformPair& pair) {
    const Matrix y = full_y(pair);
    const Matrix r = residual_for(problem.a_ll, y, pair.a_tilde);
    Gradient g;
    g.grad_y = -4.0 * (pair.a_tilde * y * r).topRows(problem.n_interior());
    const Matrix yry = y * r * y.transpose();
    g.grad_a = Matrix::Zero(problem.n_local(), problem.n_local());
    for (const auto& [i, j] : problem.target_pattern.entries()) {
        if (i == j) {
            g.grad_a(i, i) = -2.0 * yry(i, i);
        } else {
            const double v = -2.0 * (yry(i, j) + yry(j, i));
            g.grad_a(i, j) = v;
            g.grad_a(j, i) = v;
        }
    }
    return g;
}

SteepestDescentResult steepest_descent(const LocalProblem& problem,
                                       const SteepestDescentOptions& options) {
    if (options.max_iter < 1) throw std::invalid_argument("max_iter must be at least 1");
    SteepestDescentResult result;
    result.pair = initial_guess(problem);
    double error = residual_and_error(problem, result.pair).norm;
    result.trace.iterations.push_back({0, error, 0.0, std::nullopt});

    const LineSearchOptions search{kDescentAlphaMax, 40};
    for (int k = 1; k <= options.max_iter; ++k) {
        const Gradient g = objective_gradient(problem, result.pair);
        // Off-diagonal variables appear twice in grad_a; count them once.
        double grad_sq = g.grad_y.squaredNorm();
        for (const auto& [i, j] : problem.target_pattern.entries()) {
            grad_sq += g.grad_a(i, j) * g.grad_a(i, j);
        }
        if (!std::isfinite(grad_sq)) {
            throw MinimizationFailure("non-finite gradient in steepest descent", result.trace);
        }
        if (grad_sq == 0.0 || error == 0.0) {
            result.converged = true;
            break;
        }
        const double scale = error / std::sqrt(grad_sq);
        const Matrix dy = -scale * g.grad_y;
        const Matrix da = -scale * g.grad_a;
        LineSearchResult step;
        try {
            step = line_search(problem, result.pair, dy, da, search);
        } catch (const NumericalFailure& e) {
            throw MinimizationFailure(e.what(), result.trace);
        }
        result.pair.y_rows += step.alpha * dy;
        result.pair.a_tilde += step.alpha * da;
        const double previous = error;
        error = step.error;
        result.trace.iterations.push_back({k, error, step.alpha * scale, std::nullopt});
        if (std::abs(previous - error) < options.tol * previous) {
            result.converged = true;
            break;
        }
    }
    return result;
}

TransformPair interior_scaling(const TransformPair& pair, const Vector& d) {
    const Index n_i = pair.y_rows.rows();
    if (d.size() != n_i) throw std::invalid_argument("scaling vector must cover the interior");
    for (Index k = 0; k < n_i; ++k) {
        if (d(k) == 0.0) throw std::invalid_argument("interior scale factors must be nonzero");
    }
    const Index n_l = pair.a_tilde.rows();
    Vector full = Vector::Ones(n_l);
    full.head(n_i) = d;
    TransformPair out;
    out.y_rows = d.cwiseInverse().asDiagonal() * pair.y_rows;
    out.a_tilde = full.asDiagonal() * pair.a_tilde * full.asDiagonal();
    return out;
}

TransformPair row_normalized(const TransformPair& pair) {
    const Vector norms = pair.y_rows.rowwise().norm();
    for (Index k = 0; k < norms.size(); ++k) {
        if (!(norms(k) > 0.0) || !std::isfinite(norms(k))) {
            throw NumericalFailure("cannot normalize a zero or non-finite row of Y");
        }
    }
    return interior_scaling(pair, norms);
}

double condition_of_y(const TransformPair& pair) {
    const Matrix y = full_y(row_normalized(pair));
    Eigen::JacobiSVD<Matrix> svd(y);
    const Vector& s = svd.singularValues();
    const double smin = s(s.size() - 1);
    if (!(smin > 0.0) || !(s(0) / smin < 1e15)) {
        throw NumericalFailure("Y is singular to working precision");
    }
    return s(0) / smin;
}

}  // namespace coarsen
