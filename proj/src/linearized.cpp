#include "coarsen/linearized.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

namespace coarsen {

namespace {

Matrix interior_operator(const TransformPair& pair, const Matrix& y) {
    return pair.a_tilde.topRows(pair.y_rows.rows()) * y;
}

double squared_error_at(const LocalProblem& problem, const TransformPair& pair, const Matrix& dy,
                        const Matrix& da, double alpha) {
    Matrix y = full_y(pair);
    y.topRows(dy.rows()) += alpha * dy;
    return residual_for(problem.a_ll, y, pair.a_tilde + alpha * da).squaredNorm();
}

// Real roots of c_0 + c_1 t + ... + c_n t^n, polished with Newton steps.
std::vector<double> real_roots(std::vector<double> c) {
    double scale = 0.0;
    for (double v : c) scale = std::max(scale, std::abs(v));
    while (!c.empty() && std::abs(c.back()) <= 1e-13 * scale) c.pop_back();
    std::vector<double> roots;
    if (c.size() < 2) return roots;
    const auto degree = static_cast<Index>(c.size() - 1);
    Matrix companion = Matrix::Zero(degree, degree);
    for (Index i = 1; i < degree; ++i) companion(i, i - 1) = 1.0;
    for (Index i = 0; i < degree; ++i) {
        companion(i, degree - 1) = -c[static_cast<std::size_t>(i)] / c.back();
    }
    Eigen::EigenSolver<Matrix> eig(companion, false);
    auto value_and_slope = [&](double t) {
        double v = 0.0;
        double d = 0.0;
        for (auto k = static_cast<Index>(c.size()) - 1; k >= 0; --k) {
            d = d * t + v;
            v = v * t + c[static_cast<std::size_t>(k)];
        }
        return std::pair{v, d};
    };
    for (Index i = 0; i < degree; ++i) {
        const auto z = eig.eigenvalues()(i);
        if (std::abs(z.imag()) > 1e-6 * (1.0 + std::abs(z.real()))) continue;
        double t = z.real();
        for (int it = 0; it < 3; ++it) {
            const auto [v, d] = value_and_slope(t);
            if (d == 0.0) break;
            const double next = t - v / d;
            if (!std::isfinite(next)) break;
            t = next;
        }
        roots.push_back(t);
    }
    return roots;
}

struct WindowFit {
    std::array<double, 7> coefficients{};  // in alpha units
    bool finite = true;
};

// Degree-6 least-squares fit through eight probes spread over [-w, w].
WindowFit fit_window(const LocalProblem& problem, const TransformPair& pair, const Matrix& dy,
                     const Matrix& da, double window) {
    static constexpr std::array<double, 8> kProbes{0.0, 0.25, -0.25, 0.5, -0.5, 1.0, -1.0, 0.125};
    Matrix vandermonde(8, 7);
    Vector values(8);
    WindowFit fit;
    for (Index i = 0; i < 8; ++i) {
        const double t = kProbes[static_cast<std::size_t>(i)];
        double power = 1.0;
        for (Index k = 0; k < 7; ++k) {
            vandermonde(i, k) = power;
            power *= t;
        }
        values(i) = squared_error_at(problem, pair, dy, da, t * window);
        if (!std::isfinite(values(i))) fit.finite = false;
    }
    if (!fit.finite) return fit;
    const Vector c = vandermonde.colPivHouseholderQr().solve(values);
    double power = 1.0;
    for (Index k = 0; k < 7; ++k) {
        fit.coefficients[static_cast<std::size_t>(k)] = c(k) / power;
        power *= window;
    }
    return fit;
}

}  // namespace

double LineSearchResult::evaluate(double alpha) const {
    double v = 0.0;
    for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) v = v * alpha + *it;
    return v;
}

SvdFactors robust_svd(const Matrix& a, unsigned options) {
    if (!a.allFinite()) throw NumericalFailure("SVD input is not finite");
    SvdFactors f;
    auto take = [&](const auto& svd) {
        f.sigma = svd.singularValues();
        if (svd.computeU()) f.u = svd.matrixU();
        if (svd.computeV()) f.v = svd.matrixV();
        return f.sigma.allFinite() && f.u.allFinite() && f.v.allFinite();
    };
    if (take(Eigen::BDCSVD<Matrix>(a, options))) return f;
    f = SvdFactors{};
    if (take(Eigen::JacobiSVD<Matrix>(a, options))) return f;
    throw NumericalFailure("SVD did not produce finite factors");
}

SubspaceSplit split_spaces(const LocalProblem& problem, const TransformPair& pair,
                           double rank_tol) {
    const Index n_l = problem.n_local();
    const Matrix k = interior_operator(pair, full_y(pair));
    const SvdFactors svd = robust_svd(k, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vector& s = svd.sigma;
    Index r = 0;
    if (s.size() > 0 && s(0) > 0.0) {
        while (r < s.size() && s(r) > rank_tol * s(0)) ++r;
    }
    SubspaceSplit split;
    split.q = svd.v.leftCols(r);
    split.q_null = svd.v.rightCols(n_l - r);
    split.left = svd.u.leftCols(r);
    split.sigma = s.head(r);
    return split;
}

NormalSystem build_normal_system(const LocalProblem& problem, const TransformPair& pair,
                                 const SubspaceSplit& split) {
    return build_normal_system(problem, pair, split, residual_and_error(problem, pair).residual);
}

NormalSystem build_normal_system(const LocalProblem& problem, const TransformPair& pair,
                                 const SubspaceSplit& split, const Matrix& residual) {
    const Matrix z = full_y(pair) * split.q_null;
    const Matrix g = z * z.transpose();
    const Matrix m = z * (split.q_null.transpose() * residual * split.q_null) * z.transpose();

    NormalSystem system;
    system.dim = problem.n_local();
    system.basis_map = problem.target_pattern.entries();
    const auto n_a = static_cast<Index>(system.basis_map.size());
    system.matrix.resize(n_a, n_a);
    system.rhs.resize(n_a);
    for (Index k = 0; k < n_a; ++k) {
        const auto [i, j] = system.basis_map[static_cast<std::size_t>(k)];
        system.rhs(k) = (i == j) ? m(i, i) : m(i, j) + m(j, i);
        for (Index l = 0; l <= k; ++l) {
            const auto [p, q] = system.basis_map[static_cast<std::size_t>(l)];
            double v;
            if (i == j && p == q) {
                v = g(i, p) * g(i, p);
            } else if (i == j) {
                v = 2.0 * g(i, p) * g(i, q);
            } else if (p == q) {
                v = 2.0 * g(p, i) * g(p, j);
            } else {
                v = 2.0 * (g(i, p) * g(j, q) + g(i, q) * g(j, p));
            }
            system.matrix(k, l) = v;
            system.matrix(l, k) = v;
        }
    }
    return system;
}

SolveDiagnostics classify_spectrum(const Vector& sigma, const TruncationPolicy& policy) {
    SolveDiagnostics d;
    d.sigma = sigma;
    const Index n = sigma.size();
    if (n == 0) return d;
    const double top = sigma(0);
    // Thresholds apply to the least-squares singular values sqrt(sigma_N).
    auto relative = [&](Index k) { return std::sqrt(std::max(sigma(k), 0.0) / top); };
    Index retained = 0;
    if (top > 0.0) {
        if (policy.kind == TruncationPolicy::Kind::relative) {
            double cutoff = policy.relative_threshold;
            if (policy.roundoff_floor) {
                // N carries absolute errors near n * eps * sigma_max.
                cutoff = std::max(cutoff, std::sqrt(static_cast<double>(n) *
                                                    std::numeric_limits<double>::epsilon()));
            }
            while (retained < n && relative(retained) >= cutoff) ++retained;
        } else {
            // Cut at the widest consecutive gap whose lower side lies below the ceiling.
            retained = n;
            double widest = 1.0;
            for (Index k = 0; k + 1 < n; ++k) {
                if (relative(k + 1) > policy.gap_search_ceiling) continue;
                const double ratio = relative(k + 1) > 0.0
                                         ? relative(k) / relative(k + 1)
                                         : std::numeric_limits<double>::infinity();
                if (ratio > widest) {
                    widest = ratio;
                    retained = k + 1;
                }
            }
        }
    }
    d.null_dim = n - retained;
    if (retained > 0) {
        d.cond_retained = top / sigma(retained - 1);
        d.cond_eq7 = std::sqrt(d.cond_retained);
        if (d.null_dim > 0) d.gap_ratio = relative(retained) / relative(retained - 1);
    } else {
        d.cond_retained = std::numeric_limits<double>::infinity();
        d.cond_eq7 = std::numeric_limits<double>::infinity();
    }
    return d;
}

namespace {

// One SVD of the normal matrix, solved under any number of truncation policies.
class TruncatedSolver {
public:
    explicit TruncatedSolver(const NormalSystem& system) : system_(system) {
        if (system.matrix.rows() == 0) {
            throw std::invalid_argument("cannot solve for dA over an empty pattern");
        }
        if (!system.matrix.allFinite() || !system.rhs.allFinite()) {
            throw NumericalFailure("normal system contains non-finite values");
        }
        svd_ = robust_svd(system.matrix, Eigen::ComputeThinU | Eigen::ComputeThinV);
        projected_ = svd_.u.transpose() * system.rhs;
    }

    DaSolution solve(const TruncationPolicy& policy) const {
        const Index n_a = system_.matrix.rows();
        DaSolution out;
        out.diagnostics = classify_spectrum(svd_.sigma, policy);
        const Index retained = n_a - out.diagnostics.null_dim;

        Vector coeffs = Vector::Zero(n_a);
        for (Index k = 0; k < retained; ++k) coeffs(k) = projected_(k) / svd_.sigma(k);
        const Vector x = svd_.v * coeffs;

        const double rhs_norm = system_.rhs.norm();
        if (rhs_norm > 0.0 && out.diagnostics.null_dim > 0) {
            const Vector null_part =
                svd_.v.rightCols(out.diagnostics.null_dim).transpose() * system_.rhs;
            out.diagnostics.rhs_null_fraction = null_part.norm() / rhs_norm;
        }

        out.da = Matrix::Zero(system_.dim, system_.dim);
        for (Index k = 0; k < n_a; ++k) {
            const auto [i, j] = system_.basis_map[static_cast<std::size_t>(k)];
            out.da(i, j) = x(k);
            out.da(j, i) = x(k);
        }
        return out;
    }

private:
    const NormalSystem& system_;
    SvdFactors svd_;
    Vector projected_;
};

}  // namespace

DaSolution solve_for_da(const NormalSystem& system, const TruncationPolicy& policy) {
    return TruncatedSolver(system).solve(policy);
}

Matrix compute_dy(const LocalProblem& problem, const TransformPair& pair, const Matrix& da,
                  const SubspaceSplit& split) {
    return compute_dy(pair, residual_and_error(problem, pair).residual, da, split);
}

Matrix compute_dy(const TransformPair& pair, const Matrix& residual, const Matrix& da,
                  const SubspaceSplit& split) {
    const Index n_i = pair.y_rows.rows();
    const Index n_l = pair.y_rows.cols();
    if (split.rank() == 0) return Matrix::Zero(n_i, n_l);
    const Matrix y = full_y(pair);
    const Matrix w = residual - y.transpose() * da * y;
    // (K^+)^T = U_r diag(1/sigma) Q^T
    const Matrix pinv_t = split.left * split.sigma.cwiseInverse().asDiagonal() * split.q.transpose();
    const Matrix tw = pinv_t * w;
    return 0.5 * (tw + (tw * split.q_null) * split.q_null.transpose());
}

Matrix linearized_residual(const TransformPair& pair, const Matrix& residual, const Matrix& dy,
                           const Matrix& da) {
    const Matrix y = full_y(pair);
    const Matrix k = interior_operator(pair, y);
    const Matrix cross = k.transpose() * dy;
    return residual - y.transpose() * da * y - cross - cross.transpose();
}

RotatedBlocks rotated_blocks(const TransformPair& pair, const Matrix& residual, const Matrix& dy,
                             const Matrix& da, const SubspaceSplit& split) {
    const Matrix l = linearized_residual(pair, residual, dy, da);
    RotatedBlocks b;
    b.span_span = (split.q.transpose() * l * split.q).squaredNorm();
    b.span_null = (split.q.transpose() * l * split.q_null).squaredNorm();
    b.null_null = (split.q_null.transpose() * l * split.q_null).squaredNorm();
    return b;
}

LineSearchResult line_search(const LocalProblem& problem, const TransformPair& pair,
                             const Matrix& dy, const Matrix& da, const LineSearchOptions& options) {
    if (dy.rows() != pair.y_rows.rows() || dy.cols() != pair.y_rows.cols() ||
        da.rows() != pair.a_tilde.rows() || da.cols() != pair.a_tilde.cols()) {
        throw std::invalid_argument("line search directions do not match the pair");
    }
    if (!(options.alpha_max > 0.0)) throw std::invalid_argument("alpha_max must be positive");

    const double g0 = squared_error_at(problem, pair, dy, da, 0.0);
    if (!std::isfinite(g0)) throw NumericalFailure("non-finite error at the line-search origin");

    LineSearchResult best;
    best.error = std::sqrt(g0);
    double best_g = g0;
    bool have_fit = false;

    double window = options.alpha_max;
    for (int round = 0; round <= options.refinements; ++round) {
        const WindowFit fit = fit_window(problem, pair, dy, da, window);
        if (!fit.finite) {
            window /= 16.0;
            continue;
        }
        if (!have_fit) {
            best.coefficients = fit.coefficients;
            have_fit = true;
        }
        // g'(alpha) coefficients.
        std::vector<double> slope(6);
        for (std::size_t k = 1; k < 7; ++k) slope[k - 1] = static_cast<double>(k) * fit.coefficients[k];
        double round_alpha = 0.0;
        double round_g = best_g;
        for (double alpha : real_roots(slope)) {
            if (!(alpha > 0.0) || alpha > window) continue;
            const double g = squared_error_at(problem, pair, dy, da, alpha);
            if (std::isfinite(g) && g < round_g) {
                round_g = g;
                round_alpha = alpha;
            }
        }
        if (round_alpha > 0.0 && round_g < best_g) {
            best_g = round_g;
            best.alpha = round_alpha;
            best.coefficients = fit.coefficients;
        }
        if (best.alpha > 0.0) {
            // Refit on a window matched to the optimum for a sharper estimate.
            if (best.alpha >= window / 16.0) break;
            window = 2.0 * best.alpha;
        } else {
            window /= 16.0;
        }
    }
    if (!have_fit) throw NumericalFailure("line search probes overflowed at every scale");
    best.error = std::sqrt(best_g);
    return best;
}

LinearizedResult linearized_minimize(const LocalProblem& problem,
                                     const LinearizedOptions& options) {
    return linearized_minimize(problem, initial_guess(problem), options);
}

LinearizedResult linearized_minimize(const LocalProblem& problem, TransformPair start,
                                     const LinearizedOptions& options) {
    if (options.max_iter < 1) throw std::invalid_argument("max_iter must be at least 1");
    LinearizedResult result;
    result.pair = std::move(start);
    ErrorReport state = residual_and_error(problem, result.pair);
    result.trace.iterations.push_back({0, state.norm, 0.0, std::nullopt});
    if (!std::isfinite(state.norm)) {
        throw MinimizationFailure("non-finite initial error", result.trace);
    }

    int quiet_steps = 0;
    for (int k = 1; k <= options.max_iter; ++k) {
        double alpha = 0.0;
        if (state.norm < options.abs_tol) {
            result.converged = true;
            result.iterations = k - 1;
            break;
        }
        try {
            const SubspaceSplit split = split_spaces(problem, result.pair, options.rank_tol);
            const NormalSystem system =
                build_normal_system(problem, result.pair, split, state.residual);
            const TruncatedSolver solver(system);
            DaSolution sol = solver.solve(options.truncation);
            if (split.rank() == problem.n_interior() &&
                sol.diagnostics.null_dim != problem.n_interior()) {
                result.null_dim_mismatch = true;
            }
            result.trace.iterations.back().cond_eq7 = sol.diagnostics.cond_eq7;
            Matrix dy = compute_dy(result.pair, state.residual, sol.da, split);
            LineSearchResult step =
                line_search(problem, result.pair, dy, sol.da, options.line_search);
            Matrix da = std::move(sol.da);

            if (step.alpha < options.fallback_alpha) {
                bool replaced = false;
                // Weakest threshold that beats the short step.
                for (double threshold : options.fallback_thresholds) {
                    TruncationPolicy stronger;
                    stronger.relative_threshold = threshold;
                    stronger.roundoff_floor = options.truncation.roundoff_floor;
                    DaSolution alt = solver.solve(stronger);
                    Matrix alt_dy = compute_dy(result.pair, state.residual, alt.da, split);
                    const LineSearchResult alt_step =
                        line_search(problem, result.pair, alt_dy, alt.da, options.line_search);
                    if (alt_step.alpha > 0.0 && alt_step.error < step.error) {
                        step = alt_step;
                        dy = std::move(alt_dy);
                        da = std::move(alt.da);
                        replaced = true;
                        break;
                    }
                }
                if (replaced) ++result.fallback_steps;
            }

            if (!options.keep_spectra) sol.diagnostics.sigma.resize(0);
            result.diagnostics.push_back(std::move(sol.diagnostics));
            result.ranks.push_back(split.rank());

            alpha = step.alpha;
            result.pair.y_rows += alpha * dy;
            result.pair.a_tilde += alpha * da;
        } catch (const NumericalFailure& e) {
            throw MinimizationFailure(e.what(), result.trace);
        }
        const double previous = state.norm;
        state = residual_and_error(problem, result.pair);
        if (!std::isfinite(state.norm)) {
            throw MinimizationFailure("non-finite error after update", result.trace);
        }
        result.trace.iterations.push_back({k, state.norm, alpha, std::nullopt});
        const double change = std::abs(previous - state.norm) / previous;
        quiet_steps = change < options.rel_change_tol ? quiet_steps + 1 : 0;
        if (quiet_steps >= options.stall_iterations) {
            result.converged = true;
            result.iterations = k;
            break;
        }
    }
    if (!result.converged) result.iterations = options.max_iter;
    return result;
}

}  // namespace coarsen
