#include "coarsen/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include <Eigen/LU>
#include <Eigen/SVD>

namespace coarsen {

Vector SpectrumReport::operator_sigma_normalized() const {
    if (sigma.size() == 0 || !(sigma(0) > 0.0)) return Vector::Zero(sigma.size());
    return (sigma.cwiseMax(0.0) / sigma(0)).cwiseSqrt();
}

SpectrumReport spectrum_at(const LocalProblem& problem, const TransformPair& pair,
                           const TruncationPolicy& policy, double rank_tol) {
    const SubspaceSplit split = split_spaces(problem, pair, rank_tol);
    const NormalSystem system = build_normal_system(problem, pair, split);
    if (!system.matrix.allFinite()) throw NumericalFailure("normal matrix is not finite");
    const SolveDiagnostics d = classify_spectrum(robust_svd(system.matrix, 0).sigma, policy);
    SpectrumReport report;
    report.sigma = d.sigma;
    report.null_dim = d.null_dim;
    report.gap_ratio = d.gap_ratio;
    report.cond_retained = d.cond_retained;
    report.cond_eq7_estimate = d.cond_eq7;
    return report;
}

std::vector<DecayRecord> spatial_decay(const LocalProblem& problem, const TransformPair& pair) {
    const TransformPair fixed = row_normalized(pair);
    const Matrix y = full_y(fixed);
    const Matrix y_dev = y - Matrix::Identity(y.rows(), y.cols());
    const Matrix a_dev = fixed.a_tilde - problem.a_ll;
    const GridCoord origin = problem.coords[static_cast<std::size_t>(problem.decoupled)];
    std::vector<DecayRecord> records;
    records.reserve(static_cast<std::size_t>(problem.n_local()));
    for (Index j = 0; j < problem.n_local(); ++j) {
        const GridCoord at = problem.coords[static_cast<std::size_t>(j)];
        DecayRecord r;
        r.node = j;
        r.distance = std::hypot(static_cast<double>(at.x - origin.x),
                                static_cast<double>(at.y - origin.y));
        r.y_deviation = y_dev.col(j).norm();
        r.a_deviation = a_dev.col(j).norm();
        records.push_back(r);
    }
    return records;
}

StencilSpec verification_grid(const LocalProblem& problem) {
    const Index m = problem.radius;
    const auto [p, q] = problem.supernode_dims;
    return {problem.lambda, (2 * m + 5) * p, (2 * m + 5) * q};
}

GridCoord verification_center(const LocalProblem& problem) {
    const Index m = problem.radius;
    const auto [p, q] = problem.supernode_dims;
    return {static_cast<int>((m + 2) * p), static_cast<int>((m + 2) * q)};
}

namespace {

// Global node index of every local node, or invalid_argument when the region
// together with one external ring does not fit the grid.
std::vector<Index> embed(const StencilSpec& spec, GridCoord center, const LocalProblem& problem) {
    std::vector<Index> map;
    map.reserve(problem.coords.size());
    for (const GridCoord& c : problem.coords) {
        const Index x = center.x + c.x;
        const Index y = center.y + c.y;
        if (x < 1 || y < 1 || x > spec.width - 2 || y > spec.height - 2) {
            throw std::invalid_argument("local region does not fit inside the grid");
        }
        map.push_back(y * spec.width + x);
    }
    return map;
}

struct Embedded {
    Matrix a;
    Matrix a_tilde;
    Matrix y;
    Matrix x;
    std::vector<Index> map;
    std::vector<bool> local;
};

Embedded embed_pair(const StencilSpec& spec, GridCoord center, const LocalProblem& problem,
                    const TransformPair& pair) {
    Embedded e;
    e.map = embed(spec, center, problem);
    e.a = Matrix(build_helmholtz(spec));
    const Index n = e.a.rows();
    const TransformPair fixed = row_normalized(pair);
    const Matrix y_local = full_y(fixed);
    Eigen::PartialPivLU<Matrix> lu(y_local);
    if (!(std::abs(lu.determinant()) > 0.0)) throw NumericalFailure("Y is singular");
    const Matrix x_local = lu.inverse();

    e.a_tilde = e.a;
    e.y = Matrix::Identity(n, n);
    e.x = Matrix::Identity(n, n);
    e.local.assign(static_cast<std::size_t>(n), false);
    const auto n_l = static_cast<Index>(e.map.size());
    for (Index i = 0; i < n_l; ++i) {
        const Index gi = e.map[static_cast<std::size_t>(i)];
        e.local[static_cast<std::size_t>(gi)] = true;
        for (Index j = 0; j < n_l; ++j) {
            const Index gj = e.map[static_cast<std::size_t>(j)];
            e.a_tilde(gi, gj) = fixed.a_tilde(i, j);
            e.y(gi, gj) = y_local(i, j);
            e.x(gi, gj) = x_local(i, j);
        }
    }
    return e;
}

}  // namespace

GlobalReport global_verify(const StencilSpec& spec, GridCoord center, const LocalProblem& problem,
                           const TransformPair& pair) {
    const Embedded e = embed_pair(spec, center, problem, pair);
    const Index n = e.a.rows();
    const auto n_l = static_cast<Index>(e.map.size());

    GlobalReport report;
    report.width = spec.width;
    report.height = spec.height;
    report.local_error = residual_and_error(problem, pair).norm;
    report.global_error = residual_for(e.a, e.y, e.a_tilde).norm();

    const Matrix xax = e.x.transpose() * e.a * e.x;
    report.global_x_error = (xax - e.a_tilde).norm();
    Matrix local_xax(n_l, n_l);
    Matrix local_at(n_l, n_l);
    for (Index i = 0; i < n_l; ++i) {
        for (Index j = 0; j < n_l; ++j) {
            local_xax(i, j) = xax(e.map[static_cast<std::size_t>(i)], e.map[static_cast<std::size_t>(j)]);
            local_at(i, j) = e.a_tilde(e.map[static_cast<std::size_t>(i)], e.map[static_cast<std::size_t>(j)]);
        }
    }
    report.local_x_error = (local_xax - local_at).norm();

    const Index c = e.map[static_cast<std::size_t>(problem.decoupled)];
    for (Index j = 0; j < n; ++j) {
        if (j == c) continue;
        report.max_decoupled_offdiag =
            std::max({report.max_decoupled_offdiag, std::abs(xax(c, j)), std::abs(xax(j, c))});
    }
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            const bool li = e.local[static_cast<std::size_t>(i)];
            const bool lj = e.local[static_cast<std::size_t>(j)];
            if (li && lj) continue;
            const double dev = std::abs(xax(i, j) - e.a(i, j));
            if (li != lj) {
                report.coupling_deviation = std::max(report.coupling_deviation, dev);
            } else {
                report.external_deviation = std::max(report.external_deviation, dev);
            }
        }
    }
    return report;
}

double inverse_discrepancy(const StencilSpec& spec, GridCoord center, const LocalProblem& problem,
                           const TransformPair& pair) {
    if (spec.width > 15 || spec.height > 15) {
        throw std::invalid_argument("dense inverse comparison is limited to 15 x 15 grids");
    }
    const Embedded e = embed_pair(spec, center, problem, pair);
    Eigen::FullPivLU<Matrix> a_lu(e.a);
    Eigen::FullPivLU<Matrix> at_lu(e.a_tilde);
    if (!a_lu.isInvertible() || !at_lu.isInvertible()) {
        throw NumericalFailure("global matrix is singular");
    }
    return (a_lu.inverse() - e.x * at_lu.inverse() * e.x.transpose()).norm();
}

LocalProblem sweep_problem(Index m, Index p, Index q, double lambda) {
    return (p == 1 && q == 1) ? extract_local_scalar(m, lambda)
                              : extract_local_supernode(m, p, q, lambda);
}

std::vector<SweepRecord> run_sweep(const std::vector<double>& lambdas, const std::vector<Index>& ms,
                                   Index p, Index q, const SweepOptions& options) {
    if (lambdas.empty() || ms.empty()) throw std::invalid_argument("sweep lists must be non-empty");
    std::vector<double> ls = lambdas;
    std::vector<Index> mv = ms;
    std::sort(ls.begin(), ls.end());
    std::sort(mv.begin(), mv.end());

    std::vector<SweepRecord> records;
    for (double l : ls) {
        for (Index m : mv) {
            SweepRecord r;
            r.lambda = l;
            r.m = m;
            r.p = p;
            r.q = q;
            records.push_back(r);
        }
    }

    auto solve = [&](SweepRecord& r) {
        try {
            const LocalProblem problem = sweep_problem(r.m, p, q, r.lambda);
            r.n_l = problem.n_local();
            r.n_a_tilde = problem.target_pattern.size();
            const LinearizedResult result = linearized_minimize(problem, options.minimizer);
            r.error = result.trace.final_error();
            r.iterations = result.iterations;
            r.converged = result.converged;
            r.cond_y = condition_of_y(result.pair);
            const SpectrumReport s =
                spectrum_at(problem, result.pair, options.minimizer.truncation,
                            options.minimizer.rank_tol);
            r.cond_eq7 = s.cond_eq7_estimate;
            r.null_dim = s.null_dim;
        } catch (const std::exception& e) {
            r.failure = e.what();
        }
    };

    const unsigned jobs = std::max(1u, std::min<unsigned>(options.jobs,
                                                          static_cast<unsigned>(records.size())));
    if (jobs == 1) {
        for (auto& r : records) solve(r);
        return records;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    workers.reserve(jobs);
    for (unsigned w = 0; w < jobs; ++w) {
        workers.emplace_back([&] {
            for (std::size_t k = next++; k < records.size(); k = next++) solve(records[k]);
        });
    }
    for (auto& t : workers) t.join();
    return records;
}

DecayFit fit_decay_rate(const std::vector<Index>& ms, const std::vector<double>& errors,
                        bool drop_stagnated) {
    if (ms.size() != errors.size()) throw std::invalid_argument("fit inputs differ in length");
    DecayFit fit;
    for (std::size_t k = 0; k < ms.size(); ++k) {
        if (!(errors[k] > 0.0)) continue;
        if (drop_stagnated && k > 0 && errors[k - 1] > 0.0 &&
            std::abs(errors[k - 1] - errors[k]) < 0.1 * errors[k - 1]) {
            continue;
        }
        fit.used.push_back(static_cast<Index>(k));
    }
    const auto n = static_cast<double>(fit.used.size());
    if (fit.used.size() < 2) throw std::invalid_argument("decay fit needs at least two points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (Index k : fit.used) {
        const auto x = static_cast<double>(ms[static_cast<std::size_t>(k)]);
        const double y = std::log(errors[static_cast<std::size_t>(k)]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) throw std::invalid_argument("decay fit needs distinct m values");
    fit.slope = (n * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / n;
    double ss_res = 0, ss_tot = 0;
    const double mean = sy / n;
    for (Index k : fit.used) {
        const auto x = static_cast<double>(ms[static_cast<std::size_t>(k)]);
        const double y = std::log(errors[static_cast<std::size_t>(k)]);
        ss_res += std::pow(y - (fit.intercept + fit.slope * x), 2);
        ss_tot += std::pow(y - mean, 2);
    }
    fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return fit;
}

}  // namespace coarsen
