#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <Eigen/SVD>

namespace oracle {

Vector pack(const coarsen::LocalProblem& problem, const coarsen::TransformPair& pair) {
    const Index ny = pair.y_rows.size();
    const auto& entries = problem.target_pattern.entries();
    Vector x(ny + static_cast<Index>(entries.size()));
    Index k = 0;
    for (Index i = 0; i < pair.y_rows.rows(); ++i) {
        for (Index j = 0; j < pair.y_rows.cols(); ++j) x(k++) = pair.y_rows(i, j);
    }
    for (const auto& [i, j] : entries) x(k++) = pair.a_tilde(i, j);
    return x;
}

coarsen::TransformPair unpack(const coarsen::LocalProblem& problem, const Vector& x) {
    const Index n_i = problem.n_interior();
    const Index n_l = problem.n_local();
    coarsen::TransformPair pair{Matrix::Zero(n_i, n_l), Matrix::Zero(n_l, n_l)};
    Index k = 0;
    for (Index i = 0; i < n_i; ++i) {
        for (Index j = 0; j < n_l; ++j) pair.y_rows(i, j) = x(k++);
    }
    for (const auto& [i, j] : problem.target_pattern.entries()) {
        pair.a_tilde(i, j) = x(k);
        pair.a_tilde(j, i) = x(k);
        ++k;
    }
    return pair;
}

double error_by_loops(const coarsen::LocalProblem& problem, const coarsen::TransformPair& pair) {
    const Index n = problem.n_local();
    const Index n_i = problem.n_interior();
    auto y = [&](Index r, Index c) {
        if (r < n_i) return pair.y_rows(r, c);
        return r == c ? 1.0 : 0.0;
    };
    double sum = 0.0;
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            double t = 0.0;
            for (Index a = 0; a < n; ++a) {
                for (Index b = 0; b < n; ++b) t += y(a, i) * pair.a_tilde(a, b) * y(b, j);
            }
            const double r = problem.a_ll(i, j) - t;
            sum += r * r;
        }
    }
    return std::sqrt(sum);
}

Vector fd_gradient(const coarsen::LocalProblem& problem, const coarsen::TransformPair& pair,
                   double h) {
    const Vector x = pack(problem, pair);
    Vector g(x.size());
    for (Index k = 0; k < x.size(); ++k) {
        Vector xp = x, xm = x;
        xp(k) += h;
        xm(k) -= h;
        const double fp = std::pow(error_by_loops(problem, unpack(problem, xp)), 2);
        const double fm = std::pow(error_by_loops(problem, unpack(problem, xm)), 2);
        g(k) = (fp - fm) / (2.0 * h);
    }
    return g;
}

coarsen::TransformPair random_pair(const coarsen::LocalProblem& problem, std::mt19937_64& rng,
                                   double amplitude) {
    std::uniform_real_distribution<double> u(-amplitude, amplitude);
    const Index n_i = problem.n_interior();
    const Index n_l = problem.n_local();
    coarsen::TransformPair pair{Matrix::Identity(n_i, n_l), Matrix::Zero(n_l, n_l)};
    for (Index i = 0; i < n_i; ++i) {
        for (Index j = 0; j < n_l; ++j) pair.y_rows(i, j) += u(rng);
    }
    for (const auto& [i, j] : problem.target_pattern.entries()) {
        const double v = problem.a_ll(i, j) + u(rng);
        pair.a_tilde(i, j) = v;
        pair.a_tilde(j, i) = v;
    }
    return pair;
}

NelderMeadResult nelder_mead(const std::function<double(const Vector&)>& f, Vector start,
                             double step, int max_evaluations, int restarts) {
    const Index n = start.size();
    NelderMeadResult best{start, f(start), 1};
    for (int round = 0; round <= restarts && best.evaluations < max_evaluations; ++round) {
        std::vector<Vector> simplex(static_cast<std::size_t>(n + 1), best.x);
        std::vector<double> values(static_cast<std::size_t>(n + 1), best.value);
        for (Index k = 0; k < n; ++k) {
            simplex[static_cast<std::size_t>(k + 1)](k) += step;
            values[static_cast<std::size_t>(k + 1)] = f(simplex[static_cast<std::size_t>(k + 1)]);
            ++best.evaluations;
        }
        std::vector<std::size_t> order(simplex.size());
        while (best.evaluations < max_evaluations) {
            std::iota(order.begin(), order.end(), 0);
            std::sort(order.begin(), order.end(),
                      [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
            const std::size_t lo = order.front(), hi = order.back(), second = order[order.size() - 2];
            if (values[hi] - values[lo] <= 1e-15 * std::max(1.0, std::abs(values[lo]))) break;

            Vector centroid = Vector::Zero(n);
            for (std::size_t k = 0; k < simplex.size(); ++k) {
                if (k != hi) centroid += simplex[k];
            }
            centroid /= static_cast<double>(n);
            const Vector reflected = centroid + (centroid - simplex[hi]);
            const double fr = f(reflected);
            ++best.evaluations;
            if (fr < values[lo]) {
                const Vector expanded = centroid + 2.0 * (centroid - simplex[hi]);
                const double fe = f(expanded);
                ++best.evaluations;
                if (fe < fr) {
                    simplex[hi] = expanded;
                    values[hi] = fe;
                } else {
                    simplex[hi] = reflected;
                    values[hi] = fr;
                }
                continue;
            }
            if (fr < values[second]) {
                simplex[hi] = reflected;
                values[hi] = fr;
                continue;
            }
            const bool outside = fr < values[hi];
            const Vector contracted = outside ? Vector(centroid + 0.5 * (reflected - centroid))
                                              : Vector(centroid + 0.5 * (simplex[hi] - centroid));
            const double fc = f(contracted);
            ++best.evaluations;
            if (fc < (outside ? fr : values[hi])) {
                simplex[hi] = contracted;
                values[hi] = fc;
                continue;
            }
            for (std::size_t k = 0; k < simplex.size(); ++k) {
                if (k == lo) continue;
                simplex[k] = simplex[lo] + 0.5 * (simplex[k] - simplex[lo]);
                values[k] = f(simplex[k]);
                ++best.evaluations;
            }
        }
        const auto it = std::min_element(values.begin(), values.end());
        if (*it < best.value) {
            best.value = *it;
            best.x = simplex[static_cast<std::size_t>(it - values.begin())];
        }
        step *= 0.1;
    }
    return best;
}

BruteNormal brute_normal_system(const coarsen::LocalProblem& problem,
                                const coarsen::TransformPair& pair) {
    const Index n_i = problem.n_interior();
    const Index n_l = problem.n_local();
    Matrix y = Matrix::Identity(n_l, n_l);
    y.topRows(n_i) = pair.y_rows;
    Matrix r = problem.a_ll - y.transpose() * pair.a_tilde * y;
    r = 0.5 * (r + r.transpose()).eval();
    const Matrix k = pair.a_tilde.topRows(n_i) * y;

    Eigen::JacobiSVD<Matrix> svd(k, Eigen::ComputeFullV);
    const double top = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
    Index rank = 0;
    for (Index s = 0; s < svd.singularValues().size(); ++s) {
        if (svd.singularValues()(s) > 1e-12 * top) ++rank;
    }
    const Matrix qn = svd.matrixV().rightCols(n_l - rank);

    const auto& entries = problem.target_pattern.entries();
    const auto n_a = static_cast<Index>(entries.size());
    const Index nn = qn.cols();
    Matrix op(nn * nn, n_a);
    for (Index p = 0; p < n_a; ++p) {
        const auto [i, j] = entries[static_cast<std::size_t>(p)];
        Matrix basis = Matrix::Zero(n_l, n_l);
        basis(i, j) = 1.0;
        basis(j, i) = 1.0;
        const Matrix image = qn.transpose() * y.transpose() * basis * y * qn;
        op.col(p) = Eigen::Map<const Vector>(image.data(), image.size());
    }
    const Matrix target = qn.transpose() * r * qn;
    const Vector t = Eigen::Map<const Vector>(target.data(), target.size());
    return {op.transpose() * op, op.transpose() * t};
}

Matrix gauss_jordan_inverse(Matrix a) {
    const Index n = a.rows();
    Matrix inv = Matrix::Identity(n, n);
    for (Index col = 0; col < n; ++col) {
        Index pivot = col;
        for (Index r = col + 1; r < n; ++r) {
            if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
        }
        if (a(pivot, col) == 0.0) throw std::runtime_error("singular matrix");
        a.row(col).swap(a.row(pivot));
        inv.row(col).swap(inv.row(pivot));
        const double d = a(col, col);
        a.row(col) /= d;
        inv.row(col) /= d;
        for (Index r = 0; r < n; ++r) {
            if (r == col || a(r, col) == 0.0) continue;
            const double f = a(r, col);
            a.row(r) -= f * a.row(col);
            inv.row(r) -= f * inv.row(col);
        }
    }
    return inv;
}

}  // namespace oracle
