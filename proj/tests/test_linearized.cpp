#include <doctest.h>

#include <cmath>
#include <random>

#include "coarsen/linearized.hpp"
#include "oracles.hpp"

using namespace coarsen;

namespace {

double relative_diff(const Matrix& a, const Matrix& b) { return (a - b).norm() / b.norm(); }

}  // namespace

TEST_CASE("subspace split is orthonormal and spans the row space") {
    std::mt19937_64 rng(3);
    const LocalProblem lp = extract_local_scalar(3, 1.0);
    const TransformPair pair = oracle::random_pair(lp, rng, 0.1);
    const SubspaceSplit s = split_spaces(lp, pair);
    const Index n_l = lp.n_local();
    CHECK(s.rank() == lp.n_interior());
    CHECK(s.q.cols() + s.q_null.cols() == n_l);
    Matrix basis(n_l, n_l);
    basis << s.q, s.q_null;
    CHECK((basis.transpose() * basis - Matrix::Identity(n_l, n_l)).norm() < 1e-12);

    Matrix y = Matrix::Identity(n_l, n_l);
    y.topRows(lp.n_interior()) = pair.y_rows;
    const Matrix k = pair.a_tilde.topRows(lp.n_interior()) * y;
    CHECK((k * s.q_null).norm() < 1e-12 * k.norm());
    const Matrix rebuilt = s.left * s.sigma.asDiagonal() * s.q.transpose();
    CHECK(relative_diff(rebuilt, k) < 1e-12);
}

TEST_CASE("structured normal system matches brute-force operator materialization") {
    std::mt19937_64 rng(99);
    struct Case {
        Index m, p, q;
    };
    for (const Case c : {Case{1, 1, 1}, Case{2, 1, 1}, Case{1, 2, 1}}) {
        for (double lambda : {0.0, 2.0, 3.5}) {
            const LocalProblem lp = c.p == 1 ? extract_local_scalar(c.m, lambda)
                                             : extract_local_supernode(c.m, c.p, c.q, lambda);
            for (int trial = 0; trial < 3; ++trial) {
                const TransformPair pair = oracle::random_pair(lp, rng, 0.2);
                const NormalSystem n = build_normal_system(lp, pair, split_spaces(lp, pair));
                const oracle::BruteNormal brute = oracle::brute_normal_system(lp, pair);
                CAPTURE(c.m);
                CAPTURE(c.p);
                CHECK(relative_diff(n.matrix, brute.matrix) < 1e-12);
                CHECK(relative_diff(n.rhs, brute.rhs) < 1e-12);
            }
        }
    }
}

TEST_CASE("interior scaling directions lie in the null space of the normal matrix") {
    const LocalProblem lp = extract_local_scalar(3, 0.0);
    const TransformPair pair = initial_guess(lp);
    const NormalSystem n = build_normal_system(lp, pair, split_spaces(lp, pair));
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    Vector d = Vector::Zero(lp.n_local());
    for (Index i = 0; i < lp.n_interior(); ++i) d(i) = g(rng);
    // dA = D Atilde + Atilde D for D = diag(d) supported on the interior
    Vector v(n.dim == 0 ? 0 : static_cast<Index>(n.basis_map.size()));
    for (std::size_t k = 0; k < n.basis_map.size(); ++k) {
        const auto [i, j] = n.basis_map[k];
        v(static_cast<Index>(k)) = (d(i) + d(j)) * pair.a_tilde(i, j);
    }
    CHECK((n.matrix * v).norm() < 1e-12 * n.matrix.norm() * v.norm());
    CHECK(std::abs(n.rhs.dot(v)) <= 1e-12 * n.rhs.norm() * v.norm());
}

TEST_CASE("null dimension equals the interior size at the initial guess") {
    for (Index m = 2; m <= 5; ++m) {
        const LocalProblem lp = extract_local_scalar(m, 0.0);
        const TransformPair pair = initial_guess(lp);
        const DaSolution sol =
            solve_for_da(build_normal_system(lp, pair, split_spaces(lp, pair)));
        CAPTURE(m);
        CHECK(sol.diagnostics.null_dim == lp.n_interior());
        CHECK(sol.diagnostics.rhs_null_fraction < 1e-12);
    }
}

TEST_CASE("dY removes the span blocks of the linearized residual") {
    std::mt19937_64 rng(17);
    const LocalProblem lp = extract_local_scalar(2, 1.0);
    const TransformPair pair = oracle::random_pair(lp, rng, 0.1);
    const SubspaceSplit s = split_spaces(lp, pair);
    const ErrorReport e = residual_and_error(lp, pair);
    const DaSolution sol = solve_for_da(build_normal_system(lp, pair, s, e.residual));
    const Matrix dy = compute_dy(pair, e.residual, sol.da, s);
    const RotatedBlocks b = rotated_blocks(pair, e.residual, dy, sol.da, s);
    const double scale = e.residual.squaredNorm();
    CHECK(b.span_span < 1e-20 * scale);
    CHECK(b.span_null < 1e-20 * scale);
    CHECK(b.total() == doctest::Approx(linearized_residual(pair, e.residual, dy, sol.da).squaredNorm()));
    // null/null block equals the reduced residual the dA solve minimized
    Matrix y = Matrix::Identity(lp.n_local(), lp.n_local());
    y.topRows(lp.n_interior()) = pair.y_rows;
    const Matrix reduced = s.q_null.transpose() * (e.residual - y.transpose() * sol.da * y) * s.q_null;
    CHECK(b.null_null == doctest::Approx(reduced.squaredNorm()).epsilon(1e-10));
}

TEST_CASE("random rotations of dY inside the null space keep the span blocks zero") {
    std::mt19937_64 rng(23);
    const LocalProblem lp = extract_local_scalar(2, 0.5);
    const TransformPair pair = oracle::random_pair(lp, rng, 0.1);
    const SubspaceSplit s = split_spaces(lp, pair);
    const ErrorReport e = residual_and_error(lp, pair);
    const DaSolution sol = solve_for_da(build_normal_system(lp, pair, s, e.residual));
    const Matrix dy = compute_dy(pair, e.residual, sol.da, s);
    // adding (K^+)^T S Q^T with S antisymmetric leaves K^T dY + dY^T K unchanged
    const Index r = s.rank();
    std::normal_distribution<double> g;
    Matrix a(r, r);
    for (Index i = 0; i < r; ++i) {
        for (Index j = 0; j < r; ++j) a(i, j) = g(rng);
    }
    const Matrix anti = a - a.transpose();
    const Matrix pinv_t = s.left * s.sigma.cwiseInverse().asDiagonal();
    const Matrix shifted = dy + pinv_t * anti * s.q.transpose();
    const Matrix l0 = linearized_residual(pair, e.residual, dy, sol.da);
    const Matrix l1 = linearized_residual(pair, e.residual, shifted, sol.da);
    CHECK((l0 - l1).norm() < 1e-10 * e.residual.norm());
}

TEST_CASE("line search polynomial reproduces the error along the step") {
    std::mt19937_64 rng(31);
    const LocalProblem lp = extract_local_scalar(2, 2.0);
    const TransformPair pair = oracle::random_pair(lp, rng, 0.1);
    const SubspaceSplit s = split_spaces(lp, pair);
    const ErrorReport e = residual_and_error(lp, pair);
    const DaSolution sol = solve_for_da(build_normal_system(lp, pair, s, e.residual));
    const Matrix dy = compute_dy(pair, e.residual, sol.da, s);
    LineSearchOptions o;
    o.refinements = 0;
    const LineSearchResult ls = line_search(lp, pair, dy, sol.da, o);
    std::uniform_real_distribution<double> u(-o.alpha_max, o.alpha_max);
    for (int k = 0; k < 20; ++k) {
        const double alpha = u(rng);
        TransformPair moved{pair.y_rows + alpha * dy, pair.a_tilde + alpha * sol.da};
        const double direct = oracle::error_by_loops(lp, moved);
        CHECK(ls.evaluate(alpha) == doctest::Approx(direct * direct).epsilon(1e-8));
    }
    CHECK(ls.error <= e.norm);
    CHECK_THROWS_AS(line_search(lp, pair, dy.leftCols(2), sol.da), std::invalid_argument);
}

TEST_CASE("truncation policies classify a synthetic spectrum") {
    Vector sigma(5);
    sigma << 1.0, 1e-2, 1e-6, 1e-18, 1e-20;
    const SolveDiagnostics rel = classify_spectrum(sigma, {});
    CHECK(rel.null_dim == 2);
    CHECK(rel.cond_retained == doctest::Approx(1e6));
    CHECK(rel.cond_eq7 == doctest::Approx(1e3));
    TruncationPolicy gap;
    gap.kind = TruncationPolicy::Kind::gap;
    CHECK(classify_spectrum(sigma, gap).null_dim == 2);
    TruncationPolicy strict;
    strict.relative_threshold = 1e-2;
    CHECK(classify_spectrum(sigma, strict).null_dim == 3);
}

TEST_CASE("linearized minimization converges quickly and monotonically") {
    for (Index m = 1; m <= 4; ++m) {
        const LocalProblem lp = extract_local_scalar(m, 0.0);
        const LinearizedResult r = linearized_minimize(lp);
        CAPTURE(m);
        CHECK(r.converged);
        CHECK(r.iterations <= 2 * m + 5);
        CHECK_FALSE(r.null_dim_mismatch);
        for (std::size_t k = 1; k < r.trace.iterations.size(); ++k) {
            CHECK(r.trace.iterations[k].error <= r.trace.iterations[k - 1].error);
        }
        CHECK(r.trace.iterations.front().cond_eq7.has_value());
    }
    CHECK_THROWS_AS(linearized_minimize(extract_local_scalar(1, 0.0), LinearizedOptions{0}),
                    std::invalid_argument);
}

TEST_CASE("robust SVD reproduces a matrix and rejects non-finite input") {
    std::mt19937_64 rng(41);
    std::normal_distribution<double> g;
    Matrix a(7, 5);
    for (Index i = 0; i < a.rows(); ++i) {
        for (Index j = 0; j < a.cols(); ++j) a(i, j) = g(rng);
    }
    const SvdFactors f = robust_svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    CHECK((f.u * f.sigma.asDiagonal() * f.v.transpose() - a).norm() < 1e-12 * a.norm());
    CHECK(robust_svd(a, 0).u.size() == 0);
    a(2, 3) = std::nan("");
    CHECK_THROWS_AS(robust_svd(a, 0), NumericalFailure);
}
