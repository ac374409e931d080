#include <doctest.h>

#include <cmath>
#include <random>

#include "coarsen/transform.hpp"
#include "oracles.hpp"

using namespace coarsen;

TEST_CASE("initial guess error is the norm of the removed couplings") {
    for (Index m = 1; m <= 4; ++m) {
        const LocalProblem lp = extract_local_scalar(m, 0.0);
        const ErrorReport e = residual_and_error(lp, initial_guess(lp));
        CHECK(e.norm == doctest::Approx(std::sqrt(8.0)).epsilon(1e-14));
    }
}

TEST_CASE("residual matches the loop oracle") {
    std::mt19937_64 rng(7);
    const LocalProblem lp = extract_local_scalar(2, 1.0);
    const TransformPair pair = oracle::random_pair(lp, rng, 0.2);
    CHECK(residual_and_error(lp, pair).norm ==
          doctest::Approx(oracle::error_by_loops(lp, pair)).epsilon(1e-13));
    TransformPair bad = pair;
    bad.a_tilde.conservativeResize(3, 3);
    CHECK_THROWS_AS(residual_and_error(lp, bad), std::invalid_argument);
}

TEST_CASE("gradient at the initial guess is concentrated on the decoupled row") {
    const LocalProblem lp = extract_local_scalar(1, 0.0);
    const Gradient g = objective_gradient(lp, initial_guess(lp));
    // -4 (Atilde R)_cj with Atilde_cc = -4 and R_cj = 1 on the removed couplings
    CHECK(g.grad_y(0, 0) == doctest::Approx(0.0));
    for (Index j = 1; j < 5; ++j) CHECK(g.grad_y(0, j) == doctest::Approx(16.0));
    CHECK(g.grad_a.norm() == doctest::Approx(0.0));
}

TEST_CASE("analytic gradient matches central differences") {
    std::mt19937_64 rng(2024);
    for (double lambda : {0.0, 3.5}) {
        for (Index m = 1; m <= 3; ++m) {
            const LocalProblem lp = extract_local_scalar(m, lambda);
            for (int trial = 0; trial < 20; ++trial) {
                const TransformPair pair = oracle::random_pair(lp, rng, 0.3);
                const Gradient g = objective_gradient(lp, pair);
                TransformPair as_pair{g.grad_y, g.grad_a};
                const Vector analytic = oracle::pack(lp, as_pair);
                const Vector fd = oracle::fd_gradient(lp, pair, 1e-6);
                CAPTURE(m);
                CAPTURE(lambda);
                CHECK((analytic - fd).norm() / fd.norm() < 1e-5);
            }
        }
    }
}

TEST_CASE("interior scaling leaves the error unchanged") {
    std::mt19937_64 rng(11);
    const LocalProblem lp = extract_local_scalar(3, 2.0);
    const TransformPair pair = oracle::random_pair(lp, rng, 0.2);
    Vector d(lp.n_interior());
    std::uniform_real_distribution<double> u(0.5, 2.0);
    for (Index i = 0; i < d.size(); ++i) d(i) = u(rng);
    const TransformPair scaled = interior_scaling(pair, d);
    CHECK(residual_and_error(lp, scaled).norm ==
          doctest::Approx(residual_and_error(lp, pair).norm).epsilon(1e-12));
    CHECK(condition_of_y(scaled) == doctest::Approx(condition_of_y(pair)).epsilon(1e-10));
    CHECK(row_normalized(scaled).y_rows.rowwise().norm().isOnes(1e-14));
    d(0) = 0.0;
    CHECK_THROWS_AS(interior_scaling(pair, d), std::invalid_argument);
    CHECK_THROWS_AS(interior_scaling(pair, Vector::Ones(2)), std::invalid_argument);
}

TEST_CASE("steepest descent decreases the error monotonically") {
    const LocalProblem lp = extract_local_scalar(2, 0.0);
    SteepestDescentOptions o;
    o.max_iter = 60;
    const SteepestDescentResult r = steepest_descent(lp, o);
    REQUIRE(r.trace.iterations.size() == 61);
    CHECK(r.trace.iterations.front().iteration == 0);
    CHECK(r.trace.iterations.front().error == doctest::Approx(std::sqrt(8.0)));
    for (std::size_t k = 1; k < r.trace.iterations.size(); ++k) {
        CHECK(r.trace.iterations[k].error <= r.trace.iterations[k - 1].error);
    }
    CHECK_FALSE(r.converged);
}

TEST_CASE("steepest descent converges for the smallest region") {
    const SteepestDescentResult r = steepest_descent(extract_local_scalar(1, 0.0));
    CHECK(r.converged);
    CHECK(r.trace.iterations.size() < 1000);
    CHECK(r.trace.final_error() < std::sqrt(8.0));
}
