#include <doctest.h>

#include <cmath>

#include "coarsen/analysis.hpp"
#include "oracles.hpp"

using namespace coarsen;

TEST_CASE("spectrum at the initial guess is normalized with an interior-sized null space") {
    const LocalProblem lp = extract_local_scalar(3, 0.0);
    const SpectrumReport s = spectrum_at(lp, initial_guess(lp));
    const Vector v = s.operator_sigma_normalized();
    CHECK(v.size() == lp.target_pattern.size());
    CHECK(v(0) == doctest::Approx(1.0));
    CHECK(s.null_dim == lp.n_interior());
    for (Index k = s.retained(); k < v.size(); ++k) CHECK(v(k) <= 1e-8);
    for (Index k = 1; k < v.size(); ++k) CHECK(v(k) <= v(k - 1));
}

TEST_CASE("spatial decay lists every node with the decoupled node at distance zero") {
    const LocalProblem lp = extract_local_scalar(3, 0.0);
    const LinearizedResult r = linearized_minimize(lp);
    const std::vector<DecayRecord> recs = spatial_decay(lp, r.pair);
    REQUIRE(recs.size() == static_cast<std::size_t>(lp.n_local()));
    CHECK(recs[0].distance == 0.0);
    // boundary columns of Y are unchanged apart from interior rows, and deviations shrink outward
    double near = 0.0, far = 0.0;
    for (const auto& d : recs) {
        if (d.distance <= 1.0) near = std::max(near, d.y_deviation);
        if (d.distance >= 3.0) far = std::max(far, d.y_deviation);
    }
    CHECK(far < near);
}

TEST_CASE("global embedding reproduces the local error exactly") {
    for (double lambda : {0.0, 3.5}) {
        const LocalProblem lp = extract_local_scalar(2, lambda);
        const LinearizedResult r = linearized_minimize(lp);
        const GlobalReport g =
            global_verify(verification_grid(lp), verification_center(lp), lp, r.pair);
        CHECK(g.width == 9);
        CHECK(std::abs(g.global_error - g.local_error) <= 1e-12 * g.local_error);
        CHECK(std::abs(g.global_x_error - g.local_x_error) <= 1e-12 * g.local_x_error);
        CHECK(g.max_decoupled_offdiag <= g.local_error);
        CHECK(g.coupling_deviation <= 1e-13);
        CHECK(g.external_deviation <= 1e-13);
    }
    const LocalProblem lp = extract_local_scalar(2, 0.0);
    CHECK_THROWS_AS(global_verify({0.0, 5, 5}, {2, 2}, lp, initial_guess(lp)), std::invalid_argument);
}

TEST_CASE("inverse discrepancy agrees with a Gauss-Jordan inverse") {
    const LocalProblem lp = extract_local_scalar(1, 1.0);
    const LinearizedResult r = linearized_minimize(lp);
    const StencilSpec spec = verification_grid(lp);
    const GridCoord centre = verification_center(lp);
    const double d = inverse_discrepancy(spec, centre, lp, r.pair);
    CHECK(std::isfinite(d));
    CHECK(d > 0.0);
    // the exact inverse of A matches an independent elimination
    const Matrix a(build_helmholtz(spec));
    const Matrix inv = oracle::gauss_jordan_inverse(a);
    CHECK((a * inv - Matrix::Identity(a.rows(), a.cols())).norm() < 1e-10);
    CHECK_THROWS_AS(inverse_discrepancy({1.0, 16, 16}, centre, lp, r.pair), std::invalid_argument);
}

TEST_CASE("sweep records are ordered and independent of the job count") {
    SweepOptions one;
    one.minimizer.max_iter = 30;
    SweepOptions many = one;
    many.jobs = 4;
    const auto a = run_sweep({2.0, 0.0}, {2, 1}, 1, 1, one);
    const auto b = run_sweep({2.0, 0.0}, {2, 1}, 1, 1, many);
    REQUIRE(a.size() == 4);
    CHECK(a[0].lambda == 0.0);
    CHECK(a[0].m == 1);
    CHECK(a[3].lambda == 2.0);
    CHECK(a[3].m == 2);
    for (std::size_t k = 0; k < a.size(); ++k) {
        CHECK(a[k].ok());
        CHECK(a[k].error == b[k].error);
        CHECK(a[k].iterations == b[k].iterations);
        CHECK(a[k].cond_y == b[k].cond_y);
        CHECK(a[k].cond_y < 12.0);
    }
    CHECK_THROWS_AS(run_sweep({}, {1}, 1, 1), std::invalid_argument);
}

TEST_CASE("decay fit recovers an exponential") {
    const std::vector<Index> ms{1, 2, 3, 4};
    std::vector<double> errors;
    for (Index m : ms) errors.push_back(3.0 * std::exp(-1.5 * static_cast<double>(m)));
    const DecayFit fit = fit_decay_rate(ms, errors);
    CHECK(fit.rate() == doctest::Approx(1.5));
    CHECK(fit.r_squared == doctest::Approx(1.0));
    errors[2] = errors[1] * 0.95;
    CHECK(fit_decay_rate(ms, errors, true).used.size() == 3);
    CHECK_THROWS_AS(fit_decay_rate({1}, {1.0}), std::invalid_argument);
}
