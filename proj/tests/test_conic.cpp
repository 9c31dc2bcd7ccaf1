#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "uavirs/conic.hpp"

using namespace uavirs::conic;

namespace {

SolveReport solve_checked(const ConicProgram& prog, double tol = 1e-7) {
    SolverOptions opts;
    opts.tol = tol;
    SolveReport rep = prog.solve(opts);
    REQUIRE(rep.status == SolveStatus::Optimal);
    CHECK(prog.max_violation(rep.x) < 1e-6);
    return rep;
}

}  // namespace

TEST_CASE("box linear program hits the active bounds") {
    ConicProgram prog;
    auto x = prog.add_vars(4);
    const double lb[] = {-1.0, 0.5, -3.0, 2.0};
    const double ub[] = {2.0, 4.0, -1.0, 7.0};
    const double c[] = {1.0, -2.0, 0.5, -0.25};
    double expect = 0.0;
    for (int i = 0; i < 4; ++i) {
        prog.set_lower_bound(x[i], lb[i]);
        prog.set_upper_bound(x[i], ub[i]);
        prog.add_objective(x[i], c[i]);
        expect += c[i] * (c[i] > 0 ? lb[i] : ub[i]);
    }
    auto rep = solve_checked(prog);
    CHECK(rep.objective == doctest::Approx(expect).epsilon(1e-6));
}

TEST_CASE("simplex linear program") {
    ConicProgram prog;
    auto x = prog.add_var();
    auto y = prog.add_var();
    prog.set_lower_bound(x, 0.0);
    prog.set_lower_bound(y, 0.0);
    prog.add_nonneg(LinExpr(1.0) - LinExpr(x) - LinExpr(y));
    prog.add_objective(x, -1.0);
    prog.add_objective(y, -2.0);
    auto rep = solve_checked(prog);
    CHECK(rep.objective == doctest::Approx(-2.0).epsilon(1e-6));
    CHECK(rep.x[1] == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("equality constraints pin the solution") {
    ConicProgram prog;
    auto x = prog.add_vars(3);
    prog.add_zero(LinExpr(x[0]) + LinExpr(x[1]) + LinExpr(x[2]) - LinExpr(6.0));
    prog.add_zero(LinExpr(x[0]) - LinExpr(x[1]));
    for (auto v : x) prog.set_lower_bound(v, 0.0);
    prog.add_objective(x[2], 1.0);
    // Minimizing x2 pushes x2 to 0 and x0 = x1 = 3.
    auto rep = solve_checked(prog);
    CHECK(rep.x[0] == doctest::Approx(3.0).epsilon(1e-5));
    CHECK(rep.x[2] == doctest::Approx(0.0).epsilon(1e-5));
}

TEST_CASE("linear objective over the unit ball lands at minus norm") {
    std::mt19937 gen(7);
    std::normal_distribution<double> dist;
    for (int trial = 0; trial < 8; ++trial) {
        const int d = 2 + trial % 5;
        ConicProgram prog;
        auto x = prog.add_vars(d);
        std::vector<LinExpr> rows{LinExpr(1.0)};
        double nrm = 0.0;
        std::vector<double> c(d);
        for (int i = 0; i < d; ++i) {
            c[i] = dist(gen);
            nrm += c[i] * c[i];
            rows.push_back(LinExpr(x[i]));
            prog.add_objective(x[i], c[i]);
        }
        prog.add_soc(rows);
        auto rep = solve_checked(prog);
        CHECK(rep.objective == doctest::Approx(-std::sqrt(nrm)).epsilon(1e-5));
    }
}

TEST_CASE("norm epigraph projection onto a box") {
    ConicProgram prog;
    auto x = prog.add_var();
    auto y = prog.add_var();
    prog.set_lower_bound(x, 0.0);
    prog.set_upper_bound(x, 1.0);
    prog.set_lower_bound(y, 0.0);
    prog.set_upper_bound(y, 1.0);
    Var d = prog.add_norm_bound({LinExpr(x) - LinExpr(3.0), LinExpr(y) + LinExpr(4.0)});
    prog.add_objective(d, 1.0);
    // Closest box point to (3, -4) is (1, 0), at distance sqrt(4 + 16).
    auto rep = solve_checked(prog);
    CHECK(rep.objective == doctest::Approx(std::sqrt(20.0)).epsilon(1e-5));
}

TEST_CASE("rotated cone gives the quadratic-over-linear value") {
    ConicProgram prog;
    auto xv = prog.add_var();
    auto yv = prog.add_var();
    prog.add_zero(LinExpr(xv) - LinExpr(2.0));
    prog.add_zero(LinExpr(yv) - LinExpr(2.0));
    Var t = prog.add_quad_over_lin(LinExpr(xv), LinExpr(yv));
    prog.add_objective(t, 1.0);
    auto rep = solve_checked(prog);
    CHECK(rep.objective == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("raw rotated cone bound differs from the helper by the 2 factor") {
    // 2 t y >= x^2 with x = 2, y = 1 allows t down to 2, not 4.
    ConicProgram prog;
    auto t = prog.add_var();
    prog.add_rsoc({LinExpr(t), LinExpr(1.0), LinExpr(2.0)});
    prog.add_objective(t, 1.0);
    auto rep = solve_checked(prog);
    CHECK(rep.objective == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("power cone encodes the cubic epigraph") {
    for (double xval : {8.0, -8.0, 0.5}) {
        ConicProgram prog;
        auto t = prog.add_var();
        prog.add_power(1.0 / 3.0, LinExpr(t), LinExpr(1.0), LinExpr(xval));
        prog.add_objective(t, 1.0);
        auto rep = solve_checked(prog);
        CHECK(rep.objective ==
              doctest::Approx(std::pow(std::abs(xval), 3)).epsilon(1e-5));
    }
}

TEST_CASE("cubic over square helper") {
    ConicProgram prog;
    auto x = prog.add_var();
    auto d = prog.add_var();
    prog.add_zero(LinExpr(x) - LinExpr(3.0));
    prog.add_zero(LinExpr(d) - LinExpr(2.0));
    Var t = prog.add_cubic_over_square(LinExpr(x), LinExpr(d));
    prog.add_objective(t, 1.0);
    auto rep = solve_checked(prog);
    CHECK(rep.objective == doctest::Approx(27.0 / 4.0).epsilon(1e-5));
}

TEST_CASE("quartic over square helper") {
    ConicProgram prog;
    auto x = prog.add_var();
    auto d = prog.add_var();
    prog.add_zero(LinExpr(x) - LinExpr(3.0));
    prog.add_zero(LinExpr(d) - LinExpr(2.0));
    Var t = prog.add_quartic_over_square(LinExpr(x), LinExpr(d));
    prog.add_objective(t, 1.0);
    auto rep = solve_checked(prog);
    CHECK(rep.objective == doctest::Approx(81.0 / 4.0).epsilon(1e-5));
}

TEST_CASE("contradictory bounds report infeasible") {
    ConicProgram prog;
    auto x = prog.add_var();
    prog.add_nonneg(LinExpr(x) - LinExpr(1.0));
    prog.add_nonneg(-LinExpr(x));
    prog.add_objective(x, 1.0);
    auto rep = prog.solve();
    CHECK(rep.status == SolveStatus::Infeasible);
}

TEST_CASE("descent direction without a floor reports unbounded") {
    ConicProgram prog;
    auto x = prog.add_var();
    prog.add_nonneg(-LinExpr(x));
    prog.add_objective(x, 1.0);
    auto rep = prog.solve();
    CHECK(rep.status == SolveStatus::Unbounded);
}

TEST_CASE("random quadratic penalties match the closed form") {
    // minimize sum t_i with t_i >= (x - p_i)^2 over scalar x gives the mean.
    std::mt19937 gen(11);
    std::uniform_real_distribution<double> dist(-5.0, 5.0);
    for (int trial = 0; trial < 5; ++trial) {
        const int terms = 3 + trial;
        ConicProgram prog;
        auto x = prog.add_var();
        double mean = 0.0;
        std::vector<double> p(terms);
        for (int i = 0; i < terms; ++i) {
            p[i] = dist(gen);
            mean += p[i] / terms;
            Var t = prog.add_quad_over_lin(LinExpr(x) - LinExpr(p[i]),
                                           LinExpr(1.0));
            prog.add_objective(t, 1.0);
        }
        auto rep = solve_checked(prog);
        CHECK(rep.x[0] == doctest::Approx(mean).epsilon(1e-4));
        double expect = 0.0;
        for (double pi : p) expect += (mean - pi) * (mean - pi);
        CHECK(rep.objective == doctest::Approx(expect).epsilon(1e-4));
    }
}

TEST_CASE("badly scaled data still solves after equilibration") {
    ConicProgram prog;
    auto x = prog.add_var();
    auto y = prog.add_var();
    prog.add_zero(1e6 * LinExpr(x) + 1e-4 * LinExpr(y) - LinExpr(2e6));
    prog.set_lower_bound(y, 0.0);
    prog.set_upper_bound(y, 1e8);
    prog.add_objective(x, 1.0);
    prog.add_objective(y, -1e-6);
    auto rep = prog.solve();
    REQUIRE(rep.status == SolveStatus::Optimal);
    // y rises to its cap; x = (2e6 - 1e-4 * 1e8) / 1e6.
    CHECK(rep.x[1] == doctest::Approx(1e8).epsilon(1e-5));
    CHECK(rep.x[0] == doctest::Approx((2e6 - 1e4) / 1e6).epsilon(1e-5));
}

TEST_CASE("max_violation flags broken assignments") {
    ConicProgram prog;
    auto x = prog.add_var();
    prog.set_lower_bound(x, 0.0);
    prog.add_soc({LinExpr(1.0), LinExpr(x)});
    CHECK(prog.max_violation({0.5}) == doctest::Approx(0.0));
    CHECK(prog.max_violation({2.0}) == doctest::Approx(1.0));
    CHECK(prog.max_violation({-0.5}) == doctest::Approx(0.5));
}

TEST_CASE("dump lists the lowered structure") {
    ConicProgram prog;
    auto x = prog.add_var();
    prog.set_lower_bound(x, 0.0);
    prog.add_soc({LinExpr(1.0), LinExpr(x)});
    prog.add_objective(x, -1.0);
    std::ostringstream out;
    prog.dump(out);
    CHECK(out.str().find("soc 0 dim 2") != std::string::npos);
    CHECK(out.str().find("minimize") != std::string::npos);
}

TEST_CASE("empty program is trivially optimal") {
    ConicProgram prog;
    prog.add_var();
    auto rep = prog.solve();
    CHECK(rep.status == SolveStatus::Optimal);
}
