#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "uavirs/types.hpp"

namespace uavirs::conic {

/// Index of a decision variable inside one ConicProgram.
struct Var {
    int id = -1;
};

/// Sparse affine expression sum(coeff_i * x_i) + constant.
struct LinExpr {
    std::vector<std::pair<int, double>> terms;
    double constant = 0.0;

    LinExpr() = default;
    LinExpr(double c) : constant(c) {}
    LinExpr(Var v) { terms.emplace_back(v.id, 1.0); }

    LinExpr& operator+=(const LinExpr& o);
    LinExpr& operator-=(const LinExpr& o);
    LinExpr& operator*=(double s);
};

LinExpr operator+(LinExpr a, const LinExpr& b);
LinExpr operator-(LinExpr a, const LinExpr& b);
LinExpr operator*(double s, LinExpr e);
LinExpr operator-(LinExpr e);

enum class ConeType { Zero, NonNeg, Soc, Rsoc, Power };

/// One cone membership constraint on an affine image of the variables.
/// Conventions, with v the row vector:
///   Zero    v = 0 componentwise
///   NonNeg  v >= 0 componentwise
///   Soc     v[0] >= ||v[1:]||
///   Rsoc    2 v[0] v[1] >= ||v[2:]||^2,  v[0], v[1] >= 0
///   Power   v[0]^p v[1]^(1-p) >= |v[2]|, v[0], v[1] >= 0  (p = exponent)
struct ConeBlock {
    ConeType type = ConeType::NonNeg;
    double exponent = 0.0;  // Power only
    std::vector<LinExpr> rows;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, NumericalLimit, IterationLimit };

std::string to_string(SolveStatus s);

struct SolveReport {
    SolveStatus status = SolveStatus::NumericalLimit;
    std::vector<double> x;
    double objective = 0.0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double duality_gap = 0.0;
    int iterations = 0;
};

struct SolverOptions {
    double tol = 1e-7;        // feasibility and relative-gap target
    int max_iters = 100;
    bool verbose = false;
};

/// Linear objective over cone-constrained variables. Built once, solved by
/// an interior-point method; rotated and power cones are lowered to
/// second-order cones internally.
class ConicProgram {
  public:
    Var add_var(const std::string& name = {});
    std::vector<Var> add_vars(std::size_t count, const std::string& prefix = {});

    int num_vars() const { return static_cast<int>(names_.size()); }
    const std::string& var_name(int id) const { return names_[id]; }

    void set_lower_bound(Var v, double lb);
    void set_upper_bound(Var v, double ub);

    /// Adds coeff * v to the minimized objective.
    void add_objective(Var v, double coeff);
    void add_objective_constant(double c) { obj_constant_ += c; }

    void add_zero(LinExpr e);
    void add_nonneg(LinExpr e);  // e >= 0
    void add_soc(std::vector<LinExpr> rows);
    void add_rsoc(std::vector<LinExpr> rows);
    /// Only exponent 1/3 is accepted; it is what the cubic epigraph needs.
    void add_power(double exponent, LinExpr a, LinExpr b, LinExpr c);

    /// t >= num^2 / den (den > 0 on the feasible set). Returns t.
    Var add_quad_over_lin(LinExpr num, LinExpr den);
    /// t >= x^3 / den^2 for x >= 0. Returns t.
    Var add_cubic_over_square(LinExpr x, LinExpr den);
    /// t >= x^4 / den^2 for den > 0. Returns t.
    Var add_quartic_over_square(LinExpr x, LinExpr den);
    /// d >= ||rows|| (Euclidean). Returns d.
    Var add_norm_bound(std::vector<LinExpr> rows);

    const std::vector<ConeBlock>& blocks() const { return blocks_; }
    const std::vector<double>& objective() const { return obj_; }
    double objective_constant() const { return obj_constant_; }
    const std::vector<double>& lower_bounds() const { return lb_; }
    const std::vector<double>& upper_bounds() const { return ub_; }

    /// Expression value under a candidate assignment.
    double eval(const LinExpr& e, const std::vector<double>& x) const;

    /// Worst constraint violation of an assignment over every block.
    double max_violation(const std::vector<double>& x) const;

    /// Text dump of the lowered program (linear rows and second-order
    /// cones) for external cross-checking.
    void dump(std::ostream& out) const;

    SolveReport solve(const SolverOptions& opts = {}) const;

  private:
    std::vector<std::string> names_;
    std::vector<double> obj_;
    std::vector<double> lb_;
    std::vector<double> ub_;
    double obj_constant_ = 0.0;
    std::vector<ConeBlock> blocks_;

    friend struct LoweredProgram;
};

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

}  // namespace uavirs::conic
