#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCore>
#include <vector>

#include "uavirs/conic.hpp"

namespace uavirs::conic {

/// Standard-form image of a ConicProgram:
///   minimize c'x  s.t.  Ax = b,  Gx + s = h,  s in K,
/// K = nonneg orthant (first m_lp rows of G) followed by second-order cones
/// of sizes soc_dims. Rotated and power cones are rewritten as second-order
/// cones here; power cones introduce helper columns, so n >= n_orig and the
/// caller keeps only the first n_orig entries of a solution.
struct LoweredProgram {
    int n = 0;
    int n_orig = 0;
    int m_lp = 0;
    std::vector<int> soc_dims;
    Eigen::SparseMatrix<double> A;  // p x n
    Eigen::SparseMatrix<double> G;  // m x n
    Eigen::VectorXd b, h, c;

    int p() const { return static_cast<int>(A.rows()); }
    int m() const { return static_cast<int>(G.rows()); }

    static LoweredProgram build(const ConicProgram& prog);

    /// Ruiz row/column scaling, cone blocks collapsed to one row scale.
    /// Mutates A, G, b, h, c in place; col_scale maps a scaled solution back
    /// via x = col_scale .* x_scaled.
    void equilibrate();
    Eigen::VectorXd col_scale;

    SolveReport run_ipm(const SolverOptions& opts) const;
};

}  // namespace uavirs::conic
