#include "uavirs/conic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>

#include "lowered.hpp"

namespace uavirs::conic {

LinExpr& LinExpr::operator+=(const LinExpr& o) {
    terms.insert(terms.end(), o.terms.begin(), o.terms.end());
    constant += o.constant;
    return *this;
}

LinExpr& LinExpr::operator-=(const LinExpr& o) {
    for (const auto& [id, coef] : o.terms) terms.emplace_back(id, -coef);
    constant -= o.constant;
    return *this;
}

LinExpr& LinExpr::operator*=(double s) {
    for (auto& [id, coef] : terms) coef *= s;
    constant *= s;
    return *this;
}

LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
LinExpr operator-(LinExpr a, const LinExpr& b) { return a -= b; }
LinExpr operator*(double s, LinExpr e) { return e *= s; }
LinExpr operator-(LinExpr e) { return e *= -1.0; }

std::string to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::Infeasible: return "infeasible";
        case SolveStatus::Unbounded: return "unbounded";
        case SolveStatus::NumericalLimit: return "numerical_limit";
        case SolveStatus::IterationLimit: return "iteration_limit";
    }
    return "unknown";
}

Var ConicProgram::add_var(const std::string& name) {
    Var v{num_vars()};
    names_.push_back(name.empty() ? "x" + std::to_string(v.id) : name);
    obj_.push_back(0.0);
    lb_.push_back(-kUnbounded);
    ub_.push_back(kUnbounded);
    return v;
}

std::vector<Var> ConicProgram::add_vars(std::size_t count,
                                        const std::string& prefix) {
    std::vector<Var> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i)
        out.push_back(add_var(prefix.empty() ? std::string{}
                                             : prefix + std::to_string(i)));
    return out;
}

void ConicProgram::set_lower_bound(Var v, double lb) { lb_[v.id] = lb; }
void ConicProgram::set_upper_bound(Var v, double ub) { ub_[v.id] = ub; }

void ConicProgram::add_objective(Var v, double coeff) { obj_[v.id] += coeff; }

void ConicProgram::add_zero(LinExpr e) {
    blocks_.push_back({ConeType::Zero, 0.0, {std::move(e)}});
}

void ConicProgram::add_nonneg(LinExpr e) {
    blocks_.push_back({ConeType::NonNeg, 0.0, {std::move(e)}});
}

void ConicProgram::add_soc(std::vector<LinExpr> rows) {
    if (rows.size() < 2) throw std::invalid_argument("soc needs >= 2 rows");
    blocks_.push_back({ConeType::Soc, 0.0, std::move(rows)});
}

void ConicProgram::add_rsoc(std::vector<LinExpr> rows) {
    if (rows.size() < 3) throw std::invalid_argument("rsoc needs >= 3 rows");
    blocks_.push_back({ConeType::Rsoc, 0.0, std::move(rows)});
}

void ConicProgram::add_power(double exponent, LinExpr a, LinExpr b,
                             LinExpr c) {
    if (std::abs(exponent - 1.0 / 3.0) > 1e-12)
        throw std::invalid_argument("power cone exponent must be 1/3");
    blocks_.push_back(
        {ConeType::Power, exponent, {std::move(a), std::move(b), std::move(c)}});
}

Var ConicProgram::add_quad_over_lin(LinExpr num, LinExpr den) {
    Var t = add_var();
    add_rsoc({0.5 * LinExpr(t), std::move(den), std::move(num)});
    return t;
}

Var ConicProgram::add_cubic_over_square(LinExpr x, LinExpr den) {
    Var t = add_var();
    add_power(1.0 / 3.0, LinExpr(t), std::move(den), std::move(x));
    return t;
}

Var ConicProgram::add_quartic_over_square(LinExpr x, LinExpr den) {
    Var w = add_var();
    add_rsoc({0.5 * LinExpr(w), std::move(den), std::move(x)});
    Var t = add_var();
    add_rsoc({0.5 * LinExpr(t), LinExpr(1.0), LinExpr(w)});
    return t;
}

Var ConicProgram::add_norm_bound(std::vector<LinExpr> rows) {
    Var d = add_var();
    rows.insert(rows.begin(), LinExpr(d));
    add_soc(std::move(rows));
    return d;
}

double ConicProgram::eval(const LinExpr& e, const std::vector<double>& x) const {
    double v = e.constant;
    for (const auto& [id, coef] : e.terms) v += coef * x[id];
    return v;
}

double ConicProgram::max_violation(const std::vector<double>& x) const {
    double worst = 0.0;
    auto bump = [&](double v) { worst = std::max(worst, v); };
    for (int i = 0; i < num_vars(); ++i) {
        if (lb_[i] > -kUnbounded) bump(lb_[i] - x[i]);
        if (ub_[i] < kUnbounded) bump(x[i] - ub_[i]);
    }
    for (const ConeBlock& blk : blocks_) {
        std::vector<double> v(blk.rows.size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = eval(blk.rows[i], x);
        switch (blk.type) {
            case ConeType::Zero:
                for (double r : v) bump(std::abs(r));
                break;
            case ConeType::NonNeg:
                for (double r : v) bump(-r);
                break;
            case ConeType::Soc: {
                double tail = 0.0;
                for (std::size_t i = 1; i < v.size(); ++i) tail += v[i] * v[i];
                bump(std::sqrt(tail) - v[0]);
                break;
            }
            case ConeType::Rsoc: {
                bump(-v[0]);
                bump(-v[1]);
                double tail = 0.0;
                for (std::size_t i = 2; i < v.size(); ++i) tail += v[i] * v[i];
                const double lhs = 2.0 * std::max(v[0], 0.0) * std::max(v[1], 0.0);
                bump(std::sqrt(tail) - std::sqrt(lhs));
                break;
            }
            case ConeType::Power: {
                bump(-v[0]);
                bump(-v[1]);
                const double lhs = std::pow(std::max(v[0], 0.0), 1.0 / 3.0) *
                                   std::pow(std::max(v[1], 0.0), 2.0 / 3.0);
                bump(std::abs(v[2]) - lhs);
                break;
            }
        }
    }
    return worst;
}

namespace {

struct TripletSink {
    std::vector<Eigen::Triplet<double>> entries;
    int row = 0;

    /// Appends one compressed row of coefficients; returns the constant.
    double push(const LinExpr& e, double sign, int* helper_base = nullptr) {
        (void)helper_base;
        std::map<int, double> acc;
        for (const auto& [id, coef] : e.terms) acc[id] += coef;
        for (const auto& [id, coef] : acc)
            if (coef != 0.0) entries.emplace_back(row, id, sign * coef);
        ++row;
        return e.constant;
    }
};

const double kInvSqrt2 = 0.7071067811865475244;

}  // namespace

LoweredProgram LoweredProgram::build(const ConicProgram& prog) {
    LoweredProgram low;
    low.n_orig = prog.num_vars();
    int n = low.n_orig;
    auto helper = [&]() { return n++; };

    TripletSink ta, tg;
    std::vector<double> b, h;

    auto push_eq = [&](const LinExpr& e) { b.push_back(-ta.push(e, 1.0)); };
    // e >= 0 becomes the slack row s = e with G = -coeffs, h = constant.
    auto push_ge = [&](const LinExpr& e) { h.push_back(tg.push(e, -1.0)); };

    std::vector<int> soc_dims;
    auto push_soc = [&](const std::vector<LinExpr>& rows) {
        for (const LinExpr& e : rows) h.push_back(tg.push(e, -1.0));
        soc_dims.push_back(static_cast<int>(rows.size()));
    };
    auto push_rsoc = [&](const std::vector<LinExpr>& rows) {
        std::vector<LinExpr> soc;
        soc.push_back(kInvSqrt2 * (rows[0] + rows[1]));
        soc.push_back(kInvSqrt2 * (rows[0] - rows[1]));
        soc.insert(soc.end(), rows.begin() + 2, rows.end());
        push_soc(soc);
    };

    // Nonnegative rows must precede the cone rows, so collect them first.
    std::vector<const ConeBlock*> ge_blocks, cone_blocks;
    for (const ConeBlock& blk : prog.blocks_)
        (blk.type == ConeType::NonNeg ? ge_blocks : cone_blocks).push_back(&blk);

    for (const ConeBlock* blk : ge_blocks)
        for (const LinExpr& e : blk->rows) push_ge(e);
    for (int i = 0; i < low.n_orig; ++i) {
        if (prog.lb_[i] > -kUnbounded)
            push_ge(LinExpr(Var{i}) - LinExpr(prog.lb_[i]));
        if (prog.ub_[i] < kUnbounded)
            push_ge(LinExpr(prog.ub_[i]) - LinExpr(Var{i}));
    }

    // Power lowering splits |v2| first, so its nonneg rows land in the LP
    // block ahead of time.
    struct PowerPlan {
        const ConeBlock* blk;
        int dabs;
        int r;
    };
    std::vector<PowerPlan> power_plans;
    for (const ConeBlock* blk : cone_blocks) {
        if (blk->type != ConeType::Power) continue;
        PowerPlan plan{blk, helper(), helper()};
        push_ge(LinExpr(Var{plan.dabs}) - blk->rows[2]);
        push_ge(LinExpr(Var{plan.dabs}) + blk->rows[2]);
        power_plans.push_back(plan);
    }

    low.m_lp = static_cast<int>(h.size());

    std::size_t next_power = 0;
    for (const ConeBlock* blk : cone_blocks) {
        switch (blk->type) {
            case ConeType::Zero:
                for (const LinExpr& e : blk->rows) push_eq(e);
                break;
            case ConeType::Soc:
                push_soc(blk->rows);
                break;
            case ConeType::Rsoc:
                push_rsoc(blk->rows);
                break;
            case ConeType::Power: {
                // v0^(1/3) v1^(2/3) >= dabs >= |v2| via
                //   r v1 >= dabs^2 and v0 dabs >= r^2.
                const PowerPlan& plan = power_plans[next_power++];
                const LinExpr r{Var{plan.r}}, dabs{Var{plan.dabs}};
                push_rsoc({0.5 * r, blk->rows[1], dabs});
                push_rsoc({0.5 * blk->rows[0], dabs, r});
                break;
            }
            case ConeType::NonNeg:
                break;
        }
    }

    low.n = n;
    low.soc_dims = std::move(soc_dims);
    const int p = static_cast<int>(b.size());
    const int m = static_cast<int>(h.size());
    low.A.resize(p, n);
    low.A.setFromTriplets(ta.entries.begin(), ta.entries.end());
    low.G.resize(m, n);
    low.G.setFromTriplets(tg.entries.begin(), tg.entries.end());
    low.b = Eigen::Map<Eigen::VectorXd>(b.data(), p);
    low.h = Eigen::Map<Eigen::VectorXd>(h.data(), m);
    low.c = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < low.n_orig; ++i) low.c[i] = prog.obj_[i];
    return low;
}

void LoweredProgram::equilibrate() {
    const int nn = n, pp = p(), mm = m();
    Eigen::VectorXd cs = Eigen::VectorXd::Ones(nn);
    Eigen::VectorXd ra = Eigen::VectorXd::Ones(pp);
    Eigen::VectorXd rg = Eigen::VectorXd::Ones(mm);

    auto scale_of = [](double norm) {
        return norm < 1e-6 ? 1.0 : 1.0 / std::sqrt(norm);
    };

    for (int pass = 0; pass < 3; ++pass) {
        Eigen::VectorXd cn = Eigen::VectorXd::Zero(nn);
        Eigen::VectorXd an = Eigen::VectorXd::Zero(pp);
        Eigen::VectorXd gn = Eigen::VectorXd::Zero(mm);
        for (int j = 0; j < nn; ++j) {
            for (Eigen::SparseMatrix<double>::InnerIterator it(A, j); it; ++it) {
                const double v = std::abs(it.value());
                cn[j] = std::max(cn[j], v);
                an[it.row()] = std::max(an[it.row()], v);
            }
            for (Eigen::SparseMatrix<double>::InnerIterator it(G, j); it; ++it) {
                const double v = std::abs(it.value());
                cn[j] = std::max(cn[j], v);
                gn[it.row()] = std::max(gn[it.row()], v);
            }
        }
        // Rows of one second-order cone share a scale to keep the cone shape.
        int base = m_lp;
        for (int dim : soc_dims) {
            const double blk = gn.segment(base, dim).maxCoeff();
            gn.segment(base, dim).setConstant(blk);
            base += dim;
        }
        Eigen::VectorXd dc = cn.unaryExpr(scale_of);
        Eigen::VectorXd da = an.unaryExpr(scale_of);
        Eigen::VectorXd dg = gn.unaryExpr(scale_of);
        A = da.asDiagonal() * A * dc.asDiagonal();
        G = dg.asDiagonal() * G * dc.asDiagonal();
        cs.array() *= dc.array();
        ra.array() *= da.array();
        rg.array() *= dg.array();
    }
    b.array() *= ra.array();
    h.array() *= rg.array();
    c.array() *= cs.array();
    col_scale = cs;
}

void ConicProgram::dump(std::ostream& out) const {
    LoweredProgram low = LoweredProgram::build(*this);
    out << "vars " << low.n << " (orig " << low.n_orig << ")\n";
    out << "minimize";
    for (int i = 0; i < low.n; ++i)
        if (low.c[i] != 0.0) out << " + " << low.c[i] << "*x" << i;
    out << "\n";
    auto row_of = [&](const Eigen::SparseMatrix<double>& M, int r,
                      double rhs) {
        for (int j = 0; j < low.n; ++j)
            for (Eigen::SparseMatrix<double>::InnerIterator it(M, j); it; ++it)
                if (it.row() == r) out << " + " << it.value() << "*x" << j;
        out << " | " << rhs << "\n";
    };
    for (int r = 0; r < low.p(); ++r) {
        out << "eq " << r << ":";
        row_of(low.A, r, low.b[r]);
    }
    for (int r = 0; r < low.m_lp; ++r) {
        out << "ge " << r << ":";
        row_of(low.G, r, low.h[r]);
    }
    int base = low.m_lp;
    for (std::size_t k = 0; k < low.soc_dims.size(); ++k) {
        out << "soc " << k << " dim " << low.soc_dims[k] << "\n";
        for (int r = base; r < base + low.soc_dims[k]; ++r) {
            out << "  row:";
            row_of(low.G, r, low.h[r]);
        }
        base += low.soc_dims[k];
    }
}

SolveReport ConicProgram::solve(const SolverOptions& opts) const {
    LoweredProgram low = LoweredProgram::build(*this);

    if (low.m() == 0 && low.p() == 0) {
        SolveReport rep;
        rep.x.assign(num_vars(), 0.0);
        const bool flat = low.c.lpNorm<Eigen::Infinity>() == 0.0;
        rep.status = flat ? SolveStatus::Optimal : SolveStatus::Unbounded;
        rep.objective = obj_constant_;
        return rep;
    }

    low.equilibrate();
    SolveReport rep = low.run_ipm(opts);

    if (!rep.x.empty()) {
        std::vector<double> x(low.n_orig);
        for (int i = 0; i < low.n_orig; ++i)
            x[i] = rep.x[i] * low.col_scale[i];
        rep.x = std::move(x);
        double obj = obj_constant_;
        for (int i = 0; i < low.n_orig; ++i) obj += obj_[i] * rep.x[i];
        rep.objective = obj;
    }
    return rep;
}

}  // namespace uavirs::conic
