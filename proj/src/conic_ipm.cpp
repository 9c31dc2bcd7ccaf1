#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <vector>

#include "lowered.hpp"

namespace uavirs::conic {
namespace {

using Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;

constexpr double kReg = 1e-8;        // quasi-definite shift on the KKT matrix
constexpr double kStepScale = 0.99;  // fraction of the boundary step taken
constexpr int kMaxRefine = 3;
constexpr double kRelaxFactor = 1e4;  // accept this much looser on stall

/// Cone row layout of s and z: m_lp nonneg entries, then SOC blocks.
struct Layout {
    int m_lp = 0;
    std::vector<int> base, dim;  // per SOC block
    int m = 0;
    int degree = 0;

    explicit Layout(const LoweredProgram& low) {
        m_lp = low.m_lp;
        int at = m_lp;
        for (int d : low.soc_dims) {
            base.push_back(at);
            dim.push_back(d);
            at += d;
        }
        m = at;
        degree = m_lp + static_cast<int>(low.soc_dims.size());
    }
};

/// Nesterov-Todd scaling per cone block. For a SOC block the scaled point
/// wbar = (sbar + J zbar) / (2 gamma) has unit hyperbolic norm, so
/// a^2 - |q|^2 = 1 and W^-1 follows from W by flipping the sign of q.
struct Scalings {
    VectorXd lp_w2;  // s_i / z_i
    struct Soc {
        double eta2;  // ratio of the block hyperbolic norms of s and z
        double a;
        VectorXd q;
    };
    std::vector<Soc> soc;
    VectorXd lambda;  // W z, equal to W^-1 s

    bool compute(const Layout& lay, const VectorXd& s, const VectorXd& z) {
        lp_w2.resize(lay.m_lp);
        lambda.resize(lay.m);
        for (int i = 0; i < lay.m_lp; ++i) {
            if (s[i] <= 0.0 || z[i] <= 0.0) return false;
            lp_w2[i] = s[i] / z[i];
            lambda[i] = std::sqrt(s[i] * z[i]);
        }
        soc.resize(lay.base.size());
        for (std::size_t k = 0; k < lay.base.size(); ++k) {
            const auto sb = s.segment(lay.base[k], lay.dim[k]);
            const auto zb = z.segment(lay.base[k], lay.dim[k]);
            const int d = lay.dim[k];
            const double sres =
                sb[0] * sb[0] - sb.tail(d - 1).squaredNorm();
            const double zres =
                zb[0] * zb[0] - zb.tail(d - 1).squaredNorm();
            if (sres <= 0.0 || zres <= 0.0 || sb[0] <= 0.0 || zb[0] <= 0.0)
                return false;
            const double snorm = std::sqrt(sres), znorm = std::sqrt(zres);
            const VectorXd sbar = sb / snorm, zbar = zb / znorm;
            const double gamma =
                std::sqrt(0.5 * (1.0 + sbar.dot(zbar)));
            Soc& sc = soc[k];
            sc.eta2 = snorm / znorm;
            sc.a = (sbar[0] + zbar[0]) / (2.0 * gamma);
            sc.q = (sbar.tail(d - 1) - zbar.tail(d - 1)) / (2.0 * gamma);
            lambda.segment(lay.base[k], d) = w_apply(sc, zb);
        }
        return true;
    }

    static VectorXd w_apply(const Soc& sc, const Eigen::Ref<const VectorXd>& v) {
        const int d = static_cast<int>(v.size());
        const double eta = std::sqrt(sc.eta2);
        const double qv = sc.q.dot(v.tail(d - 1));
        VectorXd out(d);
        out[0] = eta * (sc.a * v[0] + qv);
        out.tail(d - 1) =
            eta * (v[0] * sc.q + v.tail(d - 1) + (qv / (1.0 + sc.a)) * sc.q);
        return out;
    }

    /// W^2 v in closed form: eta2 * [ (a^2+w) v0 + cb q'v1 ;
    ///   cb v0 q + v1 + db (q'v1) q ],  w = |q|^2, cb = 1+a+w/(1+a),
    ///   db = 1 + 2/(1+a) + w/(1+a)^2.
    static VectorXd w2_apply(const Soc& sc, const Eigen::Ref<const VectorXd>& v) {
        const int d = static_cast<int>(v.size());
        const double w = sc.q.squaredNorm();
        const double cb = 1.0 + sc.a + w / (1.0 + sc.a);
        const double db = 1.0 + 2.0 / (1.0 + sc.a) +
                          w / ((1.0 + sc.a) * (1.0 + sc.a));
        const double qv = sc.q.dot(v.tail(d - 1));
        VectorXd out(d);
        out[0] = sc.eta2 * ((sc.a * sc.a + w) * v[0] + cb * qv);
        out.tail(d - 1) =
            sc.eta2 * (cb * v[0] * sc.q + v.tail(d - 1) + db * qv * sc.q);
        return out;
    }

    VectorXd apply_w(const Layout& lay, const VectorXd& v) const {
        VectorXd out(lay.m);
        for (int i = 0; i < lay.m_lp; ++i) out[i] = std::sqrt(lp_w2[i]) * v[i];
        for (std::size_t k = 0; k < soc.size(); ++k)
            out.segment(lay.base[k], lay.dim[k]) =
                w_apply(soc[k], v.segment(lay.base[k], lay.dim[k]));
        return out;
    }

    VectorXd apply_w2(const Layout& lay, const VectorXd& v) const {
        VectorXd out(lay.m);
        for (int i = 0; i < lay.m_lp; ++i) out[i] = lp_w2[i] * v[i];
        for (std::size_t k = 0; k < soc.size(); ++k)
            out.segment(lay.base[k], lay.dim[k]) =
                w2_apply(soc[k], v.segment(lay.base[k], lay.dim[k]));
        return out;
    }
};

/// Jordan product u o v on the cone layout.
VectorXd cone_product(const Layout& lay, const VectorXd& u, const VectorXd& v) {
    VectorXd out(lay.m);
    for (int i = 0; i < lay.m_lp; ++i) out[i] = u[i] * v[i];
    for (std::size_t k = 0; k < lay.base.size(); ++k) {
        const auto ub = u.segment(lay.base[k], lay.dim[k]);
        const auto vb = v.segment(lay.base[k], lay.dim[k]);
        const int d = lay.dim[k];
        out[lay.base[k]] = ub.dot(vb);
        out.segment(lay.base[k] + 1, d - 1) =
            ub[0] * vb.tail(d - 1) + vb[0] * ub.tail(d - 1);
    }
    return out;
}

/// Solves lam o u = v for u.
VectorXd cone_divide(const Layout& lay, const VectorXd& lam, const VectorXd& v) {
    VectorXd out(lay.m);
    for (int i = 0; i < lay.m_lp; ++i) out[i] = v[i] / lam[i];
    for (std::size_t k = 0; k < lay.base.size(); ++k) {
        const auto lb = lam.segment(lay.base[k], lay.dim[k]);
        const auto vb = v.segment(lay.base[k], lay.dim[k]);
        const int d = lay.dim[k];
        const double rho = lb[0] * lb[0] - lb.tail(d - 1).squaredNorm();
        const double u0 =
            (lb[0] * vb[0] - lb.tail(d - 1).dot(vb.tail(d - 1))) / rho;
        out[lay.base[k]] = u0;
        out.segment(lay.base[k] + 1, d - 1) =
            (vb.tail(d - 1) - u0 * lb.tail(d - 1)) / lb[0];
    }
    return out;
}

VectorXd cone_identity(const Layout& lay) {
    VectorXd e = VectorXd::Zero(lay.m);
    e.head(lay.m_lp).setOnes();
    for (std::size_t k = 0; k < lay.base.size(); ++k) e[lay.base[k]] = 1.0;
    return e;
}

/// Shifts r along the identity until it is safely interior.
VectorXd bring_to_cone(const Layout& lay, const VectorXd& r) {
    double alpha = -1e99;
    for (int i = 0; i < lay.m_lp; ++i) alpha = std::max(alpha, -r[i]);
    for (std::size_t k = 0; k < lay.base.size(); ++k) {
        const auto rb = r.segment(lay.base[k], lay.dim[k]);
        alpha = std::max(alpha,
                         rb.tail(lay.dim[k] - 1).norm() - rb[0]);
    }
    // A margin of zero (point on the boundary) still needs the shift.
    if (alpha < -1e-3) return r;
    return r + (1.0 + std::max(alpha, 0.0)) * cone_identity(lay);
}

/// Largest step with v + alpha dv still inside the cone (possibly huge).
double max_step(const Layout& lay, const VectorXd& v, const VectorXd& dv) {
    double alpha = 1e99;
    for (int i = 0; i < lay.m_lp; ++i)
        if (dv[i] < 0.0) alpha = std::min(alpha, -v[i] / dv[i]);
    for (std::size_t k = 0; k < lay.base.size(); ++k) {
        const int d = lay.dim[k];
        const auto vb = v.segment(lay.base[k], d);
        const auto db = dv.segment(lay.base[k], d);
        if (db[0] < 0.0) alpha = std::min(alpha, -vb[0] / db[0]);
        const double a2 = db[0] * db[0] - db.tail(d - 1).squaredNorm();
        const double b2 =
            2.0 * (vb[0] * db[0] - vb.tail(d - 1).dot(db.tail(d - 1)));
        const double c2 = vb[0] * vb[0] - vb.tail(d - 1).squaredNorm();
        if (std::abs(a2) < 1e-14) {
            if (b2 < 0.0) alpha = std::min(alpha, -c2 / b2);
            continue;
        }
        const double disc = b2 * b2 - 4.0 * a2 * c2;
        if (a2 < 0.0) {
            // One sign change ahead; smallest positive root.
            const double root =
                (-b2 - std::sqrt(std::max(disc, 0.0))) / (2.0 * a2);
            if (root > 0.0) alpha = std::min(alpha, root);
        } else if (disc >= 0.0 && b2 < 0.0) {
            const double root = 2.0 * c2 / (-b2 + std::sqrt(disc));
            if (root > 0.0) alpha = std::min(alpha, root);
        }
    }
    return alpha;
}

struct KktSystem {
    const LoweredProgram& low;
    Layout lay;
    int n, p, dim;
    SpMat K;
    std::vector<int> slot;  // value indices of the mutable z-block entries
    Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt;
    bool analyzed = false;

    explicit KktSystem(const LoweredProgram& l)
        : low(l), lay(l), n(l.n), p(l.p()), dim(l.n + l.p() + l.m()) {
        std::vector<Eigen::Triplet<double>> t;
        for (int i = 0; i < n; ++i) t.emplace_back(i, i, kReg);
        for (int j = 0; j < n; ++j) {
            for (SpMat::InnerIterator it(low.A, j); it; ++it)
                t.emplace_back(j, n + it.row(), it.value());
            for (SpMat::InnerIterator it(low.G, j); it; ++it)
                t.emplace_back(j, n + p + static_cast<int>(it.row()),
                               it.value());
        }
        for (int i = 0; i < p; ++i) t.emplace_back(n + i, n + i, -kReg);
        for (int i = 0; i < lay.m_lp; ++i)
            t.emplace_back(n + p + i, n + p + i, -1.0);
        for (std::size_t k = 0; k < lay.base.size(); ++k)
            for (int jj = 0; jj < lay.dim[k]; ++jj)
                for (int ii = 0; ii <= jj; ++ii)
                    t.emplace_back(n + p + lay.base[k] + ii,
                                   n + p + lay.base[k] + jj,
                                   ii == jj ? -1.0 : -0.5);
        K.resize(dim, dim);
        K.setFromTriplets(t.begin(), t.end());
        K.makeCompressed();
        cache_slots();
    }

    void cache_slots() {
        auto find = [&](int row, int col) {
            const int start = K.outerIndexPtr()[col];
            const int end = K.outerIndexPtr()[col + 1];
            const int* inner = K.innerIndexPtr();
            const int* hit = std::lower_bound(inner + start, inner + end, row);
            return static_cast<int>(hit - inner);
        };
        for (int i = 0; i < lay.m_lp; ++i)
            slot.push_back(find(n + p + i, n + p + i));
        for (std::size_t k = 0; k < lay.base.size(); ++k)
            for (int jj = 0; jj < lay.dim[k]; ++jj)
                for (int ii = 0; ii <= jj; ++ii)
                    slot.push_back(find(n + p + lay.base[k] + ii,
                                        n + p + lay.base[k] + jj));
    }

    bool factorize(const Scalings& sc) {
        double* vals = K.valuePtr();
        std::size_t at = 0;
        for (int i = 0; i < lay.m_lp; ++i)
            vals[slot[at++]] = -sc.lp_w2[i] - kReg;
        for (std::size_t k = 0; k < lay.base.size(); ++k) {
            const auto& s = sc.soc[k];
            const int d = lay.dim[k];
            const double w = s.q.squaredNorm();
            const double cb = 1.0 + s.a + w / (1.0 + s.a);
            const double db =
                1.0 + 2.0 / (1.0 + s.a) + w / ((1.0 + s.a) * (1.0 + s.a));
            for (int jj = 0; jj < d; ++jj)
                for (int ii = 0; ii <= jj; ++ii) {
                    double v;
                    if (ii == 0 && jj == 0)
                        v = s.eta2 * (s.a * s.a + w);
                    else if (ii == 0)
                        v = s.eta2 * cb * s.q[jj - 1];
                    else
                        v = s.eta2 * (db * s.q[ii - 1] * s.q[jj - 1] +
                                      (ii == jj ? 1.0 : 0.0));
                    vals[slot[at++]] = -v - (ii == jj ? kReg : 0.0);
                }
        }
        if (!analyzed) {
            ldlt.analyzePattern(K.selfadjointView<Eigen::Upper>());
            analyzed = true;
        }
        ldlt.factorize(K.selfadjointView<Eigen::Upper>());
        return ldlt.info() == Eigen::Success;
    }

    /// Unregularized KKT product for iterative refinement.
    VectorXd apply_noreg(const Scalings& sc, const VectorXd& v) const {
        VectorXd out(dim);
        const auto vx = v.head(n);
        const auto vy = v.segment(n, p);
        const auto vz = v.tail(lay.m);
        out.head(n) = low.A.transpose() * vy + low.G.transpose() * vz;
        out.segment(n, p) = low.A * vx;
        out.tail(lay.m) = low.G * vx - sc.apply_w2(lay, vz);
        return out;
    }

    VectorXd solve(const Scalings& sc, const VectorXd& rhs) const {
        VectorXd v = ldlt.solve(rhs);
        double best = std::numeric_limits<double>::infinity();
        VectorXd best_v = v;
        for (int pass = 0; pass < kMaxRefine; ++pass) {
            const VectorXd err = rhs - apply_noreg(sc, v);
            const double e = err.lpNorm<Eigen::Infinity>();
            if (e < best) {
                best = e;
                best_v = v;
            }
            if (e <= 1e-12 * (1.0 + rhs.lpNorm<Eigen::Infinity>())) break;
            v += ldlt.solve(err);
        }
        return best_v;
    }
};

}  // namespace

SolveReport LoweredProgram::run_ipm(const SolverOptions& opts) const {
    const Layout lay(*this);
    const int nn = n, pp = p(), mm = lay.m;
    KktSystem kkt(*this);

    SolveReport rep;
    rep.status = SolveStatus::NumericalLimit;

    // Identity-scaled start: one solve gives the primal seed, one the dual.
    Scalings sc;
    sc.lp_w2 = VectorXd::Ones(lay.m_lp);
    sc.soc.resize(lay.base.size());
    for (std::size_t k = 0; k < lay.base.size(); ++k) {
        sc.soc[k].eta2 = 1.0;
        sc.soc[k].a = 1.0;
        sc.soc[k].q = VectorXd::Zero(lay.dim[k] - 1);
    }
    if (!kkt.factorize(sc)) return rep;

    VectorXd rhs = VectorXd::Zero(kkt.dim);
    rhs.segment(nn, pp) = b;
    rhs.tail(mm) = h;
    VectorXd v = kkt.solve(sc, rhs);
    VectorXd x = v.head(nn);
    VectorXd s = bring_to_cone(lay, -v.tail(mm));

    rhs.setZero();
    rhs.head(nn) = -c;
    v = kkt.solve(sc, rhs);
    VectorXd y = v.segment(nn, pp);
    VectorXd z = bring_to_cone(lay, v.tail(mm));

    double tau = 1.0, kap = 1.0;

    const double norm_b = pp ? b.lpNorm<Eigen::Infinity>() : 0.0;
    const double norm_h = mm ? h.lpNorm<Eigen::Infinity>() : 0.0;
    const double norm_c = c.lpNorm<Eigen::Infinity>();

    double best_score = std::numeric_limits<double>::infinity();
    VectorXd best_x = x;
    double best_pres = 1e99, best_dres = 1e99, best_gap = 1e99;
    int iter = 0;

    auto finish_with_best = [&](SolveStatus fallback) {
        rep.primal_residual = best_pres;
        rep.dual_residual = best_dres;
        rep.duality_gap = best_gap;
        rep.iterations = iter;
        rep.x.assign(best_x.data(), best_x.data() + nn);
        rep.status = best_score <= kRelaxFactor * opts.tol
                         ? SolveStatus::Optimal
                         : fallback;
        return rep;
    };

    for (iter = 0; iter <= opts.max_iters; ++iter) {
        const VectorXd rx = -A.transpose() * y - G.transpose() * z - c * tau;
        const VectorXd ry = A * x - b * tau;
        const VectorXd rz = s + G * x - h * tau;
        const double rt = kap + c.dot(x) + b.dot(y) + h.dot(z);

        const double gap = s.dot(z);
        const double mu = (gap + tau * kap) / (lay.degree + 1);
        const double pcost = c.dot(x) / tau;

        const double pres =
            std::max(pp ? ry.lpNorm<Eigen::Infinity>() / (1.0 + norm_b) : 0.0,
                     mm ? rz.lpNorm<Eigen::Infinity>() / (1.0 + norm_h) : 0.0) /
            tau;
        const double dres =
            (nn ? rx.lpNorm<Eigen::Infinity>() / (1.0 + norm_c) : 0.0) / tau;
        const double absgap = gap / (tau * tau);
        const double relgap = absgap / std::max(1.0, std::abs(pcost));

        if (opts.verbose)
            std::printf(
                "it %2d  pcost %+.6e  gap %8.2e  pres %8.2e  dres %8.2e  "
                "tau %8.2e  kap %8.2e\n",
                iter, pcost, absgap, pres, dres, tau, kap);

        const double score = std::max({pres, dres, std::min(absgap, relgap)});
        if (score < best_score) {
            best_score = score;
            best_x = x / tau;
            best_pres = pres;
            best_dres = dres;
            best_gap = absgap;
        }

        if (pres <= opts.tol && dres <= opts.tol &&
            (absgap <= opts.tol || relgap <= opts.tol)) {
            rep.status = SolveStatus::Optimal;
            rep.primal_residual = pres;
            rep.dual_residual = dres;
            rep.duality_gap = absgap;
            rep.iterations = iter;
            best_x = x / tau;
            rep.x.assign(best_x.data(), best_x.data() + nn);
            return rep;
        }

        // Certificates use the homogeneous iterate directly.
        const double by_hz = b.dot(y) + h.dot(z);
        if (kap > tau && by_hz < -1e-12) {
            const double pinf =
                (A.transpose() * y + G.transpose() * z).lpNorm<Eigen::Infinity>() /
                (-by_hz);
            if (pinf <= opts.tol * 10.0) {
                rep.status = SolveStatus::Infeasible;
                rep.iterations = iter;
                return rep;
            }
        }
        const double cx = c.dot(x);
        if (kap > tau && cx < -1e-12) {
            const double dinf =
                std::max((A * x).lpNorm<Eigen::Infinity>(),
                         (G * x + s).lpNorm<Eigen::Infinity>()) /
                (-cx);
            if (dinf <= opts.tol * 10.0) {
                rep.status = SolveStatus::Unbounded;
                rep.iterations = iter;
                return rep;
            }
        }

        if (iter == opts.max_iters) return finish_with_best(SolveStatus::IterationLimit);
        if (tau < 1e-12 || mu < 1e-16) {
            if (opts.verbose) std::printf("stop: tau or mu vanished\n");
            return finish_with_best(SolveStatus::NumericalLimit);
        }

        if (!sc.compute(lay, s, z)) {
            if (opts.verbose) std::printf("stop: iterate left the cone\n");
            return finish_with_best(SolveStatus::NumericalLimit);
        }
        if (!kkt.factorize(sc)) {
            if (opts.verbose) std::printf("stop: factorization failed\n");
            return finish_with_best(SolveStatus::NumericalLimit);
        }

        // Constant-column solve reused by both directions.
        rhs.head(nn) = -c;
        rhs.segment(nn, pp) = b;
        rhs.tail(mm) = h;
        const VectorXd v1 = kkt.solve(sc, rhs);
        const double dtau_denom =
            kap / tau -
            (c.dot(v1.head(nn)) + b.dot(v1.segment(nn, pp)) +
             h.dot(v1.tail(mm)));
        if (std::abs(dtau_denom) < 1e-14) {
            if (opts.verbose) std::printf("stop: flat tau direction\n");
            return finish_with_best(SolveStatus::NumericalLimit);
        }

        auto combine = [&](const VectorXd& v2, double dtau) {
            return VectorXd(v2 + dtau * v1);
        };

        // Affine direction.
        rhs.head(nn) = rx;
        rhs.segment(nn, pp) = -ry;
        rhs.tail(mm) = s - rz;
        const VectorXd v2 = kkt.solve(sc, rhs);
        const double dtau_aff =
            (rt - kap + c.dot(v2.head(nn)) + b.dot(v2.segment(nn, pp)) +
             h.dot(v2.tail(mm))) /
            dtau_denom;
        const VectorXd dir_aff = combine(v2, dtau_aff);
        const VectorXd dz_aff = dir_aff.tail(mm);
        const VectorXd ds_aff = -s - sc.apply_w2(lay, dz_aff);
        const double dkap_aff = -kap - kap / tau * dtau_aff;

        double alpha_aff = std::min(max_step(lay, s, ds_aff),
                                    max_step(lay, z, dz_aff));
        if (dtau_aff < 0.0) alpha_aff = std::min(alpha_aff, -tau / dtau_aff);
        if (dkap_aff < 0.0) alpha_aff = std::min(alpha_aff, -kap / dkap_aff);
        alpha_aff = std::min(alpha_aff, 1.0);

        const double sigma = std::clamp(
            (1.0 - alpha_aff) * (1.0 - alpha_aff) * (1.0 - alpha_aff), 0.0,
            0.9999);

        // Mehrotra corrector.
        const VectorXd dz_by_w = sc.apply_w(lay, dz_aff);
        const VectorXd ds_by_w = -sc.lambda - dz_by_w;
        VectorXd bs = cone_product(lay, sc.lambda, sc.lambda) +
                      cone_product(lay, ds_by_w, dz_by_w) -
                      sigma * mu * cone_identity(lay);
        const double bkap = tau * kap + dtau_aff * dkap_aff - sigma * mu;

        const VectorXd w_lam_bs =
            sc.apply_w(lay, cone_divide(lay, sc.lambda, bs));
        rhs.head(nn) = (1.0 - sigma) * rx;
        rhs.segment(nn, pp) = -(1.0 - sigma) * ry;
        rhs.tail(mm) = w_lam_bs - (1.0 - sigma) * rz;
        const VectorXd v3 = kkt.solve(sc, rhs);
        const double dtau =
            ((1.0 - sigma) * rt - bkap / tau + c.dot(v3.head(nn)) +
             b.dot(v3.segment(nn, pp)) + h.dot(v3.tail(mm))) /
            dtau_denom;
        const VectorXd dir = combine(v3, dtau);
        const VectorXd dz = dir.tail(mm);
        const VectorXd ds = -w_lam_bs - sc.apply_w2(lay, dz);
        const double dkap = -(bkap + kap * dtau) / tau;

        double alpha = std::min(max_step(lay, s, ds), max_step(lay, z, dz));
        if (dtau < 0.0) alpha = std::min(alpha, -tau / dtau);
        if (dkap < 0.0) alpha = std::min(alpha, -kap / dkap);
        alpha = std::min(kStepScale * alpha, 1.0);
        if (opts.verbose)
            std::printf("  step %.3e sigma %.3e alpha_aff %.3e\n", alpha,
                        sigma, alpha_aff);

        x += alpha * dir.head(nn);
        y += alpha * dir.segment(nn, pp);
        z += alpha * dz;
        s += alpha * ds;
        tau += alpha * dtau;
        kap += alpha * dkap;
    }
    return finish_with_best(SolveStatus::IterationLimit);
}

}  // namespace uavirs::conic
