#include "ige/conic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace ige::conic {

LinExpr SymVar::entry(int i, int j) const {
    const double inv_sqrt2 = 0.70710678118654752440;
    if (i < j) std::swap(i, j);
    LinExpr e;
    e.add(packed_index(i, j), i == j ? 1.0 : inv_sqrt2);
    return e;
}

void Program::psd_set_const(int block, int r, int c, double v) {
    auto& b = psd_[block];
    b.F0(r, c) = v;
    b.F0(c, r) = v;
}

void Program::psd_add_term(int block, int var, int r, int c, double coef) {
    auto& b = psd_[block];
    int slot = -1;
    for (std::size_t k = 0; k < b.var_ids.size(); ++k)
        if (b.var_ids[k] == var) {
            slot = static_cast<int>(k);
            break;
        }
    if (slot < 0) {
        slot = static_cast<int>(b.var_ids.size());
        b.var_ids.push_back(var);
        b.coef.emplace_back();
    }
    if (r < c) std::swap(r, c);
    b.coef[slot].push_back({r * b.dim + c, {0, coef}});
}

void Program::psd_add_expr(int block, int r, int c, const LinExpr& e) {
    if (e.constant != 0.0) {
        auto& b = psd_[block];
        b.F0(r, c) += e.constant;
        if (r != c) b.F0(c, r) += e.constant;
    }
    for (const auto& [v, coef] : e.terms) psd_add_term(block, v, r, c, coef);
}

namespace {

struct BarrierEval {
    bool in_domain = false;
    double value = 0.0;
    Eigen::VectorXd grad;
    Eigen::MatrixXd hess;
};

}  // namespace

class BarrierSolver {
  public:
    BarrierSolver(const Program& p, const SolveOptions& opt, double relax = 0.0)
        : p_(p), opt_(opt), relax_(relax) {}

    // Barrier complexity parameter.
    double nu() const {
        double v = double(p_.ineqs_.size()) + 2.0 * double(p_.socs_.size());
        for (const auto& b : p_.psd_) v += b.dim;
        return v;
    }

    // Evaluates the log barrier of all cones at x; need_h controls Hessian work.
    BarrierEval eval(const Eigen::VectorXd& x, bool need_h) const {
        const int n = p_.n_;
        BarrierEval be;
        be.grad = Eigen::VectorXd::Zero(n);
        if (need_h) be.hess = Eigen::MatrixXd::Zero(n, n);
        be.in_domain = true;

        for (const auto& e : p_.ineqs_) {
            const double s = relax_ - e.eval(x);  // slack > 0
            if (s <= 0.0) {
                be.in_domain = false;
                return be;
            }
            be.value -= std::log(s);
            const double inv = 1.0 / s;
            for (const auto& [i, ci] : e.terms) {
                be.grad(i) += ci * inv;
                if (need_h)
                    for (const auto& [j, cj] : e.terms) be.hess(i, j) += ci * cj * inv * inv;
            }
        }

        for (const auto& soc : p_.socs_) {
            const double u = soc.rhs.eval(x) + relax_;
            if (u <= 0.0) {
                be.in_domain = false;
                return be;
            }
            double w2 = 0.0;
            std::vector<double> wv(soc.rows.size());
            for (std::size_t r = 0; r < soc.rows.size(); ++r) {
                wv[r] = soc.rows[r].eval(x);
                w2 += wv[r] * wv[r];
            }
            const double phi = u * u - w2;
            if (phi <= 0.0) {
                be.in_domain = false;
                return be;
            }
            be.value -= std::log(phi);
            // grad phi = 2u c - 2 sum_r w_r a_r ; hess phi = 2cc^T - 2 sum a_r a_r^T
            Eigen::VectorXd gphi = Eigen::VectorXd::Zero(n);
            for (const auto& [i, ci] : soc.rhs.terms) gphi(i) += 2.0 * u * ci;
            for (std::size_t r = 0; r < soc.rows.size(); ++r)
                for (const auto& [i, ci] : soc.rows[r].terms) gphi(i) -= 2.0 * wv[r] * ci;
            const double invp = 1.0 / phi;
            be.grad -= invp * gphi;
            if (need_h) {
                be.hess += (invp * invp) * (gphi * gphi.transpose());
                for (const auto& [i, ci] : soc.rhs.terms)
                    for (const auto& [j, cj] : soc.rhs.terms)
                        be.hess(i, j) -= invp * 2.0 * ci * cj;
                for (std::size_t r = 0; r < soc.rows.size(); ++r)
                    for (const auto& [i, ci] : soc.rows[r].terms)
                        for (const auto& [j, cj] : soc.rows[r].terms)
                            be.hess(i, j) += invp * 2.0 * ci * cj;
            }
        }

        for (const auto& b : p_.psd_) {
            const int d = b.dim;
            Eigen::MatrixXd S = b.F0;
            S.diagonal().array() += relax_;
            for (std::size_t v = 0; v < b.var_ids.size(); ++v) {
                const double xv = x(b.var_ids[v]);
                for (const auto& [rc, pv] : b.coef[v]) {
                    const int r = rc / d, c = rc % d;
                    S(r, c) += pv.second * xv;
                    if (r != c) S(c, r) += pv.second * xv;
                }
            }
            Eigen::LLT<Eigen::MatrixXd> llt(S);
            if (llt.info() != Eigen::Success) {
                be.in_domain = false;
                return be;
            }
            const Eigen::MatrixXd L = llt.matrixL();
            double logdet = 0.0;
            for (int i = 0; i < d; ++i) logdet += std::log(L(i, i));
            be.value -= 2.0 * logdet;

            // U = L^{-1}; M_v = U F_v U^T assembled from rank-2 pieces.
            Eigen::MatrixXd U = Eigen::MatrixXd::Identity(d, d);
            L.triangularView<Eigen::Lower>().solveInPlace(U);
            const int nv = static_cast<int>(b.var_ids.size());
            Eigen::MatrixXd Vmat(d * (d + 1) / 2, nv);
            for (int v = 0; v < nv; ++v) {
                Eigen::MatrixXd M = Eigen::MatrixXd::Zero(d, d);
                for (const auto& [rc, pv] : b.coef[v]) {
                    const int r = rc / d, c = rc % d;
                    // columns of U^T = rows of U; U e_r is the r-th column of U
                    M.noalias() += pv.second * (U.col(r) * U.col(c).transpose());
                    if (r != c) M.noalias() += pv.second * (U.col(c) * U.col(r).transpose());
                }
                be.grad(b.var_ids[v]) -= M.trace();
                if (need_h) {
                    int k = 0;
                    const double sq2 = std::sqrt(2.0);
                    for (int c = 0; c < d; ++c)
                        for (int r = c; r < d; ++r)
                            Vmat(k++, v) = (r == c) ? M(r, c) : sq2 * 0.5 * (M(r, c) + M(c, r));
                }
            }
            if (need_h && nv > 0) {
                Eigen::MatrixXd Hb = Vmat.transpose() * Vmat;
                for (int a = 0; a < nv; ++a)
                    for (int c2 = 0; c2 < nv; ++c2)
                        be.hess(b.var_ids[a], b.var_ids[c2]) += Hb(a, c2);
            }
        }
        return be;
    }

    const Program& p_;
    const SolveOptions& opt_;
    double relax_ = 0.0;
};

namespace {

struct NewtonResult {
    bool ok = false;
    int steps = 0;
    Eigen::VectorXd x;
};

// Minimizes t*f(x) + barrier(x) subject to eq constraints handled through a
// null-space basis Z (x = x0 + Z y).
NewtonResult newton_center(const BarrierSolver& bs, const LinExpr& obj, double t,
                           Eigen::VectorXd x, const Eigen::MatrixXd* Z, int max_steps,
                           int* steps_used) {
    const int n = x.size();
    Eigen::VectorXd cvec = Eigen::VectorXd::Zero(n);
    for (const auto& [i, c] : obj.terms) cvec(i) += c;

    NewtonResult res;
    for (int it = 0; it < max_steps; ++it) {
        BarrierEval be = bs.eval(x, true);
        if (!be.in_domain) return res;
        Eigen::VectorXd g = t * cvec + be.grad;
        Eigen::MatrixXd H = be.hess;
        const double reg = 1e-12 * (1.0 + H.trace() / std::max(1, n));
        H.diagonal().array() += reg;

        Eigen::VectorXd dx;
        double lambda2;
        if (Z) {
            Eigen::MatrixXd Hz = Z->transpose() * H * (*Z);
            Eigen::VectorXd gz = Z->transpose() * g;
            Eigen::LDLT<Eigen::MatrixXd> ldlt(Hz);
            if (ldlt.info() != Eigen::Success) return res;
            Eigen::VectorXd dy = ldlt.solve(-gz);
            dx = (*Z) * dy;
            lambda2 = -gz.dot(dy);
        } else {
            Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
            if (ldlt.info() != Eigen::Success) return res;
            dx = ldlt.solve(-g);
            lambda2 = -g.dot(dx);
        }
        if (steps_used) ++(*steps_used);
        res.steps = it + 1;
        if (lambda2 / 2.0 < 1e-10) {
            res.ok = true;
            res.x = x;
            return res;
        }
        // Backtracking: shrink into the domain, then Armijo.
        const double f0 = t * cvec.dot(x) + be.value;
        const double slope = g.dot(dx);
        double alpha = 1.0;
        bool moved = false;
        for (int ls = 0; ls < 60; ++ls) {
            Eigen::VectorXd xn = x + alpha * dx;
            BarrierEval ben = bs.eval(xn, false);
            if (ben.in_domain) {
                const double fn = t * cvec.dot(xn) + ben.value;
                if (fn <= f0 + 0.25 * alpha * slope) {
                    x = xn;
                    moved = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if (!moved) {
            res.ok = true;  // stalled at the centering accuracy limit
            res.x = x;
            return res;
        }
    }
    res.ok = true;
    res.x = x;
    return res;
}

}  // namespace

double Program::max_violation(const Eigen::VectorXd& x) const {
    double worst = 0.0;
    for (const auto& e : eqs_) worst = std::max(worst, std::abs(e.eval(x)));
    for (const auto& e : ineqs_) worst = std::max(worst, e.eval(x));
    for (const auto& soc : socs_) {
        double w2 = 0.0;
        for (const auto& r : soc.rows) {
            const double v = r.eval(x);
            w2 += v * v;
        }
        worst = std::max(worst, std::sqrt(w2) - soc.rhs.eval(x));
    }
    for (const auto& b : psd_) {
        Eigen::MatrixXd S = b.F0;
        for (std::size_t v = 0; v < b.var_ids.size(); ++v) {
            const double xv = x(b.var_ids[v]);
            for (const auto& [rc, pv] : b.coef[v]) {
                const int r = rc / b.dim, c = rc % b.dim;
                S(r, c) += pv.second * xv;
                if (r != c) S(c, r) += pv.second * xv;
            }
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
        worst = std::max(worst, -es.eigenvalues().minCoeff());
    }
    return worst;
}

Solution Program::solve(const SolveOptions& opt, const Eigen::VectorXd* warm_start) const {
    Solution sol;
    const int n = n_;
    if (n == 0) {
        sol.status = Status::kOptimal;
        sol.x.resize(0);
        return sol;
    }

    // Equalities: particular solution + null-space basis.
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(n);
    Eigen::MatrixXd Zbasis;
    const bool has_eq = !eqs_.empty();
    if (has_eq) {
        const int p = static_cast<int>(eqs_.size());
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(p, n);
        Eigen::VectorXd b(p);
        for (int i = 0; i < p; ++i) {
            for (const auto& [j, c] : eqs_[i].terms) A(i, j) += c;
            b(i) = -eqs_[i].constant;
        }
        x0 = A.colPivHouseholderQr().solve(b);
        if ((A * x0 - b).norm() > 1e-7 * (1.0 + b.norm())) {
            sol.status = Status::kInfeasible;
            sol.message = "equality system inconsistent";
            return sol;
        }
        Eigen::FullPivHouseholderQR<Eigen::MatrixXd> qr(A.transpose());
        const int rank = static_cast<int>(qr.rank());
        Eigen::MatrixXd Q = qr.matrixQ();
        Zbasis = Q.rightCols(n - rank);
    }
    if (warm_start && warm_start->size() == n && !has_eq) x0 = *warm_start;

    int newton_total = 0;
    double relax = 0.0;

    // Phase I: relax every cone by a shared slack and drive it negative.
    Eigen::VectorXd x = x0;
    const bool has_cones = !ineqs_.empty() || !socs_.empty() || !psd_.empty();
    {
        BarrierSolver bs0(*this, opt);
        BarrierEval be0 = bs0.eval(x, false);
        const double need_margin = opt.feas_margin;
        bool strictly_feasible = !has_cones;
        if (!strictly_feasible && be0.in_domain) {
            // Require real margin, not mere domain membership; equalities are
            // held exactly by construction, so only cone slack matters here.
            double cone_viol = -std::numeric_limits<double>::max();
            for (const auto& e : ineqs_) cone_viol = std::max(cone_viol, e.eval(x));
            for (const auto& soc : socs_) {
                double w2 = 0.0;
                for (const auto& r : soc.rows) {
                    const double v = r.eval(x);
                    w2 += v * v;
                }
                cone_viol = std::max(cone_viol, std::sqrt(w2) - soc.rhs.eval(x));
            }
            // PSD margin is implied by in_domain (Cholesky succeeded).
            strictly_feasible = cone_viol < -need_margin;
        }
        if (!strictly_feasible) {
            Program ph;  // shadow program with slack variable appended
            ph.n_ = n + 1;
            const int sv = n;
            for (const auto& e : ineqs_) {
                LinExpr r = e;
                r.add(sv, -1.0);
                ph.ineqs_.push_back(r);
            }
            for (const auto& soc : socs_) {
                auto rows = soc.rows;
                LinExpr rhs = soc.rhs;
                rhs.add(sv, 1.0);
                ph.socs_.push_back({rows, rhs});
            }
            for (std::size_t bi = 0; bi < psd_.size(); ++bi) {
                const auto& b = psd_[bi];
                ph.psd_.push_back(b);
                for (int dd = 0; dd < b.dim; ++dd)
                    ph.psd_add_term(static_cast<int>(bi), sv, dd, dd, 1.0);
            }
            // Bounding ball keeps phase I from wandering.
            const double R = 1e4 * (1.0 + x0.norm());
            std::vector<LinExpr> ball;
            for (int i = 0; i < n; ++i) ball.push_back(LinExpr::var(i));
            ph.socs_.push_back({ball, LinExpr(R)});
            // s box keeps the auxiliary problem bounded in both directions.
            Eigen::VectorXd xs(n + 1);
            xs.head(n) = x;
            double viol = max_violation(x);
            xs(n) = std::max(1.0, 2.0 * viol + 1.0);
            LinExpr scap = LinExpr::var(sv);
            scap.constant = -(xs(n) * 4.0 + 10.0);
            ph.ineqs_.push_back(scap);
            LinExpr sfloor = LinExpr::var(sv, -1.0);
            sfloor.constant = -(xs(n) * 4.0 + 10.0);
            ph.ineqs_.push_back(sfloor);

            LinExpr sobj = LinExpr::var(sv);
            BarrierSolver pbs(ph, opt);
            Eigen::MatrixXd Zs;
            const Eigen::MatrixXd* Zp = nullptr;
            if (has_eq) {
                Zs = Eigen::MatrixXd::Zero(n + 1, Zbasis.cols() + 1);
                Zs.topLeftCorner(n, Zbasis.cols()) = Zbasis;
                Zs(n, Zbasis.cols()) = 1.0;
                Zp = &Zs;
            }
            double t = 1.0;
            const double nu_ph = pbs.nu();
            bool found = false;
            for (int stage = 0; stage < 64; ++stage) {
                NewtonResult nr =
                    newton_center(pbs, sobj, t, xs, Zp, 80, &newton_total);
                if (opt.verbose)
                    std::printf("phase1 stage %d t=%.3g ok=%d s=%.6g steps=%d\n", stage, t,
                                int(nr.ok), nr.ok ? nr.x(n) : xs(n), newton_total);
                if (!nr.ok) break;
                xs = nr.x;
                if (xs(n) < -need_margin) {
                    found = true;
                    break;
                }
                if (nu_ph / t < 0.1 * need_margin) break;
                t *= opt.mu;
                if (newton_total > opt.max_newton) break;
            }
            if (!found) {
                // Feasible sets with empty interior (saturated budgets) drive
                // the slack to zero without crossing it; continue on a thin
                // relaxation instead of giving up.
                if (xs(n) <= 1e-6) {
                    relax = std::max(xs(n), 0.0) + 1e-8;
                } else {
                    sol.status = Status::kInfeasible;
                    sol.message = "phase I could not find a strictly feasible point";
                    sol.newton_steps = newton_total;
                    return sol;
                }
            }
            x = xs.head(n);
        }
    }

    // Phase II: follow the central path on the true objective.
    BarrierSolver bs(*this, opt, relax);
    const double nu_total = std::max(1.0, bs.nu());
    double obj0 = objective_.eval(x);
    double t = std::max(1e-3, 1.0 / std::max(1.0, std::abs(obj0)));
    const Eigen::MatrixXd* Zp = has_eq ? &Zbasis : nullptr;
    const double unbounded_floor = -1e15 * (1.0 + std::abs(obj0));
    while (true) {
        NewtonResult nr = newton_center(bs, objective_, t, x, Zp, 200, &newton_total);
        if (!nr.ok) {
            sol.status = Status::kNumericalFailure;
            sol.message = "Newton centering left the domain";
            sol.newton_steps = newton_total;
            return sol;
        }
        x = nr.x;
        if (objective_.eval(x) < unbounded_floor) {
            sol.status = Status::kUnbounded;
            sol.newton_steps = newton_total;
            return sol;
        }
        if (nu_total / t < opt.tol_gap) break;
        if (newton_total > opt.max_newton) {
            sol.status = Status::kNumericalFailure;
            sol.message = "Newton budget exhausted";
            sol.newton_steps = newton_total;
            sol.x = x;
            sol.objective = objective_.eval(x);
            return sol;
        }
        t *= opt.mu;
    }
    sol.status = Status::kOptimal;
    sol.x = x;
    sol.objective = objective_.eval(x);
    sol.newton_steps = newton_total;
    return sol;
}

std::string Program::dump() const {
    std::ostringstream os;
    os << "vars " << n_ << "\n";
    auto put = [&os](const LinExpr& e) {
        for (const auto& [i, c] : e.terms) os << " " << i << ":" << c;
        os << " const:" << e.constant << "\n";
    };
    os << "objective";
    put(objective_);
    for (const auto& e : eqs_) {
        os << "eq";
        put(e);
    }
    for (const auto& e : ineqs_) {
        os << "ineq";
        put(e);
    }
    for (const auto& s : socs_) {
        os << "soc " << s.rows.size() << "\n";
        for (const auto& r : s.rows) {
            os << " row";
            put(r);
        }
        os << " rhs";
        put(s.rhs);
    }
    for (const auto& b : psd_) {
        os << "psd dim " << b.dim << " nvars " << b.var_ids.size() << "\n";
    }
    return os.str();
}

}  // namespace ige::conic
