#include "ige/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <cstdlib>
#include <map>
#include <random>
#include <sstream>

#include "ige/conic.hpp"
#include "ige/errors.hpp"
#include "ige/linalg.hpp"
#include "ige/rng.hpp"

namespace ige {

namespace {

// Normalized view: noise = 1, powers in units of P_max.
struct NormProblem {
    int E = 0;
    int I = 0;
    Eigen::MatrixXd gub;    // g * P_max / W
    Eigen::VectorXd gcomm;  // idem
    Eigen::VectorXd gamma;
    std::vector<int> req;
    double pmin = 0.0;  // P_min / P_max
    std::vector<std::vector<int>> out_links;  // per node
    std::vector<std::vector<int>> in_links;
};

NormProblem normalize(const ScheduleProblem& p) {
    NormProblem n;
    n.E = p.topo.num_links();
    n.I = p.period;
    const double sc = p.p_max_mw / p.noise_mw;
    n.gub = p.g_ub * sc;
    n.gcomm = p.g_comm * sc;
    n.gamma = p.sinr_min;
    n.req = p.required_slots;
    n.pmin = p.p_min_mw / p.p_max_mw;
    const int nn = static_cast<int>(p.topo.nodes.size());
    n.out_links.resize(nn);
    n.in_links.resize(nn);
    for (int l = 0; l < n.E; ++l) {
        n.out_links[p.topo.links[l].src].push_back(l);
        n.in_links[p.topo.links[l].dst].push_back(l);
    }
    return n;
}

// Minimum-power fixed point for one block's active set, normalized units.
// Returns empty when infeasible within [pmin, 1].
std::optional<Eigen::VectorXd> block_min_power(const NormProblem& n,
                                               const std::vector<int>& act) {
    const int k = static_cast<int>(act.size());
    Eigen::VectorXd p = Eigen::VectorXd::Constant(k, n.pmin);
    for (int it = 0; it < 2000; ++it) {
        Eigen::VectorXd pn(k);
        double move = 0.0;
        for (int a = 0; a < k; ++a) {
            const int l = act[a];
            double intf = 1.0;
            for (int b = 0; b < k; ++b)
                if (b != a) intf += n.gub(act[b], l) * p(b);
            pn(a) = std::max(n.pmin, n.gamma(l) * intf / n.gcomm(l));
            move = std::max(move, std::abs(pn(a) - p(a)));
            if (pn(a) > 1.0 + 1e-9) return std::nullopt;
        }
        p = pn;
        if (move < 1e-14) break;
    }
    for (int a = 0; a < k; ++a)
        if (p(a) > 1.0 + 1e-9) return std::nullopt;
    return p.cwiseMin(1.0);
}

std::vector<int> active_in_block(const Schedule01& delta, int block) {
    std::vector<int> act;
    for (int l = 0; l < delta.cols(); ++l)
        if (delta(block, l)) act.push_back(l);
    return act;
}

// Load-balanced greedy placement honoring the per-node one-in/one-out rule;
// used to seed the SCA from a feasible point.
Schedule01 greedy_feasible_schedule(const NormProblem& n, const Topology& topo) {
    Schedule01 db = Schedule01::Zero(n.I, n.E);
    std::vector<int> order(n.E);
    for (int l = 0; l < n.E; ++l) order[l] = l;
    std::sort(order.begin(), order.end(), [&](int a, int b) { return n.req[a] > n.req[b]; });
    for (int l : order) {
        for (int k = 0; k < n.req[l]; ++k) {
            int best = -1, best_load = std::numeric_limits<int>::max();
            for (int i = 0; i < n.I; ++i) {
                if (db(i, l)) continue;
                bool conflict = false;
                for (int m = 0; m < n.E && !conflict; ++m)
                    if (m != l && db(i, m) &&
                        (topo.links[m].src == topo.links[l].src ||
                         topo.links[m].dst == topo.links[l].dst))
                        conflict = true;
                if (conflict) continue;
                int load = 0;
                for (int m = 0; m < n.E; ++m) load += db(i, m);
                if (load < best_load) {
                    best_load = load;
                    best = i;
                }
            }
            if (best < 0) throw Infeasible("greedy placement ran out of blocks");
            db(best, l) = 1;
        }
    }
    return db;
}

}  // namespace

double sinr_hat(const Eigen::MatrixXd& g_hat, const Eigen::MatrixXd& delta_bound,
                const Eigen::VectorXd& g_comm, const Eigen::VectorXd& powers, int link,
                double noise_mw) {
    const int E = static_cast<int>(g_comm.size());
    double denom = noise_mw;
    for (int s = 0; s < E; ++s) {
        if (s == link || powers(s) <= 0.0) continue;
        const double gub = g_hat(s, link) + (delta_bound.size() ? delta_bound(s, link) : 0.0);
        denom += gub * powers(s);
    }
    return g_comm(link) * powers(link) / denom;
}

CheckReport check_schedule(const ScheduleProblem& prob, const Schedule01& delta,
                           const Eigen::MatrixXd& P_mw) {
    CheckReport rep;
    const int E = prob.topo.num_links();
    const int I = prob.period;
    auto fail = [&rep](const std::string& s) {
        rep.ok = false;
        rep.violations.push_back(s);
    };
    if (delta.rows() != I || delta.cols() != E || P_mw.rows() != I || P_mw.cols() != E) {
        fail("dimension mismatch");
        return rep;
    }
    const int nn = static_cast<int>(prob.topo.nodes.size());
    for (int i = 0; i < I; ++i) {
        std::vector<int> out_cnt(nn, 0), in_cnt(nn, 0);
        for (int l = 0; l < E; ++l) {
            if (!delta(i, l)) {
                if (P_mw(i, l) != 0.0) fail("power on inactive link");
                continue;
            }
            ++out_cnt[prob.topo.links[l].src];
            ++in_cnt[prob.topo.links[l].dst];
            if (P_mw(i, l) < prob.p_min_mw * (1.0 - 1e-9) ||
                P_mw(i, l) > prob.p_max_mw * (1.0 + 1e-9))
                fail("power outside [P_min, P_max] on an active link");
        }
        for (int v = 0; v < nn; ++v) {
            if (out_cnt[v] > 1) fail("two outgoing links active at one node");
            if (in_cnt[v] > 1) fail("two incoming links active at one node");
        }
        for (int l = 0; l < E; ++l) {
            if (!delta(i, l)) continue;
            double denom = prob.noise_mw;
            for (int s = 0; s < E; ++s)
                if (s != l && delta(i, s)) denom += prob.g_ub(s, l) * P_mw(i, s);
            const double sinr = prob.g_comm(l) * P_mw(i, l) / denom;
            const double margin = sinr / prob.sinr_min(l);
            rep.min_sinr_margin = std::min(rep.min_sinr_margin, margin);
            if (margin < 1.0 - 1e-7) fail("SINR below threshold");
        }
    }
    for (int l = 0; l < E; ++l) {
        int got = 0;
        for (int i = 0; i < I; ++i) got += delta(i, l);
        if (got < prob.required_slots[l]) fail("demand slots not met");
    }
    return rep;
}

bool demand_fits_period(const ScheduleProblem& prob) {
    const int E = prob.topo.num_links();
    const int nn = static_cast<int>(prob.topo.nodes.size());
    for (int l = 0; l < E; ++l)
        if (prob.required_slots[l] > prob.period) return false;
    for (int v = 0; v < nn; ++v) {
        int out_load = 0, in_load = 0;
        for (int l = 0; l < E; ++l) {
            if (prob.topo.links[l].src == v) out_load += prob.required_slots[l];
            if (prob.topo.links[l].dst == v) in_load += prob.required_slots[l];
        }
        // Koenig edge-coloring bound: per-node loads within the period are
        // necessary and sufficient for a conflict-free slot assignment.
        if (out_load > prob.period || in_load > prob.period) return false;
    }
    return true;
}

bool polish_powers(const ScheduleProblem& prob, const Schedule01& delta, Eigen::MatrixXd& P_mw) {
    const NormProblem n = normalize(prob);
    P_mw = Eigen::MatrixXd::Zero(n.I, n.E);
    bool ok = true;
    for (int i = 0; i < n.I; ++i) {
        const auto act = active_in_block(delta, i);
        if (act.empty()) continue;
        auto p = block_min_power(n, act);
        if (!p) {
            ok = false;
            // Keep a clamped assignment for diagnostics.
            for (int a = 0; a < static_cast<int>(act.size()); ++a)
                P_mw(i, act[a]) = prob.p_max_mw;
            continue;
        }
        for (int a = 0; a < static_cast<int>(act.size()); ++a)
            P_mw(i, act[a]) = (*p)(a)*prob.p_max_mw;
    }
    return ok;
}

namespace {

// One SCA subproblem at fixed (phi, delta_prev) -> SOCP via the conic layer.
struct ScaSolveOut {
    Eigen::MatrixXd d;
    Eigen::MatrixXd p;
    double objective = 0.0;
    bool ok = false;
    std::string message;
};

ScaSolveOut solve_sca_subproblem(const NormProblem& n, const Eigen::MatrixXd& phi,
                                 const Eigen::MatrixXd& dprev, double lambda,
                                 const Eigen::VectorXd* warm) {
    using conic::LinExpr;
    conic::Program prog;
    const int E = n.E, I = n.I;
    const int vd0 = prog.add_vars(I * E);
    const int vp0 = prog.add_vars(I * E);
    auto vd = [&](int i, int l) { return vd0 + i * E + l; };
    auto vp = [&](int i, int l) { return vp0 + i * E + l; };

    LinExpr obj;
    for (int i = 0; i < I; ++i)
        for (int l = 0; l < E; ++l) {
            obj.add(vp(i, l), 1.0);
            obj.add(vd(i, l), lambda * (1.0 - 2.0 * dprev(i, l)));
        }
    prog.set_objective(obj);

    for (int i = 0; i < I; ++i)
        for (int l = 0; l < E; ++l) {
            prog.add_ineq(LinExpr::var(vd(i, l), -1.0));                        // d >= 0
            prog.add_ineq(LinExpr::var(vd(i, l), 1.0) += LinExpr(-1.0));        // d <= 1
            prog.add_ineq(LinExpr::var(vp(i, l), -1.0).add(vd(i, l), n.pmin));  // p >= pmin d
            prog.add_ineq(LinExpr::var(vp(i, l), 1.0).add(vd(i, l), -1.0));     // p <= d
        }
    for (int i = 0; i < I; ++i)
        for (std::size_t v = 0; v < n.out_links.size(); ++v) {
            if (n.out_links[v].size() > 1) {
                LinExpr e(-1.0);
                for (int l : n.out_links[v]) e.add(vd(i, l), 1.0);
                prog.add_ineq(e);
            }
            if (n.in_links[v].size() > 1) {
                LinExpr e(-1.0);
                for (int l : n.in_links[v]) e.add(vd(i, l), 1.0);
                prog.add_ineq(e);
            }
        }
    for (int l = 0; l < E; ++l) {
        LinExpr e(double(n.req[l]));
        for (int i = 0; i < I; ++i) e.add(vd(i, l), -1.0);
        prog.add_ineq(e);
    }
    // C5.3 as a 3-row second-order cone per (block, link):
    //   (g/(gamma*phi)) p >= d^2/2 + (a/phi)^2/2,  a = 1 + sum gub p.
    for (int i = 0; i < I; ++i)
        for (int l = 0; l < E; ++l) {
            const double f = phi(i, l);
            LinExpr q;  // 2*(g/(gamma f)) p
            q.add(vp(i, l), 2.0 * n.gcomm(l) / (n.gamma(l) * f));
            LinExpr s2(1.0 / f);
            for (int s = 0; s < E; ++s)
                if (s != l) s2.add(vp(i, s), n.gub(s, l) / f);
            // ||(d, s2, (q-1)/2)|| <= (q+1)/2
            LinExpr half_minus = q;
            for (auto& t : half_minus.terms) t.second *= 0.5;
            half_minus.constant = half_minus.constant * 0.5 - 0.5;
            LinExpr half_plus = q;
            for (auto& t : half_plus.terms) t.second *= 0.5;
            half_plus.constant = half_plus.constant * 0.5 + 0.5;
            prog.add_soc({LinExpr::var(vd(i, l)), s2, half_minus}, half_plus);
        }

    conic::SolveOptions sopt;
    sopt.tol_gap = 1e-7;
    sopt.verbose = std::getenv("IGE_SOLVER_VERBOSE") != nullptr;
    conic::Solution sol = prog.solve(sopt, warm);
    ScaSolveOut out;
    if (sol.status != conic::Status::kOptimal) {
        out.message = sol.message + " (status " +
                      std::to_string(static_cast<int>(sol.status)) + ", " +
                      std::to_string(sol.newton_steps) + " newton steps)";
        return out;
    }
    out.ok = true;
    out.d.resize(I, E);
    out.p.resize(I, E);
    for (int i = 0; i < I; ++i)
        for (int l = 0; l < E; ++l) {
            out.d(i, l) = sol.x(vd(i, l));
            out.p(i, l) = sol.x(vp(i, l));
        }
    out.objective = sol.objective;
    return out;
}

// Round, then restore demand coverage: trim excess activations first, fill
// deficits on conflict-free blocks next, repeating until stable.
Schedule01 round_and_repair_c4(const NormProblem& n, const Topology& topo,
                               const Eigen::MatrixXd& dfrac) {
    const int E = n.E, I = n.I;
    Schedule01 db(I, E);
    for (int i = 0; i < I; ++i)
        for (int l = 0; l < E; ++l) db(i, l) = dfrac(i, l) >= 0.5 ? 1 : 0;

    auto conflicts = [&](int i, int l) {
        for (int m = 0; m < E; ++m) {
            if (m == l || !db(i, m)) continue;
            if (topo.links[m].src == topo.links[l].src ||
                topo.links[m].dst == topo.links[l].dst)
                return true;
        }
        return false;
    };
    for (int pass = 0; pass < E * I; ++pass) {
        bool changed = false;
        for (int l = 0; l < E; ++l) {
            int cnt = 0;
            for (int i = 0; i < I; ++i) cnt += db(i, l);
            while (cnt > n.req[l]) {
                int worst = -1;
                for (int i = 0; i < I; ++i)
                    if (db(i, l) && (worst < 0 || dfrac(i, l) < dfrac(worst, l))) worst = i;
                db(worst, l) = 0;
                --cnt;
                changed = true;
            }
        }
        for (int l = 0; l < E; ++l) {
            int cnt = 0;
            for (int i = 0; i < I; ++i) cnt += db(i, l);
            while (cnt < n.req[l]) {
                int best = -1;
                for (int i = 0; i < I; ++i)
                    if (!db(i, l) && !conflicts(i, l) &&
                        (best < 0 || dfrac(i, l) > dfrac(best, l)))
                        best = i;
                if (best < 0) break;
                db(best, l) = 1;
                ++cnt;
                changed = true;
            }
        }
        if (!changed) break;
    }
    return db;
}

// Moves the lowest-SINR-margin link of an infeasible block elsewhere.
bool move_lowest_margin(const NormProblem& n, const Topology& topo, Schedule01& db,
                        const Eigen::MatrixXd& P_norm) {
    int wi = -1, wl = -1;
    double wmarg = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n.I; ++i) {
        const auto act = active_in_block(db, i);
        for (int l : act) {
            double intf = 1.0;
            for (int s : act)
                if (s != l) intf += n.gub(s, l) * P_norm(i, s);
            const double marg = n.gcomm(l) * P_norm(i, l) / (n.gamma(l) * intf);
            if (marg < wmarg) {
                wmarg = marg;
                wi = i;
                wl = l;
            }
        }
    }
    if (wi < 0 || wmarg >= 1.0 - 1e-9) return false;
    int best = -1, best_load = std::numeric_limits<int>::max();
    for (int j = 0; j < n.I; ++j) {
        if (j == wi || db(j, wl)) continue;
        bool conflict = false;
        for (int m = 0; m < n.E; ++m)
            if (m != wl && db(j, m) &&
                (topo.links[m].src == topo.links[wl].src ||
                 topo.links[m].dst == topo.links[wl].dst)) {
                conflict = true;
                break;
            }
        if (conflict) continue;
        int load = 0;
        for (int m = 0; m < n.E; ++m) load += db(j, m);
        if (load < best_load) {
            best_load = load;
            best = j;
        }
    }
    if (best < 0) return false;
    db(wi, wl) = 0;
    db(best, wl) = 1;
    return true;
}

}  // namespace

Schedule solve_p2_sca(const ScheduleProblem& prob, const ScaOptions& opt) {
    if (!demand_fits_period(prob))
        throw Infeasible("demand cannot fit the scheduling period under C1/C2");
    const NormProblem n = normalize(prob);
    const int E = n.E, I = n.I;

    // Feasible start: greedy binary schedule plus its minimum-power polish.
    // The surrogate at phi = a/delta then contains the starting point, so the
    // first subproblem is solvable and the outer loop is monotone.
    Schedule01 d0 = greedy_feasible_schedule(n, prob.topo);
    Eigen::MatrixXd P0;
    if (!polish_powers(prob, d0, P0)) {
        const NormProblem n2 = n;
        Eigen::MatrixXd Pn = P0 / prob.p_max_mw;
        bool ok = false;
        for (int pass = 0; pass < 2 * E; ++pass) {
            if (!move_lowest_margin(n2, prob.topo, d0, Pn)) break;
            ok = polish_powers(prob, d0, P0);
            Pn = P0 / prob.p_max_mw;
            if (ok) break;
        }
        if (!ok) throw Infeasible("no feasible starting schedule found");
    }
    Eigen::MatrixXd dprev(I, E), pprev(I, E);
    for (int i = 0; i < I; ++i)
        for (int l = 0; l < E; ++l) {
            dprev(i, l) = d0(i, l);
            pprev(i, l) = P0(i, l) / prob.p_max_mw;
        }
    double lambda = 0.05 * 1.0 * I;  // powers are in units of P_max
    double binmax = 1.0;
    int total_iters = 0;
    int rounds = 0;
    double relaxed_obj = 0.0;
    bool have_relaxed = false;

    auto penalized = [&](const Eigen::MatrixXd& d, const Eigen::MatrixXd& p) {
        double v = p.sum();
        v += lambda * (d.sum() - d.squaredNorm());
        return v;
    };

    for (rounds = 0; rounds < opt.max_lambda_rounds; ++rounds) {
        double prev_obj = std::numeric_limits<double>::infinity();
        for (int it = 0; it < opt.max_iterations; ++it) {
            ++total_iters;
            Eigen::MatrixXd phi(I, E);
            for (int i = 0; i < I; ++i)
                for (int l = 0; l < E; ++l) {
                    double a = 1.0;
                    for (int s = 0; s < E; ++s)
                        if (s != l) a += n.gub(s, l) * pprev(i, s);
                    phi(i, l) = std::max(a / std::max(dprev(i, l), 1e-6), opt.phi_floor);
                }
            ScaSolveOut out = solve_sca_subproblem(n, phi, dprev, lambda, nullptr);
            if (!out.ok)
                throw SolverFailure("P2* subproblem did not reach optimality: " + out.message);
            dprev = out.d;
            pprev = out.p;
            if (!have_relaxed) {
                // Power part of the first relaxed solve, the f_1 analog.
                relaxed_obj = out.p.sum();
                have_relaxed = true;
            }
            binmax = 0.0;
            for (int i = 0; i < I; ++i)
                for (int l = 0; l < E; ++l)
                    binmax = std::max(binmax, std::abs(dprev(i, l) - std::round(dprev(i, l))));
            const double cur = penalized(dprev, pprev);
            const double rel = std::abs(cur - prev_obj) / std::max(1.0, std::abs(cur));
            prev_obj = cur;
            if (rel < opt.tol_obj) break;  // converged or stalled; lambda decides
        }
        if (binmax < opt.tol_bin) break;
        lambda *= 2.0;
    }

    Schedule sched;
    sched.sca_iterations = total_iters;
    sched.lambda_rounds = rounds + 1;
    sched.objective_relaxed = relaxed_obj * prob.p_max_mw;
    sched.objective_penalized = penalized(dprev, pprev) * prob.p_max_mw;
    sched.delta = round_and_repair_c4(n, prob.topo, dprev);

    Eigen::MatrixXd P;
    bool ok = polish_powers(prob, sched.delta, P);
    for (int pass = 0; pass < opt.repair_passes && !ok; ++pass) {
        Eigen::MatrixXd Pn = P / prob.p_max_mw;
        if (!move_lowest_margin(n, prob.topo, sched.delta, Pn)) break;
        ok = polish_powers(prob, sched.delta, P);
    }
    if (!ok) throw RoundingInfeasible("rounded schedule violates C5 even after repair");
    // Demand coverage must survive the moves.
    for (int l = 0; l < E; ++l) {
        int cnt = 0;
        for (int i = 0; i < I; ++i) cnt += sched.delta(i, l);
        if (cnt < n.req[l]) throw RoundingInfeasible("repair lost demand coverage");
    }
    sched.P = P;
    sched.total_power = P.sum();
    return sched;
}

OracleResult brute_force_oracle(const ScheduleProblem& prob) {
    const NormProblem n = normalize(prob);
    const int E = n.E, I = n.I;
    if (E > 4 || I > 6) throw TooLarge("oracle limited to 4 links and 6 blocks");

    // All per-block feasible activation sets under C1/C2.
    std::vector<std::vector<int>> actions;
    std::vector<double> cost;
    std::vector<Eigen::VectorXd> action_power;
    for (int mask = 0; mask < (1 << E); ++mask) {
        std::vector<int> act;
        std::map<int, int> out_cnt, in_cnt;
        bool ok = true;
        for (int l = 0; l < E && ok; ++l) {
            if (!(mask & (1 << l))) continue;
            act.push_back(l);
            if (++out_cnt[prob.topo.links[l].src] > 1) ok = false;
            if (++in_cnt[prob.topo.links[l].dst] > 1) ok = false;
        }
        if (!ok) continue;
        if (act.empty()) {
            actions.push_back(act);
            cost.push_back(0.0);
            action_power.push_back(Eigen::VectorXd());
            continue;
        }
        auto p = block_min_power(n, act);
        if (!p) continue;  // C5-infeasible concurrency
        actions.push_back(act);
        cost.push_back(p->sum());
        action_power.push_back(*p);
    }

    // Exhaustive search over per-block actions with demand-coverage state.
    // Coverage saturates at the requirement, so the state space is the
    // product of (req+1) counters.
    std::vector<int> radix(E);
    int n_states = 1;
    for (int l = 0; l < E; ++l) {
        radix[l] = n.req[l] + 1;
        n_states *= radix[l];
    }
    auto encode = [&](const std::vector<int>& c) {
        int s = 0;
        for (int l = E - 1; l >= 0; --l) s = s * radix[l] + c[l];
        return s;
    };
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> cur(n_states, inf), nxt;
    cur[0] = 0.0;
    std::vector<std::vector<std::pair<int, int>>> back(I);
    for (int b = 0; b < I; ++b) {
        nxt.assign(n_states, inf);
        back[b].assign(n_states, {-1, -1});
        for (int s = 0; s < n_states; ++s) {
            if (cur[s] == inf) continue;
            std::vector<int> c(E);
            int t = s;
            for (int l = 0; l < E; ++l) {
                c[l] = t % radix[l];
                t /= radix[l];
            }
            for (std::size_t a = 0; a < actions.size(); ++a) {
                std::vector<int> c2 = c;
                for (int l : actions[a]) c2[l] = std::min(c2[l] + 1, n.req[l]);
                const int s2 = encode(c2);
                const double v = cur[s] + cost[a];
                if (v < nxt[s2]) {
                    nxt[s2] = v;
                    back[b][s2] = {s, static_cast<int>(a)};
                }
            }
        }
        cur.swap(nxt);
    }
    std::vector<int> full(E);
    for (int l = 0; l < E; ++l) full[l] = n.req[l];
    const int goal = encode(full);
    if (cur[goal] == inf) throw Infeasible("oracle: demand cannot be met");

    OracleResult res;
    res.objective = cur[goal] * prob.p_max_mw;
    res.delta = Schedule01::Zero(I, E);
    res.P = Eigen::MatrixXd::Zero(I, E);
    int s = goal;
    for (int b = I - 1; b >= 0; --b) {
        auto [ps, a] = back[b][s];
        for (std::size_t k = 0; k < actions[a].size(); ++k) {
            res.delta(b, actions[a][k]) = 1;
            res.P(b, actions[a][k]) = action_power[a](k) * prob.p_max_mw;
        }
        s = ps;
    }
    return res;
}

namespace {

// Mildly jittered C5-feasible power matrices on a fixed pattern; blockwise
// upscaling preserves feasibility, per-entry raises are kept only when the
// block stays feasible.
struct WitnessOut {
    Eigen::MatrixXd P;  // normalized units
    double lmin = 0.0;
};

WitnessOut best_feasible_witness(const NormProblem& n, const Schedule01& delta,
                                 const Eigen::MatrixXd& base_norm, std::mt19937_64& rng,
                                 int tries) {
    auto block_ok = [&](const Eigen::VectorXd& row, const std::vector<int>& act) {
        for (int l : act) {
            double intf = 1.0;
            for (int s : act)
                if (s != l) intf += n.gub(s, l) * row(s);
            if (n.gcomm(l) * row(l) < n.gamma(l) * intf) return false;
            if (row(l) < n.pmin - 1e-12 || row(l) > 1.0 + 1e-12) return false;
        }
        return true;
    };
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    WitnessOut best;
    for (int t = 0; t < tries; ++t) {
        Eigen::MatrixXd P = base_norm;
        for (int i = 0; i < n.I; ++i) {
            const auto act = active_in_block(delta, i);
            if (act.empty()) continue;
            double mx = 0.0;
            for (int l : act) mx = std::max(mx, P(i, l));
            if (mx <= 0.0) continue;
            const double cmax = std::min(1.15, 1.0 / mx);
            const double c = 1.0 + u01(rng) * (cmax - 1.0);
            for (int l : act) P(i, l) *= c;
            for (int l : act) {
                Eigen::VectorXd row = P.row(i);
                row(l) = std::min(1.0, row(l) * (1.0 + 0.10 * u01(rng)));
                if (block_ok(row, act)) P.row(i) = row;
            }
        }
        const double lm = smallest_singular_value(P);
        if (lm * lm > best.lmin) {
            best.lmin = lm * lm;
            best.P = P;
        }
    }
    return best;
}

struct P3Iterate {
    Eigen::MatrixXd P;   // ptilde as matrix
    Eigen::MatrixXd Z;
    double gamma = 0.0;
    double e = 0.0;
    double objective = 0.0;
};

}  // namespace

P3Result solve_p3(const ScheduleProblem& prob, const Schedule01& delta, double p_star_socp,
                  const Eigen::MatrixXd& polished_P, const P3Options& opt) {
    const NormProblem n = normalize(prob);
    const int E = n.E, nb = n.I;
    if (nb < E) throw RankDeficient("P3 needs at least |E| blocks");
    const double eps = opt.eps_margin;
    const double pstar = std::max(1e-9, p_star_socp / prob.p_max_mw);

    auto rng = rng_stream(opt.seed, rng_tag::kWitness);
    WitnessOut ref = best_feasible_witness(n, delta, polished_P / prob.p_max_mw, rng, 20);
    if (ref.lmin < 1e-12)
        throw StalledRank("activity pattern cannot support a full-rank power matrix");
    const double nu = 1.0 / (0.7 * ref.lmin);

    // Active-entry variable map.
    std::vector<std::pair<int, int>> act_entries;
    Eigen::MatrixXi slot = Eigen::MatrixXi::Constant(nb, E, -1);
    for (int i = 0; i < nb; ++i)
        for (int l = 0; l < E; ++l)
            if (delta(i, l)) {
                slot(i, l) = static_cast<int>(act_entries.size());
                act_entries.push_back({i, l});
            }
    const int n_act = static_cast<int>(act_entries.size());

    // Anchor subspace from the reference witness.
    Eigen::BDCSVD<Eigen::MatrixXd> svd_ref(ref.P, Eigen::ComputeThinU);
    Eigen::MatrixXd Vtop = svd_ref.matrixU().leftCols(E);  // nb x E
    Eigen::MatrixXd Wb;                                    // (E+nb) x nb bundle
    double e_prev = 0.0, tol_e = 0.0, w_t = 0.0;

    P3Result result;
    Eigen::MatrixXd Pv, Zv;
    double gamma_v = 0.0;
    Eigen::VectorXd warm;

    for (int t = 0; t <= opt.max_iterations; ++t) {
        using conic::LinExpr;
        conic::Program prog;
        const int vp0 = prog.add_vars(n_act);
        conic::SymVar Zs = prog.add_sym_var(nb);
        const int vgamma = prog.add_vars(1);
        const int ve = prog.add_vars(1);

        LinExpr obj;
        obj.add(vgamma, opt.alpha);
        for (int a = 0; a < n_act; ++a)
            obj.add(vp0 + a, (1.0 - opt.alpha) / (pstar * nu));
        if (t > 0) obj.add(ve, w_t);
        prog.set_objective(obj);

        // C5*, C6*, C7* on active entries (scaled rows).
        for (int i = 0; i < nb; ++i) {
            const auto act = active_in_block(delta, i);
            for (int l : act) {
                double cmax = std::max(n.gcomm(l) / n.gamma(l), 1.0);
                for (int s : act)
                    if (s != l) cmax = std::max(cmax, n.gub(s, l));
                const double sc = 1.0 / cmax;
                LinExpr row(sc * nu);  // noise term, scaled by nu
                for (int s : act)
                    if (s != l) row.add(vp0 + slot(i, s), sc * n.gub(s, l));
                row.add(vp0 + slot(i, l), -sc * n.gcomm(l) / n.gamma(l));
                prog.add_ineq(row);
                prog.add_ineq(LinExpr::var(vp0 + slot(i, l), -1.0) += LinExpr(n.pmin * nu));
                prog.add_ineq(LinExpr::var(vp0 + slot(i, l), 1.0) += LinExpr(-nu));
            }
        }

        // Z >= 0.
        const int bZ = prog.add_psd_block(nb);
        for (int i = 0; i < nb; ++i)
            for (int j = 0; j <= i; ++j) prog.psd_add_expr(bZ, i, j, Zs.entry(i, j));
        // U = [[nu I, P^T],[P, Z]] >= 0.
        const int bU = prog.add_psd_block(E + nb);
        for (int l = 0; l < E; ++l) prog.psd_set_const(bU, l, l, nu);
        for (int a = 0; a < n_act; ++a) {
            const auto [bi, li] = act_entries[a];
            prog.psd_add_term(bU, vp0 + a, E + bi, li, 1.0);
        }
        for (int i = 0; i < nb; ++i)
            for (int j = 0; j <= i; ++j) prog.psd_add_expr(bU, E + i, E + j, Zs.entry(i, j));
        // gamma I - Z >= 0.
        const int bG = prog.add_psd_block(nb);
        for (int i = 0; i < nb; ++i) {
            prog.psd_add_term(bG, vgamma, i, i, 1.0);
            for (int j = 0; j <= i; ++j) {
                LinExpr e = Zs.entry(i, j);
                for (auto& tm : e.terms) tm.second = -tm.second;
                prog.psd_add_expr(bG, i, j, e);
            }
        }
        // V^T Z V >= (1+eps) I  (lower side of the spectral bracket).
        const int bV = prog.add_psd_block(E);
        for (int a = 0; a < E; ++a)
            for (int b = 0; b <= a; ++b)
                prog.psd_set_const(bV, a, b, a == b ? -(1.0 + eps) : 0.0);
        for (int i = 0; i < nb; ++i)
            for (int j = 0; j <= i; ++j) {
                const LinExpr ze = Zs.entry(i, j);
                for (int a = 0; a < E; ++a)
                    for (int b = 0; b <= a; ++b) {
                        double coef = Vtop(i, a) * Vtop(j, b);
                        if (i != j) coef += Vtop(j, a) * Vtop(i, b);
                        if (std::abs(coef) < 1e-14) continue;
                        for (const auto& [v, c] : ze.terms)
                            prog.psd_add_term(bV, v, a, b, c * coef);
                    }
            }
        if (t > 0) {
            // e I - W^T U W >= 0 plus the monotone cap on e.
            const int bW = prog.add_psd_block(nb);
            Eigen::MatrixXd F0 = Eigen::MatrixXd::Zero(nb, nb);
            F0 -= nu * (Wb.topRows(E).transpose() * Wb.topRows(E));
            for (int a2 = 0; a2 < nb; ++a2)
                for (int b2 = 0; b2 <= a2; ++b2) prog.psd_set_const(bW, a2, b2, F0(a2, b2));
            for (int a = 0; a < nb; ++a) prog.psd_add_term(bW, ve, a, a, 1.0);
            for (int a = 0; a < n_act; ++a) {
                const auto [bi, li] = act_entries[a];
                for (int r = 0; r < nb; ++r)
                    for (int c = 0; c <= r; ++c) {
                        const double coef =
                            -(Wb(E + bi, r) * Wb(li, c) + Wb(li, r) * Wb(E + bi, c));
                        if (std::abs(coef) > 1e-14) prog.psd_add_term(bW, vp0 + a, r, c, coef);
                    }
            }
            for (int i = 0; i < nb; ++i)
                for (int j = 0; j <= i; ++j) {
                    const LinExpr ze = Zs.entry(i, j);
                    for (int r = 0; r < nb; ++r)
                        for (int c = 0; c <= r; ++c) {
                            double coef = -(Wb(E + i, r) * Wb(E + j, c));
                            if (i != j) coef += -(Wb(E + j, r) * Wb(E + i, c));
                            if (std::abs(coef) < 1e-14) continue;
                            for (const auto& [v, cz] : ze.terms)
                                prog.psd_add_term(bW, v, r, c, cz * coef);
                        }
                }
            prog.add_ineq(LinExpr::var(ve, -1.0));                       // e >= 0
            prog.add_ineq(LinExpr::var(ve, 1.0) += LinExpr(-e_prev));    // e <= e_prev
        } else {
            prog.add_eq(LinExpr::var(ve, 1.0));
        }

        conic::SolveOptions sopt;
        sopt.tol_gap = 1e-7;
        conic::Solution sol = prog.solve(sopt, warm.size() ? &warm : nullptr);
        if (sol.status != conic::Status::kOptimal)
            throw SolverFailure("P3 SDP subproblem failed at iteration " + std::to_string(t));
        warm = sol.x;

        Pv = Eigen::MatrixXd::Zero(nb, E);
        for (int a = 0; a < n_act; ++a)
            Pv(act_entries[a].first, act_entries[a].second) = sol.x(vp0 + a);
        Zv.resize(nb, nb);
        for (int i = 0; i < nb; ++i)
            for (int j = 0; j <= i; ++j) {
                const double v = Zs.entry(i, j).eval(sol.x);
                Zv(i, j) = v;
                Zv(j, i) = v;
            }
        gamma_v = sol.x(vgamma);

        Eigen::MatrixXd U(E + nb, E + nb);
        U.topLeftCorner(E, E) = nu * Eigen::MatrixXd::Identity(E, E);
        U.topRightCorner(E, nb) = Pv.transpose();
        U.bottomLeftCorner(nb, E) = Pv;
        U.bottomRightCorner(nb, nb) = Zv;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esU(U);
        const double e_now = esU.eigenvalues()(nb - 1);  // (E+1)-th largest
        result.e_history.push_back(e_now);
        result.iterations = t;

        double kappa_now = std::numeric_limits<double>::infinity();
        const double smin = smallest_singular_value(Pv);
        if (smin > 1e-12) kappa_now = Pv.jacobiSvd().singularValues()(0) / smin;

        if (t == 0) {
            e_prev = e_now;
            tol_e = 1e-6 * esU.eigenvalues().cwiseAbs().maxCoeff();
            const double base = opt.alpha * gamma_v +
                                (1.0 - opt.alpha) / (pstar * nu) * Pv.sum();
            w_t = 0.5 * std::max(base, 1e-6) / std::max(e_now, 1e-12);
        } else {
            e_prev = std::min(e_now, e_prev);
            w_t *= 2.0;
        }
        result.objective = sol.objective;

        if (t >= 2 && e_now < tol_e && kappa_now * kappa_now <= gamma_v * (1.0 + 1e-6)) break;

        // Next bundle: the iterate's own Gram when healthy, else a witness.
        Eigen::MatrixXd gram = Pv * Pv.transpose() / nu;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esG(gram);
        if (t == 0) {
            // keep the reference anchor for V_top
        } else if (esG.eigenvalues()(nb - E) >= 1.0 + eps) {
            Vtop = esG.eigenvectors().rightCols(E);
        } else if (t >= 2) {
            WitnessOut wit = best_feasible_witness(n, delta, Pv / nu, rng, 10);
            if (wit.lmin < (1.0 + eps) / nu) {
                wit.P = ref.P;
                wit.lmin = ref.lmin;
            }
            Eigen::MatrixXd Pw = wit.P * nu;
            Eigen::MatrixXd gw = Pw * Pw.transpose() / nu;
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esW(gw);
            Vtop = esW.eigenvectors().rightCols(E);
            Eigen::MatrixXd Uw(E + nb, E + nb);
            Uw.topLeftCorner(E, E) = nu * Eigen::MatrixXd::Identity(E, E);
            Uw.topRightCorner(E, nb) = Pw.transpose();
            Uw.bottomLeftCorner(nb, E) = Pw;
            Uw.bottomRightCorner(nb, nb) = gw;
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esUw(Uw);
            Wb = esUw.eigenvectors().leftCols(nb);
            e_prev = std::min(e_prev, std::max(esUw.eigenvalues()(nb - 1), 0.5 * tol_e));
            continue;
        }
        Wb = esU.eigenvectors().leftCols(nb);
    }

    // Recover physical powers and verify.
    Eigen::MatrixXd P_norm = Pv / nu;
    result.power.P = P_norm * prob.p_max_mw;
    const double smin = smallest_singular_value(result.power.P);
    if (!(smin > 1e-9 * prob.p_max_mw))
        throw StalledRank("P3 plateaued without reaching a full-rank power matrix");
    result.kappa = condition_number(result.power.P);
    result.gamma = gamma_v;
    if (result.kappa * result.kappa > gamma_v * (1.0 + 1e-6))
        throw StalledRank("P3 stopped before kappa^2 <= gamma was certified");
    CheckReport rep = check_schedule(prob, delta, result.power.P);
    if (!rep.ok) throw SolverFailure("P3 output violates C5-C7: " + rep.violations.front());
    return result;
}

JointResult joint_schedule(const ScheduleProblem& prob, const ScaOptions& sca,
                           const P3Options& p3) {
    JointResult jr;
    jr.baseline = solve_p2_sca(prob, sca);

    // The measurement stage needs structural rank |E|: every link must be
    // matchable to a distinct block of its activity pattern.
    Schedule01 delta = jr.baseline.delta;
    const int E = prob.topo.num_links();
    auto has_perfect_matching = [&](const Schedule01& d) {
        std::vector<int> match_block(prob.period, -1);
        std::vector<int> match_link(E, -1);
        std::function<bool(int, std::vector<bool>&)> aug = [&](int l, std::vector<bool>& vis) {
            for (int b = 0; b < prob.period; ++b) {
                if (!d(b, l) || vis[b]) continue;
                vis[b] = true;
                if (match_block[b] < 0 || aug(match_block[b], vis)) {
                    match_block[b] = l;
                    match_link[l] = b;
                    return true;
                }
            }
            return false;
        };
        int matched = 0;
        for (int l = 0; l < E; ++l) {
            std::vector<bool> vis(prob.period, false);
            if (aug(l, vis)) ++matched;
        }
        return matched == E;
    };
    Eigen::MatrixXd P = jr.baseline.P;
    for (int guard = 0; guard < 4 * E && !has_perfect_matching(delta); ++guard) {
        // Activate an extra block for the least-covered link.
        int worst = -1, worst_cnt = std::numeric_limits<int>::max();
        for (int l = 0; l < E; ++l) {
            int cnt = 0;
            for (int b = 0; b < prob.period; ++b) cnt += delta(b, l);
            if (cnt < worst_cnt) {
                worst_cnt = cnt;
                worst = l;
            }
        }
        bool placed = false;
        for (int b = 0; b < prob.period && !placed; ++b) {
            if (delta(b, worst)) continue;
            bool conflict = false;
            for (int m = 0; m < E; ++m)
                if (m != worst && delta(b, m) &&
                    (prob.topo.links[m].src == prob.topo.links[worst].src ||
                     prob.topo.links[m].dst == prob.topo.links[worst].dst))
                    conflict = true;
            if (conflict) continue;
            Schedule01 trial = delta;
            trial(b, worst) = 1;
            Eigen::MatrixXd Pt;
            if (polish_powers(prob, trial, Pt)) {
                delta = trial;
                P = Pt;
                placed = true;
            }
        }
        if (!placed) throw StalledRank("could not extend the schedule to rank support");
    }

    jr.shaped = solve_p3(prob, delta, jr.baseline.total_power, P, p3);
    jr.f2 = jr.baseline.objective_penalized;
    jr.f3 = jr.shaped.objective;
    return jr;
}

ScheduleMetrics evaluate_schedule(const ScheduleProblem& prob_true, const Schedule01& delta,
                                  const Eigen::MatrixXd& P_shaped,
                                  const Eigen::MatrixXd& P_baseline) {
    ScheduleMetrics m;
    const double p0 = P_baseline.sum();
    const double p1 = P_shaped.sum();
    m.power_overhead = p0 > 0 ? (p1 - p0) / p0 : 0.0;

    const int E = prob_true.topo.num_links();
    m.link_margin.assign(E, std::numeric_limits<double>::infinity());
    int unsat = 0;
    for (int l = 0; l < E; ++l) {
        bool active_somewhere = false;
        for (int i = 0; i < prob_true.period; ++i) {
            if (!delta(i, l)) continue;
            active_somewhere = true;
            double denom = prob_true.noise_mw;
            for (int s = 0; s < E; ++s)
                if (s != l && delta(i, s)) denom += prob_true.g_ub(s, l) * P_shaped(i, s);
            const double sinr = prob_true.g_comm(l) * P_shaped(i, l) / denom;
            m.link_margin[l] = std::min(m.link_margin[l], sinr / prob_true.sinr_min(l));
        }
        if (active_somewhere && m.link_margin[l] < 1.0 - 1e-9) ++unsat;
    }
    m.unsatisfied_ratio = double(unsat) / double(E);
    return m;
}

}  // namespace ige
