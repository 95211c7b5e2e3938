#ifndef IGE_CONIC_HPP
#define IGE_CONIC_HPP

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace ige::conic {

// Sparse affine expression sum_i coef_i * x_i + constant.
struct LinExpr {
    std::vector<std::pair<int, double>> terms;
    double constant = 0.0;

    LinExpr() = default;
    explicit LinExpr(double c) : constant(c) {}
    static LinExpr var(int i, double coef = 1.0) {
        LinExpr e;
        e.terms.push_back({i, coef});
        return e;
    }
    LinExpr& add(int i, double coef) {
        terms.push_back({i, coef});
        return *this;
    }
    LinExpr& operator+=(const LinExpr& o) {
        terms.insert(terms.end(), o.terms.begin(), o.terms.end());
        constant += o.constant;
        return *this;
    }
    double eval(const Eigen::VectorXd& x) const {
        double v = constant;
        for (const auto& [i, c] : terms) v += c * x(i);
        return v;
    }
};

// Packed symmetric matrix variable; off-diagonal storage carries a sqrt(2)
// scale so the packed vector norm equals the Frobenius norm.
struct SymVar {
    int base = 0;
    int dim = 0;
    int packed_index(int i, int j) const {  // i >= j
        return base + i - j + (dim * j - j * (j - 1) / 2);
    }
    // Affine expression for entry (i, j) of the matrix.
    LinExpr entry(int i, int j) const;
    int size() const { return dim * (dim + 1) / 2; }
};

struct PsdBlock {
    int dim = 0;
    Eigen::MatrixXd F0;                                        // constant part
    std::vector<std::vector<std::pair<int, std::pair<int, double>>>> coef;
    // coef[v] lists (linear index r*dim+c with r>=c, value) for variable slot v;
    // stored per *local* variable slot, see var_ids.
    std::vector<int> var_ids;  // global variable per local slot
};

enum class Status { kOptimal, kInfeasible, kUnbounded, kNumericalFailure };

struct SolveOptions {
    double tol_gap = 1e-8;        // target barrier gap (absolute, problems are normalized)
    double feas_margin = 1e-9;    // phase-I strict feasibility margin
    int max_newton = 4000;
    double mu = 20.0;             // barrier update factor
    bool verbose = false;
};

struct Solution {
    Status status = Status::kNumericalFailure;
    Eigen::VectorXd x;
    double objective = 0.0;
    int newton_steps = 0;
    std::string message;
};

class Program {
  public:
    int add_vars(int n) {
        const int at = n_;
        n_ += n;
        return at;
    }
    SymVar add_sym_var(int dim) {
        SymVar s;
        s.base = add_vars(dim * (dim + 1) / 2);
        s.dim = dim;
        return s;
    }
    int num_vars() const { return n_; }

    void set_objective(const LinExpr& e) { objective_ = e; }
    void add_eq(const LinExpr& e) { eqs_.push_back(e); }           // e == 0
    void add_ineq(const LinExpr& e) { ineqs_.push_back(e); }       // e <= 0
    // ||rows|| <= rhs
    void add_soc(std::vector<LinExpr> rows, LinExpr rhs) {
        socs_.push_back({std::move(rows), std::move(rhs)});
    }
    // F0 + sum x_v F_v >= 0 (PSD).  Entries added through the returned handle.
    int add_psd_block(int dim) {
        PsdBlock b;
        b.dim = dim;
        b.F0 = Eigen::MatrixXd::Zero(dim, dim);
        psd_.push_back(std::move(b));
        return static_cast<int>(psd_.size()) - 1;
    }
    void psd_set_const(int block, int r, int c, double v);
    void psd_add_term(int block, int var, int r, int c, double coef);
    // Adds the affine expression e at entry (r, c) (and its mirror).
    void psd_add_expr(int block, int r, int c, const LinExpr& e);

    Solution solve(const SolveOptions& opt = SolveOptions(),
                   const Eigen::VectorXd* warm_start = nullptr) const;

    // Constraint residual check, usable independently of the solver path.
    double max_violation(const Eigen::VectorXd& x) const;

    // Sparse text dump for offline debugging.
    std::string dump() const;

  private:
    struct Soc {
        std::vector<LinExpr> rows;
        LinExpr rhs;
    };
    int n_ = 0;
    LinExpr objective_;
    std::vector<LinExpr> eqs_;
    std::vector<LinExpr> ineqs_;
    std::vector<Soc> socs_;
    std::vector<PsdBlock> psd_;

    friend class BarrierSolver;
};

}  // namespace ige::conic

#endif
