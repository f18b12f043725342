#pragma once

// Dense kernels behind the debiasing step: the block lower-triangular ridge
// matrix
//
//         | S_aa + tau_a I        0          |
//   L  =  |                                  |
//         |      S_ca        S_cc + tau_c I  |
//
// with S = X^T X / n partitioned by the expanded set (a) and its complement
// (c), spectral extremes of PSD matrices, and small-design RE/SE diagnostics.

#include "moce/core.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <memory>
#include <string>

namespace moce::linalg {

/// Dense symmetric matrix. Construction checks finiteness and symmetry
/// (to 1e-12 relative) and then stores the exact symmetric part.
class SymMatrix {
public:
    explicit SymMatrix(Matrix m, double rel_tol = 1e-12)
    {
        detail::require(m.rows() == m.cols(), "SymMatrix: matrix must be square");
        detail::require(m.allFinite(), "SymMatrix: entries must be finite");
        const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
        detail::require((m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale,
                        "SymMatrix: matrix is not symmetric");
        entries_ = 0.5 * (m + m.transpose());
    }

    /// (1/n) X^T X for an n x p design.
    static SymMatrix gram(const Eigen::Ref<const Matrix>& x)
    {
        detail::require(x.rows() > 0, "gram: design has no rows");
        Matrix s = Matrix::Zero(x.cols(), x.cols());
        s.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose(), 1.0 / static_cast<double>(x.rows()));
        s.triangularView<Eigen::StrictlyUpper>() = s.transpose();
        return SymMatrix(std::move(s));
    }

    Index order() const noexcept { return entries_.rows(); }
    const Matrix& entries() const noexcept { return entries_; }
    double operator()(Index i, Index j) const { return entries_(i, j); }

private:
    Matrix entries_;
};

struct SingularValueRange {
    double rho_min_plus = 0.0;  ///< smallest nonzero singular value
    double rho_max = 0.0;
    Index rank = 0;
    bool zero_rank = true;
};

namespace detail {

/// Numerical-rank rule: sigma_i counts as nonzero when
/// sigma_i > max(rows, cols) * eps * sigma_max.
inline SingularValueRange range_from_eigenvalues(const Vector& eig, Index dim_hint)
{
    SingularValueRange out;
    if (eig.size() == 0) return out;
    const Vector sv = eig.cwiseAbs();
    const double smax = sv.maxCoeff();
    if (!(smax > 0.0)) return out;
    const double tol = static_cast<double>(dim_hint) * std::numeric_limits<double>::epsilon() * smax;
    double smin = smax;
    Index rank = 0;
    for (Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > tol) {
            ++rank;
            smin = std::min(smin, sv(i));
        }
    }
    out.rho_max = smax;
    out.rho_min_plus = smin;
    out.rank = rank;
    out.zero_rank = false;
    return out;
}

} // namespace detail

/// Smallest nonzero and largest singular values of a PSD matrix.
/// An all-zero matrix reports both as zero with `zero_rank` set.
inline SingularValueRange extreme_singular_values(const SymMatrix& m)
{
    if (m.order() == 0) return {};
    Eigen::SelfAdjointEigenSolver<Matrix> es(m.entries(), Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericalError("extreme_singular_values: eigensolver failed");
    return detail::range_from_eigenvalues(es.eigenvalues(), m.order());
}

/// Same as extreme_singular_values((1/n) C^T C) for an n x k column block C,
/// computed on whichever of C^T C or C C^T is smaller.
inline SingularValueRange gram_extreme_singular_values(const Eigen::Ref<const Matrix>& cols, Index n)
{
    if (cols.cols() == 0 || cols.rows() == 0) return {};
    const double inv_n = 1.0 / static_cast<double>(n);
    Matrix g;
    if (cols.cols() <= cols.rows()) {
        g = Matrix::Zero(cols.cols(), cols.cols());
        g.selfadjointView<Eigen::Lower>().rankUpdate(cols.transpose(), inv_n);
    } else {
        g = Matrix::Zero(cols.rows(), cols.rows());
        g.selfadjointView<Eigen::Lower>().rankUpdate(cols, inv_n);
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(g, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericalError("gram_extreme_singular_values: eigensolver failed");
    return detail::range_from_eigenvalues(es.eigenvalues(), std::max(cols.rows(), cols.cols()));
}

/// How the complement block S_cc + tau_c I is inverted.
enum class ComplementSolver {
    automatic,  ///< direct when p - a <= n, Woodbury otherwise
    direct,     ///< Cholesky of the (p-a) x (p-a) block
    woodbury,   ///< Cholesky of the n x n core n tau_c I + X_c X_c^T
};

/// Factorization of the ridge block matrix L for a fixed design and
/// expanded set. Immutable; all applications are const and reentrant.
///
/// The complement inverse uses
///   (S_cc + tau_c I)^{-1} = tau_c^{-1} (I - X_c^T (n tau_c I_n + X_c X_c^T)^{-1} X_c)
/// when p - a exceeds n, so building costs O(n^2 (p - a)) and each
/// application O(n (p - a)); the (p - a)^2 block is never formed.
class RidgeBlockFactor {
public:
    RidgeBlockFactor(const Eigen::Ref<const Matrix>& x, IndexSet expanded, double tau_a, double tau_c,
                     ComplementSolver solver = ComplementSolver::automatic)
        : expanded_(std::move(expanded)), tau_a_(tau_a), tau_c_(tau_c), n_(x.rows()), p_(x.cols())
    {
        using moce::detail::require;
        require(n_ > 0 && p_ > 0, "RidgeBlockFactor: empty design");
        require(x.allFinite(), "RidgeBlockFactor: design has non-finite entries");
        require(tau_a > 0.0 && std::isfinite(tau_a), "RidgeBlockFactor: tau_a must be positive");
        require(tau_c > 0.0 && std::isfinite(tau_c), "RidgeBlockFactor: tau_c must be positive");
        require(!expanded_.empty(), "RidgeBlockFactor: expanded set is empty");
        require(moce::detail::is_sorted_unique(expanded_), "RidgeBlockFactor: expanded set must be sorted and unique");
        require(expanded_.front() >= 0 && expanded_.back() < p_, "RidgeBlockFactor: expanded index out of range");
        require(static_cast<Index>(expanded_.size()) < n_,
                "RidgeBlockFactor: expanded size must be smaller than n (got " +
                    std::to_string(expanded_.size()) + " >= " + std::to_string(n_) + ")");

        complement_ = moce::detail::complement(expanded_, p_);
        xa_ = moce::detail::gather_columns(x, expanded_);
        xc_ = moce::detail::gather_columns(x, complement_);
        const double inv_n = 1.0 / static_cast<double>(n_);

        Matrix saa = Matrix::Zero(a(), a());
        saa.selfadjointView<Eigen::Lower>().rankUpdate(xa_.transpose(), inv_n);
        saa.diagonal().array() += tau_a_;
        aa_llt_.compute(saa);
        if (aa_llt_.info() != Eigen::Success)
            throw NumericalError("RidgeBlockFactor: expanded block is not positive definite");

        if (c() == 0) {
            woodbury_ = false;
            return;
        }
        woodbury_ = solver == ComplementSolver::woodbury ||
                    (solver == ComplementSolver::automatic && c() > n_);
        Matrix core;
        if (woodbury_) {
            core = Matrix::Zero(n_, n_);
            core.selfadjointView<Eigen::Lower>().rankUpdate(xc_);
            core.diagonal().array() += static_cast<double>(n_) * tau_c_;
        } else {
            core = Matrix::Zero(c(), c());
            core.selfadjointView<Eigen::Lower>().rankUpdate(xc_.transpose(), inv_n);
            core.diagonal().array() += tau_c_;
        }
        cc_llt_.compute(core);
        if (cc_llt_.info() != Eigen::Success)
            throw NumericalError("RidgeBlockFactor: complement block factorization failed");
    }

    const IndexSet& expanded() const noexcept { return expanded_; }
    const IndexSet& complement() const noexcept { return complement_; }
    double tau_a() const noexcept { return tau_a_; }
    double tau_c() const noexcept { return tau_c_; }
    Index n() const noexcept { return n_; }
    Index p() const noexcept { return p_; }
    Index a() const noexcept { return static_cast<Index>(expanded_.size()); }
    Index c() const noexcept { return static_cast<Index>(complement_.size()); }
    bool uses_woodbury() const noexcept { return woodbury_; }

    /// (S_aa + tau_a I)^{-1} V, column-wise.
    Matrix solve_expanded(const Eigen::Ref<const Matrix>& v) const { return aa_llt_.solve(v); }

    /// (S_cc + tau_c I)^{-1} V, column-wise.
    Matrix solve_complement(const Eigen::Ref<const Matrix>& v) const
    {
        if (c() == 0) return Matrix(0, v.cols());
        if (!woodbury_) return cc_llt_.solve(v);
        const Matrix inner = cc_llt_.solve(xc_ * v);
        return (v - xc_.transpose() * inner) / tau_c_;
    }

    /// S_ca V = X_c^T X_a V / n.
    Matrix cross(const Eigen::Ref<const Matrix>& va) const
    {
        return xc_.transpose() * (xa_ * va) / static_cast<double>(n_);
    }

    /// S_ac V = X_a^T X_c V / n.
    Matrix cross_transpose(const Eigen::Ref<const Matrix>& vc) const
    {
        return xa_.transpose() * (xc_ * vc) / static_cast<double>(n_);
    }

    /// L^{-1} V for a p x k block V in original coordinates.
    Matrix apply_inverse(const Matrix& v) const
    {
        check_rows(v.rows());
        const Matrix za = solve_expanded(moce::detail::gather_rows(v, expanded_));
        Matrix zc;
        if (c() > 0) zc = solve_complement(moce::detail::gather_rows(v, complement_) - cross(za));
        return assemble(za, zc, v.cols());
    }

    Vector apply_inverse(const Vector& v) const
    {
        return apply_inverse(Matrix(v)).col(0);
    }

    /// L^{-T} V.
    Matrix apply_inverse_transpose(const Matrix& v) const
    {
        check_rows(v.rows());
        Matrix zc;
        Matrix rhs_a = moce::detail::gather_rows(v, expanded_);
        if (c() > 0) {
            zc = solve_complement(moce::detail::gather_rows(v, complement_));
            rhs_a -= cross_transpose(zc);
        }
        return assemble(solve_expanded(rhs_a), zc, v.cols());
    }

    Vector apply_inverse_transpose(const Vector& v) const
    {
        return apply_inverse_transpose(Matrix(v)).col(0);
    }

    /// L V, used to verify round trips.
    Matrix apply(const Matrix& v) const
    {
        check_rows(v.rows());
        const double inv_n = 1.0 / static_cast<double>(n_);
        const Matrix va = moce::detail::gather_rows(v, expanded_);
        const Matrix out_a = xa_.transpose() * (xa_ * va) * inv_n + tau_a_ * va;
        Matrix out_c;
        if (c() > 0) {
            const Matrix vc = moce::detail::gather_rows(v, complement_);
            out_c = cross(va) + xc_.transpose() * (xc_ * vc) * inv_n + tau_c_ * vc;
        }
        return assemble(out_a, out_c, v.cols());
    }

    Vector apply(const Vector& v) const { return apply(Matrix(v)).col(0); }

private:
    void check_rows(Index rows) const
    {
        moce::detail::require(rows == p_, "RidgeBlockFactor: operand has wrong dimension");
    }

    Matrix assemble(const Matrix& top, const Matrix& bottom, Index k) const
    {
        Matrix out(p_, k);
        for (Index i = 0; i < a(); ++i) out.row(expanded_[static_cast<std::size_t>(i)]) = top.row(i);
        for (Index i = 0; i < c(); ++i) out.row(complement_[static_cast<std::size_t>(i)]) = bottom.row(i);
        return out;
    }

    IndexSet expanded_;
    IndexSet complement_;
    double tau_a_;
    double tau_c_;
    Index n_;
    Index p_;
    Matrix xa_;
    Matrix xc_;
    Eigen::LLT<Matrix> aa_llt_;
    Eigen::LLT<Matrix> cc_llt_;
    bool woodbury_ = false;
};

inline RidgeBlockFactor build_ridge_block_factor(const Eigen::Ref<const Matrix>& x, IndexSet expanded,
                                                 double tau_a, double tau_c,
                                                 ComplementSolver solver = ComplementSolver::automatic)
{
    return RidgeBlockFactor(x, std::move(expanded), tau_a, tau_c, solver);
}

struct ReSeDiagnostic {
    double re_lower_bound = 0.0;  ///< enumerated minimum; not certified
    double se_min = 0.0;
    double se_max = 0.0;
    bool heuristic = true;
};

namespace detail {

template <class F>
void for_each_subset(Index p, Index s, F&& f)
{
    IndexSet cur;
    auto rec = [&](auto&& self, Index start) -> void {
        if (!cur.empty()) f(cur);
        if (static_cast<Index>(cur.size()) == s) return;
        for (Index j = start; j < p; ++j) {
            cur.push_back(j);
            self(self, j + 1);
            cur.pop_back();
        }
    };
    rec(rec, 0);
}

// Local minimum of v^T S v / v^T v over the cone ||v_Jc||_1 <= k ||v_J||_1,
// by projected gradient steps. The Jc part is pulled back onto the l1 ball of
// radius k ||v_J||_1 after each step.
inline double cone_rayleigh_min(const Matrix& s, const IndexSet& support, double k, const Vector& start)
{
    const Index p = s.rows();
    std::vector<bool> in_j(static_cast<std::size_t>(p), false);
    for (Index j : support) in_j[static_cast<std::size_t>(j)] = true;

    auto project = [&](Vector& v) {
        double l1_j = 0.0;
        std::vector<double> rest;
        for (Index i = 0; i < p; ++i) {
            if (in_j[static_cast<std::size_t>(i)]) l1_j += std::abs(v(i));
            else rest.push_back(std::abs(v(i)));
        }
        const double radius = k * l1_j;
        double l1_c = 0.0;
        for (double r : rest) l1_c += r;
        if (l1_c <= radius) return;
        // soft-threshold level theta so the Jc part lands on the l1 ball
        std::sort(rest.begin(), rest.end(), std::greater<>());
        double cum = 0.0, theta = 0.0;
        for (std::size_t i = 0; i < rest.size(); ++i) {
            cum += rest[i];
            const double t = (cum - radius) / static_cast<double>(i + 1);
            if (i + 1 == rest.size() || rest[i + 1] <= t) {
                theta = t;
                break;
            }
        }
        for (Index i = 0; i < p; ++i) {
            if (in_j[static_cast<std::size_t>(i)]) continue;
            const double a = std::abs(v(i)) - theta;
            v(i) = a > 0.0 ? std::copysign(a, v(i)) : 0.0;
        }
    };

    Vector v = start;
    project(v);
    if (v.norm() == 0.0) return std::numeric_limits<double>::infinity();
    v.normalize();
    double best = v.dot(s * v);
    const double step = 0.5 / std::max(1e-300, s.diagonal().maxCoeff() * static_cast<double>(p));
    for (int it = 0; it < 300; ++it) {
        const double q = v.dot(s * v);
        Vector grad = 2.0 * (s * v - q * v);
        Vector w = v - step * grad;
        project(w);
        const double nw = w.norm();
        if (nw == 0.0) break;
        w /= nw;
        const double qw = w.dot(s * w);
        if (qw >= q - 1e-15 * std::max(1.0, std::abs(q))) {
            best = std::min(best, qw);
            break;
        }
        v = w;
        best = std::min(best, qw);
    }
    return best;
}

} // namespace detail

/// Desk-scale RE(s,k) / SE(s) diagnostics for p <= 20, s <= 5.
///
/// SE bounds are exact: the extreme eigenvalues of S_JJ over all supports
/// |J| <= s. The RE value is the smallest Rayleigh quotient found by a local
/// search inside the cone of each enumerated support, so it is flagged as
/// heuristic rather than a certified lower bound.
inline ReSeDiagnostic diagnose_re_se(const Eigen::Ref<const Matrix>& x, Index s, double k)
{
    const Index p = x.cols();
    if (p > 20 || s > 5)
        throw InvalidArgument("diagnose_re_se: size limits exceeded (p <= 20, s <= 5)");
    moce::detail::require(s >= 1, "diagnose_re_se: s must be at least 1");
    moce::detail::require(k >= 1.0, "diagnose_re_se: k must be at least 1");
    moce::detail::require(x.rows() > 0 && p > 0, "diagnose_re_se: empty design");

    const Matrix smat = SymMatrix::gram(x).entries();
    ReSeDiagnostic out;
    out.se_min = std::numeric_limits<double>::infinity();
    out.se_max = 0.0;
    double re = std::numeric_limits<double>::infinity();

    detail::for_each_subset(p, std::min(s, p), [&](const IndexSet& j) {
        const Index m = static_cast<Index>(j.size());
        Matrix sub(m, m);
        for (Index r = 0; r < m; ++r)
            for (Index c = 0; c < m; ++c) sub(r, c) = smat(j[static_cast<std::size_t>(r)], j[static_cast<std::size_t>(c)]);
        Eigen::SelfAdjointEigenSolver<Matrix> es(sub);
        const double lo = std::max(0.0, es.eigenvalues()(0));
        out.se_min = std::min(out.se_min, lo);
        out.se_max = std::max(out.se_max, es.eigenvalues()(m - 1));

        Vector start = Vector::Zero(p);
        for (Index r = 0; r < m; ++r) start(j[static_cast<std::size_t>(r)]) = es.eigenvectors()(r, 0);
        re = std::min(re, std::min(lo, detail::cone_rayleigh_min(smat, j, k, start)));
    });
    // Tiny negative rounding on exactly singular supports.
    if (out.se_min < 1e-14 * std::max(1.0, out.se_max)) out.se_min = 0.0;
    out.re_lower_bound = std::max(0.0, re);
    if (out.re_lower_bound < 1e-14 * std::max(1.0, out.se_max)) out.re_lower_bound = 0.0;
    return out;
}

} // namespace moce::linalg
