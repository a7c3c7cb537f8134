#include "biot/solver.hpp"

#include "biot/errors.hpp"

#include <json.hpp>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <chrono>
#include <cmath>
#include <limits>

namespace biot {

namespace {

constexpr int kRefineSteps = 5;

using SpMat = Eigen::SparseMatrix<double>;
using Ldlt = Eigen::SimplicialLDLT<SpMat>;

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void factorize(Ldlt& solver, const CsrMatrix& m, const char* name) {
    if (m.rows() == 0) return;
    solver.compute(m.to_eigen());
    if (solver.info() != Eigen::Success)
        throw FactorizationFailure(std::string(name) + " block: factorization failed");
    const double dmin = solver.vectorD().minCoeff();
    const double dmax = solver.vectorD().cwiseAbs().maxCoeff();
    if (!(dmin > 1e-14 * dmax))
        throw FactorizationFailure(std::string(name) + " block is not numerically positive definite");
}

} // namespace

struct BlockPreconditioner::Factors {
    Ldlt u, v;
};

BlockPreconditioner::BlockPreconditioner() : f_(std::make_unique<Factors>()) {}
BlockPreconditioner::BlockPreconditioner(BlockPreconditioner&&) noexcept = default;
BlockPreconditioner& BlockPreconditioner::operator=(BlockPreconditioner&&) noexcept = default;
BlockPreconditioner::~BlockPreconditioner() = default;

BlockPreconditioner BlockPreconditioner::build(const NormBlocks& norms, const BlockSystem& sys) {
    if (norms.N_V.rows() != sys.n_v() || norms.N_P.rows() != sys.n_p())
        throw DimensionMismatch("BlockPreconditioner: norm blocks do not match the system");
    BlockPreconditioner b;
    b.n_u_ = sys.n_u();
    b.n_v_ = sys.n_v();
    b.n_p_ = sys.n_p();
    b.U_ = sys.A_uu;
    b.V_ = norms.N_V;
    b.P_ = norms.N_P;
    factorize(b.f_->u, b.U_, "displacement");
    factorize(b.f_->v, b.V_, "flux");
    b.p_diag_.resize(b.n_p_);
    for (int i = 0; i < b.n_p_; ++i) {
        b.p_diag_[i] = b.P_.coeff(i, i);
        if (!(b.p_diag_[i] > 0)) throw FactorizationFailure("pressure block has a non-positive diagonal");
    }
    if (static_cast<int>(sys.cell_areas.size()) != b.n_p_)
        throw DimensionMismatch("BlockPreconditioner: cell areas do not match the pressure space");
    return b;
}

void BlockPreconditioner::apply_u(std::span<const double> r, std::span<double> z) const {
    if (n_u_ == 0) return;
    Eigen::Map<const Eigen::VectorXd> rr(r.data(), n_u_);
    Eigen::Map<Eigen::VectorXd>(z.data(), n_u_) = f_->u.solve(rr);
}

void BlockPreconditioner::apply_v(std::span<const double> r, std::span<double> z) const {
    if (n_v_ == 0) return;
    Eigen::Map<const Eigen::VectorXd> rr(r.data(), n_v_);
    Eigen::Map<Eigen::VectorXd>(z.data(), n_v_) = f_->v.solve(rr);
}

// N_P = gamma diag(|K|). On the mean-zero subspace its inverse is
// D^{-1} r minus the weighted mean, which also sends r = const * |K| to zero.
void BlockPreconditioner::apply_p(std::span<const double> r, std::span<double> z) const {
    double num = 0.0, den = 0.0;
    for (int i = 0; i < n_p_; ++i) {
        z[i] = r[i] / p_diag_[i];
        num += r[i];
        den += p_diag_[i];
    }
    const double mean = den > 0 ? num / den : 0.0;
    for (int i = 0; i < n_p_; ++i) z[i] -= mean;
}

void BlockPreconditioner::apply(std::span<const double> r, std::span<double> z) const {
    if (static_cast<int>(r.size()) != size() || static_cast<int>(z.size()) != size())
        throw DimensionMismatch("BlockPreconditioner::apply: size mismatch");
    apply_u(r.subspan(0, n_u_), z.subspan(0, n_u_));
    apply_v(r.subspan(n_u_, n_v_), z.subspan(n_u_, n_v_));
    apply_p(r.subspan(n_u_ + n_v_, n_p_), z.subspan(n_u_ + n_v_, n_p_));
}

std::string_view to_string(SolveStatus s) {
    switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::MaxIterExceeded: return "MaxIterExceeded";
    case SolveStatus::Breakdown: return "BreakdownDetected";
    }
    return "unknown";
}

std::string SolveReport::to_json() const {
    nlohmann::ordered_json j;
    j["iterations"] = iterations;
    j["converged"] = converged;
    j["status"] = std::string(to_string(status));
    j["residual_history"] = residual_history;
    j["cond_estimate"] = cond_estimate ? nlohmann::ordered_json(*cond_estimate) : nlohmann::ordered_json(nullptr);
    j["conservation_max"] =
        conservation_max ? nlohmann::ordered_json(*conservation_max) : nlohmann::ordered_json(nullptr);
    j["wall_time"] = wall_time;
    j["backend"] = backend;
    return j.dump(2);
}

SolveResult minres_solve(const std::function<void(std::span<const double>, std::span<double>)>& A,
                         const std::function<void(std::span<const double>, std::span<double>)>& B,
                         std::span<const double> b, const MinresOptions& opt) {
    namespace k = kernels;
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t n = b.size();
    SolveResult out;
    out.x.assign(n, 0.0);
    SolveReport& rep = out.report;
    rep.backend = std::string(k::active().name);

    std::vector<double> r1(b.begin(), b.end()), r2(r1), y(n), v(n), w(n, 0.0), w1(n), w2(n, 0.0);
    B(r1, y);
    double beta1 = k::dot(r1, y);
    if (beta1 < 0) {
        rep.status = SolveStatus::Breakdown;
        rep.wall_time = seconds_since(t0);
        return out;
    }
    beta1 = std::sqrt(beta1);
    if (beta1 == 0.0) {
        rep.converged = true;
        rep.wall_time = seconds_since(t0);
        return out;
    }

    double oldb = 0.0, beta = beta1, dbar = 0.0, epsln = 0.0, phibar = beta1;
    double cs = -1.0, sn = 0.0;
    constexpr double tiny = std::numeric_limits<double>::epsilon();
    rep.status = SolveStatus::MaxIterExceeded;
    for (int itn = 1; itn <= opt.max_iter; ++itn) {
        for (std::size_t i = 0; i < n; ++i) v[i] = y[i] / beta;
        A(v, y);
        if (itn >= 2) k::axpy(-beta / oldb, r1, y);
        const double alfa = k::dot(v, y);
        k::axpy(-alfa / beta, r2, y);
        r1.swap(r2);
        r2 = y;
        B(r2, y);
        oldb = beta;
        double bb = k::dot(r2, y);
        if (bb < -1e-14 * beta1 * beta1) {
            rep.iterations = itn - 1;
            rep.status = SolveStatus::Breakdown;
            break;
        }
        beta = std::sqrt(std::max(bb, 0.0));

        const double oldeps = epsln;
        const double delta = cs * dbar + sn * alfa;
        const double gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        const double gamma = std::max(std::hypot(gbar, beta), tiny);
        cs = gbar / gamma;
        sn = beta / gamma;
        const double phi = cs * phibar;
        phibar = sn * phibar;

        w1.swap(w2);
        w2.swap(w);
        for (std::size_t i = 0; i < n; ++i) w[i] = (v[i] - oldeps * w1[i] - delta * w2[i]) / gamma;
        k::axpy(phi, w, out.x);

        const double rel = phibar / beta1;
        rep.residual_history.push_back(rel);
        rep.iterations = itn;
        if (rel <= opt.tol) {
            rep.status = SolveStatus::Converged;
            break;
        }
        if (beta == 0.0) {
            // Exact invariant subspace: the iterate solves the system.
            rep.status = SolveStatus::Converged;
            break;
        }
    }
    rep.converged = rep.status == SolveStatus::Converged;
    rep.wall_time = seconds_since(t0);
    return out;
}

SolveResult minres_solve(const BlockSystem& sys, const BlockPreconditioner& B, const MinresOptions& opt) {
    if (B.size() != sys.size()) throw DimensionMismatch("minres_solve: preconditioner size mismatch");
    const CsrMatrix A = sys.monolithic();
    const std::vector<double> b = sys.rhs();
    SolveResult res = minres_solve([&A](std::span<const double> x, std::span<double> y) { A.multiply(x, y); },
                                   [&B](std::span<const double> r, std::span<double> z) { B.apply(r, z); }, b, opt);
    // Remove roundoff drift of the pressure mean.
    const int off = sys.n_u() + sys.n_v();
    double num = 0.0, den = 0.0;
    for (int i = 0; i < sys.n_p(); ++i) {
        num += sys.cell_areas[i] * res.x[off + i];
        den += sys.cell_areas[i];
    }
    if (den > 0)
        for (int i = 0; i < sys.n_p(); ++i) res.x[off + i] -= num / den;
    return res;
}

SolveResult direct_solve(const BlockSystem& sys, double* multiplier) {
    const auto t0 = std::chrono::steady_clock::now();
    const CsrMatrix A = sys.monolithic();
    const int n = sys.size();
    const int off = sys.n_u() + sys.n_v();
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(A.nnz() + 2 * sys.n_p());
    for (int r = 0; r < n; ++r)
        for (int k = A.row_ptr()[r]; k < A.row_ptr()[r + 1]; ++k) t.emplace_back(r, A.col()[k], A.val()[k]);
    for (int i = 0; i < sys.n_p(); ++i) {
        t.emplace_back(n, off + i, sys.cell_areas[i]);
        t.emplace_back(off + i, n, sys.cell_areas[i]);
    }
    SpMat M(n + 1, n + 1);
    M.setFromTriplets(t.begin(), t.end());
    M.makeCompressed();
    Eigen::SparseLU<SpMat> lu;
    lu.analyzePattern(M);
    lu.factorize(M);
    if (lu.info() != Eigen::Success) throw FactorizationFailure("direct_solve: sparse LU failed: " + lu.lastErrorMessage());
    Eigen::VectorXd rhs(n + 1);
    const std::vector<double> b = sys.rhs();
    for (int i = 0; i < n; ++i) rhs[i] = b[i];
    rhs[n] = 0.0;
    Eigen::VectorXd x = lu.solve(rhs);
    if (lu.info() != Eigen::Success || !x.allFinite()) throw FactorizationFailure("direct_solve: solve failed");
    // Large lambda puts O(lambda) entries next to the O(1) continuity rows;
    // refinement brings those rows back to roundoff.
    double prev = std::numeric_limits<double>::infinity();
    for (int it = 0; it < kRefineSteps; ++it) {
        const Eigen::VectorXd r = rhs - M * x;
        const double rn = r.lpNorm<Eigen::Infinity>();
        if (!(rn < prev) || rn == 0.0) break;
        prev = rn;
        x += lu.solve(r);
    }
    SolveResult out;
    out.x.assign(x.data(), x.data() + n);
    if (multiplier != nullptr) *multiplier = x[n];
    out.report.converged = true;
    out.report.backend = "sparse-lu";
    out.report.wall_time = seconds_since(t0);
    return out;
}

PencilSpectrum pencil_spectrum(const Eigen::MatrixXd& A, const Eigen::MatrixXd& N) {
    if (A.rows() != N.rows() || A.cols() != N.cols() || A.rows() != A.cols())
        throw DimensionMismatch("pencil_spectrum: shape mismatch");
    PencilSpectrum out;
    if (A.rows() == 0) return out;
    Eigen::LLT<Eigen::MatrixXd> llt(N);
    if (llt.info() != Eigen::Success) throw SingularNormMatrix("norm matrix is not positive definite");
    // C = L^{-1} A L^{-T}
    Eigen::MatrixXd C = llt.matrixL().solve(A);
    C = llt.matrixL().solve(C.transpose()).transpose();
    C = 0.5 * (C + C.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw EigFailure("pencil_spectrum: eigensolver did not converge");
    out.theta = es.eigenvalues();
    out.min_abs = out.theta.cwiseAbs().minCoeff();
    out.max_abs = out.theta.cwiseAbs().maxCoeff();
    return out;
}

Eigen::MatrixXd restrict_mean_zero(const Eigen::MatrixXd& M, int p_offset, std::span<const double> areas) {
    const int n = static_cast<int>(M.rows());
    const int np = static_cast<int>(areas.size());
    if (np == 0 || p_offset + np != n) throw DimensionMismatch("restrict_mean_zero: bad pressure block");
    const int last = n - 1;
    const double a_last = areas[np - 1];
    Eigen::MatrixXd R = M;
    for (int j = 0; j < np - 1; ++j) R.col(p_offset + j) -= (areas[j] / a_last) * R.col(last);
    for (int j = 0; j < np - 1; ++j) R.row(p_offset + j) -= (areas[j] / a_last) * R.row(last);
    return R.topLeftCorner(n - 1, n - 1);
}

Eigen::MatrixXd block_diagonal(const CsrMatrix& a, const CsrMatrix& b, const CsrMatrix& c) {
    const int n = a.rows() + b.rows() + c.rows();
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
    D.block(0, 0, a.rows(), a.cols()) = a.to_dense();
    D.block(a.rows(), a.rows(), b.rows(), b.cols()) = b.to_dense();
    D.block(a.rows() + b.rows(), a.rows() + b.rows(), c.rows(), c.cols()) = c.to_dense();
    return D;
}

double estimate_condition(const BlockSystem& sys, const BlockPreconditioner& B) {
    const int off = sys.n_u() + sys.n_v();
    const Eigen::MatrixXd A = restrict_mean_zero(sys.monolithic().to_dense(), off, sys.cell_areas);
    const Eigen::MatrixXd N =
        restrict_mean_zero(block_diagonal(B.U_block(), B.V_block(), B.P_block()), off, sys.cell_areas);
    const PencilSpectrum s = pencil_spectrum(A, N);
    if (!(s.min_abs > 0)) throw EigFailure("estimate_condition: singular operator");
    return s.max_abs / s.min_abs;
}

} // namespace biot
