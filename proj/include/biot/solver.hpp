#pragma once

#include "biot/assembly.hpp"

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace biot {

/// Block-diagonal preconditioner diag(A_uu, N_V, N_P)^{-1}. The displacement
/// and flux blocks are factorized once (sparse LDL^T); the pressure block is
/// diagonal and its inverse is taken on the mean-zero subspace, i.e. the
/// result always has zero area-weighted mean and constant residual
/// components are annihilated.
class BlockPreconditioner {
public:
    /// Throws FactorizationFailure if a block is not numerically SPD.
    static BlockPreconditioner build(const NormBlocks& norms, const BlockSystem& sys);

    BlockPreconditioner(BlockPreconditioner&&) noexcept;
    BlockPreconditioner& operator=(BlockPreconditioner&&) noexcept;
    ~BlockPreconditioner();

    int size() const noexcept { return n_u_ + n_v_ + n_p_; }
    int n_u() const noexcept { return n_u_; }
    int n_v() const noexcept { return n_v_; }
    int n_p() const noexcept { return n_p_; }

    /// z = B r.
    void apply(std::span<const double> r, std::span<double> z) const;
    void apply_u(std::span<const double> r, std::span<double> z) const;
    void apply_v(std::span<const double> r, std::span<double> z) const;
    void apply_p(std::span<const double> r, std::span<double> z) const;

    /// The SPD blocks whose inverses are applied.
    const CsrMatrix& U_block() const noexcept { return U_; }
    const CsrMatrix& V_block() const noexcept { return V_; }
    const CsrMatrix& P_block() const noexcept { return P_; }

private:
    BlockPreconditioner();
    struct Factors;
    int n_u_ = 0, n_v_ = 0, n_p_ = 0;
    CsrMatrix U_, V_, P_;
    std::vector<double> p_diag_;
    std::unique_ptr<Factors> f_;
};

enum class SolveStatus { Converged, MaxIterExceeded, Breakdown };
std::string_view to_string(SolveStatus s);

struct SolveReport {
    int iterations = 0;
    /// phibar_k / phibar_0: relative preconditioned residual in the B norm.
    std::vector<double> residual_history;
    bool converged = false;
    SolveStatus status = SolveStatus::Converged;
    std::optional<double> cond_estimate;
    std::optional<double> conservation_max;
    double wall_time = 0.0;
    std::string backend;

    std::string to_json() const;
};

struct MinresOptions {
    double tol = 1e-8;
    int max_iter = 1000;
};

struct SolveResult {
    std::vector<double> x;  ///< stacked free (u, v, p)
    SolveReport report;
};

/// Preconditioned MINRES on the block system. The pressure iterate stays in
/// the mean-zero subspace. MaxIterExceeded and Breakdown are reported in the
/// status (with the best iterate) rather than thrown.
SolveResult minres_solve(const BlockSystem& sys, const BlockPreconditioner& B, const MinresOptions& opt = {});
/// Same, for any symmetric operator given as a callback.
SolveResult minres_solve(const std::function<void(std::span<const double>, std::span<double>)>& A,
                         const std::function<void(std::span<const double>, std::span<double>)>& B,
                         std::span<const double> b, const MinresOptions& opt = {});

/// Sparse LU solve of the monolithic system bordered by the constraint
/// Sum_K |K| p_K = 0. Returns the stacked solution; `multiplier` receives
/// the Lagrange multiplier.
SolveResult direct_solve(const BlockSystem& sys, double* multiplier = nullptr);

/// Extreme generalized eigenvalues of a symmetric pencil A x = theta N x.
struct PencilSpectrum {
    double min_abs = 0.0;
    double max_abs = 0.0;
    Eigen::VectorXd theta;
};
/// Dense. N must be SPD (SingularNormMatrix otherwise).
PencilSpectrum pencil_spectrum(const Eigen::MatrixXd& A, const Eigen::MatrixXd& N);

/// Removes the last pressure unknown with the basis q_j = e_j - (a_j/a_last) e_last
/// of the mean-zero subspace: returns T^T M T.
Eigen::MatrixXd restrict_mean_zero(const Eigen::MatrixXd& M, int p_offset, std::span<const double> areas);

/// Dense block diagonal of three sparse blocks.
Eigen::MatrixXd block_diagonal(const CsrMatrix& a, const CsrMatrix& b, const CsrMatrix& c);

/// kappa(B A) = max|theta| / min|theta| for A x = theta diag(A_uu, N_V, N_P) x on
/// the mean-zero subspace.
double estimate_condition(const BlockSystem& sys, const BlockPreconditioner& B);

} // namespace biot
