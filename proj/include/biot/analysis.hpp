#pragma once

#include "biot/assembly.hpp"
#include "biot/solver.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace biot {

enum class NormKind { Paper, Natural };
std::string_view to_string(NormKind k);
NormKind norm_kind_from_string(std::string_view s);

/// Gram matrices of the unweighted "natural" norms:
/// N_U = ||.||_h Gram + lambda (div, div), N_V = rp_inv (mass + (div, div)), N_P = mass.
NormBlocks natural_norm_blocks(const Discretization& d, const ReducedParams& params);

NormBlocks norm_blocks(const Discretization& d, const ReducedParams& params, const DGConfig& cfg, NormKind kind);

struct InfSupResult {
    double beta0 = 0.0;
    std::optional<Eigen::VectorXd> theta_spectrum;
    int mesh_n = 0;
    ReducedParams params;
    std::string triple;
    NormKind norms = NormKind::Paper;
};

/// beta0 = min |theta| for A x = theta N x on the mean-zero subspace (dense).
InfSupResult infsup_constant(const BlockSystem& sys, const NormBlocks& norms, bool keep_spectrum = false);
/// Same on explicit dense matrices (no constraint handling).
InfSupResult infsup_constant(const Eigen::MatrixXd& A, const Eigen::MatrixXd& N, bool keep_spectrum = false);

/// Assembles and evaluates one configuration on the structured n x n mesh.
InfSupResult infsup_at(int n, const Families& fam, const ReducedParams& params, const DGConfig& cfg, NormKind norms);

/// Closed-form solution of the reduced problem with
/// u = (sin pi x sin pi y, sin pi x sin pi y), p = cos pi x cos pi y, v = -R_p grad p.
struct ManufacturedCase {
    ReducedParams params;
    VectorField u, v, f;
    ScalarField p, g, div_u, div_v;
    std::function<VecGrad(const Vec2&)> grad_u;
    std::function<VecHessian(const Vec2&)> hess_u;
};
ManufacturedCase manufactured_case(const ReducedParams& params);

struct ErrorNorms {
    double err_U = 0.0;
    double err_V = 0.0;
    double err_P = 0.0;
};

/// Errors of full coefficient vectors (u, v) and P0 cell values p against
/// the exact fields, in the parameter-dependent norms:
/// err_U^2 = ||u - u_h||_DG^2 + lambda ||div(u - u_h)||^2,
/// err_V^2 = rp_inv ||v - v_h||^2 + gamma^{-1} ||div(v - v_h)||^2, err_P^2 = gamma ||p - p_h||^2.
ErrorNorms error_norms(const Discretization& d, std::span<const double> u_full, std::span<const double> v_full,
                       std::span<const double> p_cells, const ManufacturedCase& mc);
/// Same for a stacked free solution vector.
ErrorNorms error_norms(const Discretization& d, std::span<const double> x, const ManufacturedCase& mc);

/// Errors of (Pi_B^div u, Pi_RT0 v, Q_h p).
ErrorNorms best_approximation(const Discretization& d, const ManufacturedCase& mc);

/// Splits a stacked free vector into full u, full v and P0 cell values.
struct FieldTriple {
    std::vector<double> u, v, p;
};
FieldTriple split_solution(const Discretization& d, std::span<const double> x);

struct AuditResult {
    std::vector<double> residual;
    double max_abs = 0.0;
};
/// r_K = -div u_h - div v_h - alpha_p p_h - (Q_h g)_K with Q_h g the mean-zero
/// cell means of the source.
AuditResult conservation_audit(const Discretization& d, std::span<const double> x, std::span<const double> g_cells,
                               const ReducedParams& params);

struct ConvergenceRow {
    int n = 0;
    double h = 0.0;
    ErrorNorms err;
    ErrorNorms best;
    std::optional<double> order_U, order_V, order_P;
};
using ConvergenceTable = std::vector<ConvergenceRow>;

/// Direct solves of the manufactured case on structured meshes; orders are
/// log2(err(n)/err(2n)) between consecutive rows.
ConvergenceTable convergence_study(const ReducedParams& params, const std::vector<int>& n_list, const Families& fam,
                                   const DGConfig& cfg);

/// Tensor grid of reduced parameters, traversed lambda-major.
struct ParamGrid {
    std::vector<double> lambda{1.0};
    std::vector<double> rp_inv{1.0};
    std::vector<double> alpha_p{0.0};
    std::vector<ReducedParams> points() const;
};

struct InfSupRow {
    std::string triple;
    NormKind norms = NormKind::Paper;
    int n = 0;
    ReducedParams params;
    double beta0 = 0.0;
};
/// Every (n, grid point) pair, run on `threads` workers; rows come back in
/// n-major, then grid order regardless of scheduling.
std::vector<InfSupRow> infsup_sweep(const std::vector<int>& ns, const ParamGrid& grid, const Families& fam,
                                    const DGConfig& cfg, NormKind norms, int threads = 0);

struct MinresRow {
    int n = 0;
    ReducedParams params;
    int iters = 0;
    bool converged = false;
    std::optional<double> cond_estimate;
};
/// MINRES on the manufactured right-hand side at every grid point.
std::vector<MinresRow> minres_sweep(int n, const ParamGrid& grid, const Families& fam, const DGConfig& cfg,
                                    const MinresOptions& opt, bool with_condition, int threads = 0);

/// Extreme eigenvalues of the pencil (G_h, G_DG) on free dofs; the Korn
/// equivalence says both stay bounded away from 0 and infinity as h -> 0.
struct KornBounds {
    double min_h_over_dg = 0.0;
    double max_h_over_dg = 0.0;
    double min_h_over_1h = 0.0;
    double max_dg_over_1h = 0.0;
};
KornBounds korn_bounds(const FESpace& s);

/// Runs job(i) for i in [0, count) on up to `threads` workers (0 = hardware).
void parallel_for(int count, int threads, const std::function<void(int)>& job);

} // namespace biot
