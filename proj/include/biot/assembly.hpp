#pragma once

#include "biot/params.hpp"
#include "biot/space.hpp"
#include "biot/sparse.hpp"

#include <memory>
#include <string>

namespace biot {

struct DGConfig {
    double eta = 10.0;  ///< interior-penalty parameter
    void validate() const;
};

/// Displacement / flux / pressure element families.
struct Families {
    Family u = Family::BDM1;
    Family v = Family::RT0;
    Family p = Family::P0;

    /// "bdm1-rt0-p0", "rt1-rt0-p0", "p1c-rt0-p0".
    static Families parse(std::string_view name);
    std::string name() const;
};

/// A mesh with its three spaces. Owns the mesh so spaces never dangle.
class Discretization {
public:
    Discretization(std::shared_ptr<const TriMesh> mesh, Families families);
    static Discretization structured(int n, Families families = {});

    const TriMesh& mesh() const noexcept { return *mesh_; }
    const Families& families() const noexcept { return families_; }
    const FESpace& U() const noexcept { return *u_; }
    const FESpace& V() const noexcept { return *v_; }
    const FESpace& P() const noexcept { return *p_; }

private:
    std::shared_ptr<const TriMesh> mesh_;
    Families families_;
    std::unique_ptr<FESpace> u_, v_, p_;
};

/// Block operator of the discrete three-field problem on free dofs:
///
///   [ A_uu     0      B_up^T ] [u]   [rhs_u]
///   [ 0        A_vv   B_vp^T ] [v] = [rhs_v]
///   [ B_up     B_vp   C_pp   ] [p]   [rhs_p]
///
/// with A_uu = a_h + lambda (div, div), A_vv = rp_inv (mass), B_up = -(q, div w),
/// B_vp = -(q, div z), C_pp = -alpha_p (mass). The pressure is sought in the
/// area-weighted mean-zero subspace; `cell_areas` defines that constraint.
struct BlockSystem {
    CsrMatrix A_uu, B_up, A_vv, B_vp, C_pp;
    std::vector<double> rhs_u, rhs_v, rhs_p;
    std::vector<double> cell_areas;
    Families families;
    ReducedParams params;

    int n_u() const noexcept { return A_uu.rows(); }
    int n_v() const noexcept { return A_vv.rows(); }
    int n_p() const noexcept { return C_pp.rows(); }
    int size() const noexcept { return n_u() + n_v() + n_p(); }

    CsrMatrix monolithic() const;
    std::vector<double> rhs() const;
    /// y = A x for a stacked (u, v, p) vector.
    void apply(std::span<const double> x, std::span<double> y) const;
};

/// Gram matrices of the parameter-dependent norms on free dofs.
struct NormBlocks {
    CsrMatrix N_U, N_V, N_P;
};

// Building blocks. `constrained` selects free dofs (true) or every dof.

/// Sum_K (eps(u), eps(w))_K.
CsrMatrix assemble_eps_eps(const FESpace& s, bool constrained = true);
/// Sum_K (grad u, grad w)_K.
CsrMatrix assemble_grad_grad(const FESpace& s, bool constrained = true);
CsrMatrix assemble_div_div(const FESpace& s, bool constrained = true);
/// Vector or scalar L2 mass.
CsrMatrix assemble_mass(const FESpace& s, bool constrained = true);
/// Sum_e h_e^{-1} ([u_t], [w_t])_e over every edge, boundary included.
CsrMatrix assemble_tangential_jump(const FESpace& s, bool constrained = true);
/// Sum_K h_K^2 (D^2 u, D^2 w)_K; identically zero for piecewise affine families.
CsrMatrix assemble_hessian_term(const FESpace& s, bool constrained = true);
/// -(q, div w) as an (n_p x n_u) matrix.
CsrMatrix assemble_div_coupling(const FESpace& u, const FESpace& p, bool constrained = true);

/// Symmetric interior-penalty form: volume eps:eps, the two consistency
/// terms -({eps(u)}, [w_t]) - ({eps(w)}, [u_t]) and the penalty
/// eta h_e^{-1} ([u_t], [w_t]), summed over interior and boundary edges.
CsrMatrix assemble_ah(const FESpace& s, const DGConfig& cfg, bool constrained = true);

/// Grams of the mesh-dependent norms:
/// ||u||_h^2 = Sum ||eps(u)||^2 + Sum h_e^{-1} ||[u_t]||^2,
/// ||u||_{1,h}^2 = Sum ||grad u||^2 + Sum h_e^{-1} ||[u_t]||^2,
/// ||u||_DG^2 = ||u||_{1,h}^2 + Sum h_K^2 |u|_{2,K}^2.
CsrMatrix h_norm_gram(const FESpace& s, bool constrained = true);
CsrMatrix one_h_norm_gram(const FESpace& s, bool constrained = true);
CsrMatrix dg_norm_gram(const FESpace& s, bool constrained = true);

/// Smallest eigenvalue of a_h u = theta G_h u on free dofs (dense).
double coercivity_constant(const FESpace& s, const DGConfig& cfg);

/// Throws IncompatibleSpaces unless div U(K) = div V(K) = P0(K).
void check_compatibility(const Families& f);

/// Load vectors. rhs_v is always zero; rhs_p(K) = (g, 1_K) without any
/// mean shift.
struct LoadVectors {
    std::vector<double> u, v, p;
};
LoadVectors assemble_rhs(const Discretization& d, const VectorField* f, const ScalarField* g);
/// Same, with g given as P0 cell values.
LoadVectors assemble_rhs(const Discretization& d, const VectorField* f, std::span<const double> g_cells);

BlockSystem assemble_block_system(const Discretization& d, const ReducedParams& params, const DGConfig& cfg,
                                  const VectorField* f = nullptr, const ScalarField* g = nullptr);

/// N_U = DG-norm Gram + lambda (div, div), N_V = rp_inv mass + gamma^{-1} (div, div),
/// N_P = gamma mass.
NormBlocks assemble_norms(const Discretization& d, const ReducedParams& params, const DGConfig& cfg);

} // namespace biot
