#pragma once

#include "biot/elements.hpp"
#include "biot/mesh.hpp"

#include <functional>
#include <span>
#include <vector>

namespace biot {

struct LocalDof {
    int global = -1;
    double sign = 1.0;
};

/// Physical basis values of one cell at one point, signs already applied.
struct BasisEval {
    int n = 0;
    std::array<Vec2, 8> values;
    std::array<double, 8> divs;
    std::array<VecGrad, 8> grads;
    std::array<VecHessian, 8> hessians;
    double scalar = 0.0;  ///< P0 only
};

using VectorField = std::function<Vec2(const Vec2&)>;
using ScalarField = std::function<double(const Vec2&)>;

/// Global finite element space over a mesh with homogeneous essential
/// conditions: H(div) families drop the normal moments on boundary edges,
/// P1cVec drops every boundary vertex, P0 is unconstrained (the mean-zero
/// condition is handled by the solvers).
class FESpace {
public:
    FESpace(const TriMesh& mesh, Family family);

    const TriMesh& mesh() const noexcept { return *mesh_; }
    Family family() const noexcept { return family_; }
    const RefBasis& ref() const noexcept { return *ref_; }

    int num_dofs() const noexcept { return ndofs_; }
    int num_free() const noexcept { return nfree_; }
    int local_dofs() const noexcept { return ref_->dofs(); }

    /// -1 for a constrained dof.
    int free_index(int global) const { return free_index_[global]; }
    std::span<const LocalDof> cell_dofs(int c) const {
        return {cell_dofs_.data() + static_cast<std::size_t>(c) * local_dofs(), static_cast<std::size_t>(local_dofs())};
    }
    const CellGeometry& geometry(int c) const { return geometry_[c]; }

    /// Evaluates the signed physical basis at reference point xhat of cell c.
    /// Hessians are filled only when `with_hessians` is set.
    void evaluate(int c, const Vec2& xhat, BasisEval& out, bool with_hessians = false) const;

    std::vector<double> expand(std::span<const double> free) const;
    std::vector<double> restrict_to_free(std::span<const double> full) const;

    /// Field value, divergence and gradient of a full coefficient vector.
    Vec2 value(std::span<const double> full, int c, const Vec2& xhat) const;
    double divergence(std::span<const double> full, int c, const Vec2& xhat) const;
    VecGrad gradient(std::span<const double> full, int c, const Vec2& xhat) const;

    /// Elementwise divergence for families whose divergence is constant per
    /// cell (BDM1, RT0, P1cVec); evaluated at the centroid otherwise.
    std::vector<double> cell_divergence(std::span<const double> full) const;

private:
    const TriMesh* mesh_;
    Family family_;
    const RefBasis* ref_;
    int ndofs_ = 0;
    int nfree_ = 0;
    std::vector<LocalDof> cell_dofs_;
    std::vector<int> free_index_;
    std::vector<CellGeometry> geometry_;
};

/// Canonical interpolant onto an H(div) family (edge normal moments, plus
/// interior moments for RT1) or nodal interpolant for P1cVec. Returns a full
/// coefficient vector.
std::vector<double> interpolate_Pi_div(const VectorField& u, const FESpace& space);

/// Cell means of p (degree-8 quadrature). With `mean_zero` the area-weighted
/// mean is subtracted afterwards, giving the L2 projection onto P0 with zero
/// integral.
std::vector<double> project_Qh(const ScalarField& p, const TriMesh& mesh, bool mean_zero = false);

/// Subtracts the area-weighted mean from P0 cell values.
void remove_mean(std::span<double> cell_values, const TriMesh& mesh);
double integral_p0(std::span<const double> cell_values, const TriMesh& mesh);

/// True when the divergences of the local basis span exactly the constants
/// (rank test on the reference cell).
bool divergence_is_piecewise_constant(Family f);

} // namespace biot
