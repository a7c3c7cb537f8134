#pragma once

#include "biot/mesh.hpp"

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace biot {

enum class Family { BDM1, RT0, RT1, P0, P1cVec };

std::string_view to_string(Family f);
Family family_from_string(std::string_view name);
bool is_hdiv(Family f) noexcept;
int dofs_per_cell(Family f) noexcept;

/// Second derivatives of a vector field: hess[i](a, b) = d^2 v_i / dx_a dx_b.
using VecHessian = std::array<Mat2, 2>;
/// grad(i, j) = d v_i / dx_j.
using VecGrad = Mat2;

/// Local basis on the reference triangle (0,0), (1,0), (0,1).
///
/// The basis is the dual of the element's degrees of freedom:
///  - BDM1, RT0, RT1: normal moments int_e v.n L_k(s) ds against Legendre
///    polynomials L_0 = 1, L_1 = 2s - 1 on each edge, s running from the
///    lower to the higher local vertex; RT1 adds the two interior moments
///    int_K v_x, int_K v_y.
///  - P1cVec: vertex values, ordered (v0x, v0y, v1x, v1y, v2x, v2y).
///  - P0: the constant 1 (scalar).
class RefBasis {
public:
    static const RefBasis& get(Family f);

    Family family() const noexcept { return family_; }
    int dofs() const noexcept { return ndofs_; }
    bool is_scalar() const noexcept { return family_ == Family::P0; }

    void values(const Vec2& xhat, std::span<Vec2> out) const;
    void divergences(const Vec2& xhat, std::span<double> out) const;
    void gradients(const Vec2& xhat, std::span<VecGrad> out) const;
    void hessians(const Vec2& xhat, std::span<VecHessian> out) const;

    /// Degrees of freedom of an arbitrary reference vector field.
    std::vector<double> apply_dofs(const std::function<Vec2(const Vec2&)>& v) const;

    /// Number of edge moments per edge (0 for P0 and P1cVec).
    int moments_per_edge() const noexcept { return moments_per_edge_; }

    static Vec2 edge_point(int edge, double s);
    static Vec2 edge_normal(int edge);
    static double edge_length(int edge);

private:
    explicit RefBasis(Family f);

    // Each monomial is a vector field with components in span{1,x,y,x^2,xy,y^2}.
    using Monomial = std::array<std::array<double, 6>, 2>;

    Family family_;
    int ndofs_ = 0;
    int moments_per_edge_ = 0;
    std::vector<Monomial> monomials_;
    Eigen::MatrixXd coeffs_;  // basis_i = sum_k coeffs_(k, i) * monomial_k
    std::vector<Monomial> basis_;
};

/// Affine map x = x0 + J xhat of one cell.
struct CellGeometry {
    Vec2 x0;
    Mat2 J;
    Mat2 Jinv;
    double detJ = 0.0;

    static CellGeometry of(const TriMesh& mesh, int cell);
    Vec2 map(const Vec2& xhat) const { return x0 + J * xhat; }
    Vec2 inverse_map(const Vec2& x) const { return Jinv * (x - x0); }
};

/// Contravariant Piola transform v = J vhat / det J, div v = divhat / det J.
/// Throws DegenerateCell if |det J| <= 1e-14 h_K^2.
void piola_map(const CellGeometry& geo, double h_k, std::span<const Vec2> ref_values,
               std::span<const double> ref_divs, std::span<Vec2> values, std::span<double> divs);

/// Physical gradient of a Piola-mapped field.
VecGrad piola_gradient(const CellGeometry& geo, const VecGrad& ref_grad);
/// Physical second derivatives of a Piola-mapped field.
VecHessian piola_hessian(const CellGeometry& geo, const VecHessian& ref_hess);

} // namespace biot
