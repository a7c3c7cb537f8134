#include "biot/space.hpp"

#include "biot/errors.hpp"
#include "biot/quadrature.hpp"

#include <Eigen/LU>

#include <cmath>
#include <stdexcept>

namespace biot {

namespace {

// Degree-8 rule replicated on 4^levels congruent sub-triangles. Used where
// a smooth (non-polynomial) integrand must be integrated to roundoff.
QuadRule refined_rule(int levels) {
    const QuadRule& base = triangle_rule(8);
    std::vector<std::array<Vec2, 3>> tris{{Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)}};
    for (int l = 0; l < levels; ++l) {
        std::vector<std::array<Vec2, 3>> next;
        for (const auto& t : tris) {
            const Vec2 m01 = 0.5 * (t[0] + t[1]);
            const Vec2 m12 = 0.5 * (t[1] + t[2]);
            const Vec2 m02 = 0.5 * (t[0] + t[2]);
            next.push_back({t[0], m01, m02});
            next.push_back({m01, t[1], m12});
            next.push_back({m02, m12, t[2]});
            next.push_back({m12, m02, m01});
        }
        tris = std::move(next);
    }
    QuadRule r;
    r.degree = 8;
    for (const auto& t : tris) {
        Mat2 J;
        J.col(0) = t[1] - t[0];
        J.col(1) = t[2] - t[0];
        const double det = std::abs(J.determinant());
        for (std::size_t q = 0; q < base.size(); ++q) {
            r.points.push_back(t[0] + J * base.points[q]);
            r.weights.push_back(base.weights[q] * det);
        }
    }
    return r;
}

const QuadRule& accurate_cell_rule() {
    static const QuadRule r = refined_rule(2);
    return r;
}

// 5-point Gauss on `pieces` equal subintervals of [0, 1].
const LineRule& accurate_line_rule() {
    static const LineRule r = [] {
        constexpr int pieces = 8;
        const LineRule& g = gauss_line(5);
        LineRule out;
        for (int p = 0; p < pieces; ++p)
            for (std::size_t q = 0; q < g.points.size(); ++q) {
                out.points.push_back((p + g.points[q]) / pieces);
                out.weights.push_back(g.weights[q] / pieces);
            }
        return out;
    }();
    return r;
}

} // namespace

FESpace::FESpace(const TriMesh& mesh, Family family)
    : mesh_(&mesh), family_(family), ref_(&RefBasis::get(family)) {
    const int nc = mesh.num_cells();
    const int ne = mesh.num_edges();
    const int nl = ref_->dofs();
    cell_dofs_.resize(static_cast<std::size_t>(nc) * nl);
    geometry_.reserve(nc);
    for (int c = 0; c < nc; ++c) geometry_.push_back(CellGeometry::of(mesh, c));

    std::vector<char> constrained;
    if (is_hdiv(family)) {
        const int m = ref_->moments_per_edge();
        ndofs_ = m * ne + (family == Family::RT1 ? 2 * nc : 0);
        constrained.assign(ndofs_, 0);
        for (int e = 0; e < ne; ++e)
            if (mesh.edges()[e].on_boundary())
                for (int k = 0; k < m; ++k) constrained[m * e + k] = 1;
        for (int c = 0; c < nc; ++c) {
            LocalDof* d = cell_dofs_.data() + static_cast<std::size_t>(c) * nl;
            const auto& ce = mesh.cell_edges(c);
            for (int i = 0; i < 3; ++i)
                for (int k = 0; k < m; ++k) {
                    const int sign = ce[i].normal_sign * (k == 1 ? ce[i].param_sign : 1);
                    d[m * i + k] = LocalDof{m * ce[i].edge + k, static_cast<double>(sign)};
                }
            if (family == Family::RT1) {
                d[6] = LocalDof{m * ne + 2 * c, 1.0};
                d[7] = LocalDof{m * ne + 2 * c + 1, 1.0};
            }
        }
    } else if (family == Family::P1cVec) {
        ndofs_ = 2 * mesh.num_vertices();
        constrained.assign(ndofs_, 0);
        for (const Edge& e : mesh.edges())
            if (e.on_boundary())
                for (int v : e.vertices) constrained[2 * v] = constrained[2 * v + 1] = 1;
        for (int c = 0; c < nc; ++c) {
            LocalDof* d = cell_dofs_.data() + static_cast<std::size_t>(c) * nl;
            for (int a = 0; a < 3; ++a)
                for (int comp = 0; comp < 2; ++comp) d[2 * a + comp] = LocalDof{2 * mesh.cells()[c][a] + comp, 1.0};
        }
    } else {
        ndofs_ = nc;
        constrained.assign(ndofs_, 0);
        for (int c = 0; c < nc; ++c) cell_dofs_[c] = LocalDof{c, 1.0};
    }

    free_index_.assign(ndofs_, -1);
    for (int i = 0; i < ndofs_; ++i)
        if (!constrained[i]) free_index_[i] = nfree_++;
}

void FESpace::evaluate(int c, const Vec2& xhat, BasisEval& out, bool with_hessians) const {
    const int n = ref_->dofs();
    out.n = n;
    if (family_ == Family::P0) {
        out.scalar = 1.0;
        return;
    }
    const CellGeometry& geo = geometry_[c];
    std::array<Vec2, 8> rv;
    std::array<double, 8> rd;
    std::array<VecGrad, 8> rg;
    ref_->values(xhat, {rv.data(), static_cast<std::size_t>(n)});
    ref_->divergences(xhat, {rd.data(), static_cast<std::size_t>(n)});
    ref_->gradients(xhat, {rg.data(), static_cast<std::size_t>(n)});
    const auto dofs = cell_dofs(c);
    if (is_hdiv(family_)) {
        piola_map(geo, mesh_->diameter(c), {rv.data(), static_cast<std::size_t>(n)},
                  {rd.data(), static_cast<std::size_t>(n)}, {out.values.data(), static_cast<std::size_t>(n)},
                  {out.divs.data(), static_cast<std::size_t>(n)});
        for (int i = 0; i < n; ++i) out.grads[i] = piola_gradient(geo, rg[i]);
        if (with_hessians) {
            std::array<VecHessian, 8> rh;
            ref_->hessians(xhat, {rh.data(), static_cast<std::size_t>(n)});
            for (int i = 0; i < n; ++i) out.hessians[i] = piola_hessian(geo, rh[i]);
        }
    } else {
        for (int i = 0; i < n; ++i) {
            out.values[i] = rv[i];
            out.grads[i] = rg[i] * geo.Jinv;
            out.divs[i] = out.grads[i].trace();
            if (with_hessians) out.hessians[i] = {Mat2::Zero(), Mat2::Zero()};
        }
    }
    for (int i = 0; i < n; ++i) {
        const double s = dofs[i].sign;
        if (s == 1.0) continue;
        out.values[i] *= s;
        out.divs[i] *= s;
        out.grads[i] *= s;
        if (with_hessians) {
            out.hessians[i][0] *= s;
            out.hessians[i][1] *= s;
        }
    }
}

std::vector<double> FESpace::expand(std::span<const double> free) const {
    if (static_cast<int>(free.size()) != nfree_) throw DimensionMismatch("FESpace::expand: wrong free vector size");
    std::vector<double> full(ndofs_, 0.0);
    for (int i = 0; i < ndofs_; ++i)
        if (free_index_[i] >= 0) full[i] = free[free_index_[i]];
    return full;
}

std::vector<double> FESpace::restrict_to_free(std::span<const double> full) const {
    if (static_cast<int>(full.size()) != ndofs_)
        throw DimensionMismatch("FESpace::restrict_to_free: wrong full vector size");
    std::vector<double> free(nfree_, 0.0);
    for (int i = 0; i < ndofs_; ++i)
        if (free_index_[i] >= 0) free[free_index_[i]] = full[i];
    return free;
}

Vec2 FESpace::value(std::span<const double> full, int c, const Vec2& xhat) const {
    BasisEval ev;
    evaluate(c, xhat, ev);
    Vec2 v = Vec2::Zero();
    const auto dofs = cell_dofs(c);
    for (int i = 0; i < ev.n; ++i) v += full[dofs[i].global] * ev.values[i];
    return v;
}

double FESpace::divergence(std::span<const double> full, int c, const Vec2& xhat) const {
    BasisEval ev;
    evaluate(c, xhat, ev);
    double d = 0.0;
    const auto dofs = cell_dofs(c);
    for (int i = 0; i < ev.n; ++i) d += full[dofs[i].global] * ev.divs[i];
    return d;
}

VecGrad FESpace::gradient(std::span<const double> full, int c, const Vec2& xhat) const {
    BasisEval ev;
    evaluate(c, xhat, ev);
    VecGrad g = VecGrad::Zero();
    const auto dofs = cell_dofs(c);
    for (int i = 0; i < ev.n; ++i) g += full[dofs[i].global] * ev.grads[i];
    return g;
}

std::vector<double> FESpace::cell_divergence(std::span<const double> full) const {
    if (static_cast<int>(full.size()) != ndofs_)
        throw DimensionMismatch("cell_divergence: wrong coefficient vector size");
    std::vector<double> out(mesh_->num_cells());
    const Vec2 centroid(1.0 / 3.0, 1.0 / 3.0);
    for (int c = 0; c < mesh_->num_cells(); ++c) out[c] = divergence(full, c, centroid);
    return out;
}

std::vector<double> interpolate_Pi_div(const VectorField& u, const FESpace& space) {
    const TriMesh& mesh = space.mesh();
    std::vector<double> coeffs(space.num_dofs(), 0.0);
    if (space.family() == Family::P1cVec) {
        for (int v = 0; v < mesh.num_vertices(); ++v) {
            const Vec2 val = u(mesh.vertices()[v]);
            coeffs[2 * v] = val.x();
            coeffs[2 * v + 1] = val.y();
        }
        return coeffs;
    }
    if (!is_hdiv(space.family())) throw std::invalid_argument("interpolate_Pi_div: not an H(div) family");

    const int m = space.ref().moments_per_edge();
    const LineRule& g = accurate_line_rule();
    for (int e = 0; e < mesh.num_edges(); ++e) {
        const Edge& ed = mesh.edges()[e];
        const Vec2& a = mesh.vertices()[ed.vertices[0]];
        const Vec2& b = mesh.vertices()[ed.vertices[1]];
        for (int k = 0; k < m; ++k) {
            double s = 0.0;
            for (std::size_t q = 0; q < g.points.size(); ++q) {
                const double t = g.points[q];
                const double leg = k == 0 ? 1.0 : 2.0 * t - 1.0;
                s += g.weights[q] * u(a + t * (b - a)).dot(ed.normal) * leg;
            }
            coeffs[m * e + k] = s * ed.length;
        }
    }
    if (space.family() == Family::RT1) {
        // Interior moments of the contravariant pullback det(J) J^{-1} u.
        const QuadRule& q = accurate_cell_rule();
        for (int c = 0; c < mesh.num_cells(); ++c) {
            const CellGeometry& geo = space.geometry(c);
            Vec2 s = Vec2::Zero();
            for (std::size_t k = 0; k < q.size(); ++k)
                s += q.weights[k] * (geo.detJ * (geo.Jinv * u(geo.map(q.points[k]))));
            const auto dofs = space.cell_dofs(c);
            coeffs[dofs[6].global] = s.x();
            coeffs[dofs[7].global] = s.y();
        }
    }
    return coeffs;
}

std::vector<double> project_Qh(const ScalarField& p, const TriMesh& mesh, bool mean_zero) {
    const QuadRule& q = accurate_cell_rule();
    std::vector<double> out(mesh.num_cells());
    for (int c = 0; c < mesh.num_cells(); ++c) {
        const CellGeometry geo = CellGeometry::of(mesh, c);
        double s = 0.0;
        for (std::size_t k = 0; k < q.size(); ++k) s += q.weights[k] * p(geo.map(q.points[k]));
        out[c] = s / 0.5;
    }
    if (mean_zero) remove_mean(out, mesh);
    return out;
}

double integral_p0(std::span<const double> cell_values, const TriMesh& mesh) {
    double s = 0.0;
    for (int c = 0; c < mesh.num_cells(); ++c) s += mesh.area(c) * cell_values[c];
    return s;
}

void remove_mean(std::span<double> cell_values, const TriMesh& mesh) {
    const double mean = integral_p0(cell_values, mesh) / mesh.total_area();
    for (double& v : cell_values) v -= mean;
}

bool divergence_is_piecewise_constant(Family f) {
    if (f == Family::P0) throw std::invalid_argument("divergence_is_piecewise_constant: scalar family");
    const RefBasis& ref = RefBasis::get(f);
    const std::array<Vec2, 3> pts{Vec2(0.2, 0.3), Vec2(0.6, 0.1), Vec2(0.1, 0.7)};
    Eigen::MatrixXd D(ref.dofs() + 1, 3);
    std::array<double, 8> d;
    for (int j = 0; j < 3; ++j) {
        ref.divergences(pts[j], {d.data(), static_cast<std::size_t>(ref.dofs())});
        for (int i = 0; i < ref.dofs(); ++i) D(i, j) = d[i];
        D(ref.dofs(), j) = 1.0;
    }
    Eigen::FullPivLU<Eigen::MatrixXd> basis_only(D.topRows(ref.dofs()));
    Eigen::FullPivLU<Eigen::MatrixXd> with_constants(D);
    basis_only.setThreshold(1e-10);
    with_constants.setThreshold(1e-10);
    return basis_only.rank() == 1 && with_constants.rank() == 1;
}

} // namespace biot
