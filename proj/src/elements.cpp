#include "biot/elements.hpp"

#include "biot/errors.hpp"
#include "biot/quadrature.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace biot {

std::string_view to_string(Family f) {
    switch (f) {
    case Family::BDM1: return "bdm1";
    case Family::RT0: return "rt0";
    case Family::RT1: return "rt1";
    case Family::P0: return "p0";
    case Family::P1cVec: return "p1c";
    }
    return "?";
}

Family family_from_string(std::string_view name) {
    if (name == "bdm1") return Family::BDM1;
    if (name == "rt0") return Family::RT0;
    if (name == "rt1") return Family::RT1;
    if (name == "p0") return Family::P0;
    if (name == "p1c" || name == "p1cvec") return Family::P1cVec;
    throw ConfigError("unknown element family '" + std::string(name) + "'");
}

bool is_hdiv(Family f) noexcept { return f == Family::BDM1 || f == Family::RT0 || f == Family::RT1; }

int dofs_per_cell(Family f) noexcept {
    switch (f) {
    case Family::BDM1: return 6;
    case Family::RT0: return 3;
    case Family::RT1: return 8;
    case Family::P0: return 1;
    case Family::P1cVec: return 6;
    }
    return 0;
}

namespace {

std::array<double, 6> poly_terms(const Vec2& p) {
    const double x = p.x(), y = p.y();
    return {1.0, x, y, x * x, x * y, y * y};
}
std::array<double, 6> poly_dx(const Vec2& p) { return {0.0, 1.0, 0.0, 2.0 * p.x(), p.y(), 0.0}; }
std::array<double, 6> poly_dy(const Vec2& p) { return {0.0, 0.0, 1.0, 0.0, p.x(), 2.0 * p.y()}; }

double dot6(const std::array<double, 6>& a, const std::array<double, 6>& b) {
    double s = 0.0;
    for (int k = 0; k < 6; ++k) s += a[k] * b[k];
    return s;
}

const Vec2 kRefVertices[3] = {Vec2(0.0, 0.0), Vec2(1.0, 0.0), Vec2(0.0, 1.0)};

} // namespace

Vec2 RefBasis::edge_point(int edge, double s) {
    const auto [a, b] = TriMesh::kLocalEdgeVertices[edge];
    return kRefVertices[a] + s * (kRefVertices[b] - kRefVertices[a]);
}

Vec2 RefBasis::edge_normal(int edge) {
    switch (edge) {
    case 0: return Vec2(1.0, 1.0) / std::sqrt(2.0);
    case 1: return Vec2(-1.0, 0.0);
    default: return Vec2(0.0, -1.0);
    }
}

double RefBasis::edge_length(int edge) { return edge == 0 ? std::sqrt(2.0) : 1.0; }

const RefBasis& RefBasis::get(Family f) {
    static const RefBasis bdm1(Family::BDM1);
    static const RefBasis rt0(Family::RT0);
    static const RefBasis rt1(Family::RT1);
    static const RefBasis p0(Family::P0);
    static const RefBasis p1c(Family::P1cVec);
    switch (f) {
    case Family::BDM1: return bdm1;
    case Family::RT0: return rt0;
    case Family::RT1: return rt1;
    case Family::P0: return p0;
    case Family::P1cVec: return p1c;
    }
    throw std::logic_error("RefBasis::get: bad family");
}

RefBasis::RefBasis(Family f) : family_(f), ndofs_(dofs_per_cell(f)) {
    auto mono = [](int comp, int term) {
        Monomial m{};
        m[comp][term] = 1.0;
        return m;
    };
    const std::array<Monomial, 6> p1{mono(0, 0), mono(0, 1), mono(0, 2), mono(1, 0), mono(1, 1), mono(1, 2)};
    switch (f) {
    case Family::BDM1:
    case Family::P1cVec: monomials_.assign(p1.begin(), p1.end()); break;
    case Family::RT0: {
        Monomial xvec{};
        xvec[0][1] = 1.0;
        xvec[1][2] = 1.0;
        monomials_ = {mono(0, 0), mono(1, 0), xvec};
        break;
    }
    case Family::RT1: {
        monomials_.assign(p1.begin(), p1.end());
        Monomial a{}, b{};
        a[0][3] = 1.0;  // (x^2, xy)
        a[1][4] = 1.0;
        b[0][4] = 1.0;  // (xy, y^2)
        b[1][5] = 1.0;
        monomials_.push_back(a);
        monomials_.push_back(b);
        break;
    }
    case Family::P0: monomials_ = {mono(0, 0)}; break;
    }
    if (f == Family::BDM1 || f == Family::RT1) moments_per_edge_ = 2;
    if (f == Family::RT0) moments_per_edge_ = 1;

    const int n = ndofs_;
    Eigen::MatrixXd vandermonde(n, n);
    basis_ = monomials_;
    coeffs_ = Eigen::MatrixXd::Identity(n, n);
    for (int k = 0; k < n; ++k) {
        const Monomial m = monomials_[k];
        auto field = [&m](const Vec2& p) {
            const auto t = poly_terms(p);
            return Vec2(dot6(m[0], t), dot6(m[1], t));
        };
        if (f == Family::P0) {
            vandermonde(0, k) = 1.0;
            continue;
        }
        const std::vector<double> d = apply_dofs(field);
        for (int i = 0; i < n; ++i) vandermonde(i, k) = d[i];
    }
    coeffs_ = vandermonde.inverse();
    for (int i = 0; i < n; ++i) {
        Monomial b{};
        for (int k = 0; k < n; ++k)
            for (int c = 0; c < 2; ++c)
                for (int t = 0; t < 6; ++t) b[c][t] += coeffs_(k, i) * monomials_[k][c][t];
        basis_[i] = b;
    }
}

std::vector<double> RefBasis::apply_dofs(const std::function<Vec2(const Vec2&)>& v) const {
    std::vector<double> out;
    out.reserve(ndofs_);
    if (family_ == Family::P0) {
        // Cell mean over the reference triangle.
        const QuadRule& q = triangle_rule(kRhsDegree);
        double s = 0.0;
        for (std::size_t k = 0; k < q.size(); ++k) s += q.weights[k] * v(q.points[k]).x();
        out.push_back(s / 0.5);
        return out;
    }
    if (family_ == Family::P1cVec) {
        for (const Vec2& vert : kRefVertices) {
            const Vec2 val = v(vert);
            out.push_back(val.x());
            out.push_back(val.y());
        }
        return out;
    }
    const LineRule& g = gauss_line(kEdgePoints);
    for (int e = 0; e < 3; ++e) {
        const Vec2 n = edge_normal(e);
        const double len = edge_length(e);
        for (int k = 0; k < moments_per_edge_; ++k) {
            double s = 0.0;
            for (std::size_t q = 0; q < g.points.size(); ++q) {
                const double t = g.points[q];
                const double leg = k == 0 ? 1.0 : 2.0 * t - 1.0;
                s += g.weights[q] * v(edge_point(e, t)).dot(n) * leg;
            }
            out.push_back(s * len);
        }
    }
    if (family_ == Family::RT1) {
        const QuadRule& q = triangle_rule(kStiffnessDegree);
        Vec2 s = Vec2::Zero();
        for (std::size_t k = 0; k < q.size(); ++k) s += q.weights[k] * v(q.points[k]);
        out.push_back(s.x());
        out.push_back(s.y());
    }
    return out;
}

void RefBasis::values(const Vec2& xhat, std::span<Vec2> out) const {
    const auto t = poly_terms(xhat);
    for (int i = 0; i < ndofs_; ++i) out[i] = Vec2(dot6(basis_[i][0], t), dot6(basis_[i][1], t));
}

void RefBasis::divergences(const Vec2& xhat, std::span<double> out) const {
    const auto dx = poly_dx(xhat);
    const auto dy = poly_dy(xhat);
    for (int i = 0; i < ndofs_; ++i) out[i] = dot6(basis_[i][0], dx) + dot6(basis_[i][1], dy);
}

void RefBasis::gradients(const Vec2& xhat, std::span<VecGrad> out) const {
    const auto dx = poly_dx(xhat);
    const auto dy = poly_dy(xhat);
    for (int i = 0; i < ndofs_; ++i) {
        VecGrad g;
        g << dot6(basis_[i][0], dx), dot6(basis_[i][0], dy), dot6(basis_[i][1], dx), dot6(basis_[i][1], dy);
        out[i] = g;
    }
}

void RefBasis::hessians(const Vec2& /*xhat*/, std::span<VecHessian> out) const {
    for (int i = 0; i < ndofs_; ++i) {
        for (int c = 0; c < 2; ++c) {
            const auto& m = basis_[i][c];
            Mat2 h;
            h << 2.0 * m[3], m[4], m[4], 2.0 * m[5];
            out[i][c] = h;
        }
    }
}

CellGeometry CellGeometry::of(const TriMesh& mesh, int cell) {
    const auto& v = mesh.cells()[cell];
    const auto& X = mesh.vertices();
    CellGeometry g;
    g.x0 = X[v[0]];
    g.J.col(0) = X[v[1]] - X[v[0]];
    g.J.col(1) = X[v[2]] - X[v[0]];
    g.detJ = g.J.determinant();
    g.Jinv = g.J.inverse();
    return g;
}

void piola_map(const CellGeometry& geo, double h_k, std::span<const Vec2> ref_values,
               std::span<const double> ref_divs, std::span<Vec2> values, std::span<double> divs) {
    if (std::abs(geo.detJ) <= 1e-14 * h_k * h_k)
        throw DegenerateCell("piola_map: |det J| = " + std::to_string(std::abs(geo.detJ)));
    const double inv = 1.0 / geo.detJ;
    for (std::size_t i = 0; i < ref_values.size(); ++i) values[i] = inv * (geo.J * ref_values[i]);
    for (std::size_t i = 0; i < ref_divs.size(); ++i) divs[i] = inv * ref_divs[i];
}

VecGrad piola_gradient(const CellGeometry& geo, const VecGrad& ref_grad) {
    return (geo.J * ref_grad * geo.Jinv) / geo.detJ;
}

VecHessian piola_hessian(const CellGeometry& geo, const VecHessian& ref_hess) {
    // Pull each reference component Hessian to physical coordinates, then
    // mix components with J / det J.
    const Mat2 h0 = geo.Jinv.transpose() * ref_hess[0] * geo.Jinv;
    const Mat2 h1 = geo.Jinv.transpose() * ref_hess[1] * geo.Jinv;
    VecHessian out;
    out[0] = (geo.J(0, 0) * h0 + geo.J(0, 1) * h1) / geo.detJ;
    out[1] = (geo.J(1, 0) * h0 + geo.J(1, 1) * h1) / geo.detJ;
    return out;
}

} // namespace biot
