#include "biot/assembly.hpp"

#include "biot/errors.hpp"
#include "biot/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>

namespace biot {

namespace {

// Row/column of a global dof in an assembled matrix, or -1 if eliminated.
int slot(const FESpace& s, int global, bool constrained) {
    return constrained ? s.free_index(global) : global;
}

int matrix_size(const FESpace& s, bool constrained) { return constrained ? s.num_free() : s.num_dofs(); }

Mat2 sym(const Mat2& g) { return 0.5 * (g + g.transpose()); }

double hessian_inner(const VecHessian& a, const VecHessian& b) {
    return (a[0].array() * b[0].array()).sum() + (a[1].array() * b[1].array()).sum();
}

// Symmetric volume form: term(ev, i, j) at each point of the degree-`degree`
// rule, weighted by |det J|. Only the upper triangle is integrated; the lower
// one is mirrored so every global pair receives bit-identical contributions.
template <class Term>
CsrMatrix cell_symmetric(const FESpace& s, bool constrained, int degree, bool hessians, double (*weight)(const TriMesh&, int),
                         Term&& term) {
    const TriMesh& mesh = s.mesh();
    const QuadRule& rule = triangle_rule(degree);
    const int nl = s.local_dofs();
    const int n = matrix_size(s, constrained);
    TripletBuilder tb(n, n);
    Eigen::MatrixXd local(nl, nl);
    BasisEval ev;
    for (int c = 0; c < mesh.num_cells(); ++c) {
        local.setZero();
        const double scale = std::abs(s.geometry(c).detJ) * (weight ? weight(mesh, c) : 1.0);
        for (std::size_t q = 0; q < rule.size(); ++q) {
            s.evaluate(c, rule.points[q], ev, hessians);
            const double w = rule.weights[q] * scale;
            for (int i = 0; i < nl; ++i)
                for (int j = i; j < nl; ++j) local(i, j) += w * term(ev, i, j);
        }
        const auto dofs = s.cell_dofs(c);
        for (int i = 0; i < nl; ++i) {
            const int r = slot(s, dofs[i].global, constrained);
            if (r < 0) continue;
            for (int j = 0; j < nl; ++j) {
                const int cc = slot(s, dofs[j].global, constrained);
                if (cc < 0) continue;
                tb.add(r, cc, i <= j ? local(i, j) : local(j, i));
            }
        }
    }
    return tb.build();
}

// Traces of one global basis function on an edge: tangential jump and the
// normal average of its strain.
struct FaceTrace {
    Vec2 jump_t = Vec2::Zero();
    Vec2 avg_eps = Vec2::Zero();
};

// Symmetric edge form over every edge of the mesh. Dofs shared by K1 and
// K2 are merged before the local matrix is formed so that the scatter is
// symmetric entry by entry.
template <class Term>
void face_symmetric(const FESpace& s, bool constrained, TripletBuilder& tb, Term&& term) {
    const TriMesh& mesh = s.mesh();
    const LineRule& line = gauss_line(kEdgePoints);
    const auto frames = jump_average_frames(mesh);
    const int nl = s.local_dofs();
    std::vector<int> uniq;
    std::vector<std::array<int, 8>> side_slot(2);
    std::vector<FaceTrace> tr;
    Eigen::MatrixXd local;
    BasisEval ev;
    for (int e = 0; e < mesh.num_edges(); ++e) {
        const Edge& ed = mesh.edges()[e];
        const EdgeFrame& fr = frames[e];
        const int nsides = fr.on_boundary() ? 1 : 2;
        const std::array<int, 2> cells{fr.k1, fr.k2};
        uniq.clear();
        for (int sd = 0; sd < nsides; ++sd) {
            const auto dofs = s.cell_dofs(cells[sd]);
            for (int i = 0; i < nl; ++i) {
                const auto it = std::find(uniq.begin(), uniq.end(), dofs[i].global);
                side_slot[sd][i] = static_cast<int>(it - uniq.begin());
                if (it == uniq.end()) uniq.push_back(dofs[i].global);
            }
        }
        const int nu = static_cast<int>(uniq.size());
        local.setZero(nu, nu);
        const Vec2& a = mesh.vertices()[ed.vertices[0]];
        const Vec2& b = mesh.vertices()[ed.vertices[1]];
        for (std::size_t q = 0; q < line.points.size(); ++q) {
            const Vec2 x = a + line.points[q] * (b - a);
            const double w = line.weights[q] * ed.length;
            std::vector<Vec2> val[2] = {std::vector<Vec2>(nu, Vec2::Zero()), std::vector<Vec2>(nu, Vec2::Zero())};
            std::vector<Mat2> eps[2] = {std::vector<Mat2>(nu, Mat2::Zero()), std::vector<Mat2>(nu, Mat2::Zero())};
            for (int sd = 0; sd < nsides; ++sd) {
                const int c = cells[sd];
                s.evaluate(c, s.geometry(c).inverse_map(x), ev);
                for (int i = 0; i < nl; ++i) {
                    val[sd][side_slot[sd][i]] += ev.values[i];
                    eps[sd][side_slot[sd][i]] += sym(ev.grads[i]);
                }
            }
            tr.assign(nu, FaceTrace{});
            for (int i = 0; i < nu; ++i) {
                tr[i].jump_t = fr.tangential(fr.jump(val[0][i], val[1][i]));
                tr[i].avg_eps = fr.average_normal(eps[0][i], eps[1][i]);
            }
            for (int i = 0; i < nu; ++i)
                for (int j = i; j < nu; ++j) local(i, j) += w * term(tr[i], tr[j], fr.h_e);
        }
        for (int i = 0; i < nu; ++i) {
            const int r = slot(s, uniq[i], constrained);
            if (r < 0) continue;
            for (int j = 0; j < nu; ++j) {
                const int cc = slot(s, uniq[j], constrained);
                if (cc < 0) continue;
                tb.add(r, cc, i <= j ? local(i, j) : local(j, i));
            }
        }
    }
}

double diameter_squared(const TriMesh& m, int c) { return m.diameter(c) * m.diameter(c); }

void require_vector(const FESpace& s, const char* what) {
    if (s.family() == Family::P0) throw IncompatibleSpaces(std::string(what) + ": needs a vector family");
}

} // namespace

void DGConfig::validate() const {
    if (!(std::isfinite(eta) && eta > 0)) throw RangeViolation("eta must be > 0");
}

Families Families::parse(std::string_view name) {
    const auto a = name.find('-');
    const auto b = a == std::string_view::npos ? a : name.find('-', a + 1);
    if (b == std::string_view::npos || name.find('-', b + 1) != std::string_view::npos)
        throw ConfigError("triple must look like u-v-p (e.g. bdm1-rt0-p0), got '" + std::string(name) + "'");
    Families f;
    f.u = family_from_string(name.substr(0, a));
    f.v = family_from_string(name.substr(a + 1, b - a - 1));
    f.p = family_from_string(name.substr(b + 1));
    if (f.u == Family::P0 || f.u == Family::RT0 || !is_hdiv(f.v) || f.p != Family::P0)
        throw ConfigError("unsupported triple '" + std::string(name) + "'");
    return f;
}

std::string Families::name() const {
    return std::string(to_string(u)) + "-" + std::string(to_string(v)) + "-" + std::string(to_string(p));
}

Discretization::Discretization(std::shared_ptr<const TriMesh> mesh, Families families)
    : mesh_(std::move(mesh)), families_(families) {
    u_ = std::make_unique<FESpace>(*mesh_, families_.u);
    v_ = std::make_unique<FESpace>(*mesh_, families_.v);
    p_ = std::make_unique<FESpace>(*mesh_, families_.p);
}

Discretization Discretization::structured(int n, Families families) {
    return Discretization(std::make_shared<const TriMesh>(structured_mesh(n)), families);
}

CsrMatrix assemble_eps_eps(const FESpace& s, bool constrained) {
    require_vector(s, "assemble_eps_eps");
    return cell_symmetric(s, constrained, kStiffnessDegree, false, nullptr, [](const BasisEval& ev, int i, int j) {
        return (sym(ev.grads[i]).array() * sym(ev.grads[j]).array()).sum();
    });
}

CsrMatrix assemble_grad_grad(const FESpace& s, bool constrained) {
    require_vector(s, "assemble_grad_grad");
    return cell_symmetric(s, constrained, kStiffnessDegree, false, nullptr, [](const BasisEval& ev, int i, int j) {
        return (ev.grads[i].array() * ev.grads[j].array()).sum();
    });
}

CsrMatrix assemble_div_div(const FESpace& s, bool constrained) {
    require_vector(s, "assemble_div_div");
    return cell_symmetric(s, constrained, kStiffnessDegree, false, nullptr,
                          [](const BasisEval& ev, int i, int j) { return ev.divs[i] * ev.divs[j]; });
}

CsrMatrix assemble_mass(const FESpace& s, bool constrained) {
    if (s.family() == Family::P0)
        return cell_symmetric(s, constrained, 1, false, nullptr, [](const BasisEval&, int, int) { return 1.0; });
    return cell_symmetric(s, constrained, kStiffnessDegree, false, nullptr,
                          [](const BasisEval& ev, int i, int j) { return ev.values[i].dot(ev.values[j]); });
}

CsrMatrix assemble_tangential_jump(const FESpace& s, bool constrained) {
    require_vector(s, "assemble_tangential_jump");
    const int n = matrix_size(s, constrained);
    TripletBuilder tb(n, n);
    face_symmetric(s, constrained, tb,
                   [](const FaceTrace& a, const FaceTrace& b, double h_e) { return a.jump_t.dot(b.jump_t) / h_e; });
    return tb.build();
}

CsrMatrix assemble_hessian_term(const FESpace& s, bool constrained) {
    require_vector(s, "assemble_hessian_term");
    const int n = matrix_size(s, constrained);
    if (s.family() != Family::RT1) return CsrMatrix(n, n);
    return cell_symmetric(s, constrained, kStiffnessDegree, true, diameter_squared,
                          [](const BasisEval& ev, int i, int j) { return hessian_inner(ev.hessians[i], ev.hessians[j]); });
}

CsrMatrix assemble_div_coupling(const FESpace& u, const FESpace& p, bool constrained) {
    require_vector(u, "assemble_div_coupling");
    if (p.family() != Family::P0) throw IncompatibleSpaces("assemble_div_coupling: pressure must be P0");
    const TriMesh& mesh = u.mesh();
    const QuadRule& rule = triangle_rule(kStiffnessDegree);
    const int nl = u.local_dofs();
    TripletBuilder tb(matrix_size(p, constrained), matrix_size(u, constrained));
    BasisEval ev;
    std::array<double, 8> local;
    for (int c = 0; c < mesh.num_cells(); ++c) {
        local.fill(0.0);
        const double scale = std::abs(u.geometry(c).detJ);
        for (std::size_t q = 0; q < rule.size(); ++q) {
            u.evaluate(c, rule.points[q], ev);
            for (int j = 0; j < nl; ++j) local[j] -= rule.weights[q] * scale * ev.divs[j];
        }
        const auto dofs = u.cell_dofs(c);
        for (int j = 0; j < nl; ++j) {
            const int col = slot(u, dofs[j].global, constrained);
            if (col >= 0) tb.add(c, col, local[j]);
        }
    }
    return tb.build();
}

CsrMatrix assemble_ah(const FESpace& s, const DGConfig& cfg, bool constrained) {
    require_vector(s, "assemble_ah");
    cfg.validate();
    const CsrMatrix vol = assemble_eps_eps(s, constrained);
    const int n = matrix_size(s, constrained);
    TripletBuilder tb(n, n);
    for (int r = 0; r < n; ++r)
        for (int k = vol.row_ptr()[r]; k < vol.row_ptr()[r + 1]; ++k) tb.add(r, vol.col()[k], vol.val()[k]);
    const double eta = cfg.eta;
    face_symmetric(s, constrained, tb, [eta](const FaceTrace& a, const FaceTrace& b, double h_e) {
        return -(b.avg_eps.dot(a.jump_t) + a.avg_eps.dot(b.jump_t)) + eta / h_e * a.jump_t.dot(b.jump_t);
    });
    return tb.build();
}

void check_compatibility(const Families& f) {
    if (f.p != Family::P0) throw IncompatibleSpaces("pressure space must be P0");
    if (!is_hdiv(f.v)) throw IncompatibleSpaces("flux space must be H(div)-conforming");
    if (f.u == Family::P0) throw IncompatibleSpaces("displacement space must be vector valued");
    if (!divergence_is_piecewise_constant(f.u))
        throw IncompatibleSpaces("div " + std::string(to_string(f.u)) + " is not contained in P0");
    if (!divergence_is_piecewise_constant(f.v))
        throw IncompatibleSpaces("div " + std::string(to_string(f.v)) + " is not contained in P0");
}

LoadVectors assemble_rhs(const Discretization& d, const VectorField* f, std::span<const double> g_cells) {
    const TriMesh& mesh = d.mesh();
    if (static_cast<int>(g_cells.size()) != mesh.num_cells())
        throw DimensionMismatch("assemble_rhs: g has wrong number of cells");
    LoadVectors out;
    out.u.assign(d.U().num_free(), 0.0);
    out.v.assign(d.V().num_free(), 0.0);
    out.p.resize(mesh.num_cells());
    for (int c = 0; c < mesh.num_cells(); ++c) out.p[c] = g_cells[c] * mesh.area(c);
    if (f != nullptr) {
        const FESpace& U = d.U();
        const QuadRule& rule = triangle_rule(kRhsDegree);
        BasisEval ev;
        for (int c = 0; c < mesh.num_cells(); ++c) {
            const CellGeometry& geo = U.geometry(c);
            const auto dofs = U.cell_dofs(c);
            for (std::size_t q = 0; q < rule.size(); ++q) {
                U.evaluate(c, rule.points[q], ev);
                const Vec2 fx = (*f)(geo.map(rule.points[q]));
                const double w = rule.weights[q] * std::abs(geo.detJ);
                for (int i = 0; i < ev.n; ++i) {
                    const int r = U.free_index(dofs[i].global);
                    if (r >= 0) out.u[r] += w * fx.dot(ev.values[i]);
                }
            }
        }
    }
    return out;
}

LoadVectors assemble_rhs(const Discretization& d, const VectorField* f, const ScalarField* g) {
    std::vector<double> cells(d.mesh().num_cells(), 0.0);
    if (g != nullptr) cells = project_Qh(*g, d.mesh());
    return assemble_rhs(d, f, cells);
}

BlockSystem assemble_block_system(const Discretization& d, const ReducedParams& params, const DGConfig& cfg,
                                  const VectorField* f, const ScalarField* g) {
    check_compatibility(d.families());
    const FESpace& U = d.U();
    const FESpace& V = d.V();
    const FESpace& P = d.P();
    BlockSystem sys;
    sys.families = d.families();
    sys.params = params;
    sys.A_uu = CsrMatrix::combine(1.0, assemble_ah(U, cfg), params.lambda(), assemble_div_div(U));
    sys.B_up = assemble_div_coupling(U, P);
    sys.A_vv = assemble_mass(V).scaled(params.rp_inv());
    sys.B_vp = assemble_div_coupling(V, P);
    sys.C_pp = assemble_mass(P).scaled(-params.alpha_p());
    LoadVectors rhs = assemble_rhs(d, f, g);
    sys.rhs_u = std::move(rhs.u);
    sys.rhs_v = std::move(rhs.v);
    sys.rhs_p = std::move(rhs.p);
    sys.cell_areas.resize(d.mesh().num_cells());
    for (int c = 0; c < d.mesh().num_cells(); ++c) sys.cell_areas[c] = d.mesh().area(c);
#ifndef NDEBUG
    if (U.num_free() <= 400 && coercivity_constant(U, cfg) <= 0.0)
        throw FactorizationFailure("a_h is not coercive for eta = " + std::to_string(cfg.eta));
#endif
    return sys;
}

NormBlocks assemble_norms(const Discretization& d, const ReducedParams& params, const DGConfig& cfg) {
    (void)cfg;
    const FESpace& U = d.U();
    NormBlocks nb;
    const CsrMatrix dg = CsrMatrix::combine(1.0, assemble_grad_grad(U), 1.0, assemble_tangential_jump(U));
    nb.N_U = CsrMatrix::combine(1.0, CsrMatrix::combine(1.0, dg, 1.0, assemble_hessian_term(U)), params.lambda(),
                                assemble_div_div(U));
    nb.N_V = CsrMatrix::combine(params.rp_inv(), assemble_mass(d.V()), 1.0 / params.gamma(), assemble_div_div(d.V()));
    nb.N_P = assemble_mass(d.P()).scaled(params.gamma());
    return nb;
}

CsrMatrix h_norm_gram(const FESpace& s, bool constrained) {
    return CsrMatrix::combine(1.0, assemble_eps_eps(s, constrained), 1.0, assemble_tangential_jump(s, constrained));
}

CsrMatrix one_h_norm_gram(const FESpace& s, bool constrained) {
    return CsrMatrix::combine(1.0, assemble_grad_grad(s, constrained), 1.0, assemble_tangential_jump(s, constrained));
}

CsrMatrix dg_norm_gram(const FESpace& s, bool constrained) {
    return CsrMatrix::combine(1.0, one_h_norm_gram(s, constrained), 1.0, assemble_hessian_term(s, constrained));
}

double coercivity_constant(const FESpace& s, const DGConfig& cfg) {
    const Eigen::MatrixXd A = assemble_ah(s, cfg).to_dense();
    const Eigen::MatrixXd G = h_norm_gram(s).to_dense();
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(A, G, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw EigFailure("coercivity_constant: eigensolver failed");
    return es.eigenvalues().minCoeff();
}

CsrMatrix BlockSystem::monolithic() const {
    const int nu = n_u(), nv = n_v(), np = n_p();
    TripletBuilder tb(size(), size());
    auto put = [&tb](const CsrMatrix& m, int r0, int c0) {
        for (int r = 0; r < m.rows(); ++r)
            for (int k = m.row_ptr()[r]; k < m.row_ptr()[r + 1]; ++k) tb.add(r0 + r, c0 + m.col()[k], m.val()[k]);
    };
    put(A_uu, 0, 0);
    put(B_up.transpose(), 0, nu + nv);
    put(A_vv, nu, nu);
    put(B_vp.transpose(), nu, nu + nv);
    put(B_up, nu + nv, 0);
    put(B_vp, nu + nv, nu);
    put(C_pp, nu + nv, nu + nv);
    (void)np;
    return tb.build();
}

std::vector<double> BlockSystem::rhs() const {
    std::vector<double> b;
    b.reserve(size());
    b.insert(b.end(), rhs_u.begin(), rhs_u.end());
    b.insert(b.end(), rhs_v.begin(), rhs_v.end());
    b.insert(b.end(), rhs_p.begin(), rhs_p.end());
    return b;
}

void BlockSystem::apply(std::span<const double> x, std::span<double> y) const {
    if (static_cast<int>(x.size()) != size() || static_cast<int>(y.size()) != size())
        throw DimensionMismatch("BlockSystem::apply: size mismatch");
    const int nu = n_u(), nv = n_v(), np = n_p();
    const auto xu = x.subspan(0, nu), xv = x.subspan(nu, nv), xp = x.subspan(nu + nv, np);
    const auto yu = y.subspan(0, nu), yv = y.subspan(nu, nv), yp = y.subspan(nu + nv, np);
    std::vector<double> t;
    // u rows: A_uu u + B_up^T p
    A_uu.multiply(xu, yu);
    for (int r = 0; r < np; ++r)
        for (int k = B_up.row_ptr()[r]; k < B_up.row_ptr()[r + 1]; ++k) yu[B_up.col()[k]] += B_up.val()[k] * xp[r];
    A_vv.multiply(xv, yv);
    for (int r = 0; r < np; ++r)
        for (int k = B_vp.row_ptr()[r]; k < B_vp.row_ptr()[r + 1]; ++k) yv[B_vp.col()[k]] += B_vp.val()[k] * xp[r];
    C_pp.multiply(xp, yp);
    t.resize(np);
    B_up.multiply(xu, t);
    for (int r = 0; r < np; ++r) yp[r] += t[r];
    B_vp.multiply(xv, t);
    for (int r = 0; r < np; ++r) yp[r] += t[r];
}

} // namespace biot
