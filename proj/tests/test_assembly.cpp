#include "biot/assembly.hpp"
#include "biot/errors.hpp"
#include "biot/quadrature.hpp"
#include "biot/space.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace biot;

namespace {

Mat2 sym(const Mat2& g) { return 0.5 * (g + g.transpose()); }

// a_h(u, w) evaluated from field values with test-side quadrature.
double oracle_ah(const FESpace& s, const std::vector<double>& u, const std::vector<double>& w, double eta) {
    const TriMesh& m = s.mesh();
    const auto& X = m.vertices();
    auto at = [&](int c, const Vec2& x) { return s.geometry(c).inverse_map(x); };
    double total = 0.0;
    for (int c = 0; c < m.num_cells(); ++c) {
        const auto& v = m.cells()[c];
        total += oracle::triangle_integral(
            [&](const Vec2& x) {
                return sym(s.gradient(u, c, at(c, x))).cwiseProduct(sym(s.gradient(w, c, at(c, x)))).sum();
            },
            X[v[0]], X[v[1]], X[v[2]], 6);
    }
    for (const Edge& e : m.edges()) {
        const Vec2 n = e.normal;
        auto tan = [&](const Vec2& a) -> Vec2 { return a - a.dot(n) * n; };
        auto jump_t = [&](const std::vector<double>& f, const Vec2& x) -> Vec2 {
            const Vec2 t1 = tan(s.value(f, e.cells[0], at(e.cells[0], x)));
            return e.on_boundary() ? t1 : Vec2(t1 - tan(s.value(f, e.cells[1], at(e.cells[1], x))));
        };
        auto avg_eps = [&](const std::vector<double>& f, const Vec2& x) -> Vec2 {
            const Mat2 e1 = sym(s.gradient(f, e.cells[0], at(e.cells[0], x)));
            if (e.on_boundary()) return e1 * n;
            return 0.5 * (e1 + sym(s.gradient(f, e.cells[1], at(e.cells[1], x)))) * n;
        };
        total += oracle::segment_integral(
            [&](const Vec2& x) {
                return -avg_eps(u, x).dot(jump_t(w, x)) - avg_eps(w, x).dot(jump_t(u, x)) +
                       eta / e.length * jump_t(u, x).dot(jump_t(w, x));
            },
            X[e.vertices[0]], X[e.vertices[1]]);
    }
    return total;
}

double bilinear(const CsrMatrix& A, const std::vector<double>& u, const std::vector<double>& w) {
    const std::vector<double> Aw = A * w;
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * Aw[i];
    return s;
}

double min_eig(const CsrMatrix& A) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A.to_dense());
    return es.eigenvalues().minCoeff();
}

double max_asym(const CsrMatrix& A) {
    const Eigen::MatrixXd D = A.to_dense();
    return (D - D.transpose()).cwiseAbs().maxCoeff();
}

} // namespace

TEST_CASE("degree-of-freedom counts") {
    const Discretization d = Discretization::structured(2);
    CHECK(d.U().num_dofs() == 32);
    CHECK(d.U().num_free() == 16);
    CHECK(d.V().num_dofs() == 16);
    CHECK(d.V().num_free() == 8);
    CHECK(d.P().num_dofs() == 8);
    const BlockSystem sys = assemble_block_system(d, ReducedParams::make(1, 1, 0), DGConfig{});
    CHECK(sys.n_u() == 16);
    CHECK(sys.n_v() == 8);
    CHECK(sys.n_p() == 8);
    CHECK(sys.size() == 32);
    CHECK(sys.B_up.rows() == 8);
    CHECK(sys.B_up.cols() == 16);
}

TEST_CASE("interior penalty form against the field-evaluation oracle") {
    for (const char* triple : {"bdm1-rt0-p0", "rt1-rt0-p0", "p1c-rt0-p0"}) {
        CAPTURE(triple);
        const Discretization d = Discretization::structured(2, Families::parse(triple));
        const FESpace& U = d.U();
        for (double eta : {10.0, 3.0}) {
            for (bool constrained : {true, false}) {
                const CsrMatrix A = assemble_ah(U, DGConfig{eta}, constrained);
                const int n = constrained ? U.num_free() : U.num_dofs();
                const std::vector<double> a = oracle::random_vector(n, 31), b = oracle::random_vector(n, 32);
                const std::vector<double> fa = constrained ? U.expand(a) : a, fb = constrained ? U.expand(b) : b;
                const double expect = oracle_ah(U, fa, fb, eta);
                CHECK(bilinear(A, a, b) == doctest::Approx(expect).epsilon(1e-12));
                CHECK(max_asym(A) == 0.0);
            }
        }
    }
}

TEST_CASE("element matrix on the reference triangle") {
    const auto mesh = std::make_shared<TriMesh>(std::vector<Vec2>{{0, 0}, {1, 0}, {0, 1}},
                                                std::vector<std::array<int, 3>>{{0, 1, 2}});
    const FESpace U(*mesh, Family::BDM1);
    const Eigen::MatrixXd A = assemble_ah(U, DGConfig{10.0}, false).to_dense();
    REQUIRE(A.rows() == 6);
    CHECK((A - A.transpose()).cwiseAbs().maxCoeff() == 0.0);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) {
            std::vector<double> ei(6, 0.0), ej(6, 0.0);
            ei[i] = ej[j] = 1.0;
            CHECK(A(i, j) == doctest::Approx(oracle_ah(U, ei, ej, 10.0)).epsilon(1e-12).scale(1.0));
        }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    CHECK(lu.rank() >= 3);
}

TEST_CASE("rigid translation only sees the boundary penalty") {
    const Discretization d = Discretization::structured(2);
    const FESpace& U = d.U();
    const std::vector<double> c = interpolate_Pi_div([](const Vec2&) { return Vec2(1.0, 0.0); }, U);
    const CsrMatrix A = assemble_ah(U, DGConfig{10.0}, false);
    // Tangential trace is 1 on the 4 horizontal boundary edges; int ds / h_e = 1 each.
    CHECK(bilinear(A, c, c) == doctest::Approx(40.0).epsilon(1e-13));
    CHECK(bilinear(assemble_eps_eps(U, false), c, c) == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("continuous fields have no jump contributions") {
    const Discretization d = Discretization::structured(3, Families::parse("p1c-rt0-p0"));
    const FESpace& U = d.U();
    const std::vector<double> u = oracle::random_vector(U.num_free(), 41);
    const double ah = bilinear(assemble_ah(U, DGConfig{}), u, u);
    CHECK(ah == doctest::Approx(bilinear(assemble_eps_eps(U), u, u)).epsilon(1e-13));
    CHECK(bilinear(assemble_tangential_jump(U), u, u) == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("monolithic operator is exactly symmetric") {
    for (const char* triple : {"bdm1-rt0-p0", "p1c-rt0-p0"})
        for (int n : {1, 2, 4})
            for (double lambda : {1.0, 1e8})
                for (double rp_inv : {1e-8, 1.0, 1e8})
                    for (double alpha_p : {0.0, 1.0}) {
                        const Discretization d = Discretization::structured(n, Families::parse(triple));
                        const BlockSystem sys =
                            assemble_block_system(d, ReducedParams::make(lambda, rp_inv, alpha_p), DGConfig{});
                        CHECK(max_asym(sys.monolithic()) == 0.0);
                    }
}

TEST_CASE("system application matches the monolithic matrix") {
    const Discretization d = Discretization::structured(3);
    const BlockSystem sys = assemble_block_system(d, ReducedParams::make(7, 0.3, 0.5), DGConfig{});
    const std::vector<double> x = oracle::random_vector(sys.size(), 5);
    std::vector<double> y(sys.size());
    sys.apply(x, y);
    const std::vector<double> z = sys.monolithic() * x;
    for (int i = 0; i < sys.size(); ++i) CHECK(y[i] == doctest::Approx(z[i]).epsilon(1e-14).scale(1.0));
}

TEST_CASE("coupling blocks annihilate constants") {
    const Discretization d = Discretization::structured(4);
    const BlockSystem sys = assemble_block_system(d, ReducedParams::make(1, 1, 0), DGConfig{});
    const std::vector<double> ones(sys.n_p(), 1.0);
    for (const CsrMatrix* B : {&sys.B_up, &sys.B_vp}) {
        const std::vector<double> s = B->transpose() * ones;
        for (double v : s) CHECK(std::abs(v) < 1e-15);
    }
}

TEST_CASE("discrete divergence lies in the pressure space") {
    for (const char* triple : {"bdm1-rt0-p0", "p1c-rt0-p0"}) {
        const Discretization d = Discretization::structured(3, Families::parse(triple));
        for (const FESpace* s : {&d.U(), &d.V()}) {
            const std::vector<double> u = s->expand(oracle::random_vector(s->num_free(), 17));
            const std::vector<double> cell = s->cell_divergence(u);
            for (int c = 0; c < d.mesh().num_cells(); ++c)
                for (const Vec2& xh : {Vec2(0.1, 0.1), Vec2(0.7, 0.2), Vec2(0.2, 0.5)})
                    CHECK(std::abs(s->divergence(u, c, xh) - cell[c]) <= 1e-13 * (1.0 + std::abs(cell[c])));
        }
    }
}

TEST_CASE("norm blocks") {
    const Discretization d = Discretization::structured(2);
    SUBCASE("pressure block is gamma times the area diagonal") {
        const ReducedParams p = ReducedParams::make(2, 0.5, 0);  // rho = 0.5, gamma = 2
        const NormBlocks nb = assemble_norms(d, p, DGConfig{});
        for (int c = 0; c < d.mesh().num_cells(); ++c) {
            CHECK(nb.N_P.coeff(c, c) == doctest::Approx(2.0 * d.mesh().area(c)).epsilon(1e-15));
            for (int k = 0; k < d.mesh().num_cells(); ++k)
                if (k != c) CHECK(nb.N_P.coeff(c, k) == 0.0);
        }
    }
    SUBCASE("flux block for unit coefficients") {
        const NormBlocks nb = assemble_norms(d, ReducedParams::make(1, 1, 0), DGConfig{});
        const CsrMatrix expect = CsrMatrix::combine(1.0, assemble_mass(d.V()), 1.0, assemble_div_div(d.V()));
        CHECK((nb.N_V.to_dense() - expect.to_dense()).cwiseAbs().maxCoeff() < 1e-15);
        CHECK(min_eig(nb.N_V) > 0.0);
    }
    SUBCASE("displacement block") {
        const NormBlocks nb = assemble_norms(d, ReducedParams::make(1, 1, 0), DGConfig{});
        CHECK(min_eig(nb.N_U) > 0.0);
        const CsrMatrix expect = CsrMatrix::combine(1.0, dg_norm_gram(d.U()), 1.0, assemble_div_div(d.U()));
        CHECK((nb.N_U.to_dense() - expect.to_dense()).cwiseAbs().maxCoeff() < 1e-14);
    }
    SUBCASE("all blocks are SPD across parameters") {
        for (double lambda : {1.0, 1e4, 1e8})
            for (double rp_inv : {1e-8, 1.0, 1e8})
                for (double alpha_p : {0.0, 1.0}) {
                    const NormBlocks nb = assemble_norms(d, ReducedParams::make(lambda, rp_inv, alpha_p), DGConfig{});
                    CHECK(min_eig(nb.N_U) > 0.0);
                    CHECK(min_eig(nb.N_V) > 0.0);
                    CHECK(min_eig(nb.N_P) > 0.0);
                }
    }
}

TEST_CASE("mesh-dependent norm Grams") {
    const Discretization d = Discretization::structured(2, Families::parse("rt1-rt0-p0"));
    const FESpace& U = d.U();
    const Eigen::MatrixXd J = assemble_tangential_jump(U).to_dense();
    CHECK((h_norm_gram(U).to_dense() - (assemble_eps_eps(U).to_dense() + J)).cwiseAbs().maxCoeff() < 1e-13);
    CHECK((one_h_norm_gram(U).to_dense() - (assemble_grad_grad(U).to_dense() + J)).cwiseAbs().maxCoeff() < 1e-13);
    const Eigen::MatrixXd H = assemble_hessian_term(U).to_dense();
    CHECK(H.cwiseAbs().maxCoeff() > 0.0);
    CHECK((dg_norm_gram(U).to_dense() - (one_h_norm_gram(U).to_dense() + H)).cwiseAbs().maxCoeff() < 1e-13);

    const Discretization b = Discretization::structured(2);
    CHECK(assemble_hessian_term(b.U()).nnz() == 0);
    CHECK((dg_norm_gram(b.U()).to_dense() - one_h_norm_gram(b.U()).to_dense()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("penalty form is coercive and bounded uniformly in the mesh") {
    std::vector<double> lo, hi;
    for (int n : {2, 4, 8}) {
        const Discretization d = Discretization::structured(n);
        lo.push_back(coercivity_constant(d.U(), DGConfig{}));
        hi.push_back(oracle::max_generalized_eig(assemble_ah(d.U(), DGConfig{}).to_dense(),
                                                 dg_norm_gram(d.U()).to_dense()));
        CHECK(lo.back() > 0.0);
    }
    CHECK(*std::max_element(lo.begin(), lo.end()) / *std::min_element(lo.begin(), lo.end()) < 1.2);
    CHECK(*std::max_element(hi.begin(), hi.end()) / *std::min_element(hi.begin(), hi.end()) < 1.2);
    // Golden values from the first verified run.
    CHECK(lo[0] == doctest::Approx(0.954).epsilon(2e-3));
    CHECK(lo[1] == doctest::Approx(0.925).epsilon(2e-3));
    CHECK(lo[2] == doctest::Approx(0.899).epsilon(2e-3));
}

TEST_CASE("load vectors") {
    const Discretization d = Discretization::structured(2);
    SUBCASE("zero data") {
        const LoadVectors l = assemble_rhs(d, nullptr, static_cast<const ScalarField*>(nullptr));
        for (const auto* v : {&l.u, &l.v, &l.p})
            for (double x : *v) CHECK(x == 0.0);
        CHECK(l.v.size() == static_cast<std::size_t>(d.V().num_free()));
    }
    SUBCASE("unit source gives cell areas") {
        const ScalarField one = [](const Vec2&) { return 1.0; };
        const LoadVectors l = assemble_rhs(d, nullptr, &one);
        for (int c = 0; c < d.mesh().num_cells(); ++c) CHECK(l.p[c] == doctest::Approx(d.mesh().area(c)));
    }
    SUBCASE("constant body force against basis integrals") {
        const VectorField f = [](const Vec2&) { return Vec2(1.0, 0.0); };
        const LoadVectors l = assemble_rhs(d, &f, static_cast<const ScalarField*>(nullptr));
        const FESpace& U = d.U();
        const auto& X = d.mesh().vertices();
        for (int i = 0; i < U.num_free(); ++i) {
            std::vector<double> e(U.num_free(), 0.0);
            e[i] = 1.0;
            const std::vector<double> full = U.expand(e);
            double s = 0.0;
            for (int c = 0; c < d.mesh().num_cells(); ++c) {
                const auto& v = d.mesh().cells()[c];
                s += oracle::triangle_integral(
                    [&](const Vec2& x) { return U.value(full, c, U.geometry(c).inverse_map(x)).x(); }, X[v[0]],
                    X[v[1]], X[v[2]], 4);
            }
            CHECK(l.u[i] == doctest::Approx(s).epsilon(1e-13).scale(1.0));
        }
    }
    SUBCASE("smooth source against cell quadrature") {
        const ScalarField g = [](const Vec2& x) { return std::exp(x.x()) * std::sin(3.0 * x.y()); };
        const LoadVectors l = assemble_rhs(d, nullptr, &g);
        const auto& X = d.mesh().vertices();
        for (int c = 0; c < d.mesh().num_cells(); ++c) {
            const auto& v = d.mesh().cells()[c];
            CHECK(l.p[c] == doctest::Approx(oracle::triangle_integral(g, X[v[0]], X[v[1]], X[v[2]], 12)).epsilon(1e-13));
        }
    }
    SUBCASE("cell-valued source") {
        const std::vector<double> g = oracle::random_vector(d.mesh().num_cells(), 3);
        const LoadVectors l = assemble_rhs(d, nullptr, g);
        for (int c = 0; c < d.mesh().num_cells(); ++c) CHECK(l.p[c] == doctest::Approx(g[c] * d.mesh().area(c)));
        const std::vector<double> bad(3, 0.0);
        CHECK_THROWS_AS(assemble_rhs(d, nullptr, bad), DimensionMismatch);
    }
}

TEST_CASE("homogeneous data give a zero right-hand side") {
    const Discretization d = Discretization::structured(2);
    const BlockSystem sys = assemble_block_system(d, ReducedParams::make(1, 1, 0), DGConfig{});
    for (double v : sys.rhs()) CHECK(v == 0.0);
}

TEST_CASE("assembly is deterministic") {
    const Discretization d = Discretization::structured(4);
    const BlockSystem a = assemble_block_system(d, ReducedParams::make(3, 2, 1), DGConfig{});
    const BlockSystem b = assemble_block_system(d, ReducedParams::make(3, 2, 1), DGConfig{});
    CHECK(a.monolithic().val() == b.monolithic().val());
    CHECK(a.monolithic().col() == b.monolithic().col());
}

TEST_CASE("configuration errors") {
    CHECK_THROWS_AS(check_compatibility(Families::parse("rt1-rt0-p0")), IncompatibleSpaces);
    CHECK_NOTHROW(check_compatibility(Families::parse("bdm1-rt0-p0")));
    CHECK_NOTHROW(check_compatibility(Families::parse("p1c-rt0-p0")));
    CHECK_THROWS_AS(assemble_block_system(Discretization::structured(2, Families::parse("rt1-rt0-p0")),
                                          ReducedParams::make(1, 1, 0), DGConfig{}),
                    IncompatibleSpaces);
    CHECK_THROWS_AS(Families::parse("bdm1-rt0"), ConfigError);
    CHECK_THROWS_AS(Families::parse("p0-rt0-p0"), ConfigError);
    CHECK_THROWS_AS(Families::parse("bdm1-p1c-p0"), ConfigError);
    CHECK(Families::parse("bdm1-rt0-p0").name() == "bdm1-rt0-p0");
    CHECK_THROWS_AS(DGConfig{0.0}.validate(), RangeViolation);
    CHECK_THROWS_AS(DGConfig{-1.0}.validate(), RangeViolation);
}
