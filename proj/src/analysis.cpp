#include "biot/analysis.hpp"

#include "biot/errors.hpp"
#include "biot/quadrature.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <thread>

namespace biot {

std::string_view to_string(NormKind k) { return k == NormKind::Paper ? "paper" : "natural"; }

NormKind norm_kind_from_string(std::string_view s) {
    if (s == "paper") return NormKind::Paper;
    if (s == "natural") return NormKind::Natural;
    throw ConfigError("norms must be 'paper' or 'natural', got '" + std::string(s) + "'");
}

NormBlocks natural_norm_blocks(const Discretization& d, const ReducedParams& params) {
    NormBlocks nb;
    nb.N_U = CsrMatrix::combine(1.0, h_norm_gram(d.U()), params.lambda(), assemble_div_div(d.U()));
    nb.N_V = CsrMatrix::combine(params.rp_inv(), assemble_mass(d.V()), params.rp_inv(), assemble_div_div(d.V()));
    nb.N_P = assemble_mass(d.P());
    return nb;
}

NormBlocks norm_blocks(const Discretization& d, const ReducedParams& params, const DGConfig& cfg, NormKind kind) {
    return kind == NormKind::Paper ? assemble_norms(d, params, cfg) : natural_norm_blocks(d, params);
}

InfSupResult infsup_constant(const Eigen::MatrixXd& A, const Eigen::MatrixXd& N, bool keep_spectrum) {
    PencilSpectrum s = pencil_spectrum(A, N);
    InfSupResult r;
    r.beta0 = s.min_abs;
    if (keep_spectrum) r.theta_spectrum = std::move(s.theta);
    return r;
}

InfSupResult infsup_constant(const BlockSystem& sys, const NormBlocks& norms, bool keep_spectrum) {
    const int off = sys.n_u() + sys.n_v();
    const Eigen::MatrixXd A = restrict_mean_zero(sys.monolithic().to_dense(), off, sys.cell_areas);
    const Eigen::MatrixXd N = restrict_mean_zero(block_diagonal(norms.N_U, norms.N_V, norms.N_P), off, sys.cell_areas);
    InfSupResult r = infsup_constant(A, N, keep_spectrum);
    r.params = sys.params;
    r.triple = sys.families.name();
    return r;
}

namespace {

InfSupResult infsup_on(const Discretization& d, int n, const ReducedParams& params, const DGConfig& cfg,
                       NormKind norms) {
    const BlockSystem sys = assemble_block_system(d, params, cfg);
    InfSupResult r = infsup_constant(sys, norm_blocks(d, params, cfg, norms));
    r.mesh_n = n;
    r.norms = norms;
    return r;
}

} // namespace

InfSupResult infsup_at(int n, const Families& fam, const ReducedParams& params, const DGConfig& cfg, NormKind norms) {
    const Discretization d = Discretization::structured(n, fam);
    return infsup_on(d, n, params, cfg, norms);
}

ManufacturedCase manufactured_case(const ReducedParams& params) {
    using std::cos;
    using std::sin;
    constexpr double pi = std::numbers::pi;
    const double lam = params.lambda();
    const double rp = params.rp();
    const double ap = params.alpha_p();

    struct D {
        double S, C, Sx, Sy, Sxx, Sxy, Syy;
    };
    auto terms = [](const Vec2& x) {
        const double sx = sin(pi * x.x()), cx = cos(pi * x.x()), sy = sin(pi * x.y()), cy = cos(pi * x.y());
        const double S = sx * sy, C = cx * cy;
        return D{S, C, pi * cx * sy, pi * sx * cy, -pi * pi * S, pi * pi * C, -pi * pi * S};
    };

    ManufacturedCase mc;
    mc.params = params;
    mc.u = [terms](const Vec2& x) {
        const D t = terms(x);
        return Vec2(t.S, t.S);
    };
    mc.p = [terms](const Vec2& x) { return terms(x).C; };
    mc.v = [rp](const Vec2& x) {
        // v = -R_p grad p
        return Vec2(rp * pi * sin(pi * x.x()) * cos(pi * x.y()), rp * pi * cos(pi * x.x()) * sin(pi * x.y()));
    };
    mc.grad_u = [terms](const Vec2& x) {
        const D t = terms(x);
        VecGrad g;
        g << t.Sx, t.Sy, t.Sx, t.Sy;
        return g;
    };
    mc.hess_u = [terms](const Vec2& x) {
        const D t = terms(x);
        Mat2 h;
        h << t.Sxx, t.Sxy, t.Sxy, t.Syy;
        return VecHessian{h, h};
    };
    mc.div_u = [terms](const Vec2& x) {
        const D t = terms(x);
        return t.Sx + t.Sy;
    };
    mc.div_v = [terms, rp](const Vec2& x) { return 2.0 * pi * pi * rp * terms(x).C; };
    mc.f = [terms, lam](const Vec2& x) {
        const D t = terms(x);
        const Vec2 div_eps(t.Sxx + 0.5 * (t.Syy + t.Sxy), 0.5 * (t.Sxy + t.Sxx) + t.Syy);
        const Vec2 grad_div(t.Sxx + t.Sxy, t.Sxy + t.Syy);
        const Vec2 grad_p(-pi * sin(pi * x.x()) * cos(pi * x.y()), -pi * cos(pi * x.x()) * sin(pi * x.y()));
        return Vec2(-div_eps - lam * grad_div + grad_p);
    };
    mc.g = [terms, rp, ap](const Vec2& x) {
        const D t = terms(x);
        return -(t.Sx + t.Sy) - 2.0 * pi * pi * rp * t.C - ap * t.C;
    };
    return mc;
}

FieldTriple split_solution(const Discretization& d, std::span<const double> x) {
    const int nu = d.U().num_free(), nv = d.V().num_free(), np = d.P().num_free();
    if (static_cast<int>(x.size()) != nu + nv + np) throw DimensionMismatch("split_solution: wrong vector size");
    FieldTriple t;
    t.u = d.U().expand(x.subspan(0, nu));
    t.v = d.V().expand(x.subspan(nu, nv));
    t.p.assign(x.begin() + nu + nv, x.end());
    return t;
}

ErrorNorms error_norms(const Discretization& d, std::span<const double> u_full, std::span<const double> v_full,
                       std::span<const double> p_cells, const ManufacturedCase& mc) {
    const TriMesh& mesh = d.mesh();
    const FESpace& U = d.U();
    const FESpace& V = d.V();
    if (static_cast<int>(u_full.size()) != U.num_dofs() || static_cast<int>(v_full.size()) != V.num_dofs() ||
        static_cast<int>(p_cells.size()) != mesh.num_cells())
        throw DimensionMismatch("error_norms: coefficient vector sizes do not match the spaces");
    const ReducedParams& prm = mc.params;
    const QuadRule& rule = triangle_rule(kRhsDegree);
    const bool hess = U.family() == Family::RT1;

    double grad2 = 0, divu2 = 0, hess2 = 0, jump2 = 0, v2 = 0, divv2 = 0, p2 = 0;
    BasisEval eu, ev;
    for (int c = 0; c < mesh.num_cells(); ++c) {
        const CellGeometry& geo = U.geometry(c);
        const double hk2 = mesh.diameter(c) * mesh.diameter(c);
        const auto du = U.cell_dofs(c);
        const auto dv = V.cell_dofs(c);
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const Vec2 x = geo.map(rule.points[q]);
            const double w = rule.weights[q] * std::abs(geo.detJ);
            U.evaluate(c, rule.points[q], eu, true);
            V.evaluate(c, rule.points[q], ev);
            VecGrad gh = VecGrad::Zero();
            VecHessian hh{Mat2::Zero(), Mat2::Zero()};
            double divh = 0;
            for (int i = 0; i < eu.n; ++i) {
                const double a = u_full[du[i].global];
                gh += a * eu.grads[i];
                divh += a * eu.divs[i];
                if (hess) {
                    hh[0] += a * eu.hessians[i][0];
                    hh[1] += a * eu.hessians[i][1];
                }
            }
            Vec2 vh = Vec2::Zero();
            double divvh = 0;
            for (int i = 0; i < ev.n; ++i) {
                vh += v_full[dv[i].global] * ev.values[i];
                divvh += v_full[dv[i].global] * ev.divs[i];
            }
            grad2 += w * (mc.grad_u(x) - gh).squaredNorm();
            divu2 += w * std::pow(mc.div_u(x) - divh, 2);
            const VecHessian he = mc.hess_u(x);
            hess2 += w * hk2 * ((he[0] - hh[0]).squaredNorm() + (he[1] - hh[1]).squaredNorm());
            v2 += w * (mc.v(x) - vh).squaredNorm();
            divv2 += w * std::pow(mc.div_v(x) - divvh, 2);
            p2 += w * std::pow(mc.p(x) - p_cells[c], 2);
        }
    }

    const LineRule& line = gauss_line(5);
    const auto frames = jump_average_frames(mesh);
    for (int e = 0; e < mesh.num_edges(); ++e) {
        const Edge& ed = mesh.edges()[e];
        const EdgeFrame& fr = frames[e];
        const Vec2& a = mesh.vertices()[ed.vertices[0]];
        const Vec2& b = mesh.vertices()[ed.vertices[1]];
        for (std::size_t q = 0; q < line.points.size(); ++q) {
            const Vec2 x = a + line.points[q] * (b - a);
            const Vec2 ex = mc.u(x);
            const Vec2 e1 = ex - U.value(u_full, fr.k1, U.geometry(fr.k1).inverse_map(x));
            const Vec2 e2 = fr.on_boundary() ? Vec2::Zero() : Vec2(ex - U.value(u_full, fr.k2, U.geometry(fr.k2).inverse_map(x)));
            const Vec2 jt = fr.tangential(fr.jump(e1, e2));
            jump2 += line.weights[q] * ed.length / fr.h_e * jt.squaredNorm();
        }
    }

    ErrorNorms out;
    out.err_U = std::sqrt(grad2 + jump2 + hess2 + prm.lambda() * divu2);
    out.err_V = std::sqrt(prm.rp_inv() * v2 + divv2 / prm.gamma());
    out.err_P = std::sqrt(prm.gamma() * p2);
    return out;
}

ErrorNorms error_norms(const Discretization& d, std::span<const double> x, const ManufacturedCase& mc) {
    const FieldTriple t = split_solution(d, x);
    return error_norms(d, t.u, t.v, t.p, mc);
}

ErrorNorms best_approximation(const Discretization& d, const ManufacturedCase& mc) {
    const std::vector<double> u = interpolate_Pi_div(mc.u, d.U());
    const std::vector<double> v = interpolate_Pi_div(mc.v, d.V());
    const std::vector<double> p = project_Qh(mc.p, d.mesh(), true);
    return error_norms(d, u, v, p, mc);
}

AuditResult conservation_audit(const Discretization& d, std::span<const double> x, std::span<const double> g_cells,
                               const ReducedParams& params) {
    const TriMesh& mesh = d.mesh();
    if (static_cast<int>(g_cells.size()) != mesh.num_cells())
        throw DimensionMismatch("conservation_audit: g has wrong number of cells");
    const FieldTriple t = split_solution(d, x);
    const std::vector<double> du = d.U().cell_divergence(t.u);
    const std::vector<double> dv = d.V().cell_divergence(t.v);
    std::vector<double> qg(g_cells.begin(), g_cells.end());
    remove_mean(qg, mesh);
    AuditResult r;
    r.residual.resize(mesh.num_cells());
    for (int c = 0; c < mesh.num_cells(); ++c) {
        r.residual[c] = -du[c] - dv[c] - params.alpha_p() * t.p[c] - qg[c];
        r.max_abs = std::max(r.max_abs, std::abs(r.residual[c]));
    }
    return r;
}

ConvergenceTable convergence_study(const ReducedParams& params, const std::vector<int>& n_list, const Families& fam,
                                   const DGConfig& cfg) {
    for (std::size_t i = 0; i < n_list.size(); ++i) {
        if (n_list[i] < 1) throw ConfigError("mesh sizes must be >= 1");
        if (i > 0 && n_list[i] <= n_list[i - 1]) throw ConfigError("mesh sizes must be strictly increasing");
    }
    const ManufacturedCase mc = manufactured_case(params);
    ConvergenceTable table;
    for (int n : n_list) {
        const Discretization d = Discretization::structured(n, fam);
        const BlockSystem sys = assemble_block_system(d, params, cfg, &mc.f, &mc.g);
        const SolveResult sol = direct_solve(sys);
        ConvergenceRow row;
        row.n = n;
        row.h = d.mesh().h_max();
        row.err = error_norms(d, sol.x, mc);
        row.best = best_approximation(d, mc);
        if (!table.empty()) {
            const ConvergenceRow& prev = table.back();
            const double r = std::log(prev.h / row.h);
            row.order_U = std::log(prev.err.err_U / row.err.err_U) / r;
            row.order_V = std::log(prev.err.err_V / row.err.err_V) / r;
            row.order_P = std::log(prev.err.err_P / row.err.err_P) / r;
        }
        table.push_back(row);
    }
    return table;
}

std::vector<ReducedParams> ParamGrid::points() const {
    std::vector<ReducedParams> out;
    for (double l : lambda)
        for (double r : rp_inv)
            for (double a : alpha_p) out.push_back(ReducedParams::make(l, r, a));
    return out;
}

void parallel_for(int count, int threads, const std::function<void(int)>& job) {
    if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    threads = std::min(threads, count);
    if (threads <= 1) {
        for (int i = 0; i < count; ++i) job(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr first;
    std::mutex m;
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (int i = next++; i < count; i = next++) {
                try {
                    job(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(m);
                    if (!first) first = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    if (first) std::rethrow_exception(first);
}

std::vector<InfSupRow> infsup_sweep(const std::vector<int>& ns, const ParamGrid& grid, const Families& fam,
                                    const DGConfig& cfg, NormKind norms, int threads) {
    const std::vector<ReducedParams> pts = grid.points();
    std::vector<Discretization> discs;
    for (int n : ns) discs.push_back(Discretization::structured(n, fam));
    const int m = static_cast<int>(pts.size());
    std::vector<InfSupRow> rows(ns.size() * pts.size());
    parallel_for(static_cast<int>(rows.size()), threads, [&](int i) {
        const int k = i / m;
        const ReducedParams& p = pts[i % m];
        const InfSupResult r = infsup_on(discs[k], ns[k], p, cfg, norms);
        rows[i] = InfSupRow{fam.name(), norms, ns[k], p, r.beta0};
    });
    return rows;
}

std::vector<MinresRow> minres_sweep(int n, const ParamGrid& grid, const Families& fam, const DGConfig& cfg,
                                    const MinresOptions& opt, bool with_condition, int threads) {
    const std::vector<ReducedParams> pts = grid.points();
    const Discretization d = Discretization::structured(n, fam);
    std::vector<MinresRow> rows(pts.size());
    parallel_for(static_cast<int>(pts.size()), threads, [&](int i) {
        const ReducedParams& p = pts[i];
        const ManufacturedCase mc = manufactured_case(p);
        const BlockSystem sys = assemble_block_system(d, p, cfg, &mc.f, &mc.g);
        const BlockPreconditioner B = BlockPreconditioner::build(assemble_norms(d, p, cfg), sys);
        const SolveResult res = minres_solve(sys, B, opt);
        MinresRow row;
        row.n = n;
        row.params = p;
        row.iters = res.report.iterations;
        row.converged = res.report.converged;
        if (with_condition) row.cond_estimate = estimate_condition(sys, B);
        rows[i] = row;
    });
    return rows;
}

KornBounds korn_bounds(const FESpace& s) {
    const Eigen::MatrixXd Gh = h_norm_gram(s).to_dense();
    const Eigen::MatrixXd Gdg = dg_norm_gram(s).to_dense();
    const Eigen::MatrixXd G1h = one_h_norm_gram(s).to_dense();
    KornBounds k;
    const PencilSpectrum a = pencil_spectrum(Gh, Gdg);
    k.min_h_over_dg = a.theta.minCoeff();
    k.max_h_over_dg = a.theta.maxCoeff();
    k.min_h_over_1h = pencil_spectrum(Gh, G1h).theta.minCoeff();
    k.max_dg_over_1h = pencil_spectrum(Gdg, G1h).theta.maxCoeff();
    return k;
}

} // namespace biot
