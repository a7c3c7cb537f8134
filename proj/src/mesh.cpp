#include "biot/mesh.hpp"

#include "biot/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>

namespace biot {

namespace {

double signed_area(const Vec2& a, const Vec2& b, const Vec2& c) {
    return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
}

} // namespace

TriMesh::TriMesh(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> cells)
    : vertices_(std::move(vertices)), cells_(std::move(cells)) {
    area_.resize(cells_.size());
    diameter_.resize(cells_.size());
    for (std::size_t c = 0; c < cells_.size(); ++c) {
        const auto& [i0, i1, i2] = cells_[c];
        const Vec2& a = vertices_[i0];
        const Vec2& b = vertices_[i1];
        const Vec2& d = vertices_[i2];
        const double A = signed_area(a, b, d);
        if (A <= 0.0)
            throw DegenerateCell("cell " + std::to_string(c) + " is not counterclockwise (signed area " +
                                 std::to_string(A) + ")");
        const double la = (b - d).norm();
        const double lb = (d - a).norm();
        const double lc = (a - b).norm();
        area_[c] = A;
        diameter_[c] = la * lb * lc / (2.0 * A);  // 2R = abc / (2 area)
        h_max_ = std::max(h_max_, diameter_[c]);
    }
    build_edges();
}

void TriMesh::build_edges() {
    std::map<std::pair<int, int>, int> lookup;
    cell_edges_.resize(cells_.size());
    for (int c = 0; c < num_cells(); ++c) {
        for (int i = 0; i < 3; ++i) {
            const auto [la, lb] = kLocalEdgeVertices[i];
            const int ga = cells_[c][la];
            const int gb = cells_[c][lb];
            const auto key = std::minmax(ga, gb);
            auto [it, inserted] = lookup.try_emplace({key.first, key.second}, num_edges());
            CellEdge& ce = cell_edges_[c][i];
            ce.edge = it->second;
            ce.param_sign = ga < gb ? 1 : -1;
            if (inserted) {
                Edge e;
                e.vertices = {key.first, key.second};
                e.cells = {c, kBoundary};
                // Outward normal of a CCW cell: the edge direction (in CCW
                // traversal) rotated by -90 degrees. Local edge i runs from
                // vertex i+1 to vertex i+2 in CCW order.
                const Vec2& p = vertices_[cells_[c][(i + 1) % 3]];
                const Vec2& q = vertices_[cells_[c][(i + 2) % 3]];
                const Vec2 d = q - p;
                e.length = d.norm();
                e.normal = Vec2(d.y(), -d.x()) / e.length;
                e.tangent = Vec2(-e.normal.y(), e.normal.x());
                edges_.push_back(e);
                ce.normal_sign = 1;
            } else {
                Edge& e = edges_[it->second];
                if (e.cells[1] != kBoundary)
                    throw std::logic_error("edge shared by more than two cells");
                e.cells[1] = c;
                ce.normal_sign = -1;
            }
        }
    }
}

int TriMesh::num_boundary_edges() const noexcept {
    return static_cast<int>(std::count_if(edges_.begin(), edges_.end(),
                                          [](const Edge& e) { return e.on_boundary(); }));
}

double TriMesh::total_area() const noexcept {
    double s = 0.0;
    for (double a : area_) s += a;
    return s;
}

void TriMesh::dump(std::ostream& os) const {
    os.precision(17);
    os << "# biot mesh v1\n";
    os << "vertices " << num_vertices() << '\n';
    for (int i = 0; i < num_vertices(); ++i)
        os << i << ' ' << vertices_[i].x() << ' ' << vertices_[i].y() << '\n';
    os << "cells " << num_cells() << '\n';
    for (int c = 0; c < num_cells(); ++c)
        os << c << ' ' << cells_[c][0] << ' ' << cells_[c][1] << ' ' << cells_[c][2] << '\n';
    os << "edges " << num_edges() << '\n';
    for (int e = 0; e < num_edges(); ++e) {
        const Edge& ed = edges_[e];
        os << e << ' ' << ed.vertices[0] << ' ' << ed.vertices[1] << ' ' << ed.cells[0] << ' ' << ed.cells[1]
           << ' ' << ed.normal.x() << ' ' << ed.normal.y() << ' ' << ed.length << '\n';
    }
}

TriMesh structured_mesh(int n) {
    if (n < 1) throw RangeViolation("structured_mesh: n must be >= 1");
    std::vector<Vec2> vertices;
    vertices.reserve(static_cast<std::size_t>((n + 1) * (n + 1)));
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i)
            vertices.emplace_back(static_cast<double>(i) / n, static_cast<double>(j) / n);

    auto id = [n](int i, int j) { return j * (n + 1) + i; };
    std::vector<std::array<int, 3>> cells;
    cells.reserve(static_cast<std::size_t>(2 * n * n));
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
            cells.push_back({a, b, c});
            cells.push_back({a, c, d});
        }
    }
    return TriMesh(std::move(vertices), std::move(cells));
}

std::vector<EdgeFrame> jump_average_frames(const TriMesh& mesh) {
    std::vector<EdgeFrame> frames;
    frames.reserve(mesh.edges().size());
    for (const Edge& e : mesh.edges())
        frames.push_back(EdgeFrame{e.cells[0], e.cells[1], e.normal, e.tangent, e.length});
    return frames;
}

} // namespace biot
