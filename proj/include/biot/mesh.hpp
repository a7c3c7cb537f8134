#pragma once

#include <Eigen/Core>

#include <array>
#include <iosfwd>
#include <vector>

namespace biot {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

inline constexpr int kBoundary = -1;

struct Edge {
    std::array<int, 2> vertices;  ///< sorted, lower global index first
    std::array<int, 2> cells;     ///< (K1, K2); K2 == kBoundary on the boundary
    Vec2 normal;                  ///< unit, outward from K1
    Vec2 tangent;                 ///< normal rotated by +90 degrees
    double length = 0.0;

    bool on_boundary() const noexcept { return cells[1] == kBoundary; }
};

/// Local edge i of a cell is opposite local vertex i.
struct CellEdge {
    int edge = -1;
    int normal_sign = 1;  ///< +1 when the cell is K1 of the edge
    int param_sign = 1;   ///< +1 when the local endpoint order matches the global one
};

/// Conforming triangulation with counterclockwise cells.
class TriMesh {
public:
    TriMesh(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> cells);

    const std::vector<Vec2>& vertices() const noexcept { return vertices_; }
    const std::vector<std::array<int, 3>>& cells() const noexcept { return cells_; }
    const std::vector<Edge>& edges() const noexcept { return edges_; }
    const std::array<CellEdge, 3>& cell_edges(int c) const { return cell_edges_[c]; }

    int num_vertices() const noexcept { return static_cast<int>(vertices_.size()); }
    int num_cells() const noexcept { return static_cast<int>(cells_.size()); }
    int num_edges() const noexcept { return static_cast<int>(edges_.size()); }
    int num_boundary_edges() const noexcept;

    double area(int c) const { return area_[c]; }
    /// Circumdiameter h_K.
    double diameter(int c) const { return diameter_[c]; }
    double h_max() const noexcept { return h_max_; }
    double total_area() const noexcept;

    /// Local edge endpoints in local vertex numbering (edge i opposite vertex i).
    static constexpr std::array<std::array<int, 2>, 3> kLocalEdgeVertices{{{1, 2}, {0, 2}, {0, 1}}};

    /// Plain-text listing of vertices, cells and edges.
    void dump(std::ostream& os) const;

private:
    void build_edges();

    std::vector<Vec2> vertices_;
    std::vector<std::array<int, 3>> cells_;
    std::vector<Edge> edges_;
    std::vector<std::array<CellEdge, 3>> cell_edges_;
    std::vector<double> area_;
    std::vector<double> diameter_;
    double h_max_ = 0.0;
};

/// n x n squares on the unit square, each split along the lower-left to
/// upper-right diagonal.
TriMesh structured_mesh(int n);

/// Jump/average frame of one edge: [q] = q|K1 - q|K2 and
/// {v} = 0.5 (v|K1 . n1 - v|K2 . n2) with n = n1 the K1-outward normal. On boundary
/// edges only K1 exists and the one-sided definitions apply.
struct EdgeFrame {
    int k1 = -1;
    int k2 = kBoundary;
    Vec2 normal;
    Vec2 tangent;
    double h_e = 0.0;

    bool on_boundary() const noexcept { return k2 == kBoundary; }
    double jump(double q1, double q2) const noexcept { return on_boundary() ? q1 : q1 - q2; }
    Vec2 jump(const Vec2& v1, const Vec2& v2) const { return on_boundary() ? Vec2(v1) : Vec2(v1 - v2); }
    double average_normal(const Vec2& v1, const Vec2& v2) const {
        return on_boundary() ? v1.dot(normal) : 0.5 * (v1 + v2).dot(normal);
    }
    Vec2 average_normal(const Mat2& t1, const Mat2& t2) const {
        return on_boundary() ? Vec2(t1 * normal) : Vec2(0.5 * (t1 + t2) * normal);
    }
    /// Tangential part w - (w.n) n.
    Vec2 tangential(const Vec2& w) const { return w - w.dot(normal) * normal; }
};

std::vector<EdgeFrame> jump_average_frames(const TriMesh& mesh);

} // namespace biot
