#pragma once

#include "biot/mesh.hpp"

#include <vector>

namespace biot {

/// Rule on the reference triangle (0,0), (1,0), (0,1); weights sum to 1/2.
struct QuadRule {
    int degree = 0;
    std::vector<Vec2> points;
    std::vector<double> weights;

    std::size_t size() const noexcept { return weights.size(); }
};

/// Symmetric rules of degree 1, 2, 4 and 8 (the smallest tabulated rule
/// with at least the requested degree is returned).
const QuadRule& triangle_rule(int degree);

/// Gauss-Legendre on [0, 1]; weights sum to 1.
struct LineRule {
    std::vector<double> points;
    std::vector<double> weights;
};

/// n in 1..5.
const LineRule& gauss_line(int n);

inline constexpr int kStiffnessDegree = 4;
inline constexpr int kRhsDegree = 8;
inline constexpr int kEdgePoints = 4;

} // namespace biot
