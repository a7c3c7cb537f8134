#include "biot/quadrature.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace biot {

namespace {

// Adds the orbit of barycentric (a, a, 1-2a) with per-point weight w.
void add_orbit3(QuadRule& r, double a, double w) {
    const double b = 1.0 - 2.0 * a;
    const std::array<std::array<double, 3>, 3> bary{{{a, a, b}, {a, b, a}, {b, a, a}}};
    for (const auto& l : bary) {
        r.points.emplace_back(l[1], l[2]);
        r.weights.push_back(0.5 * w);
    }
}

// Adds the six permutations of barycentric (a, b, c).
void add_orbit6(QuadRule& r, double a, double b, double w) {
    const double c = 1.0 - a - b;
    const std::array<std::array<double, 3>, 6> bary{
        {{a, b, c}, {a, c, b}, {b, a, c}, {b, c, a}, {c, a, b}, {c, b, a}}};
    for (const auto& l : bary) {
        r.points.emplace_back(l[1], l[2]);
        r.weights.push_back(0.5 * w);
    }
}

QuadRule make_degree1() {
    QuadRule r;
    r.degree = 1;
    r.points.emplace_back(1.0 / 3.0, 1.0 / 3.0);
    r.weights.push_back(0.5);
    return r;
}

QuadRule make_degree2() {
    QuadRule r;
    r.degree = 2;
    add_orbit3(r, 1.0 / 6.0, 1.0 / 3.0);
    return r;
}

// Dunavant, 6 points.
QuadRule make_degree4() {
    QuadRule r;
    r.degree = 4;
    add_orbit3(r, 0.445948490915965, 0.223381589678011);
    add_orbit3(r, 0.091576213509771, 0.109951743655322);
    return r;
}

// Dunavant, 16 points.
QuadRule make_degree8() {
    QuadRule r;
    r.degree = 8;
    r.points.emplace_back(1.0 / 3.0, 1.0 / 3.0);
    r.weights.push_back(0.5 * 0.144315607677787);
    add_orbit3(r, 0.459292588292723, 0.095091634267285);
    add_orbit3(r, 0.170569307751760, 0.103217370534718);
    add_orbit3(r, 0.050547228317031, 0.032458497623198);
    add_orbit6(r, 0.263112829634638, 0.008394777409958, 0.027230314174435);
    return r;
}

LineRule make_gauss(int n) {
    LineRule r;
    std::vector<double> x, w;
    switch (n) {
    case 1: x = {0.0}; w = {2.0}; break;
    case 2: x = {-1.0 / std::sqrt(3.0), 1.0 / std::sqrt(3.0)}; w = {1.0, 1.0}; break;
    case 3:
        x = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
        w = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
        break;
    case 4: {
        const double a = std::sqrt(3.0 / 7.0 - 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
        const double b = std::sqrt(3.0 / 7.0 + 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
        const double wa = (18.0 + std::sqrt(30.0)) / 36.0;
        const double wb = (18.0 - std::sqrt(30.0)) / 36.0;
        x = {-b, -a, a, b};
        w = {wb, wa, wa, wb};
        break;
    }
    case 5: {
        const double a = std::sqrt(5.0 - 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
        const double b = std::sqrt(5.0 + 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
        const double wa = (322.0 + 13.0 * std::sqrt(70.0)) / 900.0;
        const double wb = (322.0 - 13.0 * std::sqrt(70.0)) / 900.0;
        x = {-b, -a, 0.0, a, b};
        w = {wb, wa, 128.0 / 225.0, wa, wb};
        break;
    }
    default: throw std::invalid_argument("gauss_line: n must be in 1..5");
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        r.points.push_back(0.5 * (x[i] + 1.0));
        r.weights.push_back(0.5 * w[i]);
    }
    return r;
}

} // namespace

const QuadRule& triangle_rule(int degree) {
    static const QuadRule d1 = make_degree1();
    static const QuadRule d2 = make_degree2();
    static const QuadRule d4 = make_degree4();
    static const QuadRule d8 = make_degree8();
    if (degree <= 1) return d1;
    if (degree <= 2) return d2;
    if (degree <= 4) return d4;
    if (degree <= 8) return d8;
    throw std::invalid_argument("triangle_rule: degree > 8 not tabulated");
}

const LineRule& gauss_line(int n) {
    static const std::array<LineRule, 5> rules{make_gauss(1), make_gauss(2), make_gauss(3), make_gauss(4),
                                               make_gauss(5)};
    if (n < 1 || n > 5) throw std::invalid_argument("gauss_line: n must be in 1..5");
    return rules[static_cast<std::size_t>(n - 1)];
}

} // namespace biot
