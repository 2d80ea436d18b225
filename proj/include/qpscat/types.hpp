#pragma once

#include <complex>
#include <cmath>
#include <vector>
#include <Eigen/Dense>

namespace qpscat {

using cd = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

inline constexpr double pi = 3.14159265358979323846;
inline constexpr cd iu{0.0, 1.0};

struct Vec2 {
    double x = 0.0, y = 0.0;

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double dot(Vec2 o) const { return x * o.x + y * o.y; }
    double norm() const { return std::hypot(x, y); }
};

/// Collocation/evaluation targets: points with (unit) normals.
struct TargetSet {
    std::vector<Vec2> points;
    std::vector<Vec2> normals;

    std::size_t size() const { return points.size(); }
    TargetSet shifted(Vec2 t) const {
        TargetSet out = *this;
        for (auto& p : out.points) p = p + t;
        return out;
    }
};

} // namespace qpscat
