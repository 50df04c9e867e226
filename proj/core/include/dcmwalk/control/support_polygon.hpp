#pragma once

#include <vector>

#include <Eigen/Dense>

namespace dcmwalk
{

/**
 * Convex region of admissible zmp positions: the stance sole rectangle in
 * single support, the hull of both rectangles in double support. Stored as
 * counter clockwise vertices plus the matching half planes with unit outward
 * normals, so margins are in meters.
 */
class SupportPolygon
{
public:
    /// Convex hull of the given points; throws std::invalid_argument when the
    /// hull is degenerate (fewer than three distinct non collinear points).
    static SupportPolygon fromPoints(const std::vector<Eigen::Vector2d>& points);

    static SupportPolygon footRectangle(const Eigen::Vector2d& center,
                                        double yaw,
                                        double length,
                                        double width);

    /// Hull of the union of two polygons (the double support region).
    static SupportPolygon merge(const SupportPolygon& a, const SupportPolygon& b);

    const std::vector<Eigen::Vector2d>& vertices() const { return m_vertices; }

    /// Half planes normal() * p <= offset(); one row per hull edge.
    const Eigen::Matrix<double, Eigen::Dynamic, 2>& normals() const { return m_normals; }
    const Eigen::VectorXd& offsets() const { return m_offsets; }

    /// Smallest distance to the edges, positive inside.
    double margin(const Eigen::Vector2d& point) const;

    bool contains(const Eigen::Vector2d& point, double tolerance = 0.0) const
    {
        return margin(point) >= -tolerance;
    }

    /// Strictly interior point (vertex mean of the convex hull).
    Eigen::Vector2d interiorPoint() const;

private:
    SupportPolygon() = default;

    std::vector<Eigen::Vector2d> m_vertices;
    Eigen::Matrix<double, Eigen::Dynamic, 2> m_normals;
    Eigen::VectorXd m_offsets;
};

/// Closest point of the polygon to the query (the query itself when inside).
Eigen::Vector2d projectOntoPolygon(const Eigen::Vector2d& point, const SupportPolygon& polygon);

} // namespace dcmwalk
