#include <dcmwalk/control/support_polygon.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dcmwalk
{

namespace
{

double cross(const Eigen::Vector2d& origin, const Eigen::Vector2d& a, const Eigen::Vector2d& b)
{
    return (a.x() - origin.x()) * (b.y() - origin.y())
           - (a.y() - origin.y()) * (b.x() - origin.x());
}

/// Andrew's monotone chain; returns the hull counter clockwise without
/// repeating the first vertex. Collinear points are dropped.
std::vector<Eigen::Vector2d> convexHull(std::vector<Eigen::Vector2d> points)
{
    std::sort(points.begin(), points.end(),
              [](const Eigen::Vector2d& a, const Eigen::Vector2d& b)
              { return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y()); });
    points.erase(std::unique(points.begin(), points.end(),
                             [](const Eigen::Vector2d& a, const Eigen::Vector2d& b)
                             { return (a - b).norm() < 1e-12; }),
                 points.end());
    if (points.size() < 3)
    {
        return points;
    }

    std::vector<Eigen::Vector2d> hull(2 * points.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < points.size(); i++)
    {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], points[i]) <= 1e-12)
        {
            k--;
        }
        hull[k++] = points[i];
    }
    const std::size_t lower = k + 1;
    for (std::size_t i = points.size() - 1; i-- > 0;)
    {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], points[i]) <= 1e-12)
        {
            k--;
        }
        hull[k++] = points[i];
    }
    hull.resize(k - 1);
    return hull;
}

} // namespace

SupportPolygon SupportPolygon::fromPoints(const std::vector<Eigen::Vector2d>& points)
{
    std::vector<Eigen::Vector2d> hull = convexHull(points);
    if (hull.size() < 3)
    {
        throw std::invalid_argument("SupportPolygon: points span no area");
    }

    SupportPolygon polygon;
    polygon.m_vertices = std::move(hull);

    const auto count = static_cast<Eigen::Index>(polygon.m_vertices.size());
    polygon.m_normals.resize(count, 2);
    polygon.m_offsets.resize(count);
    for (Eigen::Index i = 0; i < count; i++)
    {
        const Eigen::Vector2d& from = polygon.m_vertices[static_cast<std::size_t>(i)];
        const Eigen::Vector2d& to =
            polygon.m_vertices[static_cast<std::size_t>((i + 1) % count)];
        const Eigen::Vector2d edge = to - from;
        // Interior lies left of a counter clockwise edge.
        const Eigen::Vector2d outward = Eigen::Vector2d(edge.y(), -edge.x()).normalized();
        polygon.m_normals.row(i) = outward;
        polygon.m_offsets(i) = outward.dot(from);
    }
    return polygon;
}

SupportPolygon SupportPolygon::footRectangle(const Eigen::Vector2d& center,
                                             double yaw,
                                             double length,
                                             double width)
{
    if (!(length > 0.0) || !(width > 0.0))
    {
        throw std::invalid_argument("SupportPolygon: foot dimensions must be positive");
    }
    const Eigen::Rotation2Dd rotation(yaw);
    std::vector<Eigen::Vector2d> corners;
    for (const double sx : {-0.5, 0.5})
    {
        for (const double sy : {-0.5, 0.5})
        {
            corners.push_back(center + rotation * Eigen::Vector2d(sx * length, sy * width));
        }
    }
    return fromPoints(corners);
}

SupportPolygon SupportPolygon::merge(const SupportPolygon& a, const SupportPolygon& b)
{
    std::vector<Eigen::Vector2d> points = a.m_vertices;
    points.insert(points.end(), b.m_vertices.begin(), b.m_vertices.end());
    return fromPoints(points);
}

double SupportPolygon::margin(const Eigen::Vector2d& point) const
{
    return (m_offsets - m_normals * point).minCoeff();
}

Eigen::Vector2d SupportPolygon::interiorPoint() const
{
    Eigen::Vector2d sum = Eigen::Vector2d::Zero();
    for (const Eigen::Vector2d& vertex : m_vertices)
    {
        sum += vertex;
    }
    return sum / static_cast<double>(m_vertices.size());
}

Eigen::Vector2d projectOntoPolygon(const Eigen::Vector2d& point, const SupportPolygon& polygon)
{
    if (polygon.contains(point))
    {
        return point;
    }
    double bestDistance = std::numeric_limits<double>::infinity();
    Eigen::Vector2d best = polygon.vertices().front();
    const auto& vertices = polygon.vertices();
    for (std::size_t i = 0; i < vertices.size(); i++)
    {
        const Eigen::Vector2d& from = vertices[i];
        const Eigen::Vector2d& to = vertices[(i + 1) % vertices.size()];
        const Eigen::Vector2d edge = to - from;
        const double t =
            std::clamp(edge.dot(point - from) / edge.squaredNorm(), 0.0, 1.0);
        const Eigen::Vector2d candidate = from + t * edge;
        const double distance = (candidate - point).norm();
        if (distance < bestDistance)
        {
            bestDistance = distance;
            best = candidate;
        }
    }
    return best;
}

} // namespace dcmwalk
