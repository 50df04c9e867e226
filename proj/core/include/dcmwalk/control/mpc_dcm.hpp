#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include <dcmwalk/control/support_polygon.hpp>
#include <dcmwalk/qp/qp_solver.hpp>

namespace dcmwalk
{

struct MpcSettings
{
    int horizon = 200;      ///< preview samples (2 s at 100 Hz)
    double timeStep = 0.01;
    Eigen::Matrix2d stateWeight = 5.0 * Eigen::Matrix2d::Identity();
    Eigen::Matrix2d terminalWeight = 50.0 * Eigen::Matrix2d::Identity();
    Eigen::Matrix2d inputRateWeight = Eigen::Matrix2d::Identity();

    /// Throws std::invalid_argument on inconsistent values.
    void validate() const;
};

enum class MpcStatus
{
    Solved,
    Infeasible,
    Failed
};

struct MpcResult
{
    MpcStatus status = MpcStatus::Failed;
    Eigen::Vector2d zmp = Eigen::Vector2d::Zero();  ///< first input, valid when Solved
    std::vector<Eigen::Vector2d> predictedDcm;      ///< horizon + 1 states
    int iterations = 0;
    bool polished = false;
};

/**
 * Receding horizon dcm controller. States are eliminated through the
 * discrete pendulum flow xi_{j+1} = F xi_j + G r_j with F = e^{T/b} and
 * G = 1 - F, leaving a dense strictly convex QP in the zmp sequence. The
 * cost tracks the dcm reference over the window, penalizes zmp increments
 * (seeded by the previously applied input), and every sample's zmp is
 * confined to its support polygon.
 */
class MpcController
{
public:
    MpcController(const MpcSettings& settings, double timeConstant);

    /// dcmReference holds horizon+1 samples (current one first); polygons one
    /// entry per horizon sample, pointers valid for the duration of the call.
    MpcResult solve(const Eigen::Vector2d& dcm,
                    const std::vector<Eigen::Vector2d>& dcmReference,
                    const std::vector<const SupportPolygon*>& polygons,
                    const Eigen::Vector2d& previousZmp);

    const MpcSettings& settings() const { return m_settings; }
    void resetWarmStart() { m_warmStart.reset(); }

private:
    MpcSettings m_settings;
    double m_growth = 1.0;  ///< F
    double m_input = 0.0;   ///< G
    std::vector<double> m_growthPowers;
    Eigen::MatrixXd m_hessian;
    Eigen::VectorXd m_variableScale;  ///< Jacobi scale of the raw hessian
    QpSettings m_qpSettings;
    std::optional<QpWarmStart> m_warmStart;
};

} // namespace dcmwalk
