#pragma once

#include <vector>

#include <Eigen/Dense>

namespace dcmwalk
{

/// One piece of the piecewise constant zmp plan: the zmp sits at `zmp` from
/// startTime for `duration` seconds.
struct DcmEpoch
{
    Eigen::Vector2d zmp = Eigen::Vector2d::Zero();
    double startTime = 0.0;
    double duration = 0.0;
};

struct DcmSample
{
    Eigen::Vector2d position = Eigen::Vector2d::Zero();
    Eigen::Vector2d velocity = Eigen::Vector2d::Zero();
};

/**
 * Divergent component of motion reference over a zmp epoch sequence.
 *
 * Within an epoch the dcm follows the unstable first order flow
 * xi(t) = r + e^{(t - t0)/b} (xi_i - r); the initial values xi_i come from a
 * backward recursion anchored at the last epoch, whose dcm is pinned to its
 * own zmp so the trajectory comes to rest there. Around each interior epoch
 * boundary the exponential pieces are replaced by a cubic that matches
 * position and velocity at the window edges, which makes the reference C1 and
 * keeps the implied zmp continuous through support exchanges.
 */
class DcmTrajectory
{
public:
    /// windowHalfWidths has one entry per interior boundary (size
    /// epochs.size() - 1); entry i is half the blend window duration at the
    /// boundary between epoch i and epoch i+1. Pass 0 for a hard switch.
    DcmTrajectory(std::vector<DcmEpoch> epochs,
                  double timeConstant,
                  std::vector<double> windowHalfWidths);

    /// Initial dcm of every epoch from the backward recursion.
    static std::vector<Eigen::Vector2d> backwardRecursion(const std::vector<DcmEpoch>& epochs,
                                                          double timeConstant);

    DcmSample evaluate(double time) const;

    /// Implied zmp xi - b xiDot; equals the epoch zmp on exponential pieces.
    Eigen::Vector2d impliedZmp(double time) const;

    double startTime() const;
    double endTime() const;
    const std::vector<DcmEpoch>& epochs() const { return m_epochs; }
    const std::vector<double>& windowHalfWidths() const { return m_windowHalfWidths; }

private:
    DcmSample evaluateEpoch(size_t index, double time) const;

    std::vector<DcmEpoch> m_epochs;
    double m_timeConstant = 0.0;
    std::vector<double> m_windowHalfWidths;
    std::vector<Eigen::Vector2d> m_initialDcm;
};

} // namespace dcmwalk
