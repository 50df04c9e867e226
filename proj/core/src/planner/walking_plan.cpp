#include <dcmwalk/planner/walking_plan.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dcmwalk
{

namespace
{

struct Unicycle
{
    Eigen::Vector2d position = Eigen::Vector2d::Zero();
    double heading = 0.0;
};

/// Forward Euler at 1 ms, matching the footstep grid resolution.
void advanceUnicycle(Unicycle& unicycle, double speed, double turningRate, double duration)
{
    constexpr double kStep = 1e-3;
    const int steps = std::max(1, static_cast<int>(std::llround(duration / kStep)));
    const double h = duration / steps;
    for (int i = 0; i < steps; i++)
    {
        unicycle.position.x() += speed * std::cos(unicycle.heading) * h;
        unicycle.position.y() += speed * std::sin(unicycle.heading) * h;
        unicycle.heading += turningRate * h;
    }
}

Eigen::Vector2d lateralOffset(double heading, Side side, double feetDistance)
{
    const double sign = side == Side::Left ? 1.0 : -1.0;
    return 0.5 * sign * feetDistance * Eigen::Vector2d(-std::sin(heading), std::cos(heading));
}

struct Pose2
{
    Eigen::Vector2d position = Eigen::Vector2d::Zero();
    double yaw = 0.0;
};

FootReference footReference(const std::vector<SwingTrajectory>& swings,
                            const Pose2& initialPose,
                            double time)
{
    FootReference reference;
    if (swings.empty())
    {
        reference.position << initialPose.position, 0.0;
        reference.yaw = initialPose.yaw;
        return reference;
    }

    auto it = std::upper_bound(swings.begin(), swings.end(), time,
                               [](double value, const SwingTrajectory& swing)
                               { return value < swing.startTime(); });
    const SwingTrajectory& active = it == swings.begin() ? swings.front() : *std::prev(it);

    const SwingSample sample = active.evaluate(time);
    reference.position = sample.position;
    reference.velocity = sample.velocity;
    reference.acceleration = sample.acceleration;
    reference.yaw = sample.yaw;
    reference.yawRate = sample.yawRate;

    constexpr double kEdgeTolerance = 1e-9;
    reference.contact = !(time > active.startTime() + kEdgeTolerance
                          && time < active.endTime() - kEdgeTolerance);
    return reference;
}

} // namespace

void PlannerSettings::validate() const
{
    const auto fail = [](const std::string& message)
    { throw std::invalid_argument("PlannerSettings: " + message); };

    if (!(timeStep > 0.0))
        fail("time step must be positive");
    if (!(speed >= 0.0))
        fail("speed must be non-negative");
    if (!(duration > 0.0))
        fail("duration must be positive");
    if (!(startupTime > 0.0))
        fail("startup time must be positive");
    if (!(settleTime > 0.0))
        fail("settle time must be positive");
    if (!(minStepDuration > 0.0) || !(minStepDuration < maxStepDuration))
        fail("step duration bounds must satisfy 0 < min < max");
    if (!(minStepLength >= 0.0) || !(minStepLength < maxStepLength))
        fail("step length bounds must satisfy 0 <= min < max");
    if (!(feetDistance > 0.0))
        fail("feet distance must be positive");
    if (!(swingApex >= 0.0))
        fail("swing apex must be non-negative");
    if (!(doubleSupportRatio >= 0.0) || !(doubleSupportRatio < 1.0))
        fail("double support ratio must lie in [0, 1)");
    if (!(comHeight > 0.0))
        fail("com height must be positive");
    if (!(gravity > 0.0))
        fail("gravity must be positive");
}

StepTiming chooseStepTiming(const PlannerSettings& settings)
{
    settings.validate();

    constexpr double kGrid = 0.1;
    double candidate = settings.minStepDuration;
    while (true)
    {
        Unicycle probe;
        advanceUnicycle(probe, settings.speed, settings.turningRate, candidate);
        const double length = probe.position.norm();
        if (length >= settings.minStepLength - 1e-12 && length <= settings.maxStepLength + 1e-12)
        {
            return {candidate, length};
        }
        if (candidate >= settings.maxStepDuration - 1e-12)
        {
            break;
        }
        candidate = std::min(candidate + kGrid, settings.maxStepDuration);
    }

    std::ostringstream message;
    message << "no step duration in [" << settings.minStepDuration << ", "
            << settings.maxStepDuration << "] s gives a step length in ["
            << settings.minStepLength << ", " << settings.maxStepLength << "] m at speed "
            << settings.speed << " m/s";
    throw PlanInfeasible(message.str());
}

std::vector<Footstep> planFootsteps(const PlannerSettings& settings,
                                    const Eigen::Vector2d& leftPosition,
                                    const Eigen::Vector2d& rightPosition)
{
    settings.validate();
    const StepTiming timing = chooseStepTiming(settings);

    const double walkWindow = settings.duration - settings.startupTime - settings.settleTime;
    const int stepCount = std::max(0, static_cast<int>(std::floor(walkWindow / timing.duration + 1e-9)));

    Unicycle unicycle;
    unicycle.position = 0.5 * (leftPosition + rightPosition);
    const Eigen::Vector2d lateral = leftPosition - rightPosition;
    unicycle.heading = std::atan2(-lateral.x(), lateral.y());

    std::vector<Footstep> footsteps;
    footsteps.reserve(static_cast<std::size_t>(stepCount) + 2);

    Side swingSide = settings.firstSwing;
    const Eigen::Vector2d& firstSwingPosition =
        swingSide == Side::Left ? leftPosition : rightPosition;
    const Eigen::Vector2d& firstStancePosition =
        swingSide == Side::Left ? rightPosition : leftPosition;
    footsteps.push_back({swingSide, firstSwingPosition, unicycle.heading, 0.0, 0.0});
    footsteps.push_back({oppositeSide(swingSide), firstStancePosition, unicycle.heading, 0.0, 0.0});

    for (int k = 1; k <= stepCount; k++)
    {
        // The last step closes the gait beside the previous footfall instead
        // of advancing.
        if (k < stepCount)
        {
            advanceUnicycle(unicycle, settings.speed, settings.turningRate, timing.duration);
        }
        Footstep step;
        step.side = swingSide;
        step.position =
            unicycle.position + lateralOffset(unicycle.heading, swingSide, settings.feetDistance);
        step.yaw = unicycle.heading;
        step.impactTime = settings.startupTime + k * timing.duration;
        step.duration = timing.duration;
        footsteps.push_back(step);

        swingSide = oppositeSide(swingSide);
    }
    return footsteps;
}

WalkingPlan planWalk(const PlannerSettings& settings,
                     const Eigen::Vector2d& leftPosition,
                     const Eigen::Vector2d& rightPosition)
{
    settings.validate();

    WalkingPlan plan;
    plan.timeStep = settings.timeStep;
    plan.timeConstant = settings.timeConstant();
    plan.comHeight = settings.comHeight;
    plan.footsteps = planFootsteps(settings, leftPosition, rightPosition);

    const std::size_t stepCount = plan.footsteps.size() - 2;
    const Eigen::Vector2d initialMid = 0.5 * (leftPosition + rightPosition);
    const double initialYaw = plan.footsteps.front().yaw;

    Pose2 initialLeft{leftPosition, initialYaw};
    Pose2 initialRight{rightPosition, initialYaw};
    Pose2 left = initialLeft;
    Pose2 right = initialRight;

    // Zmp epochs: initial double support at the feet midpoint, one epoch per
    // step pinned to the stance sole, then rest at the final midpoint.
    struct StepRecord
    {
        Side side = Side::Left;
        Pose2 start;
        Pose2 goal;
        std::size_t epochIndex = 0;
    };
    std::vector<StepRecord> records;
    records.reserve(stepCount);

    if (stepCount == 0)
    {
        plan.epochs.push_back({initialMid, 0.0, settings.duration});
    }
    else
    {
        plan.epochs.push_back({initialMid, 0.0, settings.startupTime});
        for (std::size_t i = 2; i < plan.footsteps.size(); i++)
        {
            const Footstep& step = plan.footsteps[i];
            Pose2& swingFoot = step.side == Side::Left ? left : right;
            const Pose2& stanceFoot = step.side == Side::Left ? right : left;

            plan.epochs.push_back(
                {stanceFoot.position, step.impactTime - step.duration, step.duration});

            StepRecord record;
            record.side = step.side;
            record.start = swingFoot;
            record.goal = {step.position, step.yaw};
            record.epochIndex = plan.epochs.size() - 1;
            records.push_back(record);

            swingFoot = record.goal;
        }
        const double restStart = plan.footsteps.back().impactTime;
        plan.epochs.push_back(
            {0.5 * (left.position + right.position), restStart, settings.duration - restStart});
    }

    for (std::size_t j = 0; j + 1 < plan.epochs.size(); j++)
    {
        const double shorter = std::min(plan.epochs[j].duration, plan.epochs[j + 1].duration);
        plan.windowHalfWidths.push_back(0.5 * settings.doubleSupportRatio * shorter);
    }

    std::vector<SwingTrajectory> leftSwings;
    std::vector<SwingTrajectory> rightSwings;
    for (const StepRecord& record : records)
    {
        const DcmEpoch& epoch = plan.epochs[record.epochIndex];
        const double swingStart = epoch.startTime + plan.windowHalfWidths[record.epochIndex - 1];
        const double swingEnd =
            epoch.startTime + epoch.duration - plan.windowHalfWidths[record.epochIndex];
        SwingTrajectory swing(record.start.position, record.start.yaw, record.goal.position,
                              record.goal.yaw, swingStart, swingEnd, settings.swingApex);
        (record.side == Side::Left ? leftSwings : rightSwings).push_back(std::move(swing));
    }

    const DcmTrajectory dcmTrajectory(plan.epochs, plan.timeConstant, plan.windowHalfWidths);
    const double b = plan.timeConstant;
    const auto comRate = [&](double time, const Eigen::Vector2d& com)
    { return ((dcmTrajectory.evaluate(time).position - com) / b).eval(); };

    const std::size_t samples =
        static_cast<std::size_t>(std::floor(settings.duration / settings.timeStep + 1e-9)) + 1;
    plan.time.reserve(samples);
    plan.dcm.reserve(samples);
    plan.dcmVelocity.reserve(samples);
    plan.zmp.reserve(samples);
    plan.com.reserve(samples);
    plan.comVelocity.reserve(samples);
    plan.leftFoot.reserve(samples);
    plan.rightFoot.reserve(samples);
    plan.phase.reserve(samples);

    Eigen::Vector2d com = initialMid;
    for (std::size_t i = 0; i < samples; i++)
    {
        const double time = i * settings.timeStep;
        const DcmSample dcm = dcmTrajectory.evaluate(time);

        plan.time.push_back(time);
        plan.dcm.push_back(dcm.position);
        plan.dcmVelocity.push_back(dcm.velocity);
        plan.zmp.push_back(dcm.position - b * dcm.velocity);
        plan.com.push_back(com);
        plan.comVelocity.push_back((dcm.position - com) / b);

        const FootReference leftReference = footReference(leftSwings, initialLeft, time);
        const FootReference rightReference = footReference(rightSwings, initialRight, time);
        plan.leftFoot.push_back(leftReference);
        plan.rightFoot.push_back(rightReference);

        if (leftReference.contact && rightReference.contact)
        {
            plan.phase.push_back(SupportPhase::DoubleSupport);
        }
        else if (leftReference.contact)
        {
            plan.phase.push_back(SupportPhase::SingleSupportLeft);
        }
        else
        {
            plan.phase.push_back(SupportPhase::SingleSupportRight);
        }

        // Classic fourth order step for the stable pendulum mode.
        const double h = settings.timeStep;
        const Eigen::Vector2d k1 = comRate(time, com);
        const Eigen::Vector2d k2 = comRate(time + 0.5 * h, com + 0.5 * h * k1);
        const Eigen::Vector2d k3 = comRate(time + 0.5 * h, com + 0.5 * h * k2);
        const Eigen::Vector2d k4 = comRate(time + h, com + h * k3);
        com += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return plan;
}

WalkingPlan planWalk(const PlannerSettings& settings)
{
    const Eigen::Vector2d half(0.0, 0.5 * settings.feetDistance);
    return planWalk(settings, half, -half);
}

} // namespace dcmwalk
