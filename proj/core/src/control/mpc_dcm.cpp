#include <dcmwalk/control/mpc_dcm.hpp>

#include <cmath>
#include <stdexcept>

namespace dcmwalk
{

namespace
{

double minSymmetricEigenvalue(const Eigen::Matrix2d& matrix)
{
    const Eigen::Matrix2d symmetric = 0.5 * (matrix + matrix.transpose());
    return Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(symmetric).eigenvalues().minCoeff();
}

} // namespace

void MpcSettings::validate() const
{
    if (horizon < 1)
    {
        throw std::invalid_argument("MpcSettings: horizon must be at least one sample");
    }
    if (!(timeStep > 0.0))
    {
        throw std::invalid_argument("MpcSettings: time step must be positive");
    }
    if (minSymmetricEigenvalue(stateWeight) < -1e-12
        || minSymmetricEigenvalue(terminalWeight) < -1e-12)
    {
        throw std::invalid_argument("MpcSettings: state weights must be positive semidefinite");
    }
    if (minSymmetricEigenvalue(inputRateWeight) <= 0.0)
    {
        throw std::invalid_argument("MpcSettings: input rate weight must be positive definite");
    }
}

MpcController::MpcController(const MpcSettings& settings, double timeConstant)
    : m_settings(settings)
{
    m_settings.validate();
    if (!(timeConstant > 0.0))
    {
        throw std::invalid_argument("MpcController: time constant must be positive");
    }

    const int horizon = m_settings.horizon;
    m_growth = std::exp(m_settings.timeStep / timeConstant);
    m_input = 1.0 - m_growth;

    m_growthPowers.resize(static_cast<std::size_t>(horizon) + 1);
    m_growthPowers[0] = 1.0;
    for (int j = 1; j <= horizon; j++)
    {
        m_growthPowers[static_cast<std::size_t>(j)] =
            m_growthPowers[static_cast<std::size_t>(j - 1)] * m_growth;
    }

    const int n = 2 * horizon;
    Eigen::MatrixXd cost = Eigen::MatrixXd::Zero(n, n);

    // Tracking terms: xi_j depends on r_i (i < j) through G F^{j-1-i}.
    Eigen::VectorXd influence(horizon);
    for (int j = 1; j <= horizon; j++)
    {
        const Eigen::Matrix2d& weight =
            j == horizon ? m_settings.terminalWeight : m_settings.stateWeight;
        for (int i = 0; i < j; i++)
        {
            influence(i) = m_input * m_growthPowers[static_cast<std::size_t>(j - 1 - i)];
        }
        for (int i = 0; i < j; i++)
        {
            for (int k = 0; k < j; k++)
            {
                cost.block<2, 2>(2 * i, 2 * k) += influence(i) * influence(k) * weight;
            }
        }
    }

    // Increment terms sum_j || r_j - r_{j-1} ||_R with r_{-1} held fixed.
    const Eigen::Matrix2d& rate = m_settings.inputRateWeight;
    for (int j = 0; j < horizon; j++)
    {
        cost.block<2, 2>(2 * j, 2 * j) += j + 1 < horizon ? 2.0 * rate : rate;
        if (j + 1 < horizon)
        {
            cost.block<2, 2>(2 * j, 2 * (j + 1)) -= rate;
            cost.block<2, 2>(2 * (j + 1), 2 * j) -= rate;
        }
    }

    // The eliminated unstable flow spreads the diagonal over many orders of
    // magnitude; a Jacobi rescaling keeps the solver comfortable.
    Eigen::MatrixXd hessian = 2.0 * cost;
    m_variableScale = hessian.diagonal().cwiseSqrt().cwiseMax(1e-8);
    m_hessian = m_variableScale.cwiseInverse().asDiagonal() * hessian
                * m_variableScale.cwiseInverse().asDiagonal();

    m_qpSettings = QpSettings{};
}

MpcResult MpcController::solve(const Eigen::Vector2d& dcm,
                               const std::vector<Eigen::Vector2d>& dcmReference,
                               const std::vector<const SupportPolygon*>& polygons,
                               const Eigen::Vector2d& previousZmp)
{
    const int horizon = m_settings.horizon;
    const int n = 2 * horizon;
    if (dcmReference.size() != static_cast<std::size_t>(horizon) + 1)
    {
        throw std::invalid_argument("MpcController: reference window must span horizon+1 samples");
    }
    if (polygons.size() != static_cast<std::size_t>(horizon))
    {
        throw std::invalid_argument("MpcController: one support polygon per horizon sample");
    }
    for (const SupportPolygon* polygon : polygons)
    {
        if (polygon == nullptr)
        {
            throw std::invalid_argument("MpcController: null support polygon");
        }
    }

    Eigen::VectorXd gradient = Eigen::VectorXd::Zero(n);
    for (int j = 1; j <= horizon; j++)
    {
        const Eigen::Matrix2d& weight =
            j == horizon ? m_settings.terminalWeight : m_settings.stateWeight;
        const Eigen::Vector2d drift =
            m_growthPowers[static_cast<std::size_t>(j)] * dcm
            - dcmReference[static_cast<std::size_t>(j)];
        const Eigen::Vector2d weighted = 2.0 * (weight * drift);
        for (int i = 0; i < j; i++)
        {
            gradient.segment<2>(2 * i) +=
                m_input * m_growthPowers[static_cast<std::size_t>(j - 1 - i)] * weighted;
        }
    }
    gradient.segment<2>(0) -= 2.0 * (m_settings.inputRateWeight * previousZmp);

    Eigen::Index rows = 0;
    for (const SupportPolygon* polygon : polygons)
    {
        rows += polygon->normals().rows();
    }

    QpProblem problem;
    problem.hessian = m_hessian;
    problem.gradient = gradient.cwiseQuotient(m_variableScale);
    problem.constraintMatrix = Eigen::MatrixXd::Zero(rows, n);
    problem.lowerBound = Eigen::VectorXd::Constant(rows, -kQpInfinity);
    problem.upperBound.resize(rows);

    Eigen::Index row = 0;
    for (int j = 0; j < horizon; j++)
    {
        const SupportPolygon& polygon = *polygons[static_cast<std::size_t>(j)];
        const Eigen::Index count = polygon.normals().rows();
        problem.constraintMatrix.block(row, 2 * j, count, 2) = polygon.normals();
        problem.upperBound.segment(row, count) = polygon.offsets();
        row += count;
    }
    // Constraints act on the unscaled inputs; fold the scaling into the rows.
    problem.constraintMatrix *= m_variableScale.cwiseInverse().asDiagonal();

    const QpSolution solution = solveQp(problem, m_qpSettings, m_warmStart);

    MpcResult result;
    result.iterations = solution.iterations;
    result.polished = solution.polished;
    result.predictedDcm.assign(static_cast<std::size_t>(horizon) + 1, dcm);

    if (solution.status == QpStatus::Solved)
    {
        result.status = MpcStatus::Solved;
        m_warmStart = QpWarmStart{solution.primal, solution.dual};

        const Eigen::VectorXd inputs = solution.primal.cwiseQuotient(m_variableScale);
        result.zmp = inputs.segment<2>(0);
        for (int j = 0; j < horizon; j++)
        {
            result.predictedDcm[static_cast<std::size_t>(j) + 1] =
                m_growth * result.predictedDcm[static_cast<std::size_t>(j)]
                + m_input * inputs.segment<2>(2 * j);
        }
    }
    else
    {
        result.status = solution.status == QpStatus::MaxIterations ? MpcStatus::Failed
                                                                   : MpcStatus::Infeasible;
        m_warmStart.reset();
    }
    return result;
}

} // namespace dcmwalk
