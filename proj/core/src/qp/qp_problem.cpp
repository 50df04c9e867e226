#include <dcmwalk/qp/qp_problem.hpp>

#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace dcmwalk
{

void QpProblem::validate() const
{
    const auto n = gradient.size();
    const auto m = lowerBound.size();

    if (n < 1)
    {
        throw InvalidProblem("QpProblem: at least one variable required");
    }
    if (hessian.rows() != n || hessian.cols() != n)
    {
        throw InvalidProblem("QpProblem: hessian must be " + std::to_string(n) + "x"
                             + std::to_string(n));
    }
    if (upperBound.size() != m)
    {
        throw InvalidProblem("QpProblem: lower and upper bound sizes differ");
    }
    if (constraintMatrix.rows() != m || (m > 0 && constraintMatrix.cols() != n))
    {
        throw InvalidProblem("QpProblem: constraint matrix must be " + std::to_string(m) + "x"
                             + std::to_string(n));
    }

    const double scale = std::max(1.0, hessian.lpNorm<Eigen::Infinity>());
    if ((hessian - hessian.transpose()).lpNorm<Eigen::Infinity>() > 1e-9 * scale)
    {
        throw InvalidProblem("QpProblem: hessian is not symmetric");
    }

    for (Eigen::Index i = 0; i < m; i++)
    {
        if (std::isnan(lowerBound(i)) || std::isnan(upperBound(i))
            || lowerBound(i) > upperBound(i))
        {
            throw InvalidProblem("QpProblem: invalid bounds on row " + std::to_string(i));
        }
    }
    if (!hessian.allFinite() || !gradient.allFinite() || (m > 0 && !constraintMatrix.allFinite()))
    {
        throw InvalidProblem("QpProblem: non-finite entry in hessian, gradient or constraints");
    }
}

namespace
{

void writeMatrix(std::ostream& out, const char* name, const Eigen::MatrixXd& m)
{
    out << name << " " << m.rows() << " " << m.cols() << "\n";
    for (Eigen::Index r = 0; r < m.rows(); r++)
    {
        for (Eigen::Index c = 0; c < m.cols(); c++)
        {
            out << m(r, c) << (c + 1 < m.cols() ? " " : "");
        }
        out << "\n";
    }
}

Eigen::MatrixXd readMatrix(std::istream& in, const std::string& expectedName)
{
    std::string name;
    Eigen::Index rows = -1;
    Eigen::Index cols = -1;
    if (!(in >> name >> rows >> cols) || name != expectedName || rows < 0 || cols < 0)
    {
        throw std::runtime_error("qp problem file: expected section '" + expectedName + "'");
    }
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; r++)
    {
        for (Eigen::Index c = 0; c < cols; c++)
        {
            if (!(in >> m(r, c)))
            {
                throw std::runtime_error("qp problem file: truncated section '" + expectedName
                                         + "'");
            }
        }
    }
    return m;
}

} // namespace

void saveQpProblem(const QpProblem& problem, const std::string& path)
{
    std::ofstream out(path);
    if (!out)
    {
        throw std::runtime_error("saveQpProblem: cannot open " + path);
    }
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    out << "qp_problem 1\n";
    writeMatrix(out, "hessian", problem.hessian);
    writeMatrix(out, "gradient", problem.gradient);
    writeMatrix(out, "constraint_matrix", problem.constraintMatrix);
    writeMatrix(out, "lower_bound", problem.lowerBound);
    writeMatrix(out, "upper_bound", problem.upperBound);
}

QpProblem loadQpProblem(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
    {
        throw std::runtime_error("loadQpProblem: cannot open " + path);
    }
    std::string magic;
    int version = 0;
    if (!(in >> magic >> version) || magic != "qp_problem" || version != 1)
    {
        throw std::runtime_error("loadQpProblem: " + path + " is not a qp problem file");
    }
    QpProblem problem;
    problem.hessian = readMatrix(in, "hessian");
    problem.gradient = readMatrix(in, "gradient");
    problem.constraintMatrix = readMatrix(in, "constraint_matrix");
    problem.lowerBound = readMatrix(in, "lower_bound");
    problem.upperBound = readMatrix(in, "upper_bound");
    problem.validate();
    return problem;
}

} // namespace dcmwalk
