#include "tmam/drift.hpp"

#include "tmam/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace tmam
{

namespace
{

Eigen::MatrixXd central_difference_jacobian (const DriftField::EvalFn &eval, const Eigen::VectorXd &x)
{
    const double step = 1e-6 * std::max (1.0, x.norm ());
    const Eigen::Index n = x.size ();
    Eigen::MatrixXd jac (n, n);
    Eigen::VectorXd probe = x;
    for (Eigen::Index j = 0; j < n; ++j)
    {
        probe (j) = x (j) + step;
        const Eigen::VectorXd up = eval (probe);
        probe (j) = x (j) - step;
        const Eigen::VectorXd down = eval (probe);
        probe (j) = x (j);
        jac.col (j) = (up - down) / (2.0 * step);
    }
    return jac;
}

double radical_inverse (unsigned index, unsigned base)
{
    double result = 0.0;
    double f = 1.0 / base;
    while (index > 0)
    {
        result += f * static_cast<double> (index % base);
        index /= base;
        f /= base;
    }
    return result;
}

constexpr std::array<unsigned, 16> kPrimes{2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

} // namespace

DriftField::DriftField (Eigen::Index dim, EvalFn eval, std::optional<JacobianFn> jacobian, DriftMetadata metadata,
                        std::string name)
    : m_dim (dim), m_eval (std::move (eval)), m_metadata (std::move (metadata)), m_name (std::move (name))
{
    if (m_dim < 1)
        throw Error (ErrorCode::InvalidArgument, "drift dimension must be positive");
    if (!m_eval)
        throw Error (ErrorCode::InvalidArgument, "drift needs an evaluation function");
    if (jacobian && *jacobian)
        m_jacobian = std::move (*jacobian);
    else
    {
        m_metadata.approximate_jacobian = true;
        m_jacobian = [eval = m_eval] (const Eigen::VectorXd &x) { return central_difference_jacobian (eval, x); };
    }
}

Eigen::VectorXd DriftField::eval (const Eigen::VectorXd &x) const
{
    if (x.size () != m_dim)
        throw Error (ErrorCode::DimensionMismatch, "drift evaluated at a point of the wrong dimension");
    return m_eval (x);
}

Eigen::MatrixXd DriftField::jacobian (const Eigen::VectorXd &x) const
{
    if (x.size () != m_dim)
        throw Error (ErrorCode::DimensionMismatch, "jacobian evaluated at a point of the wrong dimension");
    return m_jacobian (x);
}

DriftField DriftField::with_metadata (DriftMetadata metadata) const
{
    DriftField copy = *this;
    metadata.approximate_jacobian = m_metadata.approximate_jacobian;
    if (!metadata.linear_matrix)
        metadata.linear_matrix = m_metadata.linear_matrix;
    copy.m_metadata = std::move (metadata);
    return copy;
}

namespace
{

DriftField make_linear (const Eigen::MatrixXd &A, std::string name)
{
    if (A.rows () != A.cols () || A.rows () < 1)
        throw Error (ErrorCode::InvalidArgument, "linear drift needs a non-empty square matrix");
    if (!A.allFinite ())
        throw Error (ErrorCode::InvalidArgument, "linear drift matrix must be finite");

    DriftMetadata meta;
    meta.linear_matrix = A;
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd (A);
    meta.lipschitz = svd.singularValues ().size () > 0 ? svd.singularValues () (0) : 0.0;

    const Eigen::MatrixXd sym = 0.5 * (A + A.transpose ());
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig (sym, Eigen::EigenvaluesOnly);
    const double top = eig.eigenvalues ().maxCoeff ();
    if (top < 0.0)
    {
        // <Ax, x> = <sym x, x> <= top |x|^2 everywhere.
        meta.beta = -top;
        meta.r2 = 0.0;
    }

    return DriftField (
        A.rows (), [A] (const Eigen::VectorXd &x) -> Eigen::VectorXd { return A * x; },
        [A] (const Eigen::VectorXd &) -> Eigen::MatrixXd { return A; }, std::move (meta), std::move (name));
}

} // namespace

DriftField linear_field (const Eigen::MatrixXd &A) { return make_linear (A, "linear"); }

Eigen::MatrixXd paper_example_matrix ()
{
    const double a = 1.0 / 3.0;
    const double b = std::sqrt (8.0) / 3.0;
    Eigen::Matrix2d Binv;
    Binv << a, -b, b, a;
    Eigen::Matrix2d B;
    B << a, b, -b, a;
    const Eigen::Matrix2d J = Eigen::Vector2d (-10.0, -2.0).asDiagonal ();
    Eigen::Matrix2d A = B * J * Binv;
    // Symmetric up to rounding; make it exact.
    A (0, 1) = A (1, 0) = 0.5 * (A (0, 1) + A (1, 0));
    return A;
}

DriftField paper_example_field ()
{
    const DriftField field = make_linear (paper_example_matrix (), "paper_example");
    DriftMetadata meta = field.metadata ();
    meta.beta = 2.0;
    meta.r2 = 0.0;
    return field.with_metadata (std::move (meta));
}

DriftField maier_stein_field (double gamma)
{
    auto eval = [gamma] (const Eigen::VectorXd &x) -> Eigen::VectorXd {
        const double u = x (0);
        const double v = x (1);
        return Eigen::Vector2d (u - u * u * u - gamma * u * v * v, -(1.0 + u * u) * v);
    };
    auto jac = [gamma] (const Eigen::VectorXd &x) -> Eigen::MatrixXd {
        const double u = x (0);
        const double v = x (1);
        Eigen::Matrix2d J;
        J << 1.0 - 3.0 * u * u - gamma * v * v, -2.0 * gamma * u * v, -2.0 * u * v, -(1.0 + u * u);
        return J;
    };
    return DriftField (2, std::move (eval), std::move (jac), {}, "maier_stein");
}

InwardCheckReport check_inward_condition (const DriftField &field, int samples, double radius)
{
    const auto &meta = field.metadata ();
    if (!meta.beta || !meta.r2)
        throw Error (ErrorCode::MissingMetadata, "inward check needs beta and r2");
    if (samples < 1)
        throw Error (ErrorCode::InvalidArgument, "inward check needs at least one sample");
    const double beta = *meta.beta;
    const double r_lo = *meta.r2;
    if (!(radius >= r_lo))
        throw Error (ErrorCode::InvalidArgument, "probe radius below r2");
    const Eigen::Index n = field.dim ();
    if (static_cast<std::size_t> (n) + 1 > kPrimes.size ())
        throw Error (ErrorCode::InvalidArgument, "inward check supports dimension <= 15");

    InwardCheckReport report;
    report.worst_margin = -std::numeric_limits<double>::infinity ();
    Eigen::VectorXd x (n);
    for (unsigned i = 1; report.samples_checked < samples; ++i)
    {
        for (Eigen::Index j = 0; j < n; ++j)
            x (j) = 2.0 * radical_inverse (i, kPrimes[static_cast<std::size_t> (j)]) - 1.0;
        const double len = x.norm ();
        if (len < 1e-12)
            continue;
        const double r = r_lo + radical_inverse (i, kPrimes[static_cast<std::size_t> (n)]) * (radius - r_lo);
        x *= (r > 0.0 ? r : radius) / len;

        const double sq = x.squaredNorm ();
        const double margin = field.eval (x).dot (x) + beta * sq;
        ++report.samples_checked;
        report.worst_margin = std::max (report.worst_margin, margin);
        if (margin > 1e-12 * std::max (1.0, sq))
        {
            report.ok = false;
            report.violation = x;
            break;
        }
    }
    return report;
}

} // namespace tmam
