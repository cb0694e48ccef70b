#include "tmam/linoracle.hpp"

#include "tmam/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace tmam
{

namespace
{

void require_symmetric (const Eigen::MatrixXd &A, double tol)
{
    if (A.rows () != A.cols () || A.rows () < 1)
        throw Error (ErrorCode::InvalidArgument, "matrix must be square and non-empty");
    if (!A.allFinite ())
        throw Error (ErrorCode::InvalidArgument, "matrix must be finite");
    const double scale = std::max (1.0, A.cwiseAbs ().maxCoeff ());
    if ((A - A.transpose ()).cwiseAbs ().maxCoeff () > tol * scale)
        throw Error (ErrorCode::InvalidArgument, "matrix is not symmetric");
}

/// sinh(a) / sinh(c) for 0 <= a <= c, without overflow.
double sinh_ratio (double a, double c)
{
    if (c == 0.0)
        return 1.0; // caller handles the linear limit
    return std::exp (a - c) * (-std::expm1 (-2.0 * a)) / (-std::expm1 (-2.0 * c));
}

/// c cosh(a) / sinh(c) for 0 <= a <= c, tends to 1 as c -> 0.
double scaled_cosh_ratio (double a, double c)
{
    if (c == 0.0)
        return 1.0;
    return c / (-std::expm1 (-2.0 * c)) * std::exp (a - c) * (1.0 + std::exp (-2.0 * a));
}

double require_time (const SpectralLinearProblem &prob)
{
    if (!prob.T ())
        throw Error (ErrorCode::InvalidArgument, "the fixed-time oracle needs T");
    return *prob.T ();
}

} // namespace

SpectralLinearProblem::SpectralLinearProblem (Eigen::MatrixXd A, Eigen::VectorXd x1, Eigen::VectorXd x2,
                                              std::optional<double> T)
    : m_A (std::move (A)), m_x1 (std::move (x1)), m_x2 (std::move (x2)), m_T (T)
{
    require_symmetric (m_A, 1e-12);
    if (m_x1.size () != m_A.rows () || m_x2.size () != m_A.rows ())
        throw Error (ErrorCode::DimensionMismatch, "endpoint dimension differs from matrix size");
    if (m_T && !(*m_T > 0.0 && std::isfinite (*m_T)))
        throw Error (ErrorCode::InvalidArgument, "T must be positive and finite");
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig (0.5 * (m_A + m_A.transpose ()));
    m_eigenvalues = eig.eigenvalues ();
    m_eigenvectors = eig.eigenvectors ();
}

Eigen::VectorXd matrix_exp_apply (const Eigen::MatrixXd &A, double t, const Eigen::VectorXd &x)
{
    require_symmetric (A, 1e-10);
    if (x.size () != A.rows ())
        throw Error (ErrorCode::DimensionMismatch, "vector dimension differs from matrix size");
    if (t == 0.0)
        return x;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig (0.5 * (A + A.transpose ()));
    const Eigen::MatrixXd &Q = eig.eigenvectors ();
    const Eigen::VectorXd scale = (t * eig.eigenvalues ()).array ().exp ();
    return Q * (scale.asDiagonal () * (Q.transpose () * x));
}

Eigen::VectorXd exact_fixed_T_minimizer (const SpectralLinearProblem &prob, double s)
{
    const double T = require_time (prob);
    const Eigen::MatrixXd &Q = prob.eigenvectors ();
    const Eigen::VectorXd y1 = Q.transpose () * prob.x1 ();
    const Eigen::VectorXd y2 = Q.transpose () * prob.x2 ();
    Eigen::VectorXd c (y1.size ());
    for (Eigen::Index i = 0; i < c.size (); ++i)
    {
        const double kappa = std::abs (prob.eigenvalues () (i)) * T;
        if (kappa == 0.0)
            c (i) = y1 (i) + (y2 (i) - y1 (i)) * s;
        else
            c (i) = y1 (i) * sinh_ratio (kappa * (1.0 - s), kappa) + y2 (i) * sinh_ratio (kappa * s, kappa);
    }
    Eigen::VectorXd out = Q * c;
    if (s == 0.0)
        out = prob.x1 ();
    else if (s == 1.0)
        out = prob.x2 ();
    return out;
}

Eigen::VectorXd exact_fixed_T_minimizer_derivative (const SpectralLinearProblem &prob, double s)
{
    const double T = require_time (prob);
    const Eigen::MatrixXd &Q = prob.eigenvectors ();
    const Eigen::VectorXd y1 = Q.transpose () * prob.x1 ();
    const Eigen::VectorXd y2 = Q.transpose () * prob.x2 ();
    Eigen::VectorXd c (y1.size ());
    for (Eigen::Index i = 0; i < c.size (); ++i)
    {
        const double kappa = std::abs (prob.eigenvalues () (i)) * T;
        c (i) = -y1 (i) * scaled_cosh_ratio (kappa * (1.0 - s), kappa) + y2 (i) * scaled_cosh_ratio (kappa * s, kappa);
    }
    return Q * c;
}

double exact_fixed_T_action (const SpectralLinearProblem &prob)
{
    // Along the Euler-Lagrange solution, 1/2 int (c'^2 + lambda^2 c^2) dt equals the boundary term
    // 1/2 [c c']_0^T, and -lambda int c c' dt = -lambda/2 (c(T)^2 - c(0)^2).
    const double T = require_time (prob);
    const Eigen::MatrixXd &Q = prob.eigenvectors ();
    const Eigen::VectorXd y1 = Q.transpose () * prob.x1 ();
    const Eigen::VectorXd y2 = Q.transpose () * prob.x2 ();
    double total = 0.0;
    for (Eigen::Index i = 0; i < y1.size (); ++i)
    {
        const double lambda = prob.eigenvalues () (i);
        const double kappa = std::abs (lambda) * T;
        double k_coth; // kappa coth(kappa)
        double k_csch; // kappa csch(kappa)
        if (kappa < 1e-4)
        {
            const double k2 = kappa * kappa;
            k_coth = 1.0 + k2 / 3.0;
            k_csch = 1.0 - k2 / 6.0;
        }
        else
        {
            const double denom = -std::expm1 (-2.0 * kappa);
            k_coth = kappa * (1.0 + std::exp (-2.0 * kappa)) / denom;
            k_csch = kappa * 2.0 * std::exp (-kappa) / denom;
        }
        const double a = y1 (i);
        const double b = y2 (i);
        total += ((a * a + b * b) * k_coth - 2.0 * a * b * k_csch) / T - lambda * (b * b - a * a);
    }
    return 0.5 * total;
}

FePath exact_fixed_T_path (const SpectralLinearProblem &prob, const Mesh &mesh)
{
    Eigen::MatrixXd values (static_cast<Eigen::Index> (mesh.num_nodes ()), prob.x1 ().size ());
    for (std::size_t k = 0; k < mesh.num_nodes (); ++k)
        values.row (static_cast<Eigen::Index> (k)) = exact_fixed_T_minimizer (prob, mesh.node (k)).transpose ();
    return FePath (mesh, std::move (values));
}

Trajectory sample_trajectory (const Eigen::MatrixXd &A, const Eigen::VectorXd &x, double t_end, int samples)
{
    if (samples < 2)
        throw Error (ErrorCode::InvalidArgument, "trajectory needs at least 2 samples");
    require_symmetric (A, 1e-10);
    if (x.size () != A.rows ())
        throw Error (ErrorCode::DimensionMismatch, "start point dimension differs from matrix size");

    const bool infinite = std::isinf (t_end) && t_end > 0.0;
    if (!infinite && !(t_end > 0.0 && std::isfinite (t_end)))
        throw Error (ErrorCode::InvalidArgument, "t_end must be positive");

    double horizon = t_end;
    if (infinite)
    {
        constexpr double kDecayed = 1e-10;
        if (x.norm () < kDecayed)
            horizon = 0.0;
        else
        {
            double hi = 1.0;
            while (matrix_exp_apply (A, hi, x).norm () >= kDecayed)
            {
                hi *= 2.0;
                if (hi > 1e8)
                    throw Error (ErrorCode::InvalidArgument, "trajectory does not decay to the equilibrium");
            }
            double lo = 0.0;
            for (int k = 0; k < 100 && hi - lo > 1e-12 * hi; ++k)
            {
                const double mid = 0.5 * (lo + hi);
                (matrix_exp_apply (A, mid, x).norm () < kDecayed ? hi : lo) = mid;
            }
            horizon = hi;
        }
    }

    std::vector<double> times{0.0};
    const int logged = infinite ? samples - 2 : samples - 1;
    if (logged > 0 && horizon > 0.0)
    {
        const double t_lo = 1e-6 * horizon;
        for (int k = 0; k < logged; ++k)
        {
            const double frac = logged == 1 ? 1.0 : static_cast<double> (k) / (logged - 1);
            times.push_back (t_lo * std::pow (horizon / t_lo, frac));
        }
        times.back () = horizon;
    }

    const auto rows = static_cast<Eigen::Index> (times.size () + (infinite ? 1 : 0));
    Eigen::MatrixXd points (std::max<Eigen::Index> (rows, 2), x.size ());
    for (std::size_t k = 0; k < times.size (); ++k)
        points.row (static_cast<Eigen::Index> (k)) = matrix_exp_apply (A, times[k], x).transpose ();
    if (infinite)
    {
        times.push_back (kInfiniteTime);
        points.row (static_cast<Eigen::Index> (times.size ()) - 1).setZero ();
    }
    return Trajectory{std::move (times), Polyline (std::move (points))};
}

Polyline trajectory_polyline (const Eigen::MatrixXd &A, const Eigen::VectorXd &x, double t_end, int samples)
{
    return sample_trajectory (A, x, t_end, samples).points;
}

} // namespace tmam
