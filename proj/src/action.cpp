#include "tmam/action.hpp"

#include "tmam/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace tmam
{

Quadrature::Quadrature (int points_per_element)
{
    if (points_per_element < 1)
        throw Error (ErrorCode::InvalidArgument, "quadrature needs at least one point per element");
    const int q = points_per_element;
    m_points.resize (static_cast<std::size_t> (q));
    m_weights.resize (static_cast<std::size_t> (q));

    // Newton iteration on P_q from the Chebyshev-like initial guesses; roots on [-1, 1].
    for (int i = 0; i < q; ++i)
    {
        double x = std::cos (std::numbers::pi * (i + 0.75) / (q + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter)
        {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= q; ++k)
            {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = q * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs (dx) < 1e-16)
                break;
        }
        // Recompute the derivative at the converged root for the weight.
        double p0 = 1.0;
        double p1 = x;
        for (int k = 2; k <= q; ++k)
        {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = q * (x * p1 - p0) / (x * x - 1.0);
        const auto slot = static_cast<std::size_t> (q - 1 - i);
        m_points[slot] = 0.5 * (x + 1.0);
        m_weights[slot] = 1.0 / ((1.0 - x * x) * dp * dp); // 2 / ((1 - x^2) P'^2), halved for [0, 1]
    }
}

namespace
{

/// Calls fn(e, xi, weight * h, h, x, dphi) at every quadrature point.
template <typename Fn> void for_each_point (const FePath &path, const Quadrature &quad, Fn &&fn)
{
    const auto &v = path.values ();
    const auto &mesh = path.mesh ();
    for (std::size_t e = 0; e < mesh.num_elements (); ++e)
    {
        const auto ei = static_cast<Eigen::Index> (e);
        const double h = mesh.element_size (e);
        const Eigen::VectorXd left = v.row (ei).transpose ();
        const Eigen::VectorXd right = v.row (ei + 1).transpose ();
        const Eigen::VectorXd dphi = (right - left) / h;
        for (int k = 0; k < quad.size (); ++k)
        {
            const double xi = quad.points ()[static_cast<std::size_t> (k)];
            const double w = quad.weights ()[static_cast<std::size_t> (k)] * h;
            const Eigen::VectorXd x = (1.0 - xi) * left + xi * right;
            fn (e, xi, w, h, x, dphi);
        }
    }
}

void check_time (double T, const char *what)
{
    if (!(T > 0.0) || !std::isfinite (T))
        throw Error (ErrorCode::InvalidArgument, std::string (what) + " must be positive and finite");
}

void check_dims (const FePath &path, const DriftField &field)
{
    if (path.dim () != field.dim ())
        throw Error (ErrorCode::DimensionMismatch, "path and drift dimensions differ");
}

/// Adds `contrib_left` to node e and `contrib_right` to node e + 1, skipping the pinned endpoints.
void scatter (Eigen::MatrixXd &grad, std::size_t e, std::size_t elements, const Eigen::VectorXd &contrib_left,
              const Eigen::VectorXd &contrib_right)
{
    if (e >= 1)
        grad.row (static_cast<Eigen::Index> (e - 1)) += contrib_left.transpose ();
    if (e + 1 < elements)
        grad.row (static_cast<Eigen::Index> (e)) += contrib_right.transpose ();
}

Eigen::MatrixXd zero_grad (const FePath &path)
{
    return Eigen::MatrixXd::Zero (static_cast<Eigen::Index> (path.mesh ().num_elements ()) - 1, path.dim ());
}

double checked_time_ratio (const PathNorms &norms)
{
    const double deriv = std::sqrt (norms.derivative_sq);
    const double drift = std::sqrt (norms.drift_sq);
    if (deriv <= kDegenerateNorm)
        throw Error (ErrorCode::DegeneratePath, "|phi'|_0 vanishes, the path is constant");
    if (drift <= kDegenerateNorm)
        throw Error (ErrorCode::DriftVanishes, "|b(phi)|_0 vanishes, the optimal time is infinite");
    return deriv / drift;
}

} // namespace

PathNorms path_norms (const FePath &path, const DriftField &field, const Quadrature &quad)
{
    check_dims (path, field);
    PathNorms norms;
    for_each_point (path, quad,
                    [&] (std::size_t, double, double w, double, const Eigen::VectorXd &x, const Eigen::VectorXd &dphi) {
                        const Eigen::VectorXd b = field.eval (x);
                        norms.derivative_sq += w * dphi.squaredNorm ();
                        norms.drift_sq += w * b.squaredNorm ();
                        norms.cross += w * dphi.dot (b);
                    });
    return norms;
}

double action_fixed_T (const FePath &path, const DriftField &field, double T, const Quadrature &quad)
{
    check_time (T, "T");
    check_dims (path, field);
    double sum = 0.0;
    for_each_point (path, quad,
                    [&] (std::size_t, double, double w, double, const Eigen::VectorXd &x, const Eigen::VectorXd &dphi) {
                        sum += w * (dphi / T - field.eval (x)).squaredNorm ();
                    });
    return 0.5 * T * sum;
}

double optimal_time (const FePath &path, const DriftField &field, const Quadrature &quad)
{
    return checked_time_ratio (path_norms (path, field, quad));
}

ActionEvaluation evaluate_fixed_T (const FePath &path, const DriftField &field, double T, const Quadrature &quad)
{
    check_time (T, "T");
    check_dims (path, field);
    const std::size_t elements = path.mesh ().num_elements ();
    ActionEvaluation out;
    out.t_hat = T;
    out.grad = zero_grad (path);
    double sum = 0.0;
    for_each_point (path, quad,
                    [&] (std::size_t e, double xi, double w, double h, const Eigen::VectorXd &x,
                         const Eigen::VectorXd &dphi) {
                        const Eigen::VectorXd r = dphi / T - field.eval (x);
                        sum += w * r.squaredNorm ();
                        const Eigen::VectorXd jtr = field.jacobian (x).transpose () * r;
                        scatter (out.grad, e, elements, w * (-r / h - T * (1.0 - xi) * jtr),
                                 w * (r / h - T * xi * jtr));
                    });
    out.value = 0.5 * T * sum;
    return out;
}

ActionEvaluation evaluate_optimal (const FePath &path, const DriftField &field, const Quadrature &quad)
{
    // Envelope identity: dS/dT vanishes at T^, so grad S^ = grad S(., T^).
    return evaluate_fixed_T (path, field, optimal_time (path, field, quad), quad);
}

Eigen::MatrixXd grad_action_fixed_T (const FePath &path, const DriftField &field, double T, const Quadrature &quad)
{
    return evaluate_fixed_T (path, field, T, quad).grad;
}

Eigen::MatrixXd grad_action_optimal (const FePath &path, const DriftField &field, const Quadrature &quad)
{
    const PathNorms norms = path_norms (path, field, quad);
    const double t_hat = checked_time_ratio (norms);
    const std::size_t elements = path.mesh ().num_elements ();
    Eigen::MatrixXd grad = zero_grad (path);

    // First variation of |phi'|_0 |b|_0 - <phi', b> in direction v:
    //   (|b|/|phi'|) <phi', v'> + (|phi'|/|b|) <b, Jv> - <v', b> - <phi', Jv>.
    for_each_point (path, quad,
                    [&] (std::size_t e, double xi, double w, double h, const Eigen::VectorXd &x,
                         const Eigen::VectorXd &dphi) {
                        const Eigen::VectorXd b = field.eval (x);
                        const Eigen::MatrixXd J = field.jacobian (x);
                        const Eigen::VectorXd slope_part = b - dphi / t_hat;
                        const Eigen::VectorXd jac_part = J.transpose () * (t_hat * b - dphi);
                        scatter (grad, e, elements, w * (slope_part / h + (1.0 - xi) * jac_part),
                                 w * (-slope_part / h + xi * jac_part));
                    });
    return grad;
}

double hamiltonian_violation (const FePath &path, const DriftField &field, double t_hat, const Quadrature &quad)
{
    check_time (t_hat, "t_hat");
    check_dims (path, field);
    double worst = 0.0;
    for_each_point (path, quad,
                    [&] (std::size_t, double, double, double, const Eigen::VectorXd &x, const Eigen::VectorXd &dphi) {
                        worst = std::max (worst, std::abs (dphi.norm () / t_hat - field.eval (x).norm ()));
                    });
    return worst;
}

Eigen::MatrixXd apply_inverse_stiffness (const Mesh &mesh, const Eigen::MatrixXd &rhs)
{
    const auto m = static_cast<Eigen::Index> (mesh.num_elements ()) - 1;
    if (rhs.rows () != m)
        throw Error (ErrorCode::DimensionMismatch, "stiffness solve needs one row per interior node");
    Eigen::MatrixXd out = rhs;
    if (m == 0)
        return out;

    // Thomas algorithm on K_kk = 1/h_{k-1} + 1/h_k, K_{k,k+1} = -1/h_k (interior node k = row + 1).
    std::vector<double> diag (static_cast<std::size_t> (m));
    std::vector<double> upper (static_cast<std::size_t> (m));
    for (Eigen::Index r = 0; r < m; ++r)
    {
        const auto k = static_cast<std::size_t> (r + 1);
        diag[static_cast<std::size_t> (r)] = 1.0 / mesh.element_size (k - 1) + 1.0 / mesh.element_size (k);
        upper[static_cast<std::size_t> (r)] = -1.0 / mesh.element_size (k);
    }
    std::vector<double> c (static_cast<std::size_t> (m));
    c[0] = upper[0] / diag[0];
    out.row (0) /= diag[0];
    for (Eigen::Index r = 1; r < m; ++r)
    {
        const auto ru = static_cast<std::size_t> (r);
        const double lower = upper[ru - 1];
        const double denom = diag[ru] - lower * c[ru - 1];
        c[ru] = upper[ru] / denom;
        out.row (r) = (out.row (r) - lower * out.row (r - 1)) / denom;
    }
    for (Eigen::Index r = m - 2; r >= 0; --r)
        out.row (r) -= c[static_cast<std::size_t> (r)] * out.row (r + 1);
    return out;
}

double dual_norm (const Mesh &mesh, const Eigen::MatrixXd &residual)
{
    if (residual.rows () == 0)
        return 0.0;
    const Eigen::MatrixXd z = apply_inverse_stiffness (mesh, residual);
    return std::sqrt (std::max (0.0, (residual.array () * z.array ()).sum ()));
}

double h1_seminorm (const FePath &path)
{
    const auto &v = path.values ();
    double sum = 0.0;
    for (std::size_t e = 0; e < path.mesh ().num_elements (); ++e)
    {
        const auto ei = static_cast<Eigen::Index> (e);
        sum += (v.row (ei + 1) - v.row (ei)).squaredNorm () / path.mesh ().element_size (e);
    }
    return std::sqrt (sum);
}

double el_residual (const FePath &path, const DriftField &field, double T, const Quadrature &quad)
{
    const ActionEvaluation eval = evaluate_fixed_T (path, field, T, quad);
    const double dual = dual_norm (path.mesh (), eval.grad);
    const double scale = h1_seminorm (path);
    return scale > 0.0 ? dual / scale : dual;
}

ActionReport action_optimal (const FePath &path, const DriftField &field, const Quadrature &quad)
{
    const PathNorms norms = path_norms (path, field, quad);
    ActionReport report;
    report.t_hat = checked_time_ratio (norms);
    report.value = std::sqrt (norms.derivative_sq) * std::sqrt (norms.drift_sq) - norms.cross;
    const ActionEvaluation eval = evaluate_fixed_T (path, field, report.t_hat, quad);
    report.grad = eval.grad;
    report.hamiltonian_violation = hamiltonian_violation (path, field, report.t_hat, quad);
    const double scale = h1_seminorm (path);
    const double dual = dual_norm (path.mesh (), eval.grad);
    report.el_residual = scale > 0.0 ? dual / scale : dual;
    return report;
}

} // namespace tmam
