#pragma once
/**
 * @file   drift.hpp
 * @brief  Vector fields b(x) of the noise-free dynamics dx/dt = b(x).
 */

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string>

namespace tmam
{

/// Constants that describe how a field satisfies the standing confinement assumptions.
struct DriftMetadata
{
    std::optional<double> lipschitz;           ///< global Lipschitz constant K
    std::optional<double> beta;                ///< <b(x), x> <= -beta |x|^2 for |x| >= r2
    std::optional<double> r1;                  ///< confinement ball for minimizers
    std::optional<double> r2;
    std::optional<Eigen::MatrixXd> linear_matrix; ///< set when b(x) = A x
    bool approximate_jacobian = false;         ///< Jacobian is a finite-difference wrapper
};

class DriftField
{
  public:
    using EvalFn = std::function<Eigen::VectorXd (const Eigen::VectorXd &)>;
    using JacobianFn = std::function<Eigen::MatrixXd (const Eigen::VectorXd &)>;

    /// A missing Jacobian is replaced by central differences with step 1e-6 max(1, |x|).
    DriftField (Eigen::Index dim, EvalFn eval, std::optional<JacobianFn> jacobian, DriftMetadata metadata = {},
                std::string name = "custom");

    [[nodiscard]] Eigen::Index dim () const noexcept { return m_dim; }
    [[nodiscard]] Eigen::VectorXd eval (const Eigen::VectorXd &x) const;
    [[nodiscard]] Eigen::VectorXd operator() (const Eigen::VectorXd &x) const { return eval (x); }
    /// Entry (i, j) is d b_i / d x_j.
    [[nodiscard]] Eigen::MatrixXd jacobian (const Eigen::VectorXd &x) const;
    [[nodiscard]] const DriftMetadata &metadata () const noexcept { return m_metadata; }
    [[nodiscard]] const std::string &name () const noexcept { return m_name; }
    [[nodiscard]] bool is_linear () const noexcept { return m_metadata.linear_matrix.has_value (); }

    [[nodiscard]] DriftField with_metadata (DriftMetadata metadata) const;

  private:
    Eigen::Index m_dim;
    EvalFn m_eval;
    JacobianFn m_jacobian;
    DriftMetadata m_metadata;
    std::string m_name;
};

/// b(x) = A x. Records K = ||A||_2 and, for symmetric negative definite A,
/// beta = -lambda_max(A) with r2 = 0.
DriftField linear_field (const Eigen::MatrixXd &A);

/// The 2-D symmetric example A = B J B^{-1}, B = [[a, b], [-b, a]], a = 1/3,
/// b = sqrt(8)/3, J = diag(-10, -2): eigenvectors (a, -b) and (b, a), so
/// A = [[-26/9, 16 sqrt 2 / 9], [16 sqrt 2 / 9, -82/9]].
Eigen::MatrixXd paper_example_matrix ();
DriftField paper_example_field ();

/// Maier-Stein: b1 = u - u^3 - gamma u v^2, b2 = -(1 + u^2) v.
DriftField maier_stein_field (double gamma = 10.0);

struct InwardCheckReport
{
    bool ok = true;
    int samples_checked = 0;
    std::optional<Eigen::VectorXd> violation; ///< first offending point
    double worst_margin = 0.0;                ///< max of <b(x),x> + beta |x|^2 seen
};

/// Probes <b(x), x> + beta |x|^2 <= 0 on Halton points with |x| in [r2, radius].
InwardCheckReport check_inward_condition (const DriftField &field, int samples, double radius);

} // namespace tmam
