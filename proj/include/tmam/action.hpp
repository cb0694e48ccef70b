#pragma once
/**
 * @file   action.hpp
 * @brief  Discrete Freidlin-Wentzell action functionals on linear finite elements.
 *
 * Paths are parameterized on s in [0, 1]. For a transition time T the
 * rescaled action is
 *
 *     S(T, phi) = T/2 * int_0^1 | phi'(s) / T - b(phi(s)) |^2 ds,
 *
 * the optimal linear time scaling is T^(phi) = |phi'|_0 / |b(phi)|_0, and the
 * reduced functional S^(phi) = S(T^(phi), phi) = |phi'|_0 |b(phi)|_0 - <phi', b(phi)>.
 * All integrals use element-wise Gauss-Legendre quadrature.
 */

#include "tmam/drift.hpp"
#include "tmam/path.hpp"

#include <Eigen/Dense>

#include <vector>

namespace tmam
{

/// Gauss-Legendre rule on the reference element [0, 1]; weights sum to 1.
class Quadrature
{
  public:
    explicit Quadrature (int points_per_element = 3);

    [[nodiscard]] int size () const noexcept { return static_cast<int> (m_points.size ()); }
    [[nodiscard]] const std::vector<double> &points () const noexcept { return m_points; }
    [[nodiscard]] const std::vector<double> &weights () const noexcept { return m_weights; }

  private:
    std::vector<double> m_points;
    std::vector<double> m_weights;
};

/// Degeneracy threshold for |phi'|_0 and |b(phi)|_0.
inline constexpr double kDegenerateNorm = 1e-14;

/// L2 quantities entering T^ and S^.
struct PathNorms
{
    double derivative_sq = 0.0; ///< |phi'|_0^2
    double drift_sq = 0.0;      ///< |b(phi)|_0^2
    double cross = 0.0;         ///< <phi', b(phi)>
};

PathNorms path_norms (const FePath &path, const DriftField &field, const Quadrature &quad);

struct ActionReport
{
    double value = 0.0;                 ///< S^ by the inner-product rewrite
    double t_hat = 0.0;
    Eigen::MatrixXd grad;               ///< (N-1) x n, rows align with interior nodes
    double hamiltonian_violation = 0.0;
    double el_residual = 0.0;
};

/// Value plus gradient with respect to the interior nodal values.
struct ActionEvaluation
{
    double value = 0.0;
    double t_hat = 0.0; ///< the time used: T for fixed-time, T^ for the reduced functional
    Eigen::MatrixXd grad;
};

double action_fixed_T (const FePath &path, const DriftField &field, double T, const Quadrature &quad);

/// Throws DegeneratePath when |phi'|_0 <= kDegenerateNorm, DriftVanishes when |b(phi)|_0 <= kDegenerateNorm.
double optimal_time (const FePath &path, const DriftField &field, const Quadrature &quad);

ActionReport action_optimal (const FePath &path, const DriftField &field, const Quadrature &quad);

Eigen::MatrixXd grad_action_fixed_T (const FePath &path, const DriftField &field, double T, const Quadrature &quad);

Eigen::MatrixXd grad_action_optimal (const FePath &path, const DriftField &field, const Quadrature &quad);

/// S(T, phi) and its gradient, accumulated from squared residuals.
ActionEvaluation evaluate_fixed_T (const FePath &path, const DriftField &field, double T, const Quadrature &quad);

/// S^(phi) and its gradient, accumulated as S(T^, phi). Free of the cancellation in
/// the inner-product rewrite, so it stays accurate when S^ is tiny.
ActionEvaluation evaluate_optimal (const FePath &path, const DriftField &field, const Quadrature &quad);

/// max over quadrature points of | |phi'| / t_hat - |b(phi)| |.
double hamiltonian_violation (const FePath &path, const DriftField &field, double t_hat, const Quadrature &quad);

/**
 * @brief Euler-Lagrange residual of S(T, .) at `path`.
 *
 * The weak residual against interior hat functions is measured in the
 * discrete H^{-1} norm (inverse stiffness matrix) and divided by |phi|_1.
 */
double el_residual (const FePath &path, const DriftField &field, double T, const Quadrature &quad);

/// Discrete H^{-1} norm of a residual on interior nodes: sqrt(sum_i r_i^T K^{-1} r_i) over components i.
double dual_norm (const Mesh &mesh, const Eigen::MatrixXd &residual);

/// Applies K^{-1} per component, K the interior stiffness matrix (hat-function Laplacian).
Eigen::MatrixXd apply_inverse_stiffness (const Mesh &mesh, const Eigen::MatrixXd &rhs);

/// |phi|_1 = |phi'|_0.
double h1_seminorm (const FePath &path);

} // namespace tmam
