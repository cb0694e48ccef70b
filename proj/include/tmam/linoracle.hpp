#pragma once
/**
 * @file   linoracle.hpp
 * @brief  Closed-form reference solutions for symmetric linear drift b(x) = A x.
 *
 * In the eigenbasis of A the fixed-time action decouples into scalar problems
 * with Euler-Lagrange equation c'' = (mu T)^2 c on [0, 1], mu = |lambda|.
 */

#include "tmam/path.hpp"

#include <Eigen/Dense>

#include <limits>
#include <optional>
#include <vector>

namespace tmam
{

inline constexpr double kInfiniteTime = std::numeric_limits<double>::infinity ();

class SpectralLinearProblem
{
  public:
    /// Throws InvalidArgument when A is not symmetric to 1e-12 (relative to its size).
    SpectralLinearProblem (Eigen::MatrixXd A, Eigen::VectorXd x1, Eigen::VectorXd x2,
                           std::optional<double> T = std::nullopt);

    [[nodiscard]] const Eigen::MatrixXd &A () const noexcept { return m_A; }
    [[nodiscard]] const Eigen::VectorXd &eigenvalues () const noexcept { return m_eigenvalues; }
    /// Orthonormal columns, ordered like eigenvalues() (ascending).
    [[nodiscard]] const Eigen::MatrixXd &eigenvectors () const noexcept { return m_eigenvectors; }
    [[nodiscard]] const Eigen::VectorXd &x1 () const noexcept { return m_x1; }
    [[nodiscard]] const Eigen::VectorXd &x2 () const noexcept { return m_x2; }
    [[nodiscard]] std::optional<double> T () const noexcept { return m_T; }

  private:
    Eigen::MatrixXd m_A;
    Eigen::VectorXd m_eigenvalues;
    Eigen::MatrixXd m_eigenvectors;
    Eigen::VectorXd m_x1;
    Eigen::VectorXd m_x2;
    std::optional<double> m_T;
};

/// e^{tA} x through the spectral decomposition. Throws on asymmetry beyond 1e-10.
Eigen::VectorXd matrix_exp_apply (const Eigen::MatrixXd &A, double t, const Eigen::VectorXd &x);

/// Minimizer of S(T, .) at scaled time s in [0, 1].
Eigen::VectorXd exact_fixed_T_minimizer (const SpectralLinearProblem &prob, double s);

/// d/ds of exact_fixed_T_minimizer.
Eigen::VectorXd exact_fixed_T_minimizer_derivative (const SpectralLinearProblem &prob, double s);

/// Minimum of S(T, .), from the boundary terms of the quadratic action.
double exact_fixed_T_action (const SpectralLinearProblem &prob);

/// Nodal samples of the exact minimizer on `mesh`.
FePath exact_fixed_T_path (const SpectralLinearProblem &prob, const Mesh &mesh);

struct Trajectory
{
    std::vector<double> times;
    Polyline points;
};

/**
 * @brief Samples of t -> e^{tA} x at t = 0 and log-spaced times up to t_end.
 *
 * With t_end = kInfiniteTime the horizon is where |e^{tA} x| first drops
 * below 1e-10, and the equilibrium 0 is appended (time reported as +inf).
 */
Trajectory sample_trajectory (const Eigen::MatrixXd &A, const Eigen::VectorXd &x, double t_end, int samples);

Polyline trajectory_polyline (const Eigen::MatrixXd &A, const Eigen::VectorXd &x, double t_end, int samples);

} // namespace tmam
