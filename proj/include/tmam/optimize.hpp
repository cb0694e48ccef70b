#pragma once
/**
 * @file   optimize.hpp
 * @brief  Minimization of the discrete action over interior nodal values.
 *
 * Both problems are solved by limited-memory BFGS with a backtracking Armijo
 * line search. With Sobolev preconditioning the initial inverse-Hessian
 * guess is the inverse of K/T + T M (x) G on interior nodes, where K and M are
 * the P1 stiffness and mass matrices and G averages J^T J along the path.
 */

#include "tmam/action.hpp"
#include "tmam/path.hpp"

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace tmam
{

struct OptimConfig
{
    double tol_grad = 1e-9;          ///< stop when |grad|_inf <= tol_grad * max(1, |value|)
    int max_iters = 100000;
    int memory = 10;                 ///< quasi-Newton history length
    bool sobolev_precondition = true;
    std::optional<double> t_cap;     ///< reject iterates with T^ > t_cap (reduced functional only)
    double armijo = 1e-4;
    double shrink = 0.5;
    std::string log_path;            ///< iteration CSV when non-empty

    /// Throws InvalidArgument on an inconsistent configuration.
    void validate () const;
};

struct OptimResult
{
    FePath path;
    double value = 0.0;
    double t_hat = 0.0;   ///< T^ of the minimizer, or the prescribed T for fixed-time solves
    int iterations = 0;
    bool converged = false;
    double grad_norm = 0.0;
    double el_residual = 0.0;
    double hamiltonian_violation = 0.0;
    bool cap_active = false;
};

struct FixedTime
{
    double T;
};
struct OptimalTime
{
};
using SolveMode = std::variant<FixedTime, OptimalTime>;

OptimResult minimize_fixed_T (const FePath &start, const DriftField &field, double T, const OptimConfig &cfg,
                              const Quadrature &quad);

/// Throws DegeneratePath / DriftVanishes when the start admits no finite optimal time.
OptimResult minimize_tmam (const FePath &start, const DriftField &field, const OptimConfig &cfg,
                           const Quadrature &quad);

OptimResult minimize (const FePath &start, const DriftField &field, const SolveMode &mode, const OptimConfig &cfg,
                      const Quadrature &quad);

/**
 * @brief Warm-started resolution sweep on nested uniform meshes.
 *
 * The first level starts from the linear interpolant; each later level starts
 * from the previous minimizer interpolated onto the finer mesh. `N_list` must
 * be strictly increasing with each entry dividing the next.
 */
std::vector<OptimResult> continuation_sweep (const DriftField &field, const Eigen::VectorXd &x1,
                                             const Eigen::VectorXd &x2, const std::vector<std::size_t> &N_list,
                                             const OptimConfig &cfg, const Quadrature &quad, const SolveMode &mode);

} // namespace tmam
