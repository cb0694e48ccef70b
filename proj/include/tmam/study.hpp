#pragma once
/**
 * @file   study.hpp
 * @brief  Resolution sweeps, error metrics against reference solutions and
 *         log-log rate fits.
 */

#include "tmam/action.hpp"
#include "tmam/drift.hpp"
#include "tmam/optimize.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace tmam
{

struct StudyRecord
{
    std::size_t N = 0;
    double h = 0.0; ///< max element size
    double action = 0.0;
    double action_error = 0.0;
    double t_hat = 0.0;
    std::optional<double> t_error;
    std::optional<double> h1_error; ///< |phi_h - phi|_1 against the reference path
    std::optional<double> frechet;
    double hamiltonian_violation = 0.0;
    int iterations = 0;
};

struct RateFit
{
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

/// Pass/fail of one built-in study assertion.
struct StudyCheck
{
    std::string name;
    bool passed = false;
    std::string detail;
};

using RecordSelector = std::function<std::optional<double> (const StudyRecord &)>;

/// Least squares on (log N, log err); pairs with err <= 0 or absent are skipped.
/// Throws InvalidArgument with fewer than 2 usable pairs.
RateFit fit_rate (const std::vector<StudyRecord> &records, const RecordSelector &select);
RateFit fit_rate (const std::vector<double> &N, const std::vector<double> &errors);

namespace select
{
std::optional<double> action_error (const StudyRecord &r);
std::optional<double> t_error (const StudyRecord &r);
std::optional<double> h1_error (const StudyRecord &r);
std::optional<double> frechet (const StudyRecord &r);
} // namespace select

struct StudyOptions
{
    int trajectory_samples = 20000; ///< dense trajectory used for Frechet distances
    int frechet_per_element = 8;    ///< samples per element of the discrete path
    double clustering_radius = 0.05;
    bool check_rates = true;        ///< include the rate-window assertions
};

struct CaseIResult
{
    std::vector<StudyRecord> records;
    std::vector<OptimResult> runs;
    RateFit rate_action;
    RateFit rate_T;
    std::vector<StudyCheck> checks;
};

/// tMAM on the built-in 2-D example from (1, 1) to e^A (1, 1), where T* = 1 and the minimum is 0.
CaseIResult run_case_i (const std::vector<std::size_t> &N_list, const OptimConfig &cfg, const Quadrature &quad,
                        const StudyOptions &opts = {});

struct CaseIIResult
{
    std::vector<StudyRecord> records_tmam;
    std::vector<StudyRecord> records_fixed;
    std::vector<OptimResult> runs_tmam;
    std::vector<OptimResult> runs_fixed;
    RateFit rate_tmam;
    std::vector<double> clustering_tmam;  ///< per level, nodes within the radius of the origin
    std::vector<double> clustering_fixed;
    std::vector<double> action_ratio;     ///< tMAM action / fixed-T action per level
    std::vector<StudyCheck> checks;
};

/// tMAM and fixed-T sweeps on the built-in example from (1, 1) to the attractor 0 (T* infinite).
CaseIIResult run_case_ii (const std::vector<std::size_t> &N_list, double T_fixed, const OptimConfig &cfg,
                          const Quadrature &quad, const StudyOptions &opts = {});

struct LinearStudyResult
{
    std::vector<StudyRecord> records;
    std::vector<OptimResult> runs;
    std::optional<RateFit> rate_h1;     ///< absent when fewer than two errors are positive
    std::optional<RateFit> rate_action;
    std::vector<StudyCheck> checks;
};

/// Fixed-T sweep for symmetric b(x) = A x against the closed-form minimizer.
LinearStudyResult run_linear_fixed_T_study (const Eigen::MatrixXd &A, const Eigen::VectorXd &x1,
                                            const Eigen::VectorXd &x2, double T,
                                            const std::vector<std::size_t> &N_list, const OptimConfig &cfg,
                                            const Quadrature &quad, const StudyOptions &opts = {});

struct SweepResult
{
    std::vector<StudyRecord> records;
    std::vector<OptimResult> runs;
    std::optional<RateFit> rate_action;
    std::vector<StudyCheck> checks;
};

/**
 * @brief Generic sweep. action_error = |value - reference_action| (raw value
 *        when no reference is given), t_error = |t_hat - reference_time|.
 */
SweepResult run_sweep (const DriftField &field, const Eigen::VectorXd &x1, const Eigen::VectorXd &x2,
                       const SolveMode &mode, const std::vector<std::size_t> &N_list, const OptimConfig &cfg,
                       const Quadrature &quad, std::optional<double> reference_action = std::nullopt,
                       std::optional<double> reference_time = std::nullopt);

/// |u_h - u|_1 on [0, 1] by 10-point Gauss-Legendre per element; du gives u'(s).
double h1_seminorm_error (const FePath &path, const std::function<Eigen::VectorXd (double)> &du);

/// Header `N,h,action,action_error,t_hat,t_error,h1_error,frechet,ham_violation,iterations`,
/// absent optionals as empty fields, 17 significant digits.
void write_study_csv (std::ostream &os, const std::vector<StudyRecord> &records);

bool all_passed (const std::vector<StudyCheck> &checks);

} // namespace tmam
