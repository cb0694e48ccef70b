#pragma once
/**
 * @file   config.hpp
 * @brief  Run configuration: JSON schema, validation and `--set` overrides.
 *
 * Every section rejects keys it does not know, naming the full dotted key.
 *
 *   problem.field     {type: paper_example | linear | maier_stein | zero, matrix, gamma, dim}
 *   problem.x1, x2    arrays; x2 may also be {"flow_time": t} for e^{tA} x1
 *   mode              {type: tmam | fixed_t, T}
 *   mesh              {N, N_list}
 *   optimizer         OptimConfig fields
 *   quadrature        {q}
 *   study             {name: case_i | case_ii | linear_fixed_t | custom, T_fixed, trajectory_samples,
 *                      frechet_per_element, clustering_radius, check_rates, reference_action, reference_time}
 *   oracle            {kind: trajectory | exact_minimizer, t_end (number or "inf"), samples}
 *   warm_start        path CSV
 *   outputs           {result_json, path_csv, study_csv, study_fixed_csv, summary_json, iteration_log, oracle_csv}
 */

#include "tmam/drift.hpp"
#include "tmam/optimize.hpp"

#include <json.hpp>

#include <Eigen/Dense>

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tmam
{

struct FieldSpec
{
    std::string type = "paper_example";
    std::optional<Eigen::MatrixXd> A;
    double gamma = 10.0;
    std::optional<Eigen::Index> dim;
};

struct ProblemSpec
{
    FieldSpec field;
    std::optional<Eigen::VectorXd> x1;
    std::optional<Eigen::VectorXd> x2;
    std::optional<double> x2_flow_time;
};

struct StudySettings
{
    std::string name = "custom";
    double T_fixed = 100.0;
    int trajectory_samples = 20000;
    int frechet_per_element = 8;
    double clustering_radius = 0.05;
    bool check_rates = true;
    std::optional<double> reference_action;
    std::optional<double> reference_time;
};

struct OracleSettings
{
    std::string kind = "trajectory";
    double t_end = std::numeric_limits<double>::infinity ();
    int samples = 200;
};

struct OutputPaths
{
    std::string result_json = "result.json";
    std::string path_csv = "path.csv";
    std::string study_csv = "study.csv";
    std::string study_fixed_csv = "study_fixed.csv";
    std::string summary_json = "summary.json";
    std::string iteration_log;
    std::string oracle_csv = "oracle.csv";
};

struct RunConfig
{
    std::optional<ProblemSpec> problem;
    std::optional<SolveMode> mode;
    std::optional<std::size_t> N;
    std::vector<std::size_t> N_list;
    OptimConfig optimizer;
    int quadrature = 3;
    StudySettings study;
    OracleSettings oracle;
    std::string warm_start;
    OutputPaths outputs;
    nlohmann::json raw; ///< the validated document, echoed into summaries
};

/// Parses and validates; throws ConfigError naming the offending key.
RunConfig parse_config (const nlohmann::json &doc);

/// Reads a JSON file; throws ConfigError when unreadable or malformed.
nlohmann::json load_config_file (const std::string &path);

/**
 * @brief Applies `dotted.key=value`. The value is parsed as JSON when it
 *        parses, otherwise taken as a string. Missing sections are created.
 */
void apply_override (nlohmann::json &doc, std::string_view assignment);

DriftField make_field (const FieldSpec &spec, Eigen::Index dim);

/// x2 from the problem, resolving {"flow_time": t} through e^{tA} x1.
Eigen::VectorXd resolve_x2 (const ProblemSpec &problem, const DriftField &field);

} // namespace tmam
