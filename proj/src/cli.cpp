#include "tmam/cli.hpp"

#include "tmam/linoracle.hpp"
#include "tmam/optimize.hpp"
#include "tmam/study.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>

namespace tmam
{

using nlohmann::json;

namespace
{

[[noreturn]] void fail (const std::string &msg) { throw Error (ErrorCode::ConfigError, msg); }

std::ofstream open_output (const std::filesystem::path &file)
{
    std::ofstream os (file);
    if (!os)
        fail ("cannot write '" + file.string () + "'");
    return os;
}

void write_json (const std::filesystem::path &file, const json &doc)
{
    auto os = open_output (file);
    os << doc.dump (2) << '\n';
}

json error_json (const Error &e)
{
    return {{"error", {{"code", std::string (to_string (e.code ()))}, {"message", e.what ()}}}};
}

json rate_json (const RateFit &fit)
{
    return {{"slope", fit.slope}, {"intercept", fit.intercept}, {"r_squared", fit.r_squared}};
}

json checks_json (const std::vector<StudyCheck> &checks)
{
    json out = json::array ();
    for (const auto &c : checks)
        out.push_back ({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    return out;
}

std::string mode_name (const SolveMode &mode) { return std::holds_alternative<OptimalTime> (mode) ? "tmam" : "fixed_t"; }

struct Problem
{
    DriftField field;
    Eigen::VectorXd x1;
    Eigen::VectorXd x2;
};

Problem build_problem (const ProblemSpec &spec)
{
    if (!spec.x1)
        fail ("problem.x1 is required");
    DriftField field = make_field (spec.field, spec.x1->size ());
    Eigen::VectorXd x2 = resolve_x2 (spec, field);
    return {std::move (field), *spec.x1, std::move (x2)};
}

OptimConfig optimizer_for (const RunConfig &cfg, const std::filesystem::path &out_dir)
{
    OptimConfig o = cfg.optimizer;
    if (!cfg.outputs.iteration_log.empty ())
        o.log_path = (out_dir / cfg.outputs.iteration_log).string ();
    return o;
}

FePath warm_start_path (const RunConfig &cfg, const Problem &p)
{
    std::ifstream in (cfg.warm_start);
    if (!in)
        fail ("cannot read warm_start '" + cfg.warm_start + "'");
    FePath path = read_path_csv (in);
    if (path.dim () != p.x1.size ())
        fail ("warm_start dimension differs from problem.x1");
    const auto close = [] (const Eigen::VectorXd &a, const Eigen::VectorXd &b) {
        return (a - b).norm () <= 1e-12 * std::max (1.0, b.norm ());
    };
    if (!close (path.left (), p.x1) || !close (path.right (), p.x2))
        fail ("warm_start endpoints differ from problem.x1 / problem.x2");
    if (cfg.N && *cfg.N != path.mesh ().num_elements ())
        path = interpolate_path (path, uniform_mesh (*cfg.N));
    return path;
}

std::vector<std::size_t> levels (const RunConfig &cfg, std::vector<std::size_t> fallback, std::size_t minimum)
{
    std::vector<std::size_t> N_list = cfg.N_list.empty () ? std::move (fallback) : cfg.N_list;
    if (N_list.empty ())
        fail ("mesh.N_list is required");
    if (N_list.size () < minimum)
        fail ("mesh.N_list needs at least " + std::to_string (minimum) + " entries for a rate fit");
    return N_list;
}

StudyOptions study_options (const StudySettings &s)
{
    StudyOptions o;
    o.trajectory_samples = s.trajectory_samples;
    o.frechet_per_element = s.frechet_per_element;
    o.clustering_radius = s.clustering_radius;
    o.check_rates = s.check_rates;
    return o;
}

void write_records (const std::filesystem::path &file, const std::vector<StudyRecord> &records)
{
    auto os = open_output (file);
    write_study_csv (os, records);
}

void reject_problem (const RunConfig &cfg, const std::string &study)
{
    if (cfg.problem)
        fail ("problem is fixed by study " + study + " and must not be given");
    if (cfg.mode)
        fail ("mode is fixed by study " + study + " and must not be given");
}

ExitCode run_guarded (const std::filesystem::path &error_file, const std::function<ExitCode ()> &body)
{
    try
    {
        if (!error_file.parent_path ().empty ())
            std::filesystem::create_directories (error_file.parent_path ());
        return body ();
    }
    catch (const std::filesystem::filesystem_error &e)
    {
        std::cerr << e.what () << '\n';
        return kExitInput;
    }
    catch (const Error &e)
    {
        std::cerr << e.what () << '\n';
        const ExitCode code = exit_code_for (e.code ());
        if (code == kExitSolver)
        {
            try
            {
                write_json (error_file, error_json (e));
            }
            catch (const Error &)
            {
            }
        }
        return code;
    }
}

} // namespace

ExitCode exit_code_for (ErrorCode code) noexcept
{
    switch (code)
    {
    case ErrorCode::DegeneratePath:
    case ErrorCode::DriftVanishes:
    case ErrorCode::NotConverged: return kExitSolver;
    case ErrorCode::InvalidArgument:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::MissingMetadata:
    case ErrorCode::ConfigError: return kExitInput;
    }
    return kExitInput;
}

ExitCode cmd_solve (const RunConfig &cfg, const std::filesystem::path &out_dir)
{
    return run_guarded (out_dir / cfg.outputs.result_json, [&] {
        if (!cfg.problem)
            fail ("problem is required for solve");
        const Problem p = build_problem (*cfg.problem);
        const SolveMode mode = cfg.mode.value_or (OptimalTime{});
        const Quadrature quad (cfg.quadrature);
        const OptimConfig opt = optimizer_for (cfg, out_dir);

        const OptimResult result = [&] {
            if (!cfg.warm_start.empty ())
                return minimize (warm_start_path (cfg, p), p.field, mode, opt, quad);
            if (cfg.N)
                return minimize (linear_interpolant_path (p.x1, p.x2, uniform_mesh (*cfg.N)), p.field, mode, opt,
                                 quad);
            if (!cfg.N_list.empty ())
                return continuation_sweep (p.field, p.x1, p.x2, cfg.N_list, opt, quad, mode).back ();
            fail ("mesh.N is required for solve");
        }();

        json doc = {{"mode", mode_name (mode)},
                    {"N", result.path.mesh ().num_elements ()},
                    {"value", result.value},
                    {"t_hat", result.t_hat},
                    {"grad_norm", result.grad_norm},
                    {"converged", result.converged},
                    {"el_residual", result.el_residual},
                    {"hamiltonian_violation", result.hamiltonian_violation},
                    {"iterations", result.iterations},
                    {"cap_active", result.cap_active}};
        if (!result.converged)
            doc["error"] = {{"code", std::string (to_string (ErrorCode::NotConverged))},
                            {"message", "gradient norm above tolerance after " +
                                            std::to_string (result.iterations) + " iterations"}};
        write_json (out_dir / cfg.outputs.result_json, doc);
        auto os = open_output (out_dir / cfg.outputs.path_csv);
        write_path_csv (os, result.path);
        return result.converged ? kExitOk : kExitSolver;
    });
}

ExitCode cmd_study (const RunConfig &cfg, const std::filesystem::path &out_dir)
{
    return run_guarded (out_dir / cfg.outputs.summary_json, [&] {
        const std::string &name = cfg.study.name;
        const Quadrature quad (cfg.quadrature);
        const OptimConfig opt = optimizer_for (cfg, out_dir);
        const StudyOptions sopt = study_options (cfg.study);
        json summary = {{"study", name}, {"config", cfg.raw}};
        std::vector<StudyCheck> checks;

        if (name == "case_i")
        {
            reject_problem (cfg, name);
            const auto res = run_case_i (levels (cfg, {8, 16, 32, 64, 128}, 3), opt, quad, sopt);
            write_records (out_dir / cfg.outputs.study_csv, res.records);
            summary["rates"] = {{"action", rate_json (res.rate_action)}, {"t_hat", rate_json (res.rate_T)}};
            checks = res.checks;
        }
        else if (name == "case_ii")
        {
            reject_problem (cfg, name);
            const auto res = run_case_ii (levels (cfg, {16, 32, 64, 128}, 3), cfg.study.T_fixed, opt, quad, sopt);
            write_records (out_dir / cfg.outputs.study_csv, res.records_tmam);
            write_records (out_dir / cfg.outputs.study_fixed_csv, res.records_fixed);
            summary["rates"] = {{"action_tmam", rate_json (res.rate_tmam)}};
            summary["T_fixed"] = cfg.study.T_fixed;
            json levels_json = json::array ();
            for (std::size_t k = 0; k < res.records_tmam.size (); ++k)
                levels_json.push_back ({{"N", res.records_tmam[k].N},
                                        {"tmam_over_fixed", res.action_ratio[k]},
                                        {"clustering_tmam", res.clustering_tmam[k]},
                                        {"clustering_fixed", res.clustering_fixed[k]}});
            summary["levels"] = levels_json;
            checks = res.checks;
        }
        else if (name == "linear_fixed_t")
        {
            ProblemSpec spec;
            if (cfg.problem)
                spec = *cfg.problem;
            else
            {
                spec.field.type = "linear";
                spec.field.A = Eigen::MatrixXd::Constant (1, 1, -1.0);
                spec.x1 = Eigen::VectorXd::Zero (1);
                spec.x2 = Eigen::VectorXd::Ones (1);
            }
            const Problem p = build_problem (spec);
            if (!p.field.is_linear ())
                fail ("study linear_fixed_t needs a linear field");
            const SolveMode mode = cfg.mode.value_or (FixedTime{1.0});
            if (!std::holds_alternative<FixedTime> (mode))
                fail ("study linear_fixed_t needs mode.type 'fixed_t'");
            const auto res = run_linear_fixed_T_study (*p.field.metadata ().linear_matrix, p.x1, p.x2,
                                                       std::get<FixedTime> (mode).T,
                                                       levels (cfg, {8, 16, 32, 64, 128}, 2), opt, quad, sopt);
            write_records (out_dir / cfg.outputs.study_csv, res.records);
            summary["rates"] = json::object ();
            if (res.rate_h1)
                summary["rates"]["h1"] = rate_json (*res.rate_h1);
            if (res.rate_action)
                summary["rates"]["action"] = rate_json (*res.rate_action);
            checks = res.checks;
        }
        else
        {
            if (!cfg.problem)
                fail ("problem is required for study custom");
            if (!cfg.mode)
                fail ("mode is required for study custom");
            const Problem p = build_problem (*cfg.problem);
            const auto res = run_sweep (p.field, p.x1, p.x2, *cfg.mode, levels (cfg, {}, 2), opt, quad,
                                        cfg.study.reference_action, cfg.study.reference_time);
            write_records (out_dir / cfg.outputs.study_csv, res.records);
            summary["rates"] = json::object ();
            if (res.rate_action)
                summary["rates"]["action"] = rate_json (*res.rate_action);
            checks = res.checks;
        }

        const bool passed = all_passed (checks);
        summary["checks"] = checks_json (checks);
        summary["passed"] = passed;
        write_json (out_dir / cfg.outputs.summary_json, summary);
        if (!passed)
            for (const auto &c : checks)
                if (!c.passed)
                    std::cerr << "study assertion failed: " << c.name << ": " << c.detail << '\n';
        return passed ? kExitOk : kExitAssertion;
    });
}

ExitCode cmd_oracle (const RunConfig &cfg, const std::filesystem::path &out_dir)
{
    return run_guarded (out_dir / cfg.outputs.result_json, [&] {
        if (!cfg.problem)
            fail ("problem is required for oracle");
        if (!cfg.problem->x1)
            fail ("problem.x1 is required");
        const DriftField field = make_field (cfg.problem->field, cfg.problem->x1->size ());
        if (!field.is_linear ())
            fail ("oracle needs a linear field");
        const Eigen::MatrixXd &A = *field.metadata ().linear_matrix;
        auto os = open_output (out_dir / cfg.outputs.oracle_csv);

        if (cfg.oracle.kind == "trajectory")
        {
            const Trajectory traj = sample_trajectory (A, *cfg.problem->x1, cfg.oracle.t_end, cfg.oracle.samples);
            os << "t";
            for (Eigen::Index i = 0; i < A.rows (); ++i)
                os << ",x" << i + 1;
            os << '\n' << std::setprecision (17);
            for (std::size_t k = 0; k < traj.times.size (); ++k)
            {
                if (std::isinf (traj.times[k]))
                    os << "inf";
                else
                    os << traj.times[k];
                for (Eigen::Index i = 0; i < A.rows (); ++i)
                    os << ',' << traj.points.points () (static_cast<Eigen::Index> (k), i);
                os << '\n';
            }
            return kExitOk;
        }

        if (!cfg.mode || !std::holds_alternative<FixedTime> (*cfg.mode))
            fail ("oracle exact_minimizer needs mode.type 'fixed_t'");
        if (!cfg.N)
            fail ("mesh.N is required for oracle exact_minimizer");
        const double T = std::get<FixedTime> (*cfg.mode).T;
        const SpectralLinearProblem prob (A, *cfg.problem->x1, resolve_x2 (*cfg.problem, field), T);
        write_path_csv (os, exact_fixed_T_path (prob, uniform_mesh (*cfg.N)));
        write_json (out_dir / cfg.outputs.result_json,
                    {{"kind", "exact_minimizer"}, {"T", T}, {"action", exact_fixed_T_action (prob)}});
        return kExitOk;
    });
}

int run_cli (int argc, const char *const *argv)
{
    CLI::App app{"Minimum action paths with optimal linear time scaling"};
    app.require_subcommand (1);

    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir = ".";
    for (auto [name, help] : {std::pair{"solve", "Minimize the action on one mesh"},
                              std::pair{"study", "Run a resolution study"},
                              std::pair{"oracle", "Emit closed-form reference data for linear drift"}})
    {
        CLI::App *sub = app.add_subcommand (name, help);
        sub->add_option ("--config", config_path, "JSON configuration file");
        sub->add_option ("--set", overrides, "Override a key, e.g. mode.T=50 (repeatable)")
            ->expected (1)
            ->multi_option_policy (CLI::MultiOptionPolicy::TakeAll);
        sub->add_option ("--out-dir", out_dir, "Directory for output files");
    }

    try
    {
        app.parse (argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        return app.exit (e) == 0 ? kExitOk : kExitInput;
    }

    RunConfig cfg;
    try
    {
        json doc = config_path.empty () ? json::object () : load_config_file (config_path);
        for (const auto &o : overrides)
            apply_override (doc, o);
        cfg = parse_config (doc);
    }
    catch (const Error &e)
    {
        std::cerr << e.what () << '\n';
        return exit_code_for (e.code ());
    }

    const std::string command = app.get_subcommands ().front ()->get_name ();
    if (command == "solve")
        return cmd_solve (cfg, out_dir);
    if (command == "study")
        return cmd_study (cfg, out_dir);
    return cmd_oracle (cfg, out_dir);
}

int run_cli (const std::vector<std::string> &args)
{
    std::vector<const char *> argv{"tmam"};
    for (const auto &a : args)
        argv.push_back (a.c_str ());
    return run_cli (static_cast<int> (argv.size ()), argv.data ());
}

} // namespace tmam
