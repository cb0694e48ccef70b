#include "tmam/study.hpp"

#include "tmam/errors.hpp"
#include "tmam/linoracle.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <tuple>

namespace tmam
{

namespace
{

std::string fmt (double x)
{
    std::ostringstream os;
    os << std::setprecision (6) << x;
    return os.str ();
}

/// Warm-started sweep that names the failing level.
std::vector<OptimResult> sweep (const DriftField &field, const Eigen::VectorXd &x1, const Eigen::VectorXd &x2,
                                const std::vector<std::size_t> &N_list, const SolveMode &mode,
                                const OptimConfig &cfg, const Quadrature &quad)
{
    if (N_list.empty ())
        throw Error (ErrorCode::InvalidArgument, "N_list must not be empty");
    for (std::size_t i = 1; i < N_list.size (); ++i)
        if (N_list[i] <= N_list[i - 1] || N_list[i] % N_list[i - 1] != 0)
            throw Error (ErrorCode::InvalidArgument, "N_list must be strictly increasing with nested meshes");

    std::vector<OptimResult> runs;
    for (const std::size_t N : N_list)
    {
        const Mesh mesh = uniform_mesh (N);
        const FePath start =
            runs.empty () ? linear_interpolant_path (x1, x2, mesh) : interpolate_path (runs.back ().path, mesh);
        try
        {
            runs.push_back (minimize (start, field, mode, cfg, quad));
        }
        catch (const Error &e)
        {
            throw Error (e.code (), "level N=" + std::to_string (N) + ": " + e.what ());
        }
        if (!runs.back ().converged)
            throw Error (ErrorCode::NotConverged, "level N=" + std::to_string (N) + ": gradient norm " +
                                                      fmt (runs.back ().grad_norm) + " after " +
                                                      std::to_string (runs.back ().iterations) + " iterations");
    }
    return runs;
}

StudyRecord base_record (std::size_t N, const OptimResult &run)
{
    StudyRecord r;
    r.N = N;
    r.h = run.path.mesh ().max_element_size ();
    r.action = run.value;
    r.action_error = std::abs (run.value);
    r.t_hat = run.t_hat;
    r.hamiltonian_violation = run.hamiltonian_violation;
    r.iterations = run.iterations;
    return r;
}

StudyCheck monotone_minima (const std::string &name, const std::vector<OptimResult> &runs)
{
    StudyCheck c{name, true, "values nonincreasing under refinement"};
    for (std::size_t k = 1; k < runs.size (); ++k)
        if (runs[k].value > runs[k - 1].value + 1e-10)
        {
            c.passed = false;
            c.detail = "value rises from " + fmt (runs[k - 1].value) + " to " + fmt (runs[k].value);
        }
    return c;
}

StudyCheck slope_window (const std::string &name, const RateFit &fit, double lo, double hi, bool lo_open,
                         std::optional<double> min_r2)
{
    bool ok = (lo_open ? fit.slope > lo : fit.slope >= lo) && fit.slope <= hi;
    if (min_r2)
        ok = ok && fit.r_squared >= *min_r2;
    std::string detail = "slope " + fmt (fit.slope) + " in " + (lo_open ? "(" : "[") + fmt (lo) + ", " + fmt (hi) + "]";
    if (min_r2)
        detail += ", r^2 " + fmt (fit.r_squared) + " >= " + fmt (*min_r2);
    return {name, ok, detail};
}

std::optional<RateFit> try_fit (const std::vector<StudyRecord> &records, const RecordSelector &select)
{
    int usable = 0;
    for (const auto &r : records)
        if (auto v = select (r); v && *v > 0.0)
            ++usable;
    if (usable < 2)
        return std::nullopt;
    return fit_rate (records, select);
}

void require_levels (const std::vector<std::size_t> &N_list, std::size_t minimum)
{
    if (N_list.size () < minimum)
        throw Error (ErrorCode::InvalidArgument,
                     "N_list needs at least " + std::to_string (minimum) + " levels for a rate fit");
}

/// At least ten trajectory samples per point of the finest discrete polyline.
int trajectory_samples (const std::vector<std::size_t> &N_list, const StudyOptions &opts)
{
    const auto finest = static_cast<int> (N_list.back ()) * opts.frechet_per_element + 1;
    return std::max (opts.trajectory_samples, 10 * finest);
}

void write_optional (std::ostream &os, const std::optional<double> &v)
{
    os << ',';
    if (v)
        os << *v;
}

} // namespace

namespace select
{
std::optional<double> action_error (const StudyRecord &r) { return r.action_error; }
std::optional<double> t_error (const StudyRecord &r) { return r.t_error; }
std::optional<double> h1_error (const StudyRecord &r) { return r.h1_error; }
std::optional<double> frechet (const StudyRecord &r) { return r.frechet; }
} // namespace select

RateFit fit_rate (const std::vector<double> &N, const std::vector<double> &errors)
{
    if (N.size () != errors.size ())
        throw Error (ErrorCode::DimensionMismatch, "rate fit needs one error per level");
    std::vector<double> xs;
    std::vector<double> ys;
    for (std::size_t i = 0; i < N.size (); ++i)
        if (N[i] > 0.0 && errors[i] > 0.0 && std::isfinite (errors[i]))
        {
            xs.push_back (std::log (N[i]));
            ys.push_back (std::log (errors[i]));
        }
    if (xs.size () < 2)
        throw Error (ErrorCode::InvalidArgument, "rate fit needs at least 2 positive errors");

    const auto n = static_cast<double> (xs.size ());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size (); ++i)
    {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size (); ++i)
    {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx == 0.0)
        throw Error (ErrorCode::InvalidArgument, "rate fit needs at least 2 distinct N");

    RateFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < xs.size (); ++i)
    {
        const double e = ys[i] - (fit.intercept + fit.slope * xs[i]);
        ss_res += e * e;
    }
    fit.r_squared = syy > 0.0 ? std::clamp (1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
    return fit;
}

RateFit fit_rate (const std::vector<StudyRecord> &records, const RecordSelector &select)
{
    std::vector<double> N;
    std::vector<double> errors;
    for (const auto &r : records)
        if (auto v = select (r))
        {
            N.push_back (static_cast<double> (r.N));
            errors.push_back (*v);
        }
    return fit_rate (N, errors);
}

double h1_seminorm_error (const FePath &path, const std::function<Eigen::VectorXd (double)> &du)
{
    static const Quadrature gauss (10);
    const Mesh &mesh = path.mesh ();
    double total = 0.0;
    for (std::size_t e = 0; e < mesh.num_elements (); ++e)
    {
        const double h = mesh.element_size (e);
        const Eigen::VectorXd slope = (path.node_value (e + 1) - path.node_value (e)) / h;
        for (int q = 0; q < gauss.size (); ++q)
        {
            const double s = mesh.node (e) + h * gauss.points ()[q];
            total += gauss.weights ()[q] * h * (slope - du (s)).squaredNorm ();
        }
    }
    return std::sqrt (total);
}

CaseIResult run_case_i (const std::vector<std::size_t> &N_list, const OptimConfig &cfg, const Quadrature &quad,
                        const StudyOptions &opts)
{
    require_levels (N_list, 3);
    const DriftField field = paper_example_field ();
    const Eigen::MatrixXd A = paper_example_matrix ();
    const Eigen::VectorXd x1 = Eigen::Vector2d (1.0, 1.0);
    const Eigen::VectorXd x2 = matrix_exp_apply (A, 1.0, x1);

    CaseIResult out;
    out.runs = sweep (field, x1, x2, N_list, OptimalTime{}, cfg, quad);
    const Polyline trajectory = trajectory_polyline (A, x1, 1.0, trajectory_samples (N_list, opts));
    for (std::size_t k = 0; k < N_list.size (); ++k)
    {
        const OptimResult &run = out.runs[k];
        StudyRecord r = base_record (N_list[k], run);
        r.t_error = std::abs (run.t_hat - 1.0);
        r.frechet = discrete_frechet (Polyline::from_path (run.path, opts.frechet_per_element), trajectory);
        out.records.push_back (r);
    }
    out.rate_action = fit_rate (out.records, select::action_error);
    out.rate_T = fit_rate (out.records, select::t_error);

    out.checks.push_back (monotone_minima ("monotone_minima", out.runs));
    StudyCheck decreasing{"action_error_decreasing", true, "action error strictly decreasing"};
    for (std::size_t k = 1; k < out.records.size (); ++k)
        if (!(out.records[k].action_error < out.records[k - 1].action_error))
        {
            decreasing.passed = false;
            decreasing.detail = "no decrease at N=" + std::to_string (out.records[k].N);
        }
    out.checks.push_back (decreasing);
    if (opts.check_rates)
    {
        out.checks.push_back (slope_window ("rate_action", out.rate_action, -2.4, -1.6, false, 0.98));
        out.checks.push_back (slope_window ("rate_T", out.rate_T, -2.4, -1.6, false, 0.98));
    }
    return out;
}

CaseIIResult run_case_ii (const std::vector<std::size_t> &N_list, double T_fixed, const OptimConfig &cfg,
                          const Quadrature &quad, const StudyOptions &opts)
{
    require_levels (N_list, 3);
    if (!(T_fixed > 0.0 && std::isfinite (T_fixed)))
        throw Error (ErrorCode::InvalidArgument, "T_fixed must be positive");
    const DriftField field = paper_example_field ();
    const Eigen::MatrixXd A = paper_example_matrix ();
    const Eigen::VectorXd x1 = Eigen::Vector2d (1.0, 1.0);
    const Eigen::VectorXd x2 = Eigen::Vector2d::Zero ();

    CaseIIResult out;
    out.runs_tmam = sweep (field, x1, x2, N_list, OptimalTime{}, cfg, quad);
    out.runs_fixed = sweep (field, x1, x2, N_list, FixedTime{T_fixed}, cfg, quad);
    const Polyline trajectory = trajectory_polyline (A, x1, kInfiniteTime, trajectory_samples (N_list, opts));
    for (std::size_t k = 0; k < N_list.size (); ++k)
    {
        for (auto [runs, records, clustering] :
             {std::tuple{&out.runs_tmam, &out.records_tmam, &out.clustering_tmam},
              std::tuple{&out.runs_fixed, &out.records_fixed, &out.clustering_fixed}})
        {
            const OptimResult &run = (*runs)[k];
            StudyRecord r = base_record (N_list[k], run);
            r.frechet = discrete_frechet (Polyline::from_path (run.path, opts.frechet_per_element), trajectory);
            records->push_back (r);
            clustering->push_back (clustering_fraction (run.path, x2, opts.clustering_radius));
        }
        out.action_ratio.push_back (out.runs_tmam[k].value / out.runs_fixed[k].value);
    }
    out.rate_tmam = fit_rate (out.records_tmam, select::action_error);

    out.checks.push_back (monotone_minima ("monotone_minima_tmam", out.runs_tmam));
    out.checks.push_back (monotone_minima ("monotone_minima_fixed", out.runs_fixed));

    StudyCheck ratio{"tmam_vs_fixed_ratio", true, "tMAM action <= 0.1 x fixed-T action at every level"};
    StudyCheck t_up{"t_hat_increasing", true, "T^ strictly increasing"};
    StudyCheck frechet{"frechet_nonincreasing", true, "Frechet distance nonincreasing, final < first / 2"};
    StudyCheck cluster{"clustering", true, "fixed-T nodes cluster at the attractor more than tMAM nodes"};
    for (std::size_t k = 0; k < N_list.size (); ++k)
    {
        const std::string at = " at N=" + std::to_string (N_list[k]);
        if (!(out.action_ratio[k] <= 0.1))
            ratio = {ratio.name, false, "ratio " + fmt (out.action_ratio[k]) + at};
        if (!(out.clustering_fixed[k] > out.clustering_tmam[k]))
            cluster = {cluster.name, false,
                       "fixed " + fmt (out.clustering_fixed[k]) + " vs tMAM " + fmt (out.clustering_tmam[k]) + at};
        if (k == 0)
            continue;
        if (!(out.records_tmam[k].t_hat > out.records_tmam[k - 1].t_hat))
            t_up = {t_up.name, false, "T^ does not increase" + at};
        if (*out.records_tmam[k].frechet > *out.records_tmam[k - 1].frechet)
            frechet = {frechet.name, false, "distance rises" + at};
    }
    if (frechet.passed && !(*out.records_tmam.back ().frechet < 0.5 * *out.records_tmam.front ().frechet))
        frechet = {frechet.name, false, "final distance is not below half the first"};
    out.checks.insert (out.checks.end (), {ratio, t_up, frechet, cluster});
    if (opts.check_rates)
        out.checks.push_back (slope_window ("rate_tmam", out.rate_tmam, -2.0, -0.3, true, std::nullopt));
    return out;
}

LinearStudyResult run_linear_fixed_T_study (const Eigen::MatrixXd &A, const Eigen::VectorXd &x1,
                                            const Eigen::VectorXd &x2, double T,
                                            const std::vector<std::size_t> &N_list, const OptimConfig &cfg,
                                            const Quadrature &quad, const StudyOptions &opts)
{
    require_levels (N_list, 2);
    const SpectralLinearProblem prob (A, x1, x2, T);
    const DriftField field = linear_field (A);
    const double exact = exact_fixed_T_action (prob);

    LinearStudyResult out;
    out.runs = sweep (field, x1, x2, N_list, FixedTime{T}, cfg, quad);
    for (std::size_t k = 0; k < N_list.size (); ++k)
    {
        const OptimResult &run = out.runs[k];
        StudyRecord r = base_record (N_list[k], run);
        r.action_error = std::abs (run.value - exact);
        r.h1_error =
            h1_seminorm_error (run.path, [&] (double s) { return exact_fixed_T_minimizer_derivative (prob, s); });
        out.records.push_back (r);
    }
    out.rate_h1 = try_fit (out.records, select::h1_error);
    out.rate_action = try_fit (out.records, select::action_error);

    out.checks.push_back (monotone_minima ("monotone_minima", out.runs));
    if (opts.check_rates)
    {
        if (out.rate_h1)
            out.checks.push_back (slope_window ("rate_h1", *out.rate_h1, -1.2, -0.8, false, std::nullopt));
        if (out.rate_action)
            out.checks.push_back (slope_window ("rate_action", *out.rate_action, -2.4, -1.6, false, std::nullopt));
    }
    return out;
}

SweepResult run_sweep (const DriftField &field, const Eigen::VectorXd &x1, const Eigen::VectorXd &x2,
                       const SolveMode &mode, const std::vector<std::size_t> &N_list, const OptimConfig &cfg,
                       const Quadrature &quad, std::optional<double> reference_action,
                       std::optional<double> reference_time)
{
    require_levels (N_list, 2);
    SweepResult out;
    out.runs = sweep (field, x1, x2, N_list, mode, cfg, quad);
    for (std::size_t k = 0; k < N_list.size (); ++k)
    {
        StudyRecord r = base_record (N_list[k], out.runs[k]);
        r.action_error = std::abs (out.runs[k].value - reference_action.value_or (0.0));
        if (reference_time)
            r.t_error = std::abs (out.runs[k].t_hat - *reference_time);
        out.records.push_back (r);
    }
    out.rate_action = try_fit (out.records, select::action_error);
    out.checks.push_back (monotone_minima ("monotone_minima", out.runs));
    return out;
}

void write_study_csv (std::ostream &os, const std::vector<StudyRecord> &records)
{
    const auto old_precision = os.precision (17);
    os << "N,h,action,action_error,t_hat,t_error,h1_error,frechet,ham_violation,iterations\n";
    for (const auto &r : records)
    {
        os << r.N << ',' << r.h << ',' << r.action << ',' << r.action_error << ',' << r.t_hat;
        write_optional (os, r.t_error);
        write_optional (os, r.h1_error);
        write_optional (os, r.frechet);
        os << ',' << r.hamiltonian_violation << ',' << r.iterations << '\n';
    }
    os.precision (old_precision);
}

bool all_passed (const std::vector<StudyCheck> &checks)
{
    for (const auto &c : checks)
        if (!c.passed)
            return false;
    return true;
}

} // namespace tmam
