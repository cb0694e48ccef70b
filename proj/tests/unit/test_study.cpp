#include "support.hpp"

#include "tmam/errors.hpp"
#include "tmam/linoracle.hpp"
#include "tmam/study.hpp"

#include <doctest.h>

#include <sstream>

using namespace tmam;
using tmam::testing::vec;

namespace
{

const std::vector<std::size_t> kLevels = {8, 16, 32, 64, 128};

const StudyCheck *find_check (const std::vector<StudyCheck> &checks, const std::string &name)
{
    for (const auto &c : checks)
        if (c.name == name)
            return &c;
    return nullptr;
}

std::string csv_of (const std::vector<StudyRecord> &records)
{
    std::ostringstream os;
    write_study_csv (os, records);
    return os.str ();
}

} // namespace

TEST_CASE ("rate fits")
{
    std::vector<double> N, err;
    for (double n : {8.0, 16.0, 32.0, 64.0, 128.0})
    {
        N.push_back (n);
        err.push_back (3.7 / (n * n));
    }
    const RateFit exact = fit_rate (N, err);
    CHECK (std::abs (exact.slope + 2.0) <= 1e-10);
    CHECK (exact.intercept == doctest::Approx (std::log (3.7)).epsilon (1e-10));
    CHECK (exact.r_squared == doctest::Approx (1.0));

    const RateFit flat = fit_rate (N, std::vector<double> (5, 0.25));
    CHECK (std::abs (flat.slope) <= 1e-12);
    CHECK (flat.r_squared >= 0.0);
    CHECK (flat.r_squared <= 1.0);

    std::mt19937_64 rng (8);
    std::uniform_real_distribution<double> U (0.5, 2.0);
    std::vector<double> noisy;
    for (double n : N)
        noisy.push_back (U (rng) / n);
    const RateFit r = fit_rate (N, noisy);
    CHECK (r.r_squared >= 0.0);
    CHECK (r.r_squared <= 1.0);

    // Non-positive errors are skipped.
    CHECK (fit_rate ({1.0, 2.0, 4.0}, {0.0, 1.0, 0.25}).slope == doctest::Approx (-2.0));
    CHECK_THROWS_AS (fit_rate ({1.0, 2.0}, {0.0, 1.0}), Error);
    CHECK_THROWS_AS (fit_rate ({1.0}, {1.0}), Error);
    CHECK_THROWS_AS (fit_rate ({1.0, 2.0}, {1.0}), Error);

    std::vector<StudyRecord> records (3);
    for (std::size_t k = 0; k < 3; ++k)
    {
        records[k].N = 4u << k;
        records[k].action_error = 1.0 / records[k].N;
    }
    CHECK (fit_rate (records, select::action_error).slope == doctest::Approx (-1.0));
    CHECK_THROWS_AS (fit_rate (records, select::t_error), Error);
}

TEST_CASE ("linear fixed-time study orders")
{
    const LinearStudyResult r = run_linear_fixed_T_study (Eigen::MatrixXd::Constant (1, 1, -1.0), vec ({0.0}),
                                                          vec ({1.0}), 1.0, kLevels, OptimConfig{}, Quadrature (3));
    REQUIRE (r.records.size () == kLevels.size ());
    REQUIRE (r.rate_h1.has_value ());
    REQUIRE (r.rate_action.has_value ());
    CHECK (r.rate_h1->slope >= -1.2);
    CHECK (r.rate_h1->slope <= -0.8);
    CHECK (r.rate_action->slope >= -2.4);
    CHECK (r.rate_action->slope <= -1.6);
    const double closed = (std::exp (2.0) - 1.0) / (4.0 * std::sinh (1.0) * std::sinh (1.0));
    CHECK (std::abs (r.records.back ().action - closed) <= 1e-4);
    for (const auto &rec : r.records)
    {
        CHECK (rec.h == doctest::Approx (1.0 / rec.N));
        CHECK (rec.action_error >= 0.0);
        CHECK (rec.h1_error.value () >= 0.0);
        CHECK (rec.t_hat == 1.0);
    }
    CHECK (all_passed (r.checks));
}

TEST_CASE ("zero drift is represented exactly")
{
    const LinearStudyResult r = run_linear_fixed_T_study (Eigen::MatrixXd::Zero (2, 2), vec ({0.0, 1.0}),
                                                          vec ({2.0, -1.0}), 3.0, {4, 8, 16}, OptimConfig{},
                                                          Quadrature (3));
    for (const auto &rec : r.records)
    {
        CHECK (rec.action_error <= 1e-12);
        CHECK (*rec.h1_error <= 1e-9);
    }
}

TEST_CASE ("boundary layer degrades the H1 rate")
{
    const LinearStudyResult r = run_linear_fixed_T_study (Eigen::MatrixXd::Constant (1, 1, -1.0), vec ({0.0}),
                                                          vec ({1.0}), 50.0, {8, 16, 32}, OptimConfig{}, Quadrature (3));
    REQUIRE (r.rate_h1.has_value ());
    CHECK (std::abs (r.rate_h1->slope) < 1.0);
    CHECK_FALSE (all_passed (r.checks));
    const StudyCheck *c = find_check (r.checks, "rate_h1");
    REQUIRE (c != nullptr);
    CHECK_FALSE (c->passed);
}

TEST_CASE ("finite-time example study")
{
    const CaseIResult r = run_case_i (kLevels, OptimConfig{}, Quadrature (3));
    REQUIRE (r.records.size () == kLevels.size ());
    CHECK (r.rate_action.slope >= -2.4);
    CHECK (r.rate_action.slope <= -1.6);
    CHECK (r.rate_T.slope >= -2.4);
    CHECK (r.rate_T.slope <= -1.6);
    CHECK (r.rate_action.r_squared >= 0.98);
    CHECK (r.rate_T.r_squared >= 0.98);
    for (std::size_t k = 0; k < r.records.size (); ++k)
    {
        const StudyRecord &rec = r.records[k];
        CHECK (rec.action_error > 0.0);
        CHECK (rec.action_error == rec.action);
        CHECK (*rec.t_error == std::abs (rec.t_hat - 1.0));
        CHECK (std::isfinite (rec.t_hat));
        if (k > 0)
        {
            CHECK (rec.action_error < r.records[k - 1].action_error);
            CHECK (rec.hamiltonian_violation < r.records[k - 1].hamiltonian_violation);
        }
    }
    CHECK (all_passed (r.checks));
    CHECK (find_check (r.checks, "monotone_minima") != nullptr);

    CHECK_THROWS_AS (run_case_i ({8, 16}, OptimConfig{}, Quadrature (3)), Error);
}

TEST_CASE ("attractor example study")
{
    const std::vector<std::size_t> levels = {16, 32, 64, 128};
    const CaseIIResult r = run_case_ii (levels, 100.0, OptimConfig{}, Quadrature (3));
    REQUIRE (r.records_tmam.size () == 4);
    REQUIRE (r.records_fixed.size () == 4);
    CHECK (r.action_ratio[2] <= 0.1);
    CHECK (r.rate_tmam.slope > -2.0);
    CHECK (r.rate_tmam.slope <= -0.3);
    for (std::size_t k = 1; k < levels.size (); ++k)
    {
        CHECK (r.records_tmam[k].t_hat > r.records_tmam[k - 1].t_hat);
        CHECK (*r.records_tmam[k].frechet <= *r.records_tmam[k - 1].frechet);
        CHECK (r.records_tmam[k].action <= r.records_tmam[k - 1].action + 1e-10);
        CHECK (r.records_fixed[k].action <= r.records_fixed[k - 1].action + 1e-10);
    }
    CHECK (*r.records_tmam.back ().frechet < *r.records_tmam.front ().frechet / 2.0);
    CHECK (r.clustering_fixed[2] > r.clustering_tmam[2]);
    for (const auto &rec : r.records_fixed)
        CHECK (rec.t_hat == 100.0);
    CHECK (all_passed (r.checks));
}

TEST_CASE ("study CSV")
{
    const CaseIResult a = run_case_i ({8, 16, 32}, OptimConfig{}, Quadrature (3));
    const CaseIResult b = run_case_i ({8, 16, 32}, OptimConfig{}, Quadrature (3));
    const std::string text = csv_of (a.records);
    CHECK (text == csv_of (b.records));

    std::istringstream in (text);
    std::string line;
    std::getline (in, line);
    CHECK (line == "N,h,action,action_error,t_hat,t_error,h1_error,frechet,ham_violation,iterations");
    int rows = 0;
    while (std::getline (in, line))
        ++rows;
    CHECK (rows == 3);

    StudyRecord rec;
    rec.N = 4;
    rec.h = 0.25;
    rec.action = 1.0 / 3.0;
    std::ostringstream os;
    write_study_csv (os, {rec});
    CHECK (os.str () == "N,h,action,action_error,t_hat,t_error,h1_error,frechet,ham_violation,iterations\n"
                        "4,0.25,0.33333333333333331,0,0,,,,0,0\n");
}

TEST_CASE ("sweep failures name the level")
{
    OptimConfig cfg;
    cfg.max_iters = 1;
    try
    {
        (void)run_sweep (paper_example_field (), vec ({1.0, 1.0}), vec ({0.0, 0.0}), OptimalTime{}, {16, 32}, cfg,
                         Quadrature (3));
        FAIL ("expected NotConverged");
    }
    catch (const Error &e)
    {
        CHECK (e.code () == ErrorCode::NotConverged);
        CHECK (std::string (e.what ()).find ("N=16") != std::string::npos);
    }
}

TEST_CASE ("generic sweep")
{
    const SweepResult r = run_sweep (tmam::testing::scalar_decay (), vec ({0.0}), vec ({1.0}), FixedTime{1.0},
                                     {8, 16, 32}, OptimConfig{}, Quadrature (3),
                                     exact_fixed_T_action (SpectralLinearProblem (Eigen::MatrixXd::Constant (1, 1, -1.0),
                                                                                  vec ({0.0}), vec ({1.0}), 1.0)),
                                     1.0);
    REQUIRE (r.rate_action.has_value ());
    CHECK (r.rate_action->slope == doctest::Approx (-2.0).epsilon (0.05));
    for (const auto &rec : r.records)
        CHECK (*rec.t_error == 0.0);
    CHECK (all_passed (r.checks));
}

TEST_CASE ("H1 seminorm error")
{
    const FePath line = linear_interpolant_path (vec ({0.0}), vec ({1.0}), uniform_mesh (4));
    CHECK (h1_seminorm_error (line, [] (double) { return vec ({1.0}); }) == doctest::Approx (0.0));
    // |u_h - s^2|_1 with u_h the nodal interpolant: h / sqrt(3) for u'' = 2.
    const FePath quad = FePath (uniform_mesh (4), (Eigen::MatrixXd (5, 1) << 0.0, 1.0 / 16, 0.25, 9.0 / 16, 1.0).finished ());
    CHECK (h1_seminorm_error (quad, [] (double s) { return vec ({2.0 * s}); }) ==
           doctest::Approx (0.25 / std::sqrt (3.0)).epsilon (1e-12));
}
