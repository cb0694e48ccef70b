#include "support.hpp"

#include "tmam/errors.hpp"
#include "tmam/linoracle.hpp"

#include <doctest.h>

using namespace tmam;
using tmam::testing::fd_gradient;
using tmam::testing::random_path;
using tmam::testing::rel_diff;
using tmam::testing::vec;

namespace
{

/// T/2 int |phi'/T - b(phi)|^2 ds by composite Simpson on every element, using only path.eval.
double simpson_action (const FePath &path, const DriftField &field, double T, int panels = 64)
{
    const Mesh &mesh = path.mesh ();
    double total = 0.0;
    for (std::size_t e = 0; e < mesh.num_elements (); ++e)
    {
        const double a = mesh.node (e), h = mesh.element_size (e);
        const Eigen::VectorXd slope = (path.node_value (e + 1) - path.node_value (e)) / h;
        const double step = h / panels;
        for (int k = 0; k <= panels; ++k)
        {
            const double s = std::min (a + k * step, mesh.node (e + 1));
            const double weight = (k == 0 || k == panels) ? 1.0 : (k % 2 ? 4.0 : 2.0);
            const Eigen::VectorXd x = (1.0 - (s - a) / h) * path.node_value (e) + ((s - a) / h) * path.node_value (e + 1);
            total += weight * step / 3.0 * (slope / T - field.eval (x)).squaredNorm ();
        }
    }
    return 0.5 * T * total;
}

DriftField pick_field (std::mt19937_64 &rng)
{
    static const std::vector<DriftField> fields = {paper_example_field (), maier_stein_field (),
                                                   linear_field ((Eigen::Matrix2d () << -1.0, 2.0, -0.5, -3.0).finished ())};
    return fields[std::uniform_int_distribution<std::size_t> (0, fields.size () - 1) (rng)];
}

} // namespace

TEST_CASE ("quadrature exactness")
{
    for (int q = 1; q <= 12; ++q)
    {
        const Quadrature quad (q);
        double sum = 0.0;
        for (std::size_t k = 0; k < quad.weights ().size (); ++k)
        {
            CHECK (quad.weights ()[k] > 0.0);
            CHECK (quad.points ()[k] > 0.0);
            CHECK (quad.points ()[k] < 1.0);
            if (k > 0)
                CHECK (quad.points ()[k] > quad.points ()[k - 1]);
            sum += quad.weights ()[k];
        }
        CHECK (sum == doctest::Approx (1.0).epsilon (1e-14));
        for (int d = 0; d <= 2 * q - 1; ++d)
        {
            double integral = 0.0;
            for (std::size_t k = 0; k < quad.weights ().size (); ++k)
                integral += quad.weights ()[k] * std::pow (quad.points ()[k], d);
            CHECK (integral == doctest::Approx (1.0 / (d + 1)).epsilon (1e-13));
        }
    }
    CHECK_THROWS_AS (Quadrature (0), Error);
}

TEST_CASE ("fixed-time action examples")
{
    const Quadrature quad (2);
    const DriftField zero = linear_field (Eigen::MatrixXd::Zero (1, 1));
    const FePath line = linear_interpolant_path (vec ({0.0}), vec ({1.0}), uniform_mesh (5));
    CHECK (action_fixed_T (line, zero, 1.0, quad) == doctest::Approx (0.5).epsilon (1e-14));
    CHECK (action_fixed_T (line, zero, 4.0, quad) == doctest::Approx (1.0 / 8.0).epsilon (1e-14));

    const FePath rest = linear_interpolant_path (vec ({0.0, 0.0}), vec ({0.0, 0.0}), uniform_mesh (3));
    CHECK (action_fixed_T (rest, paper_example_field (), 2.5, quad) == 0.0);

    const DriftField decay = tmam::testing::scalar_decay ();
    for (double T : {0.5, 1.0, 3.0})
        CHECK (action_fixed_T (line, decay, T, quad) ==
               doctest::Approx (1.0 / (2.0 * T) + 0.5 + T / 6.0).epsilon (1e-14));
    CHECK (action_fixed_T (line, decay, 1.0, quad) == doctest::Approx (7.0 / 6.0).epsilon (1e-14));

    CHECK_THROWS_AS (action_fixed_T (line, decay, 0.0, quad), Error);
    CHECK_THROWS_AS (action_fixed_T (line, decay, -1.0, quad), Error);
    CHECK_THROWS_AS (action_fixed_T (line, paper_example_field (), 1.0, quad), Error);
}

TEST_CASE ("optimal time and reduced action examples")
{
    const Quadrature quad (2);
    const DriftField decay = tmam::testing::scalar_decay ();
    const FePath up = linear_interpolant_path (vec ({0.0}), vec ({1.0}), uniform_mesh (4));
    CHECK (optimal_time (up, decay, quad) == doctest::Approx (std::sqrt (3.0)).epsilon (1e-14));

    const ActionReport rep = action_optimal (up, decay, quad);
    CHECK (rep.value == doctest::Approx (0.5 + std::sqrt (3.0) / 3.0).epsilon (1e-14));
    CHECK (rep.t_hat == doctest::Approx (std::sqrt (3.0)).epsilon (1e-14));
    CHECK (rep.grad.rows () == 3);

    const FePath down = linear_interpolant_path (vec ({1.0}), vec ({0.0}), uniform_mesh (4));
    CHECK (action_optimal (down, decay, quad).value == doctest::Approx (1.0 / std::sqrt (3.0) - 0.5).epsilon (1e-13));

    const FePath moving = linear_interpolant_path (vec ({0.0, 0.0}), vec ({1.0, 1.0}), uniform_mesh (3));
    CHECK_THROWS_WITH_AS (optimal_time (moving, linear_field (Eigen::MatrixXd::Zero (2, 2)), quad),
                          doctest::Contains ("DriftVanishes"), Error);
    const FePath still = linear_interpolant_path (vec ({1.0, 1.0}), vec ({1.0, 1.0}), uniform_mesh (3));
    try
    {
        (void)optimal_time (still, paper_example_field (), quad);
        FAIL ("expected DegeneratePath");
    }
    catch (const Error &e)
    {
        CHECK (e.code () == ErrorCode::DegeneratePath);
    }
}

TEST_CASE ("reduced action vanishes when the path follows the drift")
{
    const Quadrature quad (3);
    // Constant drift: a straight path along b with phi' = T b gives exactly zero violation.
    const DriftField shift (2, [] (const Eigen::VectorXd &) { return Eigen::Vector2d (1.0, -2.0); },
                            [] (const Eigen::VectorXd &) { return Eigen::MatrixXd (Eigen::MatrixXd::Zero (2, 2)); });
    const FePath along = linear_interpolant_path (vec ({0.0, 0.0}), vec ({3.0, -6.0}), uniform_mesh (5));
    const ActionReport r2 = action_optimal (along, shift, quad);
    CHECK (r2.t_hat == doctest::Approx (3.0));
    CHECK (std::abs (r2.value) <= 1e-12);
    CHECK (hamiltonian_violation (along, shift, r2.t_hat, quad) <= 1e-14);
}

TEST_CASE ("quadrature action agrees with an independent Simpson evaluation")
{
    std::mt19937_64 rng (8);
    for (int trial = 0; trial < 20; ++trial)
    {
        const FePath p = random_path (rng, 7, 2);
        // Linear drift: q = 2 is exact and so is Simpson.
        const double T = 0.3 + trial * 0.2;
        CHECK (action_fixed_T (p, paper_example_field (), T, Quadrature (2)) ==
               doctest::Approx (simpson_action (p, paper_example_field (), T, 2)).epsilon (1e-12));
        // Polynomial drift of degree 3: the integrand has degree 6 per element.
        CHECK (action_fixed_T (p, maier_stein_field (), T, Quadrature (4)) ==
               doctest::Approx (simpson_action (p, maier_stein_field (), T, 2048)).epsilon (1e-10));
    }
}

TEST_CASE ("scaling optimality and rewrite identity on random paths")
{
    std::mt19937_64 rng (31);
    std::uniform_real_distribution<double> logT (-3.0, 3.0);
    const Quadrature quad (3);
    for (int trial = 0; trial < 200; ++trial)
    {
        const FePath p = random_path (rng, 4 + trial % 9, 2);
        const DriftField field = pick_field (rng);
        const double t_hat = optimal_time (p, field, quad);
        const double at_hat = action_fixed_T (p, field, t_hat, quad);
        const double T = std::exp (logT (rng));
        CHECK (at_hat <= action_fixed_T (p, field, T, quad) + 1e-12);

        const ActionReport rep = action_optimal (p, field, quad);
        CHECK (rep.value >= -1e-12);
        CHECK (std::abs (rep.value - at_hat) <= 1e-12 * std::max (1.0, std::abs (at_hat)));

        const double dT = 1e-5 * t_hat;
        const double slope = (action_fixed_T (p, field, t_hat + dT, quad) - action_fixed_T (p, field, t_hat - dT, quad)) /
                             (2.0 * dT);
        CHECK (std::abs (slope) <= 1e-8 * std::max (at_hat, 1.0));
    }
}

TEST_CASE ("gradients agree with finite differences")
{
    std::mt19937_64 rng (17);
    const Quadrature quad (3);
    SUBCASE ("fixed time, 1-D decay")
    {
        const DriftField decay = tmam::testing::scalar_decay ();
        for (int trial = 0; trial < 20; ++trial)
        {
            const FePath p = random_path (rng, 6, 1);
            const double T = 0.5 + 0.1 * trial;
            const Eigen::MatrixXd g = grad_action_fixed_T (p, decay, T, quad);
            const Eigen::MatrixXd fd =
                fd_gradient (p, [&] (const FePath &q) { return action_fixed_T (q, decay, T, quad); });
            CHECK (rel_diff (g, fd) < 1e-6);
        }
    }
    SUBCASE ("both functionals, built-in fields")
    {
        for (const DriftField &field : {paper_example_field (), maier_stein_field ()})
            for (int trial = 0; trial < 50; ++trial)
            {
                const FePath p = random_path (rng, 5, 2, -1.0, 1.0);
                const double T = 0.5 + 0.05 * trial;
                const Eigen::MatrixXd gf = grad_action_fixed_T (p, field, T, quad);
                CHECK (rel_diff (gf, fd_gradient (p, [&] (const FePath &q) { return action_fixed_T (q, field, T, quad); })) <
                       1e-5);
                const Eigen::MatrixXd go = grad_action_optimal (p, field, quad);
                CHECK (rel_diff (go, fd_gradient (p, [&] (const FePath &q) { return action_optimal (q, field, quad).value; })) <
                       1e-5);
            }
    }
}

TEST_CASE ("envelope identity")
{
    std::mt19937_64 rng (23);
    const Quadrature quad (3);
    for (int trial = 0; trial < 100; ++trial)
    {
        const FePath p = random_path (rng, 3 + trial % 12, 2);
        const DriftField field = pick_field (rng);
        const double t_hat = optimal_time (p, field, quad);
        const Eigen::MatrixXd explicit_grad = grad_action_optimal (p, field, quad);
        const Eigen::MatrixXd envelope = grad_action_fixed_T (p, field, t_hat, quad);
        CHECK (rel_diff (explicit_grad, envelope) < 1e-10);
        const ActionEvaluation ev = evaluate_optimal (p, field, quad);
        CHECK (rel_diff (ev.grad, explicit_grad) < 1e-10);
        CHECK (ev.t_hat == doctest::Approx (t_hat).epsilon (1e-14));
    }
}

TEST_CASE ("zero field straight line is stationary")
{
    const FePath line = linear_interpolant_path (vec ({0.0, 1.0}), vec ({2.0, -1.0}), uniform_mesh (9));
    const Eigen::MatrixXd g = grad_action_fixed_T (line, linear_field (Eigen::MatrixXd::Zero (2, 2)), 1.0, Quadrature (3));
    CHECK (g.cwiseAbs ().maxCoeff () < 1e-13);
}

TEST_CASE ("refinement leaves linear-field functionals unchanged")
{
    std::mt19937_64 rng (41);
    const Quadrature quad (2);
    const DriftField field = paper_example_field ();
    for (int trial = 0; trial < 50; ++trial)
    {
        const FePath p = random_path (rng, 5, 2);
        const FePath r = refine_path (p);
        CHECK (action_fixed_T (r, field, 1.3, quad) == doctest::Approx (action_fixed_T (p, field, 1.3, quad)).epsilon (1e-12));
        CHECK (optimal_time (r, field, quad) == doctest::Approx (optimal_time (p, field, quad)).epsilon (1e-12));
        CHECK (action_optimal (r, field, quad).value ==
               doctest::Approx (action_optimal (p, field, quad).value).epsilon (1e-11));
    }
}

TEST_CASE ("hamiltonian violation")
{
    const Quadrature quad (3);
    const DriftField field = paper_example_field ();
    const FePath line = linear_interpolant_path (vec ({1.0, 1.0}), vec ({0.0, 0.0}), uniform_mesh (16));
    const double t_hat = optimal_time (line, field, quad);
    CHECK (hamiltonian_violation (line, field, t_hat, quad) > 0.1);
    CHECK_THROWS_AS (hamiltonian_violation (line, field, 0.0, quad), Error);
}

TEST_CASE ("Euler-Lagrange residual")
{
    const Quadrature quad (3);
    const Eigen::MatrixXd A = paper_example_matrix ();
    const SpectralLinearProblem prob (A, vec ({1.0, 1.0}), vec ({-0.5, 0.25}), 1.0);
    const DriftField field = paper_example_field ();
    double previous = std::numeric_limits<double>::infinity ();
    for (std::size_t N : {16, 32, 64, 128})
    {
        const double r = el_residual (exact_fixed_T_path (prob, uniform_mesh (N)), field, 1.0, quad);
        CHECK (r < previous);
        previous = r;
    }

    const FePath line = linear_interpolant_path (vec ({-1.0, 0.0}), vec ({1.0, 0.0}), uniform_mesh (10));
    CHECK (el_residual (line, maier_stein_field (), 2.0, quad) > 1e-3);
    CHECK_THROWS_AS (el_residual (line, maier_stein_field (), -2.0, quad), Error);
}

TEST_CASE ("inverse stiffness and dual norm")
{
    const Mesh mesh ({0.0, 0.2, 0.5, 0.6, 1.0});
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero (3, 3);
    for (std::size_t e = 0; e < 4; ++e)
    {
        const double k = 1.0 / mesh.element_size (e);
        const auto i = static_cast<Eigen::Index> (e) - 1;
        if (i >= 0)
            K (i, i) += k;
        if (i + 1 < 3)
            K (i + 1, i + 1) += k;
        if (i >= 0 && i + 1 < 3)
        {
            K (i, i + 1) -= k;
            K (i + 1, i) -= k;
        }
    }
    const Eigen::MatrixXd rhs = (Eigen::MatrixXd (3, 2) << 1.0, -2.0, 0.5, 3.0, -1.0, 0.25).finished ();
    const Eigen::MatrixXd sol = apply_inverse_stiffness (mesh, rhs);
    CHECK ((K * sol - rhs).cwiseAbs ().maxCoeff () < 1e-13);
    const double expected = std::sqrt (rhs.col (0).dot (sol.col (0)) + rhs.col (1).dot (sol.col (1)));
    CHECK (dual_norm (mesh, rhs) == doctest::Approx (expected).epsilon (1e-13));
}
