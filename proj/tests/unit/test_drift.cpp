#include "support.hpp"

#include "tmam/errors.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

using namespace tmam;
using tmam::testing::vec;

namespace
{

Eigen::MatrixXd fd_jacobian (const DriftField &f, const Eigen::VectorXd &x)
{
    const double step = 1e-6 * std::max (1.0, x.norm ());
    Eigen::MatrixXd J (f.dim (), f.dim ());
    for (Eigen::Index j = 0; j < f.dim (); ++j)
    {
        Eigen::VectorXd up = x, down = x;
        up (j) += step;
        down (j) -= step;
        J.col (j) = (f.eval (up) - f.eval (down)) / (2.0 * step);
    }
    return J;
}

} // namespace

TEST_CASE ("linear field examples")
{
    const DriftField zero = linear_field (Eigen::MatrixXd::Zero (2, 2));
    CHECK (zero.eval (vec ({3.0, 4.0})) == vec ({0.0, 0.0}));

    const DriftField decay = tmam::testing::scalar_decay ();
    CHECK (decay.eval (vec ({2.0})) (0) == -2.0);
    CHECK (decay.jacobian (vec ({5.0})) (0, 0) == -1.0);
    CHECK (*decay.metadata ().lipschitz == doctest::Approx (1.0));
    CHECK (decay.is_linear ());

    CHECK_THROWS_AS (linear_field (Eigen::MatrixXd::Zero (2, 3)), Error);
    Eigen::MatrixXd inf = Eigen::MatrixXd::Zero (1, 1);
    inf (0, 0) = std::numeric_limits<double>::infinity ();
    CHECK_THROWS_AS (linear_field (inf), Error);
    CHECK_THROWS_AS ((void)decay.eval (vec ({1.0, 2.0})), Error);
}

TEST_CASE ("paper example matrix")
{
    const Eigen::MatrixXd A = paper_example_matrix ();
    const double r2 = std::sqrt (2.0);
    CHECK (A (0, 0) == doctest::Approx (-26.0 / 9.0).epsilon (1e-14));
    CHECK (A (0, 1) == doctest::Approx (16.0 * r2 / 9.0).epsilon (1e-14));
    CHECK (A (1, 0) == doctest::Approx (16.0 * r2 / 9.0).epsilon (1e-14));
    CHECK (A (1, 1) == doctest::Approx (-82.0 / 9.0).epsilon (1e-14));
    CHECK (A == A.transpose ());
    CHECK (A.trace () == doctest::Approx (-12.0).epsilon (1e-14));
    CHECK (A.determinant () == doctest::Approx (20.0).epsilon (1e-13));

    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig (A);
    CHECK (std::abs (eig.eigenvalues () (0) + 10.0) < 1e-12);
    CHECK (std::abs (eig.eigenvalues () (1) + 2.0) < 1e-12);

    // Eigenvectors (a, -b) for -10 and (b, a) for -2.
    const double a = 1.0 / 3.0, b = std::sqrt (8.0) / 3.0;
    CHECK ((A * vec ({a, -b}) + 10.0 * vec ({a, -b})).norm () < 1e-13);
    CHECK ((A * vec ({b, a}) + 2.0 * vec ({b, a})).norm () < 1e-13);

    const DriftField f = paper_example_field ();
    const Eigen::VectorXd b11 = f.eval (vec ({1.0, 1.0}));
    CHECK (b11 (0) == doctest::Approx (-26.0 / 9.0 + 16.0 * r2 / 9.0).epsilon (1e-14));
    CHECK (b11 (1) == doctest::Approx (16.0 * r2 / 9.0 - 82.0 / 9.0).epsilon (1e-14));
    CHECK (f.eval (vec ({0.0, 0.0})).norm () == 0.0);
    CHECK (f.name () == "paper_example");
}

TEST_CASE ("maier stein field")
{
    const DriftField f = maier_stein_field ();
    CHECK (f.eval (vec ({0.0, 0.0})).norm () == 0.0);
    CHECK (f.eval (vec ({1.0, 0.0})).norm () == 0.0);
    const Eigen::MatrixXd J = f.jacobian (vec ({0.0, 0.0}));
    CHECK (J (0, 0) == 1.0);
    CHECK (J (0, 1) == 0.0);
    CHECK (J (1, 0) == 0.0);
    CHECK (J (1, 1) == -1.0);
    const Eigen::VectorXd b = f.eval (vec ({0.5, 2.0}));
    CHECK (b (0) == doctest::Approx (0.5 - 0.125 - 10.0 * 0.5 * 4.0));
    CHECK (b (1) == doctest::Approx (-(1.25) * 2.0));
}

TEST_CASE ("jacobians agree with finite differences")
{
    std::mt19937_64 rng (99);
    std::uniform_real_distribution<double> U (-2.0, 2.0);
    Eigen::MatrixXd R (3, 3);
    for (Eigen::Index i = 0; i < 9; ++i)
        R (i) = U (rng);
    const DriftField fields[] = {paper_example_field (), maier_stein_field (), linear_field (R),
                                 tmam::testing::scalar_decay ()};
    for (const auto &f : fields)
        for (int probe = 0; probe < 100; ++probe)
        {
            Eigen::VectorXd x (f.dim ());
            for (Eigen::Index i = 0; i < x.size (); ++i)
                x (i) = U (rng);
            const Eigen::MatrixXd J = f.jacobian (x);
            const Eigen::MatrixXd F = fd_jacobian (f, x);
            CHECK ((J - F).cwiseAbs ().maxCoeff () <= 1e-4 * std::max (1.0, J.cwiseAbs ().maxCoeff ()));
        }
}

TEST_CASE ("linear fields are exactly linear")
{
    std::mt19937_64 rng (4);
    std::uniform_real_distribution<double> U (-3.0, 3.0);
    const DriftField f = paper_example_field ();
    const Eigen::MatrixXd A = paper_example_matrix ();
    for (int trial = 0; trial < 100; ++trial)
    {
        const Eigen::VectorXd x = vec ({U (rng), U (rng)}), y = vec ({U (rng), U (rng)});
        const double alpha = U (rng), beta = U (rng);
        const Eigen::VectorXd lhs = f.eval (alpha * x + beta * y);
        const Eigen::VectorXd rhs = alpha * f.eval (x) + beta * f.eval (y);
        CHECK ((lhs - rhs).norm () <= 1e-12 * std::max (1.0, lhs.norm ()));
        CHECK (f.jacobian (x) == A);
    }
}

TEST_CASE ("finite-difference jacobian fallback")
{
    const DriftField f (2, [] (const Eigen::VectorXd &x) { return Eigen::Vector2d (std::sin (x (0)) * x (1), x (0) * x (0)); },
                        std::nullopt);
    CHECK (f.metadata ().approximate_jacobian);
    const Eigen::VectorXd x = vec ({0.3, -1.2});
    Eigen::Matrix2d exact;
    exact << std::cos (0.3) * -1.2, std::sin (0.3), 0.6, 0.0;
    CHECK ((f.jacobian (x) - exact).cwiseAbs ().maxCoeff () < 1e-8);
}

TEST_CASE ("inward drift condition")
{
    const DriftField decay = tmam::testing::scalar_decay ();
    CHECK (*decay.metadata ().beta == doctest::Approx (1.0));
    const InwardCheckReport ok = check_inward_condition (decay, 64, 10.0);
    CHECK (ok.ok);
    CHECK (ok.samples_checked == 64);

    const InwardCheckReport paper = check_inward_condition (paper_example_field (), 200, 5.0);
    CHECK (paper.ok);
    CHECK (paper.worst_margin <= 1e-10);

    DriftMetadata md;
    md.beta = 1.0;
    md.r2 = 0.0;
    const DriftField grow = linear_field (Eigen::MatrixXd::Identity (1, 1)).with_metadata (md);
    const InwardCheckReport bad = check_inward_condition (grow, 50, 3.0);
    CHECK_FALSE (bad.ok);
    CHECK (bad.samples_checked == 1);
    CHECK (bad.violation.has_value ());

    CHECK_THROWS_AS (check_inward_condition (maier_stein_field (), 10, 1.0), Error);
}
