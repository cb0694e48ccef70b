#pragma once

#include "tmam/action.hpp"
#include "tmam/drift.hpp"
#include "tmam/path.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <random>

namespace tmam::testing
{

/// Endpoints and interior nodes drawn uniformly from [lo, hi]^n.
inline FePath random_path (std::mt19937_64 &rng, std::size_t N, Eigen::Index n, double lo = -1.5, double hi = 1.5)
{
    std::uniform_real_distribution<double> U (lo, hi);
    Eigen::MatrixXd values (static_cast<Eigen::Index> (N + 1), n);
    for (Eigen::Index i = 0; i < values.rows (); ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            values (i, j) = U (rng);
    return FePath (uniform_mesh (N), values);
}

/// Central differences of f over the interior nodal values of `path`.
inline Eigen::MatrixXd fd_gradient (const FePath &path, const std::function<double (const FePath &)> &f,
                                    double step = 1e-6)
{
    Eigen::MatrixXd x = path.interior ();
    Eigen::MatrixXd g (x.rows (), x.cols ());
    for (Eigen::Index i = 0; i < x.rows (); ++i)
        for (Eigen::Index j = 0; j < x.cols (); ++j)
        {
            const double keep = x (i, j);
            x (i, j) = keep + step;
            const double up = f (path.with_interior (x));
            x (i, j) = keep - step;
            const double down = f (path.with_interior (x));
            x (i, j) = keep;
            g (i, j) = (up - down) / (2.0 * step);
        }
    return g;
}

inline double rel_diff (const Eigen::MatrixXd &a, const Eigen::MatrixXd &b)
{
    const double scale = std::max ({a.cwiseAbs ().maxCoeff (), b.cwiseAbs ().maxCoeff (), 1e-300});
    return (a - b).cwiseAbs ().maxCoeff () / scale;
}

inline DriftField scalar_decay () { return linear_field (Eigen::MatrixXd::Constant (1, 1, -1.0)); }

inline Eigen::VectorXd vec (std::initializer_list<double> xs)
{
    Eigen::VectorXd v (static_cast<Eigen::Index> (xs.size ()));
    Eigen::Index i = 0;
    for (double x : xs)
        v (i++) = x;
    return v;
}

} // namespace tmam::testing
