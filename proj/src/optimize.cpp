#include "tmam/optimize.hpp"

#include "tmam/errors.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <deque>
#include <fstream>
#include <iomanip>
#include <limits>

namespace tmam
{

void OptimConfig::validate () const
{
    if (!(tol_grad > 0.0))
        throw Error (ErrorCode::InvalidArgument, "tol_grad must be positive");
    if (max_iters < 1)
        throw Error (ErrorCode::InvalidArgument, "max_iters must be at least 1");
    if (memory < 0)
        throw Error (ErrorCode::InvalidArgument, "memory must be non-negative");
    if (t_cap && !(*t_cap > 0.0))
        throw Error (ErrorCode::InvalidArgument, "t_cap must be positive");
    if (!(armijo > 0.0 && armijo < 1.0))
        throw Error (ErrorCode::InvalidArgument, "armijo constant must lie in (0, 1)");
    if (!(shrink > 0.0 && shrink < 1.0))
        throw Error (ErrorCode::InvalidArgument, "shrink factor must lie in (0, 1)");
}

namespace
{

struct Point
{
    Eigen::MatrixXd x;
    double value = 0.0;
    double t_used = 0.0;
    Eigen::MatrixXd grad;
};

double inner (const Eigen::MatrixXd &a, const Eigen::MatrixXd &b) { return (a.array () * b.array ()).sum (); }

double max_abs (const Eigen::MatrixXd &a) { return a.size () == 0 ? 0.0 : a.cwiseAbs ().maxCoeff (); }

/**
 * Time-weighted H^1 operator P = K / T + T M (x) G on interior nodes, where K and
 * M are the P1 stiffness and mass matrices and G is the path average of J^T J.
 * For b = 0 this is the scaled Laplacian; for linear drift it is the exact
 * Hessian of S(T, .).
 */
class EnergyPreconditioner
{
  public:
    EnergyPreconditioner (const FePath &path, const DriftField &field, double T, const Quadrature &quad)
        : m_n (path.dim ()), m_interior (static_cast<Eigen::Index> (path.mesh ().num_elements ()) - 1)
    {
        const Mesh &mesh = path.mesh ();
        const Eigen::Index n = m_n;
        Eigen::MatrixXd G = Eigen::MatrixXd::Zero (n, n);
        const auto &v = path.values ();
        for (std::size_t e = 0; e < mesh.num_elements (); ++e)
        {
            const auto ei = static_cast<Eigen::Index> (e);
            for (int k = 0; k < quad.size (); ++k)
            {
                const double xi = quad.points ()[static_cast<std::size_t> (k)];
                const double w = quad.weights ()[static_cast<std::size_t> (k)] * mesh.element_size (e);
                const Eigen::VectorXd x = ((1.0 - xi) * v.row (ei) + xi * v.row (ei + 1)).transpose ();
                const Eigen::MatrixXd J = field.jacobian (x);
                G += w * (J.transpose () * J);
            }
        }

        std::vector<Eigen::Triplet<double>> entries;
        auto add = [&] (Eigen::Index a, Eigen::Index b, double stiff, double mass) {
            // a, b: interior node rows; skip pinned endpoints
            if (a < 0 || b < 0 || a >= m_interior || b >= m_interior)
                return;
            for (Eigen::Index i = 0; i < n; ++i)
            {
                entries.emplace_back (a * n + i, b * n + i, stiff / T);
                for (Eigen::Index j = 0; j < n; ++j)
                    if (G (i, j) != 0.0)
                        entries.emplace_back (a * n + i, b * n + j, T * mass * G (i, j));
            }
        };
        for (std::size_t e = 0; e < mesh.num_elements (); ++e)
        {
            const double h = mesh.element_size (e);
            const auto left = static_cast<Eigen::Index> (e) - 1; // interior row of node e
            const auto right = left + 1;
            add (left, left, 1.0 / h, h / 3.0);
            add (right, right, 1.0 / h, h / 3.0);
            add (left, right, -1.0 / h, h / 6.0);
            add (right, left, -1.0 / h, h / 6.0);
        }
        Eigen::SparseMatrix<double> P (m_interior * n, m_interior * n);
        P.setFromTriplets (entries.begin (), entries.end ());
        if (m_interior > 0)
        {
            m_solver.compute (P);
            if (m_solver.info () != Eigen::Success)
                throw Error (ErrorCode::InvalidArgument, "preconditioner factorization failed");
        }
    }

    [[nodiscard]] Eigen::MatrixXd apply (const Eigen::MatrixXd &g) const
    {
        if (m_interior == 0)
            return g;
        Eigen::VectorXd flat (m_interior * m_n);
        for (Eigen::Index k = 0; k < m_interior; ++k)
            flat.segment (k * m_n, m_n) = g.row (k).transpose ();
        const Eigen::VectorXd z = m_solver.solve (flat);
        Eigen::MatrixXd out (m_interior, m_n);
        for (Eigen::Index k = 0; k < m_interior; ++k)
            out.row (k) = z.segment (k * m_n, m_n).transpose ();
        return out;
    }

  private:
    Eigen::Index m_n;
    Eigen::Index m_interior;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> m_solver;
};

class Solver
{
  public:
    Solver (const FePath &start, const DriftField &field, const SolveMode &mode, const OptimConfig &cfg,
            const Quadrature &quad)
        : m_start (start), m_field (field), m_mode (mode), m_cfg (cfg), m_quad (quad)
    {
        m_cfg.validate ();
        if (start.dim () != field.dim ())
            throw Error (ErrorCode::DimensionMismatch, "start path and drift dimensions differ");
        if (const auto *fixed = std::get_if<FixedTime> (&m_mode); fixed && !(fixed->T > 0.0 && std::isfinite (fixed->T)))
            throw Error (ErrorCode::InvalidArgument, "T must be positive and finite");
        if (!m_cfg.log_path.empty ())
        {
            m_log.open (m_cfg.log_path);
            if (!m_log)
                throw Error (ErrorCode::InvalidArgument, "cannot open iteration log " + m_cfg.log_path);
            m_log << "iteration,value,grad_norm,t_hat\n" << std::setprecision (17);
        }
    }

    OptimResult run ()
    {
        Point current = evaluate (m_start.interior ());
        if (is_tmam () && m_cfg.t_cap && current.t_used > *m_cfg.t_cap)
            throw Error (ErrorCode::InvalidArgument, "start path violates the T^ cap");

        std::deque<History> history;
        int iterations = 0;
        bool converged = false;
        double gnorm = max_abs (current.grad);

        for (;;)
        {
            gnorm = max_abs (current.grad);
            log (iterations, current, gnorm);
            if (gnorm <= m_cfg.tol_grad * std::max (1.0, std::abs (current.value)))
            {
                converged = true;
                break;
            }
            if (iterations >= m_cfg.max_iters)
                break;

            if (preconditioner_stale (current))
            {
                m_preconditioner.emplace (m_start.with_interior (current.x), m_field, current.t_used, m_quad);
                m_preconditioner_time = current.t_used;
                history.clear ();
            }

            Eigen::MatrixXd direction = -two_loop (current, history);
            double slope = inner (current.grad, direction);
            if (!(slope < 0.0))
            {
                history.clear ();
                direction = -two_loop (current, history);
                slope = inner (current.grad, direction);
            }

            auto next = line_search (current, direction, slope);
            if (!next && !history.empty ())
            {
                history.clear ();
                direction = -two_loop (current, history);
                slope = inner (current.grad, direction);
                next = line_search (current, direction, slope);
            }
            if (!next)
                break; // stalled: no acceptable step even along the preconditioned gradient

            const Eigen::MatrixXd s = next->x - current.x;
            const Eigen::MatrixXd y = next->grad - current.grad;
            const double sy = inner (s, y);
            if (sy > 1e-14 * std::sqrt (inner (s, s) * inner (y, y)) && m_cfg.memory > 0)
            {
                history.push_back ({s, y, 1.0 / sy, sy / inner (y, precondition (y))});
                if (history.size () > static_cast<std::size_t> (m_cfg.memory))
                    history.pop_front ();
            }
            current = std::move (*next);
            ++iterations;
        }

        OptimResult result{m_start.with_interior (current.x)};
        result.value = current.value;
        result.t_hat = current.t_used;
        result.iterations = iterations;
        result.converged = converged;
        result.grad_norm = gnorm;
        result.el_residual = el_residual (result.path, m_field, current.t_used, m_quad);
        result.hamiltonian_violation = hamiltonian_violation (result.path, m_field, current.t_used, m_quad);
        result.cap_active = m_cap_hit;
        return result;
    }

  private:
    struct History
    {
        Eigen::MatrixXd s;
        Eigen::MatrixXd y;
        double rho;
        double gamma;
    };

    [[nodiscard]] bool is_tmam () const { return std::holds_alternative<OptimalTime> (m_mode); }

    Point evaluate (const Eigen::MatrixXd &x) const
    {
        const FePath path = m_start.with_interior (x);
        const ActionEvaluation eval = is_tmam () ? evaluate_optimal (path, m_field, m_quad)
                                                 : evaluate_fixed_T (path, m_field, std::get<FixedTime> (m_mode).T, m_quad);
        return Point{x, eval.value, eval.t_hat, eval.grad};
    }

    /// Trial evaluation; nullopt when the trial leaves the admissible set.
    std::optional<Point> try_evaluate (const Eigen::MatrixXd &x)
    {
        if (!x.allFinite ())
            return std::nullopt;
        try
        {
            Point p = evaluate (x);
            if (!std::isfinite (p.value) || !p.grad.allFinite ())
                return std::nullopt;
            if (is_tmam () && m_cfg.t_cap && p.t_used > *m_cfg.t_cap)
            {
                m_cap_hit = true;
                return std::nullopt;
            }
            return p;
        }
        catch (const Error &err)
        {
            if (err.code () == ErrorCode::DegeneratePath || err.code () == ErrorCode::DriftVanishes)
                return std::nullopt;
            throw;
        }
    }

    Eigen::MatrixXd precondition (const Eigen::MatrixXd &g) const
    {
        if (m_preconditioner)
            return m_preconditioner->apply (g);
        return g;
    }

    /// The operator is rebuilt when the working time drifts by more than 5%.
    [[nodiscard]] bool preconditioner_stale (const Point &p) const
    {
        if (!m_cfg.sobolev_precondition)
            return false;
        return !m_preconditioner || std::abs (p.t_used - m_preconditioner_time) > 0.05 * m_preconditioner_time;
    }

    /// Initial inverse-Hessian scale with no curvature pairs. The preconditioner
    /// already carries the Hessian scale; without it the largest stiffness
    /// eigenvalue 4 / (h T) bounds a safe gradient step.
    double default_scale (const Point &p) const
    {
        const double t = p.t_used > 0.0 ? p.t_used : 1.0;
        return m_cfg.sobolev_precondition ? 1.0 : 0.25 * t * m_start.mesh ().min_element_size ();
    }

    Eigen::MatrixXd two_loop (const Point &p, const std::deque<History> &history) const
    {
        Eigen::MatrixXd q = p.grad;
        std::vector<double> alpha (history.size ());
        for (std::size_t i = history.size (); i-- > 0;)
        {
            alpha[i] = history[i].rho * inner (history[i].s, q);
            q -= alpha[i] * history[i].y;
        }
        const double gamma = history.empty () ? default_scale (p) : history.back ().gamma;
        Eigen::MatrixXd r = gamma * precondition (q);
        for (std::size_t i = 0; i < history.size (); ++i)
        {
            const double beta = history[i].rho * inner (history[i].y, r);
            r += (alpha[i] - beta) * history[i].s;
        }
        return r;
    }

    /**
     * Backtracking on the Armijo condition. Near a minimizer the predicted decrease
     * drops below the rounding error of the action itself, so a trial is also
     * accepted under the approximate Wolfe conditions: the value may not rise by
     * more than rounding noise and the directional derivative must shrink.
     */
    std::optional<Point> line_search (const Point &current, const Eigen::MatrixXd &direction, double slope)
    {
        constexpr double kWolfeSigma = 0.9;
        constexpr double kWolfeDelta = 0.1;
        const double noise = 1e-13 * std::max (1.0, std::abs (current.value));
        double step = 1.0;
        for (int k = 0; k < 80; ++k, step *= m_cfg.shrink)
        {
            auto trial = try_evaluate (current.x + step * direction);
            if (!trial)
                continue;
            if (trial->value <= current.value + m_cfg.armijo * step * slope)
                return trial;
            if (trial->value <= current.value + noise)
            {
                const double trial_slope = inner (trial->grad, direction);
                if (trial_slope >= kWolfeSigma * slope && trial_slope <= (2.0 * kWolfeDelta - 1.0) * slope)
                    return trial;
            }
        }
        return std::nullopt;
    }

    void log (int iteration, const Point &p, double gnorm)
    {
        if (m_log)
            m_log << iteration << ',' << p.value << ',' << gnorm << ',' << p.t_used << '\n';
    }

    const FePath &m_start;
    const DriftField &m_field;
    SolveMode m_mode;
    OptimConfig m_cfg;
    const Quadrature &m_quad;
    std::ofstream m_log;
    bool m_cap_hit = false;
    std::optional<EnergyPreconditioner> m_preconditioner;
    double m_preconditioner_time = 0.0;
};

} // namespace

OptimResult minimize (const FePath &start, const DriftField &field, const SolveMode &mode, const OptimConfig &cfg,
                      const Quadrature &quad)
{
    return Solver (start, field, mode, cfg, quad).run ();
}

OptimResult minimize_fixed_T (const FePath &start, const DriftField &field, double T, const OptimConfig &cfg,
                              const Quadrature &quad)
{
    return minimize (start, field, FixedTime{T}, cfg, quad);
}

OptimResult minimize_tmam (const FePath &start, const DriftField &field, const OptimConfig &cfg,
                           const Quadrature &quad)
{
    return minimize (start, field, OptimalTime{}, cfg, quad);
}

std::vector<OptimResult> continuation_sweep (const DriftField &field, const Eigen::VectorXd &x1,
                                             const Eigen::VectorXd &x2, const std::vector<std::size_t> &N_list,
                                             const OptimConfig &cfg, const Quadrature &quad, const SolveMode &mode)
{
    if (N_list.empty ())
        throw Error (ErrorCode::InvalidArgument, "N_list must not be empty");
    for (std::size_t i = 0; i < N_list.size (); ++i)
    {
        if (N_list[i] == 0)
            throw Error (ErrorCode::InvalidArgument, "N_list entries must be positive");
        if (i > 0 && (N_list[i] <= N_list[i - 1] || N_list[i] % N_list[i - 1] != 0))
            throw Error (ErrorCode::InvalidArgument, "N_list must be strictly increasing with nested meshes");
    }

    std::vector<OptimResult> results;
    results.reserve (N_list.size ());
    for (const std::size_t N : N_list)
    {
        const Mesh mesh = uniform_mesh (N);
        const FePath start = results.empty () ? linear_interpolant_path (x1, x2, mesh)
                                              : interpolate_path (results.back ().path, mesh);
        results.push_back (minimize (start, field, mode, cfg, quad));
    }
    return results;
}

} // namespace tmam
