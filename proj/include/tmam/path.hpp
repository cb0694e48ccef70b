#pragma once
/**
 * @file   path.hpp
 * @brief  Meshes on the unit interval, piecewise-linear vector paths and
 *         their geometry (arc length, discrete Frechet distance, clustering).
 */

#include <Eigen/Dense>

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace tmam
{

/**
 * @brief Partition of [0, 1] in scaled time s = t / T.
 *
 * Nodes are stored explicitly so nonuniform partitions need no type change.
 */
class Mesh
{
  public:
    /// Validates: first node 0, last node 1, strictly increasing, at least one element.
    explicit Mesh (std::vector<double> nodes);

    /// N equispaced elements, h = 1 / N.
    static Mesh uniform (std::size_t elements);

    [[nodiscard]] std::size_t num_elements () const noexcept { return m_nodes.size () - 1; }
    [[nodiscard]] std::size_t num_nodes () const noexcept { return m_nodes.size (); }
    [[nodiscard]] double node (std::size_t k) const { return m_nodes[k]; }
    [[nodiscard]] std::span<const double> nodes () const noexcept { return m_nodes; }
    [[nodiscard]] double element_size (std::size_t e) const { return m_nodes[e + 1] - m_nodes[e]; }
    [[nodiscard]] double max_element_size () const noexcept;
    [[nodiscard]] double min_element_size () const noexcept;

    /// Every element split at its midpoint.
    [[nodiscard]] Mesh bisected () const;

  private:
    std::vector<double> m_nodes;
};

Mesh uniform_mesh (std::size_t elements);

/**
 * @brief Continuous piecewise-linear path s -> R^n on a mesh.
 *
 * Row k of values() is the nodal value at mesh node k; the first and last
 * rows are the pinned endpoints x1 and x2.
 */
class FePath
{
  public:
    FePath (Mesh mesh, Eigen::MatrixXd values);

    [[nodiscard]] Eigen::Index dim () const noexcept { return m_values.cols (); }
    [[nodiscard]] const Mesh &mesh () const noexcept { return m_mesh; }
    [[nodiscard]] const Eigen::MatrixXd &values () const noexcept { return m_values; }
    [[nodiscard]] Eigen::VectorXd left () const { return m_values.row (0).transpose (); }
    [[nodiscard]] Eigen::VectorXd right () const { return m_values.row (m_values.rows () - 1).transpose (); }
    [[nodiscard]] Eigen::VectorXd node_value (std::size_t k) const
    {
        return m_values.row (static_cast<Eigen::Index> (k)).transpose ();
    }

    /// Interior nodal values, (N-1) x n.
    [[nodiscard]] Eigen::MatrixXd interior () const;

    /// Same mesh and endpoints, new interior values.
    [[nodiscard]] FePath with_interior (const Eigen::MatrixXd &interior) const;

    /// Point evaluation by linear interpolation; s is clamped to [0, 1].
    [[nodiscard]] Eigen::VectorXd eval (double s) const;

  private:
    Mesh m_mesh;
    Eigen::MatrixXd m_values;
};

/// Ordered point sequence used for geometric comparison. Rows are points.
class Polyline
{
  public:
    explicit Polyline (Eigen::MatrixXd points);

    /// Nodes of a path, optionally with `per_element - 1` extra equispaced
    /// samples inside every element (exact, the path is linear there).
    static Polyline from_path (const FePath &path, std::size_t per_element = 1);

    [[nodiscard]] Eigen::Index size () const noexcept { return m_points.rows (); }
    [[nodiscard]] Eigen::Index dim () const noexcept { return m_points.cols (); }
    [[nodiscard]] const Eigen::MatrixXd &points () const noexcept { return m_points; }

  private:
    Eigen::MatrixXd m_points;
};

FePath linear_interpolant_path (const Eigen::VectorXd &x1, const Eigen::VectorXd &x2, const Mesh &mesh);

/// Bisects every element; the represented function is unchanged.
FePath refine_path (const FePath &path);

/// Linear interpolation of `path` onto the nodes of `mesh`.
FePath interpolate_path (const FePath &path, const Mesh &mesh);

double arc_length (const FePath &path);

/// Discrete Frechet distance (Euclidean point metric), O(|a| |b|) time, O(|b|) memory.
double discrete_frechet (const Polyline &a, const Polyline &b);

/// Fraction of mesh nodes whose value lies within `radius` of `center`.
double clustering_fraction (const FePath &path, const Eigen::VectorXd &center, double radius);

// Path CSV: header `s,x1,...,xn`, one row per node, 17 significant digits.
void write_path_csv (std::ostream &os, const FePath &path);
FePath read_path_csv (std::istream &is);

} // namespace tmam
