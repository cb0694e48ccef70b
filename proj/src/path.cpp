#include "tmam/path.hpp"

#include "tmam/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

namespace tmam
{

Mesh::Mesh (std::vector<double> nodes) : m_nodes (std::move (nodes))
{
    if (m_nodes.size () < 2)
        throw Error (ErrorCode::InvalidArgument, "mesh needs at least one element");
    if (m_nodes.front () != 0.0 || m_nodes.back () != 1.0)
        throw Error (ErrorCode::InvalidArgument, "mesh must start at 0 and end at 1");
    for (std::size_t k = 0; k + 1 < m_nodes.size (); ++k)
        if (!(m_nodes[k + 1] > m_nodes[k]))
            throw Error (ErrorCode::InvalidArgument, "mesh nodes must be strictly increasing");
}

Mesh Mesh::uniform (std::size_t elements)
{
    if (elements == 0)
        throw Error (ErrorCode::InvalidArgument, "uniform mesh needs N >= 1");
    std::vector<double> nodes (elements + 1);
    const auto n = static_cast<double> (elements);
    for (std::size_t k = 0; k <= elements; ++k)
        nodes[k] = static_cast<double> (k) / n;
    nodes.back () = 1.0;
    return Mesh (std::move (nodes));
}

Mesh uniform_mesh (std::size_t elements) { return Mesh::uniform (elements); }

double Mesh::max_element_size () const noexcept
{
    double h = 0.0;
    for (std::size_t e = 0; e < num_elements (); ++e)
        h = std::max (h, element_size (e));
    return h;
}

double Mesh::min_element_size () const noexcept
{
    double h = std::numeric_limits<double>::infinity ();
    for (std::size_t e = 0; e < num_elements (); ++e)
        h = std::min (h, element_size (e));
    return h;
}

Mesh Mesh::bisected () const
{
    std::vector<double> nodes;
    nodes.reserve (2 * m_nodes.size () - 1);
    for (std::size_t k = 0; k + 1 < m_nodes.size (); ++k)
    {
        nodes.push_back (m_nodes[k]);
        nodes.push_back (0.5 * (m_nodes[k] + m_nodes[k + 1]));
    }
    nodes.push_back (m_nodes.back ());
    return Mesh (std::move (nodes));
}

FePath::FePath (Mesh mesh, Eigen::MatrixXd values) : m_mesh (std::move (mesh)), m_values (std::move (values))
{
    if (m_values.cols () < 1)
        throw Error (ErrorCode::InvalidArgument, "path dimension must be positive");
    if (static_cast<std::size_t> (m_values.rows ()) != m_mesh.num_nodes ())
        throw Error (ErrorCode::DimensionMismatch, "path values need one row per mesh node");
    if (!m_values.allFinite ())
        throw Error (ErrorCode::InvalidArgument, "path values must be finite");
}

Eigen::MatrixXd FePath::interior () const
{
    return m_values.middleRows (1, m_values.rows () - 2);
}

FePath FePath::with_interior (const Eigen::MatrixXd &interior) const
{
    if (interior.rows () != m_values.rows () - 2 || interior.cols () != m_values.cols ())
        throw Error (ErrorCode::DimensionMismatch, "interior block has the wrong shape");
    Eigen::MatrixXd values = m_values;
    values.middleRows (1, values.rows () - 2) = interior;
    return FePath (m_mesh, std::move (values));
}

Eigen::VectorXd FePath::eval (double s) const
{
    s = std::clamp (s, 0.0, 1.0);
    const auto nodes = m_mesh.nodes ();
    auto it = std::upper_bound (nodes.begin (), nodes.end (), s);
    std::size_t e = it == nodes.begin () ? 0 : static_cast<std::size_t> (it - nodes.begin ()) - 1;
    e = std::min (e, m_mesh.num_elements () - 1);
    const double xi = (s - nodes[e]) / m_mesh.element_size (e);
    const auto ei = static_cast<Eigen::Index> (e);
    return ((1.0 - xi) * m_values.row (ei) + xi * m_values.row (ei + 1)).transpose ();
}

Polyline::Polyline (Eigen::MatrixXd points) : m_points (std::move (points))
{
    if (m_points.rows () < 2)
        throw Error (ErrorCode::InvalidArgument, "polyline needs at least 2 points");
    if (m_points.cols () < 1)
        throw Error (ErrorCode::InvalidArgument, "polyline dimension must be positive");
    if (!m_points.allFinite ())
        throw Error (ErrorCode::InvalidArgument, "polyline points must be finite");
}

Polyline Polyline::from_path (const FePath &path, std::size_t per_element)
{
    per_element = std::max<std::size_t> (per_element, 1);
    const auto &v = path.values ();
    const auto elements = static_cast<Eigen::Index> (path.mesh ().num_elements ());
    const auto per = static_cast<Eigen::Index> (per_element);
    Eigen::MatrixXd points (elements * per + 1, v.cols ());
    for (Eigen::Index e = 0; e < elements; ++e)
        for (Eigen::Index j = 0; j < per; ++j)
        {
            const double xi = static_cast<double> (j) / static_cast<double> (per);
            points.row (e * per + j) = (1.0 - xi) * v.row (e) + xi * v.row (e + 1);
        }
    points.row (points.rows () - 1) = v.row (v.rows () - 1);
    return Polyline (std::move (points));
}

FePath linear_interpolant_path (const Eigen::VectorXd &x1, const Eigen::VectorXd &x2, const Mesh &mesh)
{
    if (x1.size () != x2.size ())
        throw Error (ErrorCode::DimensionMismatch, "endpoints have different dimensions");
    if (x1.size () < 1)
        throw Error (ErrorCode::InvalidArgument, "path dimension must be positive");
    Eigen::MatrixXd values (static_cast<Eigen::Index> (mesh.num_nodes ()), x1.size ());
    const Eigen::RowVectorXd delta = (x2 - x1).transpose ();
    for (std::size_t k = 0; k < mesh.num_nodes (); ++k)
        values.row (static_cast<Eigen::Index> (k)) = x1.transpose () + mesh.node (k) * delta;
    // Pin endpoints bit-exactly.
    values.row (0) = x1.transpose ();
    values.row (values.rows () - 1) = x2.transpose ();
    return FePath (mesh, std::move (values));
}

FePath interpolate_path (const FePath &path, const Mesh &mesh)
{
    Eigen::MatrixXd values (static_cast<Eigen::Index> (mesh.num_nodes ()), path.dim ());
    for (std::size_t k = 0; k < mesh.num_nodes (); ++k)
        values.row (static_cast<Eigen::Index> (k)) = path.eval (mesh.node (k)).transpose ();
    values.row (0) = path.values ().row (0);
    values.row (values.rows () - 1) = path.values ().row (path.values ().rows () - 1);
    return FePath (mesh, std::move (values));
}

FePath refine_path (const FePath &path)
{
    const auto &v = path.values ();
    Eigen::MatrixXd values (2 * v.rows () - 1, v.cols ());
    for (Eigen::Index k = 0; k + 1 < v.rows (); ++k)
    {
        values.row (2 * k) = v.row (k);
        values.row (2 * k + 1) = 0.5 * (v.row (k) + v.row (k + 1));
    }
    values.row (values.rows () - 1) = v.row (v.rows () - 1);
    return FePath (path.mesh ().bisected (), std::move (values));
}

double arc_length (const FePath &path)
{
    const auto &v = path.values ();
    double length = 0.0;
    for (Eigen::Index k = 0; k + 1 < v.rows (); ++k)
        length += (v.row (k + 1) - v.row (k)).norm ();
    return length;
}

double discrete_frechet (const Polyline &a, const Polyline &b)
{
    if (a.dim () != b.dim ())
        throw Error (ErrorCode::DimensionMismatch, "polylines have different dimensions");

    const auto &p = a.points ();
    const auto &q = b.points ();
    const Eigen::Index m = q.rows ();

    // Rolling row of the coupling lattice:
    // ca(i, j) = max(d(i, j), min(ca(i-1, j), ca(i-1, j-1), ca(i, j-1))).
    std::vector<double> prev (static_cast<std::size_t> (m));
    std::vector<double> cur (static_cast<std::size_t> (m));
    for (Eigen::Index i = 0; i < p.rows (); ++i)
    {
        for (Eigen::Index j = 0; j < m; ++j)
        {
            const double d = (p.row (i) - q.row (j)).norm ();
            const auto jj = static_cast<std::size_t> (j);
            double reach;
            if (i == 0 && j == 0)
                reach = d;
            else if (i == 0)
                reach = cur[jj - 1];
            else if (j == 0)
                reach = prev[0];
            else
                reach = std::min ({prev[jj], prev[jj - 1], cur[jj - 1]});
            cur[jj] = std::max (d, reach);
        }
        std::swap (prev, cur);
    }
    return prev.back ();
}

double clustering_fraction (const FePath &path, const Eigen::VectorXd &center, double radius)
{
    if (!(radius > 0.0))
        throw Error (ErrorCode::InvalidArgument, "clustering radius must be positive");
    if (center.size () != path.dim ())
        throw Error (ErrorCode::DimensionMismatch, "center dimension differs from path dimension");
    const auto &v = path.values ();
    Eigen::Index inside = 0;
    for (Eigen::Index k = 0; k < v.rows (); ++k)
        if ((v.row (k).transpose () - center).norm () <= radius)
            ++inside;
    return static_cast<double> (inside) / static_cast<double> (v.rows ());
}

void write_path_csv (std::ostream &os, const FePath &path)
{
    os << 's';
    for (Eigen::Index j = 0; j < path.dim (); ++j)
        os << ",x" << j + 1;
    os << '\n';
    const auto old = os.precision (17);
    for (std::size_t k = 0; k < path.mesh ().num_nodes (); ++k)
    {
        os << path.mesh ().node (k);
        for (Eigen::Index j = 0; j < path.dim (); ++j)
            os << ',' << path.values () (static_cast<Eigen::Index> (k), j);
        os << '\n';
    }
    os.precision (old);
}

FePath read_path_csv (std::istream &is)
{
    std::string line;
    if (!std::getline (is, line) || line.rfind ("s", 0) != 0)
        throw Error (ErrorCode::InvalidArgument, "path CSV must start with header `s,x1,...`");
    const auto dim = static_cast<Eigen::Index> (std::count (line.begin (), line.end (), ','));
    if (dim < 1)
        throw Error (ErrorCode::InvalidArgument, "path CSV header has no state columns");

    std::vector<double> nodes;
    std::vector<double> flat;
    while (std::getline (is, line))
    {
        if (line.empty () || line == "\r")
            continue;
        std::istringstream row (line);
        std::string cell;
        Eigen::Index col = 0;
        while (std::getline (row, cell, ','))
        {
            double value = 0.0;
            try
            {
                std::size_t used = 0;
                value = std::stod (cell, &used);
            }
            catch (const std::exception &)
            {
                throw Error (ErrorCode::InvalidArgument, "path CSV has a non-numeric cell: " + cell);
            }
            (col == 0 ? nodes : flat).push_back (value);
            ++col;
        }
        if (col != dim + 1)
            throw Error (ErrorCode::InvalidArgument, "path CSV row has the wrong number of columns");
    }
    const auto rows = static_cast<Eigen::Index> (nodes.size ());
    Eigen::MatrixXd values (rows, dim);
    for (Eigen::Index k = 0; k < rows; ++k)
        for (Eigen::Index j = 0; j < dim; ++j)
            values (k, j) = flat[static_cast<std::size_t> (k * dim + j)];
    return FePath (Mesh (std::move (nodes)), std::move (values));
}

} // namespace tmam
