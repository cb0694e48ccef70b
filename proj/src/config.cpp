#include "tmam/config.hpp"

#include "tmam/errors.hpp"
#include "tmam/linoracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>

namespace tmam
{

using nlohmann::json;

namespace
{

std::string join (std::string_view where, std::string_view key)
{
    return where.empty () ? std::string (key) : std::string (where) + "." + std::string (key);
}

[[noreturn]] void fail (const std::string &msg) { throw Error (ErrorCode::ConfigError, msg); }

const json &require_object (const json &j, const std::string &where)
{
    if (!j.is_object ())
        fail (where + " must be an object");
    return j;
}

void check_keys (const json &obj, std::string_view where, std::initializer_list<std::string_view> allowed)
{
    for (const auto &[key, value] : obj.items ())
        if (std::find (allowed.begin (), allowed.end (), key) == allowed.end ())
            fail ("unknown key '" + join (where, key) + "'");
}

double number (const json &j, const std::string &key)
{
    if (!j.is_number ())
        fail (key + " must be a number");
    const double v = j.get<double> ();
    if (!std::isfinite (v))
        fail (key + " must be finite");
    return v;
}

double positive (const json &j, const std::string &key)
{
    const double v = number (j, key);
    if (!(v > 0.0))
        fail (key + " must be positive");
    return v;
}

long long integer (const json &j, const std::string &key, long long minimum)
{
    if (!j.is_number_integer ())
        fail (key + " must be an integer");
    const auto v = j.get<long long> ();
    if (v < minimum)
        fail (key + " must be at least " + std::to_string (minimum));
    return v;
}

bool boolean (const json &j, const std::string &key)
{
    if (!j.is_boolean ())
        fail (key + " must be true or false");
    return j.get<bool> ();
}

std::string text (const json &j, const std::string &key)
{
    if (!j.is_string ())
        fail (key + " must be a string");
    return j.get<std::string> ();
}

std::string choice (const json &j, const std::string &key, std::initializer_list<std::string_view> options)
{
    std::string v = text (j, key);
    if (std::find (options.begin (), options.end (), v) == options.end ())
    {
        std::string list;
        for (auto o : options)
            list += (list.empty () ? "" : ", ") + std::string (o);
        fail (key + " must be one of: " + list);
    }
    return v;
}

Eigen::VectorXd real_vector (const json &j, const std::string &key)
{
    if (!j.is_array () || j.empty ())
        fail (key + " must be a non-empty array of numbers");
    Eigen::VectorXd v (static_cast<Eigen::Index> (j.size ()));
    for (std::size_t i = 0; i < j.size (); ++i)
        v (static_cast<Eigen::Index> (i)) = number (j[i], key + "[" + std::to_string (i) + "]");
    return v;
}

Eigen::MatrixXd matrix (const json &j, const std::string &key)
{
    if (!j.is_array () || j.empty ())
        fail (key + " must be a non-empty array of rows");
    const auto rows = static_cast<Eigen::Index> (j.size ());
    Eigen::MatrixXd A;
    for (Eigen::Index r = 0; r < rows; ++r)
    {
        const Eigen::VectorXd row = real_vector (j[static_cast<std::size_t> (r)], key + "[" + std::to_string (r) + "]");
        if (r == 0)
            A.resize (rows, row.size ());
        else if (row.size () != A.cols ())
            fail (key + " rows must have equal length");
        A.row (r) = row.transpose ();
    }
    if (A.rows () != A.cols ())
        fail (key + " must be square");
    return A;
}

FieldSpec parse_field (const json &j)
{
    require_object (j, "problem.field");
    check_keys (j, "problem.field", {"type", "matrix", "gamma", "dim"});
    FieldSpec f;
    if (j.contains ("type"))
        f.type = choice (j["type"], "problem.field.type", {"paper_example", "linear", "maier_stein", "zero"});
    if (j.contains ("matrix"))
    {
        if (f.type != "linear")
            fail ("problem.field.matrix is only valid with type 'linear'");
        f.A = matrix (j["matrix"], "problem.field.matrix");
    }
    else if (f.type == "linear")
        fail ("problem.field.matrix is required for type 'linear'");
    if (j.contains ("gamma"))
    {
        if (f.type != "maier_stein")
            fail ("problem.field.gamma is only valid with type 'maier_stein'");
        f.gamma = number (j["gamma"], "problem.field.gamma");
    }
    if (j.contains ("dim"))
    {
        if (f.type != "zero")
            fail ("problem.field.dim is only valid with type 'zero'");
        f.dim = static_cast<Eigen::Index> (integer (j["dim"], "problem.field.dim", 1));
    }
    return f;
}

ProblemSpec parse_problem (const json &j)
{
    require_object (j, "problem");
    check_keys (j, "problem", {"field", "x1", "x2"});
    ProblemSpec p;
    if (j.contains ("field"))
        p.field = parse_field (j["field"]);
    if (j.contains ("x1"))
        p.x1 = real_vector (j["x1"], "problem.x1");
    if (j.contains ("x2"))
    {
        const json &x2 = j["x2"];
        if (x2.is_object ())
        {
            check_keys (x2, "problem.x2", {"flow_time"});
            if (!x2.contains ("flow_time"))
                fail ("problem.x2 object needs flow_time");
            p.x2_flow_time = positive (x2["flow_time"], "problem.x2.flow_time");
        }
        else
            p.x2 = real_vector (x2, "problem.x2");
    }
    return p;
}

SolveMode parse_mode (const json &j)
{
    require_object (j, "mode");
    check_keys (j, "mode", {"type", "T"});
    if (!j.contains ("type"))
        fail ("mode.type is required");
    const std::string type = choice (j["type"], "mode.type", {"tmam", "fixed_t"});
    if (type == "tmam")
    {
        if (j.contains ("T"))
            fail ("mode.T is only valid with mode.type 'fixed_t'");
        return OptimalTime{};
    }
    if (!j.contains ("T"))
        fail ("mode.T is required for mode.type 'fixed_t'");
    return FixedTime{positive (j["T"], "mode.T")};
}

void parse_mesh (const json &j, RunConfig &cfg)
{
    require_object (j, "mesh");
    check_keys (j, "mesh", {"N", "N_list"});
    if (j.contains ("N"))
        cfg.N = static_cast<std::size_t> (integer (j["N"], "mesh.N", 1));
    if (j.contains ("N_list"))
    {
        const json &list = j["N_list"];
        if (!list.is_array () || list.empty ())
            fail ("mesh.N_list must be a non-empty array of integers");
        for (std::size_t i = 0; i < list.size (); ++i)
        {
            const auto N =
                static_cast<std::size_t> (integer (list[i], "mesh.N_list[" + std::to_string (i) + "]", 1));
            if (!cfg.N_list.empty () && (N <= cfg.N_list.back () || N % cfg.N_list.back () != 0))
                fail ("mesh.N_list must be strictly increasing with each entry dividing the next");
            cfg.N_list.push_back (N);
        }
    }
}

void parse_optimizer (const json &j, OptimConfig &o)
{
    require_object (j, "optimizer");
    check_keys (j, "optimizer",
                {"tol_grad", "max_iters", "memory", "sobolev_precondition", "t_cap", "armijo", "shrink"});
    if (j.contains ("tol_grad"))
        o.tol_grad = positive (j["tol_grad"], "optimizer.tol_grad");
    if (j.contains ("max_iters"))
        o.max_iters = static_cast<int> (integer (j["max_iters"], "optimizer.max_iters", 1));
    if (j.contains ("memory"))
        o.memory = static_cast<int> (integer (j["memory"], "optimizer.memory", 0));
    if (j.contains ("sobolev_precondition"))
        o.sobolev_precondition = boolean (j["sobolev_precondition"], "optimizer.sobolev_precondition");
    if (j.contains ("t_cap"))
        o.t_cap = positive (j["t_cap"], "optimizer.t_cap");
    if (j.contains ("armijo"))
    {
        o.armijo = number (j["armijo"], "optimizer.armijo");
        if (!(o.armijo > 0.0 && o.armijo < 1.0))
            fail ("optimizer.armijo must lie in (0, 1)");
    }
    if (j.contains ("shrink"))
    {
        o.shrink = number (j["shrink"], "optimizer.shrink");
        if (!(o.shrink > 0.0 && o.shrink < 1.0))
            fail ("optimizer.shrink must lie in (0, 1)");
    }
}

void parse_study (const json &j, StudySettings &s)
{
    require_object (j, "study");
    check_keys (j, "study",
                {"name", "T_fixed", "trajectory_samples", "frechet_per_element", "clustering_radius", "check_rates",
                 "reference_action", "reference_time"});
    if (j.contains ("name"))
        s.name = choice (j["name"], "study.name", {"case_i", "case_ii", "linear_fixed_t", "custom"});
    if (j.contains ("T_fixed"))
        s.T_fixed = positive (j["T_fixed"], "study.T_fixed");
    if (j.contains ("trajectory_samples"))
        s.trajectory_samples = static_cast<int> (integer (j["trajectory_samples"], "study.trajectory_samples", 2));
    if (j.contains ("frechet_per_element"))
        s.frechet_per_element = static_cast<int> (integer (j["frechet_per_element"], "study.frechet_per_element", 1));
    if (j.contains ("clustering_radius"))
        s.clustering_radius = positive (j["clustering_radius"], "study.clustering_radius");
    if (j.contains ("check_rates"))
        s.check_rates = boolean (j["check_rates"], "study.check_rates");
    if (j.contains ("reference_action"))
        s.reference_action = number (j["reference_action"], "study.reference_action");
    if (j.contains ("reference_time"))
        s.reference_time = positive (j["reference_time"], "study.reference_time");
}

void parse_oracle (const json &j, OracleSettings &o)
{
    require_object (j, "oracle");
    check_keys (j, "oracle", {"kind", "t_end", "samples"});
    if (j.contains ("kind"))
        o.kind = choice (j["kind"], "oracle.kind", {"trajectory", "exact_minimizer"});
    if (j.contains ("t_end"))
    {
        if (j["t_end"].is_string ())
        {
            if (j["t_end"].get<std::string> () != "inf")
                fail ("oracle.t_end must be a positive number or \"inf\"");
        }
        else
            o.t_end = positive (j["t_end"], "oracle.t_end");
    }
    if (j.contains ("samples"))
        o.samples = static_cast<int> (integer (j["samples"], "oracle.samples", 2));
}

void parse_outputs (const json &j, OutputPaths &o)
{
    require_object (j, "outputs");
    check_keys (j, "outputs",
                {"result_json", "path_csv", "study_csv", "study_fixed_csv", "summary_json", "iteration_log",
                 "oracle_csv"});
    const std::pair<const char *, std::string *> fields[] = {
        {"result_json", &o.result_json},   {"path_csv", &o.path_csv},         {"study_csv", &o.study_csv},
        {"study_fixed_csv", &o.study_fixed_csv}, {"summary_json", &o.summary_json}, {"iteration_log", &o.iteration_log},
        {"oracle_csv", &o.oracle_csv}};
    for (const auto &[key, target] : fields)
        if (j.contains (key))
            *target = text (j[key], std::string ("outputs.") + key);
}

} // namespace

RunConfig parse_config (const json &doc)
{
    require_object (doc, "configuration");
    check_keys (doc, "",
                {"problem", "mode", "mesh", "optimizer", "quadrature", "study", "oracle", "warm_start", "outputs"});
    RunConfig cfg;
    cfg.raw = doc;
    if (doc.contains ("problem"))
        cfg.problem = parse_problem (doc["problem"]);
    if (doc.contains ("mode"))
        cfg.mode = parse_mode (doc["mode"]);
    if (doc.contains ("mesh"))
        parse_mesh (doc["mesh"], cfg);
    if (doc.contains ("optimizer"))
        parse_optimizer (doc["optimizer"], cfg.optimizer);
    if (doc.contains ("quadrature"))
    {
        const json &q = require_object (doc["quadrature"], "quadrature");
        check_keys (q, "quadrature", {"q"});
        if (q.contains ("q"))
            cfg.quadrature = static_cast<int> (integer (q["q"], "quadrature.q", 1));
    }
    if (doc.contains ("study"))
        parse_study (doc["study"], cfg.study);
    if (doc.contains ("oracle"))
        parse_oracle (doc["oracle"], cfg.oracle);
    if (doc.contains ("warm_start"))
        cfg.warm_start = text (doc["warm_start"], "warm_start");
    if (doc.contains ("outputs"))
        parse_outputs (doc["outputs"], cfg.outputs);
    return cfg;
}

json load_config_file (const std::string &path)
{
    std::ifstream in (path);
    if (!in)
        fail ("cannot read config file '" + path + "'");
    try
    {
        return json::parse (in);
    }
    catch (const json::parse_error &e)
    {
        fail ("malformed config file '" + path + "': " + e.what ());
    }
}

void apply_override (json &doc, std::string_view assignment)
{
    const auto eq = assignment.find ('=');
    if (eq == std::string_view::npos || eq == 0)
        fail ("override '" + std::string (assignment) + "' must have the form key=value");
    const std::string key (assignment.substr (0, eq));
    const std::string raw_value (assignment.substr (eq + 1));

    json value = json::parse (raw_value, nullptr, false);
    if (value.is_discarded ())
        value = raw_value;

    if (!doc.is_object ())
        doc = json::object ();
    json *node = &doc;
    std::size_t start = 0;
    while (true)
    {
        const auto dot = key.find ('.', start);
        const std::string part = key.substr (start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty ())
            fail ("override key '" + key + "' has an empty component");
        if (dot == std::string::npos)
        {
            (*node)[part] = value;
            return;
        }
        json &child = (*node)[part];
        if (child.is_null ())
            child = json::object ();
        else if (!child.is_object ())
            fail ("override key '" + key + "' descends into non-object '" + key.substr (0, dot) + "'");
        node = &child;
        start = dot + 1;
    }
}

DriftField make_field (const FieldSpec &spec, Eigen::Index dim)
{
    if (spec.type == "paper_example")
    {
        if (dim != 2)
            fail ("problem.x1 must have 2 entries for field type 'paper_example'");
        return paper_example_field ();
    }
    if (spec.type == "maier_stein")
    {
        if (dim != 2)
            fail ("problem.x1 must have 2 entries for field type 'maier_stein'");
        return maier_stein_field (spec.gamma);
    }
    if (spec.type == "linear")
    {
        if (spec.A->rows () != dim)
            fail ("problem.field.matrix size differs from the dimension of problem.x1");
        return linear_field (*spec.A);
    }
    const Eigen::Index n = spec.dim.value_or (dim);
    if (n != dim)
        fail ("problem.field.dim differs from the dimension of problem.x1");
    return linear_field (Eigen::MatrixXd::Zero (n, n));
}

Eigen::VectorXd resolve_x2 (const ProblemSpec &problem, const DriftField &field)
{
    if (problem.x2_flow_time)
    {
        if (!field.is_linear ())
            fail ("problem.x2.flow_time needs a linear field");
        return matrix_exp_apply (*field.metadata ().linear_matrix, *problem.x2_flow_time, *problem.x1);
    }
    if (!problem.x2)
        fail ("problem.x2 is required");
    if (problem.x2->size () != problem.x1->size ())
        fail ("problem.x2 must have as many entries as problem.x1");
    return *problem.x2;
}

} // namespace tmam
