#include <pybind11/pybind11.h>
#include <pybind11/numpy.h>
#include <pybind11/stl.h>

#include <string>

#include "fblab/constraint_maps.hpp"
#include "fblab/convex_body.hpp"
#include "fblab/error.hpp"
#include "fblab/experiment.hpp"
#include "fblab/geodesics.hpp"
#include "fblab/specialfunc.hpp"

namespace py = pybind11;
using namespace fblab;

namespace {

// accept 1-3 coordinates, pad with zeros
Vec to_vec(const py::sequence& s) {
    if (s.size() == 0 || s.size() > 3) throw py::value_error("expected 1 to 3 coordinates");
    Vec v{};
    for (std::size_t i = 0; i < s.size(); ++i) v[i] = s[i].cast<double>();
    return v;
}

py::array_t<double> vertices_array(const GeodesicPath& p) {
    py::array_t<double> out({static_cast<py::ssize_t>(p.vertices.size()), py::ssize_t{2}});
    auto a = out.mutable_unchecked<2>();
    for (std::size_t i = 0; i < p.vertices.size(); ++i) {
        a(i, 0) = p.vertices[i][0];
        a(i, 1) = p.vertices[i][1];
    }
    return out;
}

GeodesicInit parse_init(const std::string& s) {
    if (s == "short") return GeodesicInit::Short;
    if (s == "long") return GeodesicInit::Long;
    if (s == "straight") return GeodesicInit::Straight;
    throw py::value_error("init must be 'short', 'long' or 'straight'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "free-boundary lab core";
    m.attr("__version__") = version();

    // most recently registered translator wins, so the base class goes first
    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);
    py::register_exception<InvalidProblem>(m, "InvalidProblem", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

    m.def("legendre", &legendre_eval, py::arg("n"), py::arg("x"));
    m.def("legendre_derivative", &legendre_derivative, py::arg("n"), py::arg("x"));
    m.def("legendre_zeros", [](int n) { return legendre_zeros(n).zeros; }, py::arg("n"));
    m.def("nearest_legendre_zero", &nearest_legendre_zero, py::arg("n"), py::arg("x"));
    m.def("radial_free_boundary_radius", &radial_free_boundary_radius, py::arg("outer_radius") = 2.0);
    m.def("radial_profile", &radial_profile, py::arg("rho"), py::arg("outer_radius") = 2.0);

    py::class_<ConvexBody>(m, "ConvexBody")
        .def_static("ball", [](int mdim, const py::sequence& c, double r) { return ConvexBody::ball(mdim, to_vec(c), r); },
                    py::arg("m"), py::arg("center"), py::arg("radius"))
        .def_static("ellipsoid",
                    [](int mdim, const py::sequence& c, const py::sequence& ax) { return ConvexBody::ellipsoid(mdim, to_vec(c), to_vec(ax)); },
                    py::arg("m"), py::arg("center"), py::arg("semi_axes"))
        .def_static("slab_capped_ball",
                    [](int mdim, const py::sequence& c, double r, double w) { return ConvexBody::slab_capped_ball(mdim, to_vec(c), r, w); },
                    py::arg("m"), py::arg("center"), py::arg("radius"), py::arg("half_width"))
        .def_static("half_space",
                    [](int mdim, const py::sequence& p, const py::sequence& n) { return ConvexBody::half_space(mdim, to_vec(p), to_vec(n)); },
                    py::arg("m"), py::arg("point"), py::arg("normal"))
        .def_property_readonly("kind", &ConvexBody::kind)
        .def("signed_distance", [](const ConvexBody& b, const py::sequence& y) { return b.signed_distance(to_vec(y)); })
        .def("project_out", [](const ConvexBody& b, const py::sequence& y) {
            const auto p = b.project_out(to_vec(y));
            return py::make_tuple(p.point, p.tie);
        })
        .def("flat_witness", [](const ConvexBody& b, const py::sequence& y, double tol) { return b.flat_witness(to_vec(y), tol); },
             py::arg("y"), py::arg("tol") = 1e-3);

    py::class_<GeodesicPath>(m, "GeodesicPath")
        .def_property_readonly("vertices", &vertices_array)
        .def_readonly("length", &GeodesicPath::length)
        .def_readonly("touching", &GeodesicPath::touching)
        .def_readonly("basin", &GeodesicPath::basin)
        .def_readonly("iterations", &GeodesicPath::iterations)
        .def("__repr__", [](const GeodesicPath& p) {
            return "<GeodesicPath length=" + std::to_string(p.length) + " basin=" + p.basin + ">";
        });

    m.def(
        "shortest_path_disk",
        [](const py::sequence& a, const py::sequence& b, const py::sequence& c, double r, double dtheta) {
            return shortest_path_disk(to_vec(a), to_vec(b), Ball{to_vec(c), r}, dtheta);
        },
        py::arg("a"), py::arg("b"), py::arg("center") = py::make_tuple(0.0, 0.0), py::arg("radius") = 1.0,
        py::arg("dtheta") = 1e-2);
    m.def(
        "shortest_path",
        [](const py::sequence& a, const py::sequence& b, const ConvexBody& body, int n_points, const std::string& init) {
            GeodesicConfig cfg;
            cfg.init = parse_init(init);
            const GeodesicProblem p(to_vec(a), to_vec(b), body);
            py::gil_scoped_release release;
            return shortest_path_discrete(p, n_points, cfg);
        },
        py::arg("a"), py::arg("b"), py::arg("body"), py::arg("n_points") = 64, py::arg("init") = "short");

    // Runs a config (JSON text) and returns the manifest as JSON text.
    m.def(
        "run_json",
        [](const std::string& config_text, const std::string& out, bool check) {
            nlohmann::json cfg;
            try {
                cfg = nlohmann::json::parse(config_text);
            } catch (const nlohmann::json::parse_error& e) {
                throw ConfigError("", e.what());
            }
            SuiteResult res;
            {
                py::gil_scoped_release release;
                res = run_suite(cfg, out, check, "<python>");
            }
            return py::make_tuple(res.status, res.manifest.string());
        },
        py::arg("config"), py::arg("out"), py::arg("check") = false);
}
