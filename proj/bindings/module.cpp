#include "ttdensity/bayes.hpp"
#include "ttdensity/density.hpp"
#include "ttdensity/experiments.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <nlohmann/json.hpp>

#include <fstream>

namespace py = pybind11;
using namespace ttdensity;

namespace {

/// Wraps a Python callable as a LogDensity; evaluation re-acquires the GIL
/// because layer workers run on C++ threads.
LogDensity density_from_callable(py::object fn, int dim) {
    auto shared = std::make_shared<py::object>(std::move(fn));
    return LogDensity{
        [shared](const Vector& x) -> double {
            py::gil_scoped_acquire gil;
            return (*shared)(x).cast<double>();
        },
        dim};
}

nlohmann::json json_from_pystr(const std::string& text) {
    return nlohmann::json::parse(text);
}

}  // namespace

PYBIND11_MODULE(_ttdensity, m) {
    m.doc() = "Layered tensor-train surrogates for concentrated densities";

    py::register_exception<DimensionMismatch>(m, "DimensionMismatch");
    py::register_exception<NoConvergence>(m, "NoConvergence");
    py::register_exception<CapExceeded>(m, "CapExceeded");
    py::register_exception<ConfigError>(m, "ConfigError");

    py::class_<LogDensity>(m, "LogDensity")
        .def(py::init(&density_from_callable), py::arg("fn"), py::arg("dim"))
        .def("__call__",
             [](const LogDensity& f, const Vector& x) { return f(x); })
        .def_readonly("dim", &LogDensity::dim);

    py::class_<TransportMap>(m, "TransportMap")
        .def_static("identity", &TransportMap::identity)
        .def_static("affine", &TransportMap::affine, py::arg("H"),
                    py::arg("M"))
        .def_static("quadratic", &TransportMap::quadratic, py::arg("A"),
                    py::arg("H"), py::arg("M"))
        .def_static("convex_combination", &TransportMap::convex_combination,
                    py::arg("t"), py::arg("a"), py::arg("b"))
        .def_static("composed", &TransportMap::composed, py::arg("outer"),
                    py::arg("inner"))
        .def("apply", &TransportMap::apply)
        .def("jacobian", &TransportMap::jacobian)
        .def("log_abs_det_jacobian", &TransportMap::log_abs_det_jacobian)
        .def("invert", &TransportMap::invert, py::arg("y"),
             py::arg("tol") = 1e-12, py::arg("max_iter") = 50)
        .def_property_readonly("dim", &TransportMap::dim)
        .def_property_readonly("is_affine", [](const TransportMap& map) {
            return map.as_affine() != nullptr;
        });

    m.def("perturbed_prior", &perturbed_prior, py::arg("target"),
          py::arg("map"));
    m.def(
        "laplace_affine",
        [](const LogDensity& target, const Vector& x0) {
            return laplace_affine(target, x0);
        },
        py::arg("target"), py::arg("x0"));

    py::class_<LayerPartition>(m, "LayerPartition")
        .def_readonly("radii", &LayerPartition::radii)
        .def_readonly("dim", &LayerPartition::dim)
        .def_property_readonly("num_layers", &LayerPartition::num_layers)
        .def_property_readonly("outer_radius", &LayerPartition::outer_radius);
    m.def(
        "equidistant_partition",
        [](int L, double R, int d) { return equidistant_partition(L, R, d); },
        py::arg("L"), py::arg("R"), py::arg("d"));

    py::class_<FitOptions>(m, "FitOptions")
        .def(py::init<>())
        .def_readwrite("initial_rank", &FitOptions::initial_rank)
        .def_readwrite("max_rank", &FitOptions::max_rank)
        .def_readwrite("max_sweeps", &FitOptions::max_sweeps)
        .def_readwrite("target_residual", &FitOptions::target_residual)
        .def_readwrite("stagnation_factor", &FitOptions::stagnation_factor)
        .def_readwrite("validation_fraction", &FitOptions::validation_fraction)
        .def_readwrite("seed", &FitOptions::seed);

    py::class_<BuildOptions>(m, "BuildOptions")
        .def(py::init<>())
        .def_readwrite("radial_degree", &BuildOptions::radial_degree)
        .def_readwrite("trig_size", &BuildOptions::trig_size)
        .def_readwrite("angular_size", &BuildOptions::angular_size)
        .def_readwrite("tau_mant", &BuildOptions::tau_mant)
        .def_readwrite("samples_per_layer", &BuildOptions::samples_per_layer)
        .def_readwrite("fit", &BuildOptions::fit)
        .def_readwrite("moment_cap", &BuildOptions::moment_cap)
        .def_readwrite("seed", &BuildOptions::seed);

    py::class_<QoiEstimate>(m, "QoiEstimate")
        .def_readonly("value", &QoiEstimate::value)
        .def_readonly("stderr", &QoiEstimate::stderr);

    py::class_<LayeredDensity>(m, "LayeredDensity")
        .def_property_readonly("mass_inside", &LayeredDensity::mass_inside)
        .def_property_readonly("mass_tail", &LayeredDensity::mass_tail)
        .def_property_readonly("normalizer", &LayeredDensity::normalizer)
        .def_property_readonly("num_layers",
                               [](const LayeredDensity& ld) {
                                   return ld.partition().num_layers();
                               })
        .def_property_readonly("layer_ranks",
                               [](const LayeredDensity& ld) {
                                   std::vector<std::vector<int>> out;
                                   for (const auto& layer : ld.layers())
                                       out.push_back(layer.tt.ranks());
                                   return out;
                               })
        .def("eval", &LayeredDensity::eval, py::arg("x"))
        .def("log_eval_target", &LayeredDensity::log_eval_target,
             py::arg("map"), py::arg("y"))
        .def(
            "moment",
            [](const LayeredDensity& ld, const TransportMap& map,
               const std::vector<int>& alpha) {
                const AffineData* aff = map.as_affine();
                if (!aff)
                    throw ConfigError("moment: map must be affine");
                return ld.moment(*aff, alpha);
            },
            py::arg("map"), py::arg("alpha"))
        .def(
            "mean_and_cov",
            [](const LayeredDensity& ld, const TransportMap& map,
               int qoi_samples, std::uint64_t seed) {
                return ld.mean_and_cov(map, qoi_samples, seed);
            },
            py::arg("map"), py::arg("qoi_samples") = 0, py::arg("seed") = 0)
        .def(
            "marginal_moments",
            [](const LayeredDensity& ld, const TransportMap& map, int i,
               int m_max) {
                const AffineData* aff = map.as_affine();
                if (!aff)
                    throw ConfigError("marginal_moments: map must be affine");
                return ld.marginal_moments(*aff, i, m_max);
            },
            py::arg("map"), py::arg("i"), py::arg("m_max"))
        .def(
            "moment_qoi",
            [](const LayeredDensity& ld, const TransportMap& map,
               py::object Q, int q_dim, int samples_per_layer,
               std::uint64_t seed, bool include_tail) {
                auto shared = std::make_shared<py::object>(std::move(Q));
                auto wrapped = [shared](const Vector& y) -> Vector {
                    py::gil_scoped_acquire gil;
                    return (*shared)(y).cast<Vector>();
                };
                py::gil_scoped_release release;
                return ld.moment_qoi(map, wrapped, q_dim, samples_per_layer,
                                     seed, include_tail);
            },
            py::arg("map"), py::arg("Q"), py::arg("q_dim"),
            py::arg("samples_per_layer"), py::arg("seed") = 0,
            py::arg("include_tail") = true)
        .def("save",
             [](const LayeredDensity& ld, const std::string& path) {
                 std::ofstream os(path, std::ios::binary);
                 if (!os) throw ConfigError("cannot open " + path);
                 os << ld.to_json().dump() << '\n';
             })
        .def_static("load", [](const std::string& path) {
            std::ifstream is(path);
            if (!is) throw ConfigError("cannot open " + path);
            nlohmann::json j;
            is >> j;
            return LayeredDensity::from_json(j);
        });

    m.def(
        "build",
        [](const LogDensity& prior, const LayerPartition& partition,
           const BuildOptions& opts) {
            py::gil_scoped_release release;
            return build(prior, partition, opts);
        },
        py::arg("prior"), py::arg("partition"), py::arg("options"));

    // bayes layer
    py::class_<GaussianNoiseModel>(m, "GaussianNoiseModel")
        .def_readonly("delta", &GaussianNoiseModel::delta)
        .def_readonly("sigma", &GaussianNoiseModel::sigma)
        .def_readonly("y_truth", &GaussianNoiseModel::y_truth);

    py::class_<DarcyLiteForward>(m, "DarcyLiteForward")
        .def(py::init<int, int, int, double>(), py::arg("grid_n"),
             py::arg("d_modes"), py::arg("obs_per_side") = 12,
             py::arg("amplitude") = 0.25)
        .def("__call__",
             [](const DarcyLiteForward& f, const Vector& y) { return f(y); })
        .def_property_readonly("n_obs", &DarcyLiteForward::n_obs)
        .def_property_readonly("dim", &DarcyLiteForward::dim);

    m.def(
        "synthesize_observations",
        [](const DarcyLiteForward& forward, const Vector& y_star, double sigma,
           std::uint64_t seed) {
            SeededRng rng(seed);
            return synthesize_observations(
                [&forward](const Vector& y) { return forward(y); }, y_star,
                sigma, rng);
        },
        py::arg("forward"), py::arg("y_star"), py::arg("sigma"),
        py::arg("seed") = 0);

    m.def(
        "darcy_log_posterior",
        [](const GaussianNoiseModel& noise, const DarcyLiteForward& forward) {
            // keeps the forward model alive inside the closure
            auto shared = std::make_shared<DarcyLiteForward>(forward);
            return make_log_posterior(
                noise, [shared](const Vector& y) { return (*shared)(y); },
                shared->dim());
        },
        py::arg("noise"), py::arg("forward"));

    py::class_<MCMCConfig>(m, "MCMCConfig")
        .def(py::init<>())
        .def_readwrite("steps", &MCMCConfig::steps)
        .def_readwrite("burn_in", &MCMCConfig::burn_in)
        .def_readwrite("proposal_scale", &MCMCConfig::proposal_scale)
        .def_readwrite("seed", &MCMCConfig::seed)
        .def_readwrite("store_every", &MCMCConfig::store_every);

    py::class_<MCMCResult>(m, "MCMCResult")
        .def_readonly("mean", &MCMCResult::mean)
        .def_readonly("cov", &MCMCResult::cov)
        .def_readonly("acceptance_rate", &MCMCResult::acceptance_rate)
        .def_readonly("density_calls", &MCMCResult::density_calls)
        .def_readonly("chain", &MCMCResult::chain);

    m.def("rwm_mcmc", &rwm_mcmc, py::arg("logdensity"), py::arg("config"),
          py::arg("x0"));

    // experiment entry points
    m.def(
        "run_experiment",
        [](const std::string& config_text, const std::string& output_dir) {
            py::gil_scoped_release release;
            auto manifest = experiments::run_experiment(
                json_from_pystr(config_text), output_dir);
            return manifest.dump();
        },
        py::arg("config_json"), py::arg("output_dir"));
    m.def("validate_config", [](const std::string& config_text) {
        experiments::validate_config(json_from_pystr(config_text));
    });
    m.def("banana_density", &experiments::banana_density);
    m.def("banana_exact_transport", &experiments::banana_exact_transport);
    m.def("gaussian_density", &experiments::gaussian_density, py::arg("mu"),
          py::arg("sigma2"));
}
