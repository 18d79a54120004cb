#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "epilna/commands.hpp"
#include "epilna/gaussfilter.hpp"
#include "epilna/lna.hpp"
#include "epilna/simulate.hpp"
#include "epilna/smc.hpp"

namespace py = pybind11;
using namespace epilna;

namespace {

ObsKind parse_kind(const std::string& s) {
  if (s == "gaussian") return ObsKind::gaussian;
  if (s == "binomial") return ObsKind::binomial;
  if (s == "negbinomial") return ObsKind::negbinomial;
  throw InvalidInput("unknown observation kind: " + s);
}

std::string kind_name(ObsKind k) {
  switch (k) {
    case ObsKind::gaussian: return "gaussian";
    case ObsKind::binomial: return "binomial";
    case ObsKind::negbinomial: return "negbinomial";
  }
  return "?";
}

Propagation parse_propagation(const std::string& s) {
  if (s == "lna") return Propagation::lna;
  if (s == "mjp") return Propagation::mjp;
  throw InvalidInput("unknown propagation: " + s);
}

py::dict fit_dict(const FitReport& r) {
  py::dict out;
  out["label"] = r.label;
  out["names"] = r.names;
  out["draws"] = r.natural;
  out["loglik"] = r.chain.loglik;
  out["acceptance_rate"] = r.chain.acceptance_rate();
  out["seconds"] = r.chain.seconds;
  out["warnings"] = r.chain.warnings;
  py::dict summary;
  for (const auto& s : r.summary) {
    py::dict row;
    row["mean"] = s.mean;
    row["sd"] = s.sd;
    row["ess"] = s.ess;
    row["ess_per_second"] = s.ess_per_second;
    summary[py::str(s.name)] = row;
  }
  out["summary"] = summary;
  py::dict dic;
  dic["dic"] = r.dic.dic;
  dic["p_d"] = r.dic.p_d;
  dic["mean_loglik"] = r.dic.mean_loglik;
  dic["loglik_at_mean"] = r.dic.loglik_at_mean;
  out["dic"] = dic;
  out["min_ess"] = r.min_ess;
  out["mess_per_second"] = r.mess_per_second;
  return out;
}

}  // namespace

PYBIND11_MODULE(_epilna, m) {
  m.doc() = "Stochastic epidemic models with linear noise approximations";

  py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
  py::register_exception<NumericalFailure>(m, "NumericalFailure", PyExc_ArithmeticError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<CompartmentModel>(m, "Model")
      .def_readonly("name", &CompartmentModel::name)
      .def_readonly("npop", &CompartmentModel::npop)
      .def_readonly("tv_beta", &CompartmentModel::tv_beta)
      .def_readonly("n_events", &CompartmentModel::n_events)
      .def_readonly("n_latent", &CompartmentModel::n_latent)
      .def_readonly("event_names", &CompartmentModel::event_names)
      .def("__repr__", [](const CompartmentModel& c) {
        return "<Model " + c.name + " npop=" + std::to_string(c.npop) + ">";
      });

  m.def("make_model", &make_model, py::arg("name"), py::arg("npop"),
        "Model by name: sir, sirs, sir-tvbeta or sirs-tvbeta.");

  py::class_<ObsParams>(m, "ObsParams")
      .def(py::init([](const std::string& kind, double lambda_, double sigma2, double phi, int target) {
             ObsParams o;
             o.kind = parse_kind(kind);
             o.lambda = lambda_;
             o.sigma2 = sigma2;
             o.phi = phi;
             o.target = target;
             o.validate();
             return o;
           }),
           py::arg("kind") = "binomial", py::arg("lambda_") = 1.0, py::arg("sigma2") = 1.0,
           py::arg("phi") = 0.0, py::arg("target") = 0)
      .def_property("kind", [](const ObsParams& o) { return kind_name(o.kind); },
                    [](ObsParams& o, const std::string& k) { o.kind = parse_kind(k); })
      .def_readwrite("lambda_", &ObsParams::lambda)
      .def_readwrite("sigma2", &ObsParams::sigma2)
      .def_readwrite("phi", &ObsParams::phi)
      .def_readwrite("target", &ObsParams::target);

  py::class_<Params>(m, "Params")
      .def(py::init([](const Vec& x0, double beta, double gamma, double kappa, double sigma_beta,
                       double log_beta0, const ObsParams& obs) {
             Params p;
             p.x0 = x0;
             p.beta = beta;
             p.gamma = gamma;
             p.kappa = kappa;
             p.sigma_beta = sigma_beta;
             p.log_beta0 = log_beta0;
             p.obs = obs;
             return p;
           }),
           py::arg("x0"), py::arg("beta") = 0.0, py::arg("gamma") = 0.0, py::arg("kappa") = 0.0,
           py::arg("sigma_beta") = 0.0, py::arg("log_beta0") = 0.0, py::arg("obs") = ObsParams{})
      .def_readwrite("x0", &Params::x0)
      .def_readwrite("beta", &Params::beta)
      .def_readwrite("gamma", &Params::gamma)
      .def_readwrite("kappa", &Params::kappa)
      .def_readwrite("sigma_beta", &Params::sigma_beta)
      .def_readwrite("log_beta0", &Params::log_beta0)
      .def_readwrite("obs", &Params::obs);

  m.def(
      "simulate",
      [](const CompartmentModel& model, const Params& params, double t_end, double interval,
         std::uint64_t seed) {
        const EventPath path = simulate_mjp(model, params, t_end, interval, seed);
        py::dict out;
        out["times"] = path.times;
        out["event_ids"] = path.event_ids;
        out["incidence"] = Eigen::MatrixXi(path.grid_incidence);
        out["cumulative"] = path.grid_cumulative;
        out["prevalence"] = path.prevalence(model, params.x0);
        return out;
      },
      py::arg("model"), py::arg("params"), py::arg("t_end"), py::arg("interval"), py::arg("seed"),
      "Exact Gillespie simulation; returns event times and per-window incidence.");

  m.def("corrupt", &corrupt, py::arg("incidence"), py::arg("obs"), py::arg("seed"),
        "Draws observations from per-window incidence.");

  m.def(
      "transition_moments",
      [](const CompartmentModel& model, const Vec& n, const Params& params, double dt, int n_steps) {
        const TransitionMoments t = transition_moments(model, n, params, dt, n_steps);
        return py::make_tuple(t.mean, t.cov);
      },
      py::arg("model"), py::arg("n"), py::arg("params"), py::arg("dt"), py::arg("n_steps") = kDefaultOdeSteps);

  m.def(
      "forward_filter",
      [](const CompartmentModel& model, const Params& params, const std::vector<double>& y, double dt,
         int ode_steps) {
        FilterOptions o;
        o.ode_steps = ode_steps;
        return forward_filter(model, params, y, dt, o).loglik;
      },
      py::arg("model"), py::arg("params"), py::arg("y"), py::arg("dt"), py::arg("ode_steps") = kDefaultOdeSteps,
      "Log-likelihood from the LNA forward filter.");

  m.def(
      "ode_loglik",
      [](const CompartmentModel& model, const Params& params, const std::vector<double>& y, double dt) {
        return ode_loglik(model, params, y, dt);
      },
      py::arg("model"), py::arg("params"), py::arg("y"), py::arg("dt"));

  m.def(
      "pf_loglik",
      [](const CompartmentModel& model, const Params& params, const std::vector<double>& y, double dt,
         int particles, std::uint64_t seed, const std::string& propagation) {
        Rng rng = make_stream(seed, "paths");
        const AuxBlock aux = AuxBlock::draw(static_cast<int>(y.size()), particles, model.n_latent, rng);
        PfOptions o;
        o.store_history = false;
        return pf_loglik(model, params, y, dt, aux, particles, parse_propagation(propagation), o).loglik;
      },
      py::arg("model"), py::arg("params"), py::arg("y"), py::arg("dt"), py::arg("particles"),
      py::arg("seed"), py::arg("propagation") = "lna",
      "Particle filter log-likelihood estimate with auxiliary variables drawn from seed.");

  m.def("r0", py::overload_cast<const Params&, const CompartmentModel&>(&r0), py::arg("params"),
        py::arg("model"));

  m.def(
      "fit",
      [](const std::filesystem::path& config, std::optional<std::uint64_t> seed,
         std::optional<int> iterations) {
        ExperimentConfig c = load_experiment(config);
        if (seed) c.seed = c.settings.seed = *seed;
        if (iterations) c.settings.iterations = *iterations;
        FitReport r;
        {
          py::gil_scoped_release release;
          r = fit_experiment(c);
        }
        return fit_dict(r);
      },
      py::arg("config"), py::arg("seed") = py::none(), py::arg("iterations") = py::none(),
      "Runs the experiment described by a configuration file and returns draws and summaries.");

  m.def("preset_path", &preset_path, py::arg("name"));
}
