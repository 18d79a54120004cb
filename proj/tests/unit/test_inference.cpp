#include <doctest.h>

#include <cmath>
#include <random>

#include <boost/math/distributions/gamma.hpp>

#include "epilna/inference.hpp"
#include "stats_util.hpp"

using namespace epilna;

namespace {

Params d1_truth() {
  Params p;
  p.beta = 0.00091;
  p.gamma = 0.082;
  p.x0 = Vec(2);
  p.x0 << 119, 1;
  p.obs.kind = ObsKind::binomial;
  p.obs.lambda = 0.8;
  return p;
}

ParameterSpace d1_space() {
  return ParameterSpace(d1_truth(), {{ParamId::beta, Prior::gamma(10, 1e4)},
                                     {ParamId::gamma, Prior::gamma(10, 100)},
                                     {ParamId::lambda, Prior::uniform(0, 1)}});
}

const std::vector<double> kD1Y{4, 4, 2, 3, 5, 2, 2, 2};

}  // namespace

TEST_SUITE("inference") {

TEST_CASE("prior parsing and densities") {
  const Prior g = Prior::parse("gamma(10, 1e4)");
  CHECK(g.kind == Prior::Kind::gamma);
  CHECK(g.b == 1e4);
  const double x = 0.0009;
  const double ref = 10 * std::log(1e4) - std::lgamma(10.0) + 9 * std::log(x) - 1e4 * x;
  CHECK(g.log_density(x) == doctest::Approx(ref).epsilon(1e-12));
  CHECK(g.log_density(-1) == -INFINITY);

  const Prior u = Prior::parse(" uniform( 0 , 1 ) ");
  CHECK(u.log_density(0.3) == 0.0);
  CHECK(u.log_density(1.3) == -INFINITY);

  const Prior l = Prior::parse("lognormal(1, 1)");
  const double y = 2.2;
  const double lref = -0.5 * std::pow(std::log(y) - 1, 2) - 0.5 * std::log(2 * M_PI) - std::log(y);
  CHECK(l.log_density(y) == doctest::Approx(lref).epsilon(1e-12));

  CHECK(Prior::parse(g.describe()).b == g.b);
  CHECK_THROWS_AS(Prior::parse("gamma(1)"), InvalidInput);
  CHECK_THROWS_AS(Prior::parse("beta(1, 2)"), InvalidInput);
  CHECK_THROWS_AS(Prior::parse("uniform(1, 0)"), InvalidInput);
  CHECK_THROWS_AS(Prior::parse("gamma(x, 2)"), InvalidInput);
}

TEST_CASE("transformations") {
  const ParameterSpace s = d1_space();
  Params p = d1_truth();
  p.obs.lambda = 0.5;
  const Eigen::VectorXd x = s.transform(p);
  CHECK(x[0] == doctest::Approx(std::log(0.00091)));
  CHECK(x[2] == doctest::Approx(0.0));
  const Params back = s.inverse_transform(x);
  CHECK(back.beta == doctest::Approx(0.00091).epsilon(1e-14));
  CHECK(back.obs.lambda == doctest::Approx(0.5));

  // Uniform prior density 1 plus log Jacobian lambda (1 - lambda) at 0.5.
  const ParameterSpace only_lambda(p, {{ParamId::lambda, Prior::uniform(0, 1)}});
  Eigen::VectorXd z(1);
  z << 0.0;
  CHECK(only_lambda.log_prior(z) == doctest::Approx(std::log(0.25)).epsilon(1e-14));

  p.gamma = -1;
  CHECK_THROWS_AS(s.transform(p), InvalidInput);
  CHECK_THROWS_AS(ParameterSpace(p, {{ParamId::gamma, Prior::gamma(1, 1)}, {ParamId::gamma, Prior::gamma(1, 1)}}),
                  InvalidInput);
}

TEST_CASE("transformed priors integrate to one") {
  for (const Prior pr : {Prior::gamma(10, 100), Prior::lognormal(1, 1), Prior::gamma(2, 0.5)}) {
    const ParameterSpace s(d1_truth(), {{ParamId::gamma, pr}});
    double total = 0.0;
    const double h = 1e-3;
    for (double x = -25; x < 15; x += h) {
      Eigen::VectorXd v(1);
      v << x;
      total += std::exp(s.log_prior(v)) * h;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
  }
  const ParameterSpace s(d1_truth(), {{ParamId::lambda, Prior::uniform(0.2, 0.9)}});
  // Midpoint rule over the image of the support, which has hard edges.
  const double lo = std::log(0.2 / 0.8), hi = std::log(0.9 / 0.1);
  const int n = 40000;
  const double h = (hi - lo) / n;
  double total = 0.0;
  for (int k = 0; k < n; ++k) {
    Eigen::VectorXd v(1);
    v << lo + (k + 0.5) * h;
    total += std::exp(s.log_prior(v)) * h;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("zero-scale proposals are always accepted") {
  const ParameterSpace s = d1_space();
  ChainState st;
  st.x = s.transform(d1_truth());
  st.log_prior = s.log_prior(st.x);
  st.loglik = -3.0;
  Rng rng(1);
  const LogLikFn ll = [](const Eigen::VectorXd&) { return -3.0; };
  const Eigen::MatrixXd L = Eigen::MatrixXd::Identity(3, 3);
  for (int i = 0; i < 50; ++i) CHECK(mh_kernel(st, L, 0.0, s, ll, rng));
}

TEST_CASE("acceptance decisions ignore additive constants in the log-likelihood") {
  const ParameterSpace s = d1_space();
  const auto model = make_sir(120);
  const LogLikFn base = [&](const Eigen::VectorXd& x) {
    return forward_filter(model, s.inverse_transform(x), kD1Y, 10.0).loglik;
  };
  const LogLikFn shifted = [&](const Eigen::VectorXd& x) { return base(x) + 1234.5; };
  ChainState a, b;
  a.x = b.x = s.transform(d1_truth());
  a.log_prior = b.log_prior = s.log_prior(a.x);
  a.loglik = base(a.x);
  b.loglik = a.loglik + 1234.5;
  Rng ra(9), rb(9);
  const Eigen::MatrixXd L = Eigen::MatrixXd::Identity(3, 3) * 0.2;
  for (int i = 0; i < 200; ++i) CHECK(mh_kernel(a, L, 1.0, s, base, ra) == mh_kernel(b, L, 1.0, s, shifted, rb));
}

TEST_CASE("failing likelihood evaluations are rejections") {
  const ParameterSpace s = d1_space();
  ChainState st;
  st.x = s.transform(d1_truth());
  st.log_prior = s.log_prior(st.x);
  st.loglik = -10;
  Rng rng(3);
  const Eigen::MatrixXd L = Eigen::MatrixXd::Identity(3, 3) * 0.1;
  const LogLikFn nan = [](const Eigen::VectorXd&) { return std::nan(""); };
  const LogLikFn boom = [](const Eigen::VectorXd&) -> double { throw NumericalFailure("x", 1.0); };
  for (int i = 0; i < 20; ++i) {
    CHECK_FALSE(mh_kernel(st, L, 1.0, s, nan, rng));
    CHECK_FALSE(mh_kernel(st, L, 1.0, s, boom, rng));
  }
}

TEST_CASE("random-walk kernel samples a conjugate posterior") {
  // y_i ~ Poisson(gamma), gamma ~ Gamma(3, 2): posterior Gamma(3 + sum y, 2 + n).
  const std::vector<int> y{3, 1, 4, 1, 5, 2, 2, 0, 3, 4};
  int sum = 0;
  for (int v : y) sum += v;
  const ParameterSpace s(d1_truth(), {{ParamId::gamma, Prior::gamma(3, 2)}});
  const LogLikFn ll = [&](const Eigen::VectorXd& x) {
    const double g = std::exp(x[0]);
    return sum * std::log(g) - static_cast<double>(y.size()) * g;
  };
  ChainState st;
  st.x = Eigen::VectorXd::Constant(1, 0.5);
  st.log_prior = s.log_prior(st.x);
  st.loglik = ll(st.x);
  Rng rng(2024);
  const Eigen::MatrixXd L = Eigen::MatrixXd::Constant(1, 1, 0.5);
  std::vector<double> draws;
  for (int i = 0; i < 60000; ++i) {
    mh_kernel(st, L, 1.0, s, ll, rng);
    if (i >= 1000 && i % 30 == 0) draws.push_back(std::exp(st.x[0]));
  }
  const boost::math::gamma_distribution<double> post(3.0 + sum, 1.0 / (2.0 + y.size()));
  const double p = testing::ks_one_sample_pvalue(draws, [&](double v) { return boost::math::cdf(post, v); });
  CHECK(p > 0.01);
}

TEST_CASE("Crank-Nicolson updates") {
  Rng rng(5);
  const AuxBlock u = AuxBlock::draw(20, 500, 2, rng);
  const AuxBlock same = cn_update(u, 1.0, rng);
  for (std::size_t i = 0; i < u.values().size(); ++i) CHECK(same.values()[i] == u.values()[i]);

  auto corr = [](std::span<const double> a, std::span<const double> b) {
    const double n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) ma += a[i], mb += b[i];
    ma /= n, mb /= n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      sab += (a[i] - ma) * (b[i] - mb);
      saa += (a[i] - ma) * (a[i] - ma);
      sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
  };
  const AuxBlock v = cn_update(u, 0.99, rng);
  CHECK(std::abs(corr(u.values(), v.values()) - 0.99) < 0.01);
  const AuxBlock w = cn_update(u, 0.0, rng);
  CHECK(std::abs(corr(u.values(), w.values())) < 0.03);
  CHECK_THROWS_AS(cn_update(u, 1.5, rng), InvalidInput);
}

TEST_CASE("chains are reproducible and zero-length runs are empty") {
  const auto model = make_sir(120);
  const ParameterSpace s = d1_space();
  ChainSettings cs;
  cs.iterations = 0;
  const ChainOutput empty = run_chain(Scheme::ffmh, model, s, kD1Y, 10.0, cs);
  CHECK(empty.iterations() == 0);
  CHECK(empty.loglik.empty());

  cs.iterations = 600;
  cs.seed = 42;
  cs.sample_paths = true;
  cs.path_thin = 50;
  const ChainOutput a = run_chain(Scheme::ffmh, model, s, kD1Y, 10.0, cs);
  const ChainOutput b = run_chain(Scheme::ffmh, model, s, kD1Y, 10.0, cs);
  CHECK(a.draws == b.draws);
  CHECK(a.loglik == b.loglik);
  CHECK(a.paths.size() == 12);
  CHECK(a.paths.front().rows() == 9);
  CHECK(a.draws.allFinite());
  CHECK(a.acceptance_rate() > 0.05);
  CHECK(a.acceptance_rate() < 0.7);
  cs.seed = 43;
  CHECK(run_chain(Scheme::ffmh, model, s, kD1Y, 10.0, cs).draws != a.draws);

  ChainSettings ode = cs;
  ode.sample_paths = false;
  const ChainOutput o = run_chain(Scheme::ode_mh, model, s, kD1Y, 10.0, ode);
  CHECK(o.iterations() == 600);
}

TEST_CASE("stuck pilot falls back with a warning") {
  const auto model = make_sir(120);
  const ParameterSpace s = d1_space();
  ChainSettings cs;
  cs.iterations = 400;
  cs.initial_proposal_sd = 60.0;
  const ChainOutput out = run_chain(Scheme::ffmh, model, s, kD1Y, 10.0, cs);
  CHECK_FALSE(out.warnings.empty());
  CHECK(out.draws.allFinite());
}

TEST_CASE("CPMMH with rho = 0 behaves like PMMH") {
  const auto model = make_sir(120);
  const ParameterSpace s = d1_space();
  ChainSettings cs;
  cs.iterations = 10000;
  cs.pilot_fraction = 0.05;
  cs.particles = 10;
  cs.seed = 8;
  cs.target_acceptance = 0.15;
  const ChainOutput pm = run_chain(Scheme::pmmh, model, s, kD1Y, 10.0, cs);
  cs.rho = 0.0;
  const ChainOutput cpm = run_chain(Scheme::cpmmh, model, s, kD1Y, 10.0, cs);
  CHECK(std::abs(pm.acceptance_rate() - cpm.acceptance_rate()) < 0.02);
}

TEST_CASE("ffmh allocates no auxiliary variables") {
  const auto model = make_sir(120);
  const ParameterSpace s = d1_space();
  ChainSettings cs;
  cs.iterations = 100;
  cs.particles = 1000000;  // ignored by ffmh
  const ChainOutput out = run_chain(Scheme::ffmh, model, s, kD1Y, 10.0, cs);
  CHECK(out.iterations() == 100);
}

TEST_CASE("log-likelihood estimator variance helper") {
  const auto model = make_sir(120);
  const LoglikVariance a = loglik_variance(model, d1_truth(), kD1Y, 10.0, 50, 0.99, 60, 7);
  const LoglikVariance b = loglik_variance(model, d1_truth(), kD1Y, 10.0, 50, 0.99, 60, 7);
  CHECK(a.var_independent == b.var_independent);
  CHECK(a.var_independent > 0);
  CHECK(a.var_correlated_diff < a.var_independent);
  const LoglikVariance c = loglik_variance(model, d1_truth(), kD1Y, 10.0, 400, 0.99, 60, 7);
  CHECK(c.var_independent < a.var_independent);
}

TEST_CASE("scheme names") {
  CHECK(parse_scheme("cpmmh") == Scheme::cpmmh);
  CHECK(to_string(Scheme::ode_mh) == "ode_mh");
  CHECK_THROWS_AS(parse_scheme("gibbs"), InvalidInput);
  CHECK(default_target_acceptance(Scheme::pmmh) == 0.10);
}

}
