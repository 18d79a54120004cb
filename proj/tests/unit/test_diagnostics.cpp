#include <doctest.h>

#include <cmath>
#include <random>

#include "epilna/diagnostics.hpp"

using namespace epilna;

TEST_SUITE("diagnostics") {

TEST_CASE("effective sample size of independent and AR(1) draws") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd;
  const int n = 10000;
  std::vector<double> iid(n), ar(n);
  for (int i = 0; i < n; ++i) iid[i] = nd(rng);
  CHECK(ess(iid).ess == doctest::Approx(n).epsilon(0.1));

  ar[0] = nd(rng) / std::sqrt(1 - 0.81);
  for (int i = 1; i < n; ++i) ar[i] = 0.9 * ar[i - 1] + nd(rng);
  CHECK(ess(ar).ess == doctest::Approx(n / 19.0).epsilon(0.2));
}

TEST_CASE("effective sample size edge cases") {
  const std::vector<double> flat(50, 3.5);
  const EssResult r = ess(flat);
  CHECK(r.constant);
  CHECK(r.ess == 0.0);
  const std::vector<double> few(9, 1.0);
  CHECK_THROWS_AS(ess(few), InvalidInput);
}

TEST_CASE("DIC of a constant likelihood") {
  ChainOutput c;
  c.draws = Eigen::MatrixXd::Random(100, 2);
  c.loglik.assign(100, -7.0);
  const DicResult d = dic(c, [](const Eigen::VectorXd&) { return -7.0; });
  CHECK(d.p_d == 0.0);
  CHECK(d.dic == 14.0);
}

TEST_CASE("DIC of a normal mean with exact posterior draws") {
  // y_i ~ N(theta, 1) under a flat prior: p_D = 1.
  const std::vector<double> y{0.3, -1.2, 0.8, 1.9, 0.1, -0.4, 0.6, 1.1, -0.2, 0.7};
  const double n = static_cast<double>(y.size());
  double ybar = 0;
  for (double v : y) ybar += v;
  ybar /= n;
  auto ll = [&](const Eigen::VectorXd& th) {
    double s = 0;
    for (double v : y) s += -0.5 * std::log(2 * M_PI) - 0.5 * (v - th[0]) * (v - th[0]);
    return s;
  };
  std::mt19937_64 rng(4);
  std::normal_distribution<double> post(ybar, 1 / std::sqrt(n));
  const int m = 200000;
  ChainOutput c;
  c.draws.resize(m, 1);
  for (int i = 0; i < m; ++i) {
    c.draws(i, 0) = post(rng);
    c.loglik.push_back(ll(c.draws.row(i).transpose()));
  }
  const DicResult d = dic(c, ll);
  CHECK(d.p_d == doctest::Approx(1.0).epsilon(0.02));
  Eigen::VectorXd at(1);
  at << ybar;
  CHECK(d.dic == doctest::Approx(-2 * ll(at) + 2.0).epsilon(1e-3));
}

TEST_CASE("basic reproduction number") {
  Params p;
  p.beta = 0.00091;
  p.gamma = 0.082;
  CHECK(r0(p, make_sir(120)) == doctest::Approx(1.3317).epsilon(1e-4));
  p.gamma = 0.246;
  CHECK(r0(p, make_sir(360)) == doctest::Approx(1.3317).epsilon(1e-4));
  p.beta = 0;
  CHECK(r0(p, make_sir(360)) == 0.0);
  p.gamma = 0;
  CHECK_THROWS_AS(r0(p, make_sir(360)), InvalidInput);

  Params tv;
  tv.gamma = 2.0;
  CHECK(r0(tv, make_sir(40000, true), std::log(1e-4)) == doctest::Approx(2.0));
}

TEST_CASE("summaries and quantiles") {
  const std::vector<double> v{4, 1, 3, 2, 5};
  const Summary s = summarise(v);
  CHECK(s.mean == 3.0);
  CHECK(s.sd == doctest::Approx(std::sqrt(2.5)));
  CHECK(quantile(v, 0.0) == 1.0);
  CHECK(quantile(v, 1.0) == 5.0);
  CHECK(quantile(v, 0.5) == 3.0);
  CHECK(quantile(v, 0.125) == doctest::Approx(1.5));
  CHECK_THROWS_AS(quantile({}, 0.5), InvalidInput);
}

}
