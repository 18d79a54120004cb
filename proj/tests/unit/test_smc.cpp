#include <doctest.h>

#include <cmath>
#include <random>

#include "epilna/smc.hpp"
#include "stats_util.hpp"

using namespace epilna;

namespace {

Params small_sir() {
  Params p;
  p.beta = 0.00091;
  p.gamma = 0.082;
  p.x0 = Vec(2);
  p.x0 << 119, 1;
  p.obs.kind = ObsKind::binomial;
  p.obs.lambda = 0.8;
  return p;
}

const std::vector<double> kSmallY{3, 4, 3, 5, 6, 4, 3, 2};

Vec v2(double a, double b) {
  Vec out(2);
  out << a, b;
  return out;
}

}  // namespace

TEST_SUITE("smc") {

TEST_CASE("auxiliary block layout") {
  Rng rng(1);
  const AuxBlock aux = AuxBlock::draw(3, 4, 2, rng);
  CHECK(aux.values().size() == 3 * 4 * 2 + 3);
  CHECK(aux.z(1, 2, 1) == aux.values()[(1 * 4 + 2) * 2 + 1]);
  CHECK(aux.u_bar(2) == aux.values()[24 + 2]);
  const Vec z = aux.z_vector(2, 3);
  CHECK(z[0] == aux.z(2, 3, 0));
  CHECK(z[1] == aux.z(2, 3, 1));
  CHECK_THROWS_AS(AuxBlock(2, 0, 2), InvalidInput);
}

TEST_CASE("systematic resampling special cases") {
  const std::vector<double> equal(7, 1.0 / 7);
  for (double u : {0.0, 0.3, 0.999}) {
    const auto idx = systematic_resample(equal, u);
    for (int k = 0; k < 7; ++k) CHECK(idx[k] == k);
  }
  std::vector<double> point(6, 0.0);
  point[3] = 1.0;
  for (double u : {0.0, 0.5, 0.9999}) {
    const auto idx = systematic_resample(point, u);
    for (int k : idx) CHECK(k == 3);
  }
  const std::vector<double> zero(4, 0.0);
  CHECK_THROWS_AS(systematic_resample(zero, 0.5), NumericalFailure);
}

TEST_CASE("systematic resampling is unbiased over u") {
  const std::vector<double> w{0.5, 0.3, 0.2};
  std::vector<double> counts(3, 0.0);
  const int grid = 10000;
  for (int g = 0; g < grid; ++g) {
    const auto idx = systematic_resample(w, (g + 0.5) / grid, 10);
    for (int k : idx) counts[k] += 1.0;
  }
  CHECK(counts[0] / grid == doctest::Approx(5.0).epsilon(1e-9));
  CHECK(counts[1] / grid == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(counts[2] / grid == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("particle sorting") {
  std::vector<Vec> one{v2(4, 1)};
  CHECK(sort_particles(one) == std::vector<int>{0});

  std::vector<Vec> line{v2(3, 0), v2(1, 0), v2(2, 0)};
  CHECK(sort_particles(line) == std::vector<int>{1, 2, 0});

  std::vector<Vec> same(5, v2(2, 2));
  CHECK(sort_particles(same) == std::vector<int>{0, 1, 2, 3, 4});

  // Equidistant particles keep their index order.
  std::vector<Vec> ties{v2(1, 1), v2(0, 0), v2(1, -1), v2(-0.0, 0)};
  CHECK(sort_particles(ties) == std::vector<int>{1, 3, 0, 2});
}

TEST_CASE("particle filter is a deterministic function of its inputs") {
  const auto m = make_sir(120);
  const Params p = small_sir();
  Rng rng(3);
  const AuxBlock aux = AuxBlock::draw(8, 50, 2, rng);
  const PfResult a = pf_loglik(m, p, kSmallY, 10, aux, 50, Propagation::lna);
  const PfResult b = pf_loglik(m, p, kSmallY, 10, aux, 50, Propagation::lna);
  CHECK(std::isfinite(a.loglik));
  CHECK(std::bit_cast<std::uint64_t>(a.loglik) == std::bit_cast<std::uint64_t>(b.loglik));

  const PfResult c = pf_loglik(m, p, kSmallY, 10, aux, 50, Propagation::mjp);
  const PfResult d = pf_loglik(m, p, kSmallY, 10, aux, 50, Propagation::mjp);
  CHECK(std::isfinite(c.loglik));
  CHECK(c.loglik == d.loglik);

  PfOptions no_history;
  no_history.store_history = false;
  CHECK(pf_loglik(m, p, kSmallY, 10, aux, 50, Propagation::lna, no_history).loglik == a.loglik);
}

TEST_CASE("uninformative observations make the estimate particle independent") {
  const auto m = make_sir(120);
  Params p = small_sir();
  p.obs.kind = ObsKind::gaussian;
  p.obs.sigma2 = 1e12;
  Rng rng(8);
  const AuxBlock a1 = AuxBlock::draw(8, 20, 2, rng);
  const AuxBlock a2 = AuxBlock::draw(8, 20, 2, rng);
  const double l1 = pf_loglik(m, p, kSmallY, 10, a1, 20, Propagation::lna).loglik;
  const double l2 = pf_loglik(m, p, kSmallY, 10, a2, 20, Propagation::lna).loglik;
  const double flat = -0.5 * 8 * std::log(2 * M_PI * 1e12);
  CHECK(std::abs(l1 - flat) < 1e-6);
  CHECK(std::abs(l1 - l2) < 1e-6);
}

TEST_CASE("impossible data collapse the filter") {
  const auto m = make_sir(120);
  const Params p = small_sir();
  const std::vector<double> y{500, 1};
  Rng rng(2);
  const AuxBlock aux = AuxBlock::draw(2, 30, 2, rng);
  const PfResult r = pf_loglik(m, p, y, 10, aux, 30, Propagation::lna);
  CHECK(r.degenerate);
  CHECK(r.loglik == -INFINITY);
}

TEST_CASE("dimension checks") {
  const auto m = make_sir(120);
  const Params p = small_sir();
  Rng rng(2);
  const AuxBlock aux = AuxBlock::draw(8, 30, 2, rng);
  CHECK_THROWS_AS(pf_loglik(m, p, kSmallY, 10, aux, 31, Propagation::lna), InvalidInput);
  CHECK_THROWS_AS(pf_loglik(make_sir(120, true), p, kSmallY, 10, aux, 30, Propagation::lna), InvalidInput);
}

TEST_CASE("path sampling follows the ancestry") {
  const auto m = make_sir(120);
  const Params p = small_sir();
  Rng rng(4);
  const AuxBlock aux = AuxBlock::draw(8, 40, 2, rng);
  const PfResult r = pf_loglik(m, p, kSmallY, 10, aux, 40, Propagation::lna);
  const ParticleHistory& h = r.history;
  REQUIRE(h.particles.size() == 9 * 40);
  for (int a : h.ancestors) {
    CHECK(a >= 0);
    CHECK(a < 40);
  }
  const Eigen::MatrixXd path = sample_path(h, 0.37);
  CHECK(path.rows() == 9);
  CHECK(path.row(0).norm() == 0.0);
  // Recover the terminal index and walk the ancestry by hand.
  int k = -1;
  for (int j = 0; j < 40; ++j)
    if ((h.particle(8, j).transpose() - path.row(8)).norm() == 0.0) k = j;
  REQUIRE(k >= 0);
  for (int t = 7; t >= 0; --t) {
    k = h.ancestor(t, k);
    CHECK((h.particle(t, k).transpose() - path.row(t)).norm() == 0.0);
  }
}

TEST_CASE("single particle path is its own trajectory") {
  const auto m = make_sir(120);
  Params p = small_sir();
  p.obs.kind = ObsKind::gaussian;
  p.obs.sigma2 = 100;
  Rng rng(4);
  const AuxBlock aux = AuxBlock::draw(8, 1, 2, rng);
  const PfResult r = pf_loglik(m, p, kSmallY, 10, aux, 1, Propagation::lna);
  const Eigen::MatrixXd path = sample_path(r.history, 0.5);
  for (int t = 0; t <= 8; ++t) CHECK((r.history.particle(t, 0).transpose() - path.row(t)).norm() == 0.0);
}

TEST_CASE("sampled terminal states follow the final weights") {
  const auto m = make_sir(120);
  const Params p = small_sir();
  Rng rng(12);
  const AuxBlock aux = AuxBlock::draw(8, 25, 2, rng);
  const PfResult r = pf_loglik(m, p, kSmallY, 10, aux, 25, Propagation::lna);
  const auto& lw = r.history.final_logw;
  const double lse = log_sum_exp(lw.data(), lw.size());
  std::vector<double> prob(25);
  for (int k = 0; k < 25; ++k) prob[k] = std::exp(lw[k] - lse);

  std::vector<double> counts(25, 0.0);
  std::mt19937_64 g(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 10000; ++i) {
    const Eigen::MatrixXd path = sample_path(r.history, u(g));
    for (int k = 0; k < 25; ++k)
      if ((r.history.particle(8, k).transpose() - path.row(8)).norm() == 0.0) {
        counts[k] += 1;
        break;
      }
  }
  CHECK(testing::chi_square_pvalue(counts, prob) > 0.01);
}

TEST_CASE("sorting changes values but not the distribution") {
  const auto m = make_sir(120);
  const Params p = small_sir();
  PfOptions sorted, unsorted;
  unsorted.sort = false;
  sorted.store_history = unsorted.store_history = false;
  Rng rng(21);
  std::vector<double> a, b;
  for (int rep = 0; rep < 150; ++rep) {
    const AuxBlock x = AuxBlock::draw(8, 200, 2, rng);
    const AuxBlock y = AuxBlock::draw(8, 200, 2, rng);
    a.push_back(pf_loglik(m, p, kSmallY, 10, x, 200, Propagation::lna, sorted).loglik);
    b.push_back(pf_loglik(m, p, kSmallY, 10, y, 200, Propagation::lna, unsorted).loglik);
  }
  CHECK(testing::ks_two_sample_pvalue(a, b) > 0.01);
}

}
