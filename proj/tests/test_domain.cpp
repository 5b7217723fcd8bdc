#include <doctest.h>

#include <random>

#include "airtime/domain.hpp"
#include "airtime/stats.hpp"

using namespace airtime;

namespace {

TelemetrySample one_ap(double tx, double rx) {
  TelemetrySample s;
  s.network_id = "net";
  s.ap_ids = {"a"};
  s.tx_time = Vector::Constant(1, tx);
  s.rx_time = Vector::Constant(1, rx);
  s.interference = Vector::Zero(1);
  s.rssi = Matrix::Constant(1, 1, kMissingRssiDbm);
  return s;
}

Matrix random_symmetric_rssi(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-100.0, 0.0);
  Matrix m = Matrix::Constant(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n), kMissingRssiDbm);
  for (Eigen::Index a = 0; a < m.rows(); ++a) {
    for (Eigen::Index b = a + 1; b < m.cols(); ++b) m(a, b) = m(b, a) = u(rng);
  }
  return m;
}

TelemetrySample pair_sample(double rssi_ab) {
  TelemetrySample s;
  s.network_id = "net";
  s.ap_ids = {"a", "b"};
  s.tx_time = Vector::Zero(2);
  s.rx_time = Vector::Zero(2);
  s.interference = Vector::Zero(2);
  s.rssi = Matrix::Constant(2, 2, kMissingRssiDbm);
  s.rssi(0, 1) = s.rssi(1, 0) = rssi_ab;
  return s;
}

}  // namespace

TEST_CASE("load is tx plus rx, clipped at one") {
  CHECK(load_from_telemetry(one_ap(0.0, 0.0))[0] == 0.0);
  CHECK(load_from_telemetry(one_ap(0.3, 0.25))[0] == doctest::Approx(0.55).epsilon(1e-15));
  CHECK(load_from_telemetry(one_ap(0.7, 0.6))[0] == 1.0);
}

TEST_CASE("load stays within [max(tx, rx), 1]") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double tx = u(rng);
    const double rx = u(rng);
    const double l = load_from_telemetry(one_ap(tx, rx))[0];
    CHECK(l <= 1.0);
    CHECK(l >= std::max(tx, rx));
  }
}

TEST_CASE("telemetry validation rejects out-of-range fractions") {
  CHECK_THROWS_AS(one_ap(1.3, 0.0).validate(), Error);
  CHECK_THROWS_AS(one_ap(-0.1, 0.0).validate(), Error);
  auto s = one_ap(0.1, 0.1);
  CHECK_NOTHROW(s.validate());
  s.rssi(0, 0) = 5.0;
  CHECK_NOTHROW(s.validate());  // diagonal ignored
  auto p = pair_sample(-70.0);
  p.rssi(0, 1) = 3.0;
  CHECK_THROWS_AS(p.validate(), Error);
}

TEST_CASE("symmetrize_rssi averages and prefers measured over the sentinel") {
  Matrix d = Matrix::Constant(2, 2, kMissingRssiDbm);
  d(0, 1) = -70.0;
  d(1, 0) = -80.0;
  Matrix s = symmetrize_rssi(d);
  CHECK(s(0, 1) == -75.0);
  CHECK(s(1, 0) == -75.0);

  d(0, 1) = d(1, 0) = -60.0;
  CHECK(symmetrize_rssi(d)(0, 1) == -60.0);

  d(0, 1) = kMissingRssiDbm;
  d(1, 0) = -72.0;
  s = symmetrize_rssi(d);
  CHECK(s(0, 1) == -72.0);
  CHECK(s(1, 0) == -72.0);
}

TEST_CASE("derive_adjacency thresholds symmetric RSSI") {
  Matrix m = Matrix::Constant(3, 3, kMissingRssiDbm);
  m(0, 1) = m(1, 0) = -70.0;
  m(0, 2) = m(2, 0) = -90.0;
  const Topology t = derive_adjacency(m, -82.0);
  CHECK(t.connected(0, 1));
  CHECK_FALSE(t.connected(0, 2));
  CHECK_FALSE(t.connected(1, 2));

  const Topology all = derive_adjacency(m, -100.0);
  CHECK(all.connected(0, 2));
  CHECK(all.connected(1, 2));  // the sentinel itself sits at the threshold

  CHECK_THROWS_AS(derive_adjacency(m, -101.0), Error);
  CHECK_THROWS_AS(derive_adjacency(m, -30.0), Error);
  Matrix asym = m;
  asym(0, 1) = -60.0;
  CHECK_THROWS_AS(derive_adjacency(asym, -82.0), Error);
}

TEST_CASE("derive_adjacency is symmetric, loop-free and monotone in the threshold") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const Matrix m = random_symmetric_rssi(8, rng);
    Topology prev = derive_adjacency(m, -40.0);
    for (double thr = -42.0; thr >= -100.0; thr -= 2.0) {
      const Topology t = derive_adjacency(m, thr);
      for (std::size_t a = 0; a < 8; ++a) {
        CHECK_FALSE(t.connected(a, a));
        for (std::size_t b = 0; b < 8; ++b) {
          CHECK(t.connected(a, b) == t.connected(b, a));
          if (prev.connected(a, b)) CHECK(t.connected(a, b));
        }
      }
      prev = t;
    }
  }
}

TEST_CASE("neighborhood_probability counts neighbor frequency") {
  std::vector<TelemetrySample> samples{pair_sample(-70.0), pair_sample(-60.0), pair_sample(-90.0),
                                       pair_sample(-75.0)};
  const Matrix p = neighborhood_probability(samples, -82.0);
  CHECK(p(0, 1) == 0.75);
  CHECK(p(1, 0) == 0.75);
  CHECK(p(0, 0) == 0.0);

  std::vector<TelemetrySample> always(3, pair_sample(-50.0));
  CHECK(neighborhood_probability(always)(0, 1) == 1.0);
  std::vector<TelemetrySample> never(3, pair_sample(-95.0));
  CHECK(neighborhood_probability(never)(0, 1) == 0.0);

  CHECK_THROWS_WITH(neighborhood_probability(std::span<const TelemetrySample>{}), "empty dataset");
}

TEST_CASE("neighborhood_probability matches an independent per-pair counter") {
  std::mt19937_64 rng(9);
  const std::size_t n = 6;
  std::vector<TelemetrySample> samples;
  for (int i = 0; i < 40; ++i) {
    TelemetrySample s;
    s.network_id = "net";
    for (std::size_t a = 0; a < n; ++a) s.ap_ids.push_back("ap" + std::to_string(a));
    s.tx_time = s.rx_time = s.interference = Vector::Zero(n);
    s.rssi = random_symmetric_rssi(n, rng);
    samples.push_back(s);
  }
  const Matrix p = neighborhood_probability(samples, -82.0);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      int count = 0;
      for (const auto& s : samples) {
        if (a != b && s.rssi(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) >= -82.0) ++count;
      }
      CHECK(p(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) == doctest::Approx(count / 40.0));
      CHECK(p(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) >= 0.0);
      CHECK(p(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) <= 1.0);
    }
  }
}

TEST_CASE("high_load_filter keeps samples with any node at the threshold") {
  auto sample = [](double a, double b) {
    LabeledSample s;
    s.features = Matrix::Zero(2, 1);
    s.topology = Topology(2);
    s.labels = Vector{{a, b}};
    s.real_nodes = 2;
    return s;
  };
  Dataset d;
  d.samples = {sample(0.05, 0.02), sample(0.05, 0.12)};
  const Dataset kept = high_load_filter(d);
  REQUIRE(kept.size() == 1);
  CHECK(kept.samples[0].labels[1] == 0.12);
  CHECK(high_load_filter(d, 0.0).size() == 2);
  CHECK(is_high_load(sample(0.1, 0.0)));
}

TEST_CASE("topology construction validates its invariants") {
  Matrix m = Matrix::Zero(3, 3);
  m(0, 1) = 1.0;
  CHECK_THROWS_AS(Topology::from_matrix(m), Error);
  m(1, 0) = 1.0;
  const Topology t = Topology::from_matrix(m);
  CHECK(t.edge_count() == 1);
  CHECK(t.neighbors(0) == std::vector<std::size_t>{1});
  CHECK(t.degree(2) == 0);
  CHECK(t.to_matrix() == m);
  m(2, 2) = 1.0;
  CHECK_THROWS_AS(Topology::from_matrix(m), Error);
  const std::vector<std::pair<std::size_t, std::size_t>> edges{{0, 1}};
  CHECK(Topology::from_edges(3, edges) == t);
}

TEST_CASE("labeled_from_telemetry builds load, adjacency and labels") {
  auto s = pair_sample(-70.0);
  s.tx_time = Vector{{0.2, 0.5}};
  s.rx_time = Vector{{0.1, 0.6}};
  s.interference = Vector{{0.4, 0.3}};
  const LabeledSample l = labeled_from_telemetry(s);
  CHECK(l.features(0, 0) == doctest::Approx(0.3));
  CHECK(l.features(1, 0) == 1.0);
  CHECK(l.topology.connected(0, 1));
  CHECK(l.labels == s.interference);
  REQUIRE(l.rssi.has_value());
  CHECK((*l.rssi)(0, 1) == -70.0);
  CHECK(l.real_nodes == 2);
  CHECK(l.network_id == "net");
}

TEST_CASE("percentile interpolates linearly between ranks") {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  CHECK(stats::percentile(v, 0.0) == 1.0);
  CHECK(stats::percentile(v, 100.0) == 4.0);
  CHECK(stats::percentile(v, 50.0) == 2.5);
  CHECK(stats::percentile(v, 25.0) == doctest::Approx(1.75));
  const auto box = stats::box_percentiles(v);
  for (std::size_t i = 1; i < box.size(); ++i) CHECK(box[i - 1] <= box[i]);
}

TEST_CASE("pearson matches the direct formula on a hand-built cell") {
  const std::vector<double> x{0.1, 0.4, 0.35, 0.8};
  const std::vector<double> y{0.2, 0.3, 0.5, 0.7};
  const double mx = (0.1 + 0.4 + 0.35 + 0.8) / 4;
  const double my = (0.2 + 0.3 + 0.5 + 0.7) / 4;
  double sxy = 0, sxx = 0, syy = 0;
  for (int i = 0; i < 4; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  const auto c = stats::pearson(x, y);
  CHECK(c.defined);
  CHECK(std::abs(c.r - sxy / std::sqrt(sxx * syy)) < 1e-12);
  CHECK(c.p_value > 0.0);
  CHECK(c.p_value < 1.0);
  const std::vector<double> flat{1.0, 1.0, 1.0, 1.0};
  CHECK_FALSE(stats::pearson(x, flat).defined);
  const std::vector<double> two{1.0, 2.0};
  CHECK_FALSE(stats::pearson(two, two).defined);
}

TEST_CASE("pearson p-value for r = 0.5 with 12 points") {
  // t = 0.5 * sqrt(10 / 0.75) = 1.8257; two-sided p for 10 dof is 0.0978546.
  std::vector<double> x(12), y(12);
  for (int i = 0; i < 12; ++i) x[i] = i;
  // y = x + noise chosen to give r = 0.5 exactly: project onto x and an orthogonal vector.
  std::vector<double> z(12);
  double mz = 0;
  for (int i = 0; i < 12; ++i) z[i] = (i % 2 == 0 ? 1.0 : -1.0) * (i < 6 ? 1.0 : -1.0);
  for (double v : z) mz += v / 12;
  // Orthogonalize z against centered x.
  double dot = 0, xx = 0;
  for (int i = 0; i < 12; ++i) {
    dot += (z[i] - mz) * (x[i] - 5.5);
    xx += (x[i] - 5.5) * (x[i] - 5.5);
  }
  double zz = 0;
  for (int i = 0; i < 12; ++i) {
    z[i] = z[i] - mz - dot / xx * (x[i] - 5.5);
    zz += z[i] * z[i];
  }
  for (int i = 0; i < 12; ++i) {
    y[i] = 0.5 * (x[i] - 5.5) / std::sqrt(xx) + std::sqrt(0.75) * z[i] / std::sqrt(zz);
  }
  const auto c = stats::pearson(x, y);
  CHECK(c.r == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(c.p_value == doctest::Approx(0.0978546).epsilon(1e-5));
}
