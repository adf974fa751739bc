#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <rnr/errors.hpp>
#include <rnr/json_io.hpp>
#include <rnr/parallel.hpp>
#include <rnr/quadrature.hpp>
#include <rnr/units.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace rnr;

TEST_CASE("pairwise_sum matches a long-double reference on mixed magnitudes") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> mag(-12.0, 12.0);
  std::uniform_real_distribution<double> sgn(-1.0, 1.0);
  std::vector<double> v(100000);
  long double ref = 0.0L;
  for (double& x : v) {
    x = sgn(rng) * std::pow(10.0, mag(rng));
    ref += static_cast<long double>(x);
  }
  const double got = pairwise_sum(v);
  CHECK(std::abs(got - double(ref)) <=
        1e-12 * std::max(1.0, std::abs(double(ref))));

  CHECK(pairwise_sum(std::vector<double>{}) == 0.0);
  CHECK(pairwise_sum(std::vector<double>{3.5}) == 3.5);
}

TEST_CASE("Gauss-Legendre rules are symmetric and exact through degree 2n-1") {
  for (int n : {2, 4, 8, 12, 16}) {
    const GaussRule& g = gauss_legendre(n);
    REQUIRE(int(g.x.size()) == n);
    double wsum = 0.0;
    for (int i = 0; i < n; ++i) {
      CHECK(g.w[i] > 0.0);
      CHECK(g.x[i] == doctest::Approx(-g.x[n - 1 - i]).epsilon(1e-14));
      wsum += g.w[i];
    }
    CHECK(wsum == doctest::Approx(2.0).epsilon(1e-14));

    // int_{-1}^{1} x^{2n-2} dx = 2/(2n-1), the highest even monomial an
    // order-n rule integrates exactly.
    double m = 0.0;
    for (int i = 0; i < n; ++i) m += g.w[i] * std::pow(g.x[i], 2 * n - 2);
    CHECK(m == doctest::Approx(2.0 / (2 * n - 1)).epsilon(1e-12));
  }

  // Repeated lookups return the same cached object.
  CHECK(&gauss_legendre(8) == &gauss_legendre(8));

  // Orders beyond the lock-free table go through the map fallback.
  const GaussRule& big = gauss_legendre(70);
  double wsum = 0.0;
  for (double w : big.w) wsum += w;
  CHECK(wsum == doctest::Approx(2.0).epsilon(1e-13));

  CHECK_THROWS_AS(gauss_legendre(0), ConfigError);
}

TEST_CASE("gauss_legendre_on maps the rule onto [a,b]") {
  const GaussRule r = gauss_legendre_on(8, 0.0, 1.0);
  double m = 0.0;  // int_0^1 x^15 dx = 1/16 (degree 15 = 2*8-1 exact)
  for (std::size_t i = 0; i < r.x.size(); ++i)
    m += r.w[i] * std::pow(r.x[i], 15);
  CHECK(m == doctest::Approx(1.0 / 16.0).epsilon(1e-13));
}

TEST_CASE("Gauss-Hermite rules reproduce Gaussian moments") {
  const GaussRule& g = gauss_hermite(12);
  double m0 = 0.0, m2 = 0.0, m4 = 0.0;
  for (std::size_t i = 0; i < g.x.size(); ++i) {
    m0 += g.w[i];
    m2 += g.w[i] * g.x[i] * g.x[i];
    m4 += g.w[i] * std::pow(g.x[i], 4);
  }
  const double rp = std::sqrt(M_PI);
  CHECK(m0 == doctest::Approx(rp).epsilon(1e-13));
  CHECK(m2 == doctest::Approx(0.5 * rp).epsilon(1e-13));
  CHECK(m4 == doctest::Approx(0.75 * rp).epsilon(1e-13));
}

TEST_CASE("integrate_panels on composite breakpoints") {
  const std::vector<double> bp = uniform_breakpoints(0.0, M_PI, 8);
  REQUIRE(bp.size() == 9);
  CHECK(bp.front() == 0.0);
  CHECK(bp.back() == doctest::Approx(M_PI));
  const double s =
      integrate_panels([](double x) { return std::sin(x); }, bp, 8);
  CHECK(s == doctest::Approx(2.0).epsilon(1e-13));
}

TEST_CASE("angular grid integrates low-order spherical moments") {
  const AngularGrid g = make_angular_grid(16, 32);
  REQUIRE(g.dir.size() == 16 * 32);
  double wsum = 0.0;
  Eigen::Vector3d first = Eigen::Vector3d::Zero();
  Eigen::Matrix3d second = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < g.dir.size(); ++i) {
    wsum += g.w[i];
    first += g.w[i] * g.dir[i];
    second += g.w[i] * g.dir[i] * g.dir[i].transpose();
  }
  CHECK(wsum == doctest::Approx(4.0 * M_PI).epsilon(1e-14));
  CHECK(first.norm() <= 1e-13);
  // int khat_i khat_j dOmega = (4 pi / 3) delta_ij
  CHECK((second - (4.0 * M_PI / 3.0) * Eigen::Matrix3d::Identity()).norm() <=
        1e-12);
}

TEST_CASE("halton4 is deterministic and stays in the unit cube") {
  for (std::uint64_t i = 0; i < 200; ++i) {
    const Eigen::Vector4d h = halton4(i, 17);
    for (int d = 0; d < 4; ++d) {
      CHECK(h[d] >= 0.0);
      CHECK(h[d] < 1.0);
    }
    CHECK(halton4(i, 17) == h);
  }
  CHECK(halton4(3, 17) != halton4(4, 17));
  CHECK(halton4(3, 17) != halton4(3, 18));
}

TEST_CASE("parallel_for fills per-index slots independently of thread count") {
  const std::size_t n = 1000;
  std::vector<double> a(n), b(n);
  parallel_for(n, 1, [&](std::size_t i) { a[i] = std::sqrt(double(i)); });
  parallel_for(n, 3, [&](std::size_t i) { b[i] = std::sqrt(double(i)); });
  CHECK(a == b);

  // Degenerate sizes are fine.
  parallel_for(0, 4, [&](std::size_t) { CHECK(false); });
  std::vector<int> hits(1, 0);
  parallel_for(1, 8, [&](std::size_t i) { hits[i] += 1; });
  CHECK(hits[0] == 1);
}

TEST_CASE("fmt17 renders round-trippable decimal strings") {
  const double values[] = {1.0 / 3.0,  M_PI,          1e300,  5e-324,
                           -0.0,       123456789.125, -2.5e-7, 0.0};
  for (double v : values) {
    const std::string s = fmt17(v);
    const double back = std::strtod(s.c_str(), nullptr);
    CHECK(back == v);
    CHECK(fmt17(v) == s);  // stable across calls
  }
}

TEST_CASE("error types carry their status contract") {
  const ConvergenceError ce("PV_UNSTABLE", "spread too large");
  CHECK(ce.status == "PV_UNSTABLE");
  CHECK(std::string(ce.what()) == "PV_UNSTABLE: spread too large");

  const SingularOverlap so("sources touch");
  CHECK(std::string(so.what()).rfind("SINGULAR_OVERLAP: ", 0) == 0);

  CHECK(natural_units().c == 1.0);
  CHECK(natural_units().hbar == 1.0);
}

TEST_CASE("JSON and CSV writers emit stable, parseable files") {
  namespace fs = std::filesystem;
  const fs::path dir =
      fs::temp_directory_path() / "rnr_test_foundations_io";
  fs::create_directories(dir);

  const fs::path jpath = dir / "out.json";
  nlohmann::ordered_json j;
  j["zeta"] = 1.0 / 3.0;
  j["alpha"] = "text";
  write_json_file(jpath.string(), j);
  std::ifstream jin(jpath);
  std::stringstream buf;
  buf << jin.rdbuf();
  const std::string text = buf.str();
  CHECK(text.back() == '\n');
  // Insertion order is preserved (ordered_json), not alphabetical.
  CHECK(text.find("zeta") < text.find("alpha"));
  const auto parsed = nlohmann::json::parse(text);
  CHECK(parsed["zeta"].get<double>() == 1.0 / 3.0);

  const fs::path cpath = dir / "out.csv";
  {
    CsvWriter csv(cpath.string(), {"x", "y"});
    csv.row({1.0 / 3.0, 2.0});
    csv.row_mixed({"0.5", "NON_CONVERGED"});
  }
  std::ifstream cin_(cpath);
  std::string line;
  std::getline(cin_, line);
  CHECK(line == "x,y");
  std::getline(cin_, line);
  CHECK(line == fmt17(1.0 / 3.0) + "," + fmt17(2.0));
  std::getline(cin_, line);
  CHECK(line == "0.5,NON_CONVERGED");

  fs::remove_all(dir);
}
