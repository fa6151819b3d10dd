#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <set>
#include <vector>

#include "otafl/dct.hpp"
#include "otafl/math.hpp"
#include "otafl/rng.hpp"
#include "otafl/sensing.hpp"

using namespace otafl;

namespace {

// Independent dense realization of the orthonormal DCT-II matrix:
// F[k][i] = c_k * cos(pi (2i + 1) k / (2N)), c_0 = sqrt(1/N), c_k = sqrt(2/N).
Eigen::MatrixXd dense_dct2(std::size_t n) {
  Eigen::MatrixXd f(n, n);
  const double pi = std::numbers::pi;
  for (std::size_t k = 0; k < n; ++k) {
    const double ck = (k == 0) ? std::sqrt(1.0 / static_cast<double>(n))
                               : std::sqrt(2.0 / static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
      f(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) =
          ck * std::cos(pi * (2.0 * static_cast<double>(i) + 1.0) *
                        static_cast<double>(k) / (2.0 * static_cast<double>(n)));
    }
  }
  return f;
}

// Dense realization of the full operator A = R F D built from the operator's
// published row subset and sign diagonal.
Eigen::MatrixXd dense_operator(const SensingOperator& op) {
  const std::size_t n = op.n();
  const std::size_t s = op.s();
  const Eigen::MatrixXd f = dense_dct2(n);
  Eigen::MatrixXd a(s, n);
  for (std::size_t r = 0; r < s; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          f(static_cast<Eigen::Index>(op.row_subset()[r]), static_cast<Eigen::Index>(c)) *
          op.signs()[c];
    }
  }
  return a;
}

std::vector<double> random_vector(std::size_t n, SeededRng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.gaussian();
  return v;
}

}  // namespace

TEST_CASE("dct: matches the dense cosine matrix") {
  SeededRng rng(101);
  for (const std::size_t n : {1u, 2u, 5u, 16u, 33u, 64u}) {
    const Eigen::MatrixXd f = dense_dct2(n);
    const std::vector<double> x = random_vector(n, rng);
    std::vector<double> y(n);
    dct2_orthonormal(x, y);
    Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(n));
    const Eigen::VectorXd expect = f * xv;
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(y[i] == doctest::Approx(expect(static_cast<Eigen::Index>(i))).epsilon(1e-12));
    }
    // Inverse transform matches F^T (orthonormality).
    std::vector<double> back(n);
    dct3_orthonormal(y, back);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(back[i] == doctest::Approx(x[i]).epsilon(1e-10));
    }
  }
}

TEST_CASE("dct: frozen values for a fixed input") {
  // Hand-computed via the definition for x = (1, 2, 3, 4):
  // y_0 = 10 / 2 = 5, and y_k = sqrt(2/4) sum x_i cos(pi (2i+1) k / 8).
  const std::vector<double> x{1.0, 2.0, 3.0, 4.0};
  std::vector<double> y(4);
  dct2_orthonormal(x, y);
  CHECK(y[0] == doctest::Approx(5.0).epsilon(1e-13));
  CHECK(y[1] == doctest::Approx(-2.2304424973876424).epsilon(1e-12));
  CHECK(y[2] == doctest::Approx(0.0).epsilon(1e-12).scale(1.0));
  CHECK(y[3] == doctest::Approx(-0.15851266778110069).epsilon(1e-10));
}

TEST_CASE("sensing: matches its dense counterpart") {
  SeededRng root(77);
  for (const auto& [n, s] : std::vector<std::pair<std::size_t, std::size_t>>{
           {16, 8}, {32, 16}, {64, 16}}) {
    SensingOperator op(n, s, root.spawn("op"));
    const Eigen::MatrixXd a = dense_operator(op);

    SeededRng data = root.spawn("data");
    const std::vector<double> x = random_vector(n, data);
    const std::vector<double> y = op.forward(x);
    Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(n));
    const Eigen::VectorXd ye = a * xv;
    REQUIRE(y.size() == s);
    for (std::size_t i = 0; i < s; ++i) {
      CHECK(y[i] == doctest::Approx(ye(static_cast<Eigen::Index>(i))).epsilon(1e-10));
    }

    const std::vector<double> z = random_vector(s, data);
    const std::vector<double> xt = op.adjoint(z);
    Eigen::Map<const Eigen::VectorXd> zv(z.data(), static_cast<Eigen::Index>(s));
    const Eigen::VectorXd xe = a.transpose() * zv;
    REQUIRE(xt.size() == n);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(xt[i] == doctest::Approx(xe(static_cast<Eigen::Index>(i))).epsilon(1e-10));
    }

    // Row-orthonormality A A^T = I of the dense counterpart.
    const Eigen::MatrixXd gram = a * a.transpose();
    const double err = (gram - Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(s),
                                                         static_cast<Eigen::Index>(s)))
                           .cwiseAbs()
                           .maxCoeff();
    CHECK(err < 1e-10);
  }
}

TEST_CASE("sensing: forward-adjoint identity A A^T = I at large n") {
  SeededRng root(99);
  const std::size_t n = 4096, s = 2048;
  SensingOperator op(n, s, root.spawn("op"));
  SeededRng data = root.spawn("data");
  const std::vector<double> y = random_vector(s, data);
  const std::vector<double> back = op.forward(op.adjoint(y));
  for (std::size_t i = 0; i < s; ++i) {
    CHECK(back[i] == doctest::Approx(y[i]).epsilon(1e-10));
  }
}

TEST_CASE("sensing: adjoint satisfies the inner-product identity") {
  SeededRng root(13);
  const std::size_t n = 257, s = 100;
  SensingOperator op(n, s, root.spawn("op"));
  SeededRng data = root.spawn("data");
  const std::vector<double> x = random_vector(n, data);
  const std::vector<double> y = random_vector(s, data);
  const double lhs = dot(op.forward(x), y);
  const double rhs = dot(x, op.adjoint(y));
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("sensing: deterministic given the generator") {
  SeededRng root(1);
  SensingOperator a(64, 32, root.spawn("op"));
  SensingOperator b(64, 32, root.spawn("op"));
  CHECK(std::equal(a.row_subset().begin(), a.row_subset().end(), b.row_subset().begin()));
  CHECK(std::equal(a.signs().begin(), a.signs().end(), b.signs().begin()));
  // Distinct rows.
  std::set<std::size_t> rows(a.row_subset().begin(), a.row_subset().end());
  CHECK(rows.size() == 32);
  for (std::size_t r : rows) CHECK(r < 64);
  for (double sgn : a.signs()) CHECK(std::abs(sgn) == 1.0);
}

TEST_CASE("sensing: dimension errors") {
  SeededRng root(2);
  CHECK_THROWS(SensingOperator(0, 0, root.spawn("op")));
  CHECK_THROWS(SensingOperator(8, 9, root.spawn("op")));
  CHECK_THROWS(SensingOperator(8, 0, root.spawn("op")));
  SensingOperator op(8, 4, root.spawn("op"));
  std::vector<double> wrong(5, 0.0);
  CHECK_THROWS(op.forward(wrong));
  CHECK_THROWS(op.adjoint(wrong));
}
