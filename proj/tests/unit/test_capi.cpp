#include <doctest.h>

#include <cmath>
#include <cstring>
#include <numbers>
#include <string>
#include <thread>
#include <vector>

#include "qut/qut.h"

extern "C" const char* qut_c_smoke(void);

namespace {

constexpr double kPi = std::numbers::pi;

struct MatrixHandle {
  qut_matrix* m = nullptr;
  ~MatrixHandle() { qut_matrix_free(m); }
};

struct SpectrumHandle {
  qut_spectrum* s = nullptr;
  ~SpectrumHandle() { qut_spectrum_free(s); }
};

}  // namespace

TEST_CASE("the header compiles and works from C") {
  const char* msg = qut_c_smoke();
  CHECK_MESSAGE(msg == nullptr, (msg ? msg : ""));
}

TEST_CASE("status strings and version") {
  CHECK(std::string(qut_status_string(QUT_OK)) == "ok");
  CHECK(std::string(qut_status_string(QUT_ERR_NO_VECTORS)) == "eigenvectors not computed");
  for (int c = QUT_OK; c <= QUT_ERR_INTERNAL; ++c) {
    CHECK(std::strlen(qut_status_string(static_cast<qut_status>(c))) > 0);
  }
  CHECK(std::strlen(qut_version()) > 0);
}

TEST_CASE("validation errors map to status codes with a message") {
  MatrixHandle h;
  const double zero[] = {0.0};
  const double one[] = {1.0};
  CHECK(qut_matrix_create(8, 0.0, 1.0, one, zero, 1, nullptr, nullptr, 0, &h.m) == QUT_ERR_ZERO_COUPLING);
  CHECK(h.m == nullptr);
  CHECK(std::strlen(qut_last_error()) > 0);
  CHECK(qut_matrix_create(8, 0.0, 0.0, nullptr, nullptr, 0, nullptr, nullptr, 0, &h.m) == QUT_ERR_ZERO_COUPLING);
  CHECK(qut_matrix_from_json("{\"ell\": ", &h.m) == QUT_ERR_PARSE);
  CHECK(qut_matrix_from_json(R"({"ell": 3, "left": {"a": [1, 2, 3], "b": [1, 1, 1]}})", &h.m) ==
        QUT_ERR_BAD_INDICES);
  CHECK(qut_matrix_from_preset("nope", 10, 0, 1, 0, &h.m) == QUT_ERR_INVALID_ARGUMENT);
  CHECK(std::string(qut_last_error()).find("nope") != std::string::npos);
  CHECK(qut_matrix_from_preset("two-edge", 10, 1.0, 0.0, 0, &h.m) == QUT_ERR_ZERO_COUPLING);
  CHECK(qut_matrix_from_json(nullptr, &h.m) == QUT_ERR_INVALID_ARGUMENT);

  CHECK(qut_matrix_from_preset("two-edge", 10, 1.0, 1.0, 0, &h.m) == QUT_OK);
  CHECK(std::string(qut_last_error()).empty());
}

TEST_CASE("last error is per thread") {
  MatrixHandle h;
  CHECK(qut_matrix_from_json("{", &h.m) == QUT_ERR_PARSE);
  std::string other;
  std::thread([&] { other = qut_last_error(); }).join();
  CHECK(other.empty());
  CHECK(std::strlen(qut_last_error()) > 0);
}

TEST_CASE("matrix accessors") {
  MatrixHandle h;
  REQUIRE(qut_matrix_from_preset("deep-edge", 9, 0.5, 1.5, 0, &h.m) == QUT_OK);
  CHECK(qut_matrix_size(h.m) == 9);
  std::size_t u = 0;
  std::size_t v = 0;
  REQUIRE(qut_matrix_block(h.m, &u, &v) == QUT_OK);
  CHECK(u == 3);
  CHECK(v == 7);
  std::vector<double> d(9);
  std::vector<double> o(8);
  REQUIRE(qut_matrix_entries(h.m, d.data(), o.data()) == QUT_OK);
  CHECK(o == std::vector<double>{0.5, 1.5, 1, 1, 1, 1, 1.5, 0.5});

  // Raw entries allow a zero coupling.
  REQUIRE(qut_preset_entries("two-edge", 6, 2.0, 0.0, 0, d.data(), o.data()) == QUT_OK);
  CHECK(o[0] == 0.0);
  CHECK(d[0] == 2.0);
}

TEST_CASE("solve the uniform matrix through handles") {
  MatrixHandle h;
  REQUIRE(qut_matrix_create(6, 1.0, -0.5, nullptr, nullptr, 0, nullptr, nullptr, 0, &h.m) == QUT_OK);
  qut_solve_options opt;
  qut_solve_options_init(&opt);
  CHECK(opt.want_vectors == 0);
  CHECK(opt.single_iteration == 0);
  SpectrumHandle s;
  REQUIRE(qut_solve(h.m, &opt, &s.s) == QUT_OK);
  CHECK(qut_spectrum_has_vectors(s.s) == 0);
  std::vector<double> vec(6);
  CHECK(qut_spectrum_vector(s.s, 0, vec.data()) == QUT_ERR_NO_VECTORS);

  std::vector<double> values(6);
  REQUIRE(qut_spectrum_eigenvalues(s.s, values.data()) == QUT_OK);
  // a + 2 |b| cos(j pi / 7)
  for (std::size_t j = 1; j <= 6; ++j) {
    CHECK(values[j - 1] == doctest::Approx(1.0 + std::cos(j * kPi / 7.0)).epsilon(1e-14));
  }
  qut_mode mode;
  REQUIRE(qut_spectrum_mode(s.s, 0, &mode) == QUT_OK);
  CHECK(mode.branch == QUT_BRANCH_IN_BAND);
  CHECK(mode.j == 1);
  CHECK(mode.k == doctest::Approx(kPi / 7.0));
  CHECK(mode.dos == doctest::Approx(7.0 / kPi));
  CHECK(mode.lambda_normalized == doctest::Approx(2.0 * std::cos(kPi / 7.0)));
  CHECK(qut_spectrum_mode(s.s, 6, &mode) == QUT_ERR_INVALID_ARGUMENT);

  qut_diagnostics diag;
  CHECK(qut_spectrum_diagnostics(s.s, &diag) == QUT_OK);
  CHECK(qut_spectrum_warning_count(s.s) == 0);
}

TEST_CASE("vectors agree with the oracle entry points") {
  MatrixHandle h;
  REQUIRE(qut_matrix_from_preset("asymmetric", 15, 0.4, -1.2, 2.5, &h.m) == QUT_OK);
  qut_solve_options opt;
  qut_solve_options_init(&opt);
  opt.want_vectors = 1;
  opt.threads = 3;
  SpectrumHandle s;
  REQUIRE(qut_solve(h.m, &opt, &s.s) == QUT_OK);
  REQUIRE(qut_spectrum_has_vectors(s.s) == 1);

  const std::size_t ell = 15;
  std::vector<double> d(ell);
  std::vector<double> o(ell - 1);
  REQUIRE(qut_matrix_entries(h.m, d.data(), o.data()) == QUT_OK);
  std::vector<double> ref(ell);
  std::vector<double> refvec(ell * ell);
  REQUIRE(qut_oracle_eig(d.data(), o.data(), ell, ref.data(), refvec.data()) == QUT_OK);
  std::vector<double> values(ell);
  REQUIRE(qut_spectrum_eigenvalues(s.s, values.data()) == QUT_OK);

  std::size_t in_band = 0;
  std::size_t above = 0;
  std::size_t below = 0;
  REQUIRE(qut_spectrum_counts(s.s, &in_band, &above, &below) == QUT_OK);
  CHECK(in_band + above + below == ell);

  for (std::size_t i = 0; i < ell; ++i) {
    CHECK(values[i] == doctest::Approx(ref[i]).epsilon(1e-12));
    std::vector<double> v(ell);
    REQUIRE(qut_spectrum_vector(s.s, i, v.data()) == QUT_OK);
    double dot = 0.0;
    for (std::size_t c = 0; c < ell; ++c) dot += v[c] * refvec[i * ell + c];
    CHECK(std::fabs(std::fabs(dot) - 1.0) < 1e-10);

    std::size_t count = 0;
    REQUIRE(qut_oracle_sturm_count(d.data(), o.data(), ell, values[i] + 1e-9, &count) == QUT_OK);
    CHECK(count == ell - i);
    double sign = 0.0;
    double log_abs = 0.0;
    REQUIRE(qut_oracle_char_poly(d.data(), o.data(), ell, values[i], &sign, &log_abs) == QUT_OK);
    CHECK((sign == 0.0 || log_abs < std::log(1e-8)));
  }
  CHECK(qut_oracle_eig(d.data(), o.data(), 0, ref.data(), nullptr) == QUT_ERR_INVALID_ARGUMENT);
}

TEST_CASE("density of states and normalization integral") {
  MatrixHandle h;
  REQUIRE(qut_matrix_create(20, 0.0, 1.0, nullptr, nullptr, 0, nullptr, nullptr, 0, &h.m) == QUT_OK);
  std::vector<double> k(33);
  std::vector<double> rho(33);
  double integral = 0.0;
  REQUIRE(qut_dos_curve(h.m, 33, k.data(), rho.data(), &integral) == QUT_OK);
  CHECK(k.front() == 0.0);
  CHECK(k.back() == doctest::Approx(kPi));
  CHECK(rho[7] == doctest::Approx(21.0 / kPi));
  CHECK(integral == doctest::Approx(21.0));

  double value = 0.0;
  REQUIRE(qut_norm_integral(2.0, 1.0, 64, &value) == QUT_OK);
  CHECK(value == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(qut_norm_integral(2.0, 1.0, 10, &value) == QUT_ERR_INVALID_ARGUMENT);
}
