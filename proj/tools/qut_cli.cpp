// qut: command-line front end over the C API.
//
//   qut solve SPEC [--vectors] [--oracle-check] [--format json|csv] [--tol T]
//   qut sweep --preset P --param x|y|z --from A --to B --steps N --ell L
//   qut dos SPEC [--samples N]
//   qut norm-integral --x X --y Y [--points N]
//
// Exit codes: 0 success, 2 unreadable input or bad arguments, 3 invalid
// matrix or range, 4 tolerance exceeded, 5 solver failure.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qut/qut.h"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitParse = 2;
constexpr int kExitInvalid = 3;
constexpr int kExitTolerance = 4;
constexpr int kExitSolver = 5;
constexpr double kDefaultTol = 1e-8;

struct CliError {
  int code;
  std::string message;
};

int exit_code_for(qut_status s) {
  switch (s) {
    case QUT_OK: return kExitOk;
    case QUT_ERR_PARSE: return kExitParse;
    case QUT_ERR_INVALID_ARGUMENT:
    case QUT_ERR_ZERO_COUPLING:
    case QUT_ERR_BLOCK_MISMATCH:
    case QUT_ERR_BAD_INDICES:
    case QUT_ERR_EMPTY_BLOCK:
      return kExitInvalid;
    default:
      return kExitSolver;
  }
}

void check(qut_status s) {
  if (s != QUT_OK) {
    throw CliError{exit_code_for(s), std::string(qut_status_string(s)) + ": " + qut_last_error()};
  }
}

struct MatrixDeleter {
  void operator()(qut_matrix* m) const { qut_matrix_free(m); }
};
struct SpectrumDeleter {
  void operator()(qut_spectrum* s) const { qut_spectrum_free(s); }
};
using MatrixPtr = std::unique_ptr<qut_matrix, MatrixDeleter>;
using SpectrumPtr = std::unique_ptr<qut_spectrum, SpectrumDeleter>;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string read_input(const std::string& path) {
  if (path == "-") {
    return std::string(std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError{kExitParse, "cannot read spec file '" + path + "'"};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

MatrixPtr load_matrix(const std::string& path) {
  const std::string text = read_input(path);
  qut_matrix* m = nullptr;
  check(qut_matrix_from_json(text.c_str(), &m));
  return MatrixPtr(m);
}

// --tol beats QUT_TOL beats the built-in default.
double resolve_tolerance(const std::optional<double>& flag) {
  if (flag) {
    if (!(*flag > 0.0) || !std::isfinite(*flag)) throw CliError{kExitParse, "--tol must be positive"};
    return *flag;
  }
  if (const char* env = std::getenv("QUT_TOL"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const double v = std::strtod(env, &end);
    if (end == env || *end != '\0' || !(v > 0.0) || !std::isfinite(v)) {
      throw CliError{kExitParse, std::string("QUT_TOL is not a positive number: '") + env + "'"};
    }
    return v;
  }
  return kDefaultTol;
}

const char* branch_name(qut_branch b) {
  switch (b) {
    case QUT_BRANCH_IN_BAND: return "in-band";
    case QUT_BRANCH_OUT_OF_BAND: return "out-of-band";
    case QUT_BRANCH_BAND_EDGE: return "band-edge";
  }
  return "unknown";
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

struct OracleCheck {
  double max_eigenvalue_deviation = 0.0;  // |dlambda| / max(1, |lambda|)
  std::optional<double> max_vector_deviation;
};

OracleCheck run_oracle_check(const qut_matrix* m, const qut_spectrum* s, bool vectors) {
  const std::size_t ell = qut_matrix_size(m);
  std::vector<double> diag(ell), offdiag(ell > 0 ? ell - 1 : 0);
  check(qut_matrix_entries(m, diag.data(), offdiag.data()));
  std::vector<double> values(ell), ovecs(vectors ? ell * ell : 0);
  check(qut_oracle_eig(diag.data(), offdiag.data(), ell, values.data(), vectors ? ovecs.data() : nullptr));
  std::vector<double> ours(ell);
  check(qut_spectrum_eigenvalues(s, ours.data()));

  OracleCheck out;
  for (std::size_t i = 0; i < ell; ++i) {
    const double d = std::fabs(ours[i] - values[i]) / std::max(1.0, std::fabs(values[i]));
    out.max_eigenvalue_deviation = std::max(out.max_eigenvalue_deviation, d);
  }
  if (vectors) {
    double worst = 0.0;
    std::vector<double> v(ell);
    for (std::size_t i = 0; i < ell; ++i) {
      check(qut_spectrum_vector(s, i, v.data()));
      const double* o = ovecs.data() + i * ell;
      double plus = 0.0, minus = 0.0;
      for (std::size_t c = 0; c < ell; ++c) {
        plus = std::max(plus, std::fabs(v[c] - o[c]));
        minus = std::max(minus, std::fabs(v[c] + o[c]));
      }
      worst = std::max(worst, std::min(plus, minus));
    }
    out.max_vector_deviation = worst;
  }
  return out;
}

struct SolveArgs {
  std::string spec;
  bool vectors = false;
  bool oracle_check = false;
  std::string format = "json";
  std::optional<double> tol;
  unsigned threads = 1;
};

int cmd_solve(const SolveArgs& args) {
  const double tol = resolve_tolerance(args.tol);
  MatrixPtr m = load_matrix(args.spec);
  qut_solve_options opts;
  qut_solve_options_init(&opts);
  opts.want_vectors = args.vectors ? 1 : 0;
  opts.threads = args.threads;
  qut_spectrum* raw = nullptr;
  check(qut_solve(m.get(), &opts, &raw));
  SpectrumPtr s(raw);

  const std::size_t ell = qut_spectrum_size(s.get());
  std::size_t u = 0, v = 0, in_band = 0, above = 0, below = 0;
  check(qut_matrix_block(m.get(), &u, &v));
  check(qut_spectrum_counts(s.get(), &in_band, &above, &below));
  qut_diagnostics diag{};
  check(qut_spectrum_diagnostics(s.get(), &diag));

  std::vector<qut_mode> modes(ell);
  for (std::size_t i = 0; i < ell; ++i) check(qut_spectrum_mode(s.get(), i, &modes[i]));
  std::vector<std::vector<double>> vecs;
  if (args.vectors) {
    vecs.assign(ell, std::vector<double>(ell));
    for (std::size_t i = 0; i < ell; ++i) check(qut_spectrum_vector(s.get(), i, vecs[i].data()));
  }
  std::optional<OracleCheck> oc;
  if (args.oracle_check) oc = run_oracle_check(m.get(), s.get(), args.vectors);

  bool ok = diag.max_residual <= tol;
  if (oc) {
    ok = ok && oc->max_eigenvalue_deviation <= tol;
    if (oc->max_vector_deviation) ok = ok && *oc->max_vector_deviation <= tol;
  }

  if (args.format == "csv") {
    std::cout << "index,branch,lambda,k,p,j,phi,dos,residual,O_k1";
    for (std::size_t c = 0; c < vecs.size(); ++c) std::cout << ",v" << c + 1;
    std::cout << '\n';
    for (std::size_t i = 0; i < ell; ++i) {
      const qut_mode& md = modes[i];
      const bool inb = md.branch == QUT_BRANCH_IN_BAND;
      std::cout << i + 1 << ',' << branch_name(md.branch) << ',' << fmt(md.lambda) << ','
                << (inb ? fmt(md.k) : "") << ',' << (inb ? "" : fmt(md.p)) << ','
                << (inb ? std::to_string(md.j) : "") << ',' << (inb ? fmt(md.phi) : "") << ','
                << (inb ? fmt(md.dos) : "") << ',' << fmt(md.residual) << ',' << fmt(md.o_first);
      if (!vecs.empty()) {
        for (double x : vecs[i]) std::cout << ',' << fmt(x);
      }
      std::cout << '\n';
    }
    std::cout << "max_residual," << fmt(diag.max_residual) << '\n';
    if (oc) {
      std::cout << "oracle_max_eigenvalue_deviation," << fmt(oc->max_eigenvalue_deviation) << '\n';
      if (oc->max_vector_deviation) {
        std::cout << "oracle_max_vector_deviation," << fmt(*oc->max_vector_deviation) << '\n';
      }
    }
  } else {
    json report;
    json meta;
    meta["ell"] = ell;
    meta["n"] = v - u + 1;
    meta["block"] = {u, v};
    meta["counts"] = {{"in_band", in_band}, {"above_band", above}, {"below_band", below}};
    meta["tolerances"] = {{"tol", tol}};
    meta["version"] = qut_version();
    report["metadata"] = meta;

    json eig = json::array();
    json jm = json::array();
    for (const qut_mode& md : modes) {
      eig.push_back(md.lambda);
      json e;
      e["branch"] = branch_name(md.branch);
      e["lambda"] = md.lambda;
      if (md.branch == QUT_BRANCH_IN_BAND) {
        e["k"] = md.k;
        e["j"] = md.j;
        e["phi"] = md.phi;
        e["dos"] = md.dos;
      } else {
        e["p"] = md.p;
        e["side"] = md.side;
      }
      e["residual"] = md.residual;
      e["O_k1"] = number_or_null(md.o_first);
      jm.push_back(std::move(e));
    }
    report["eigenvalues"] = std::move(eig);
    report["modes"] = std::move(jm);
    if (args.vectors) report["eigenvectors"] = vecs;

    json jd;
    jd["max_residual"] = diag.max_residual;
    jd["max_norm_deviation"] = diag.max_norm_deviation;
    jd["grid_refinements"] = diag.grid_refinements;
    jd["bisection_fallbacks"] = diag.bisection_fallbacks;
    jd["band_edge_modes"] = diag.band_edge_modes;
    jd["tangent_pairs"] = diag.tangent_pairs;
    jd["clustered_modes"] = diag.clustered_modes;
    jd["negative_dos_modes"] = diag.negative_dos_modes;
    jd["twisted_in_band"] = diag.twisted_in_band;
    json warnings = json::array();
    for (std::size_t i = 0; i < qut_spectrum_warning_count(s.get()); ++i) {
      warnings.push_back(qut_spectrum_warning(s.get(), i));
    }
    jd["warnings"] = std::move(warnings);
    report["diagnostics"] = std::move(jd);

    if (oc) {
      json jo;
      jo["max_eigenvalue_deviation"] = oc->max_eigenvalue_deviation;
      if (oc->max_vector_deviation) jo["max_vector_deviation"] = *oc->max_vector_deviation;
      report["oracle_check"] = std::move(jo);
    }
    report["within_tolerance"] = ok;
    std::cout << report.dump(2) << '\n';
  }

  if (!ok) {
    std::cerr << "qut: residual or oracle deviation exceeds tolerance " << fmt(tol) << '\n';
    return kExitTolerance;
  }
  return kExitOk;
}

struct SweepArgs {
  std::string preset;
  std::string param;
  double from = 0.0;
  double to = 0.0;
  long steps = 0;
  long ell = 0;
  double x = 0.0;
  double y = 1.0;
  double z = 0.0;
  std::string output;
  unsigned threads = 1;
};

// Eigenvalues and out-of-band count of one preset point. A point the
// analytic solver rejects (a zero coupling decouples the matrix) is taken
// from the reference solver instead.
void sweep_point(const SweepArgs& a, double x, double y, double z, std::vector<double>& values,
                 std::size_t& out_of_band) {
  const std::size_t ell = static_cast<std::size_t>(a.ell);
  qut_matrix* raw = nullptr;
  const qut_status st = qut_matrix_from_preset(a.preset.c_str(), ell, x, y, z, &raw);
  if (st == QUT_OK) {
    MatrixPtr m(raw);
    qut_solve_options opts;
    qut_solve_options_init(&opts);
    opts.threads = a.threads;
    qut_spectrum* sraw = nullptr;
    check(qut_solve(m.get(), &opts, &sraw));
    SpectrumPtr s(sraw);
    check(qut_spectrum_eigenvalues(s.get(), values.data()));
    std::size_t above = 0, below = 0;
    check(qut_spectrum_counts(s.get(), nullptr, &above, &below));
    out_of_band = above + below;
    return;
  }
  if (st != QUT_ERR_ZERO_COUPLING) check(st);
  std::vector<double> diag(ell), offdiag(ell - 1);
  check(qut_preset_entries(a.preset.c_str(), ell, x, y, z, diag.data(), offdiag.data()));
  check(qut_oracle_eig(diag.data(), offdiag.data(), ell, values.data(), nullptr));
  std::size_t below_top = 0, below_bottom = 0;
  check(qut_oracle_sturm_count(diag.data(), offdiag.data(), ell, 2.0, &below_top));
  check(qut_oracle_sturm_count(diag.data(), offdiag.data(), ell, -2.0, &below_bottom));
  out_of_band = (ell - below_top) + below_bottom;
}

int cmd_sweep(const SweepArgs& a) {
  const bool uses_z = a.preset == "asymmetric";
  if (a.param != "x" && a.param != "y" && !(a.param == "z" && uses_z)) {
    throw CliError{kExitInvalid, "preset '" + a.preset + "' has no parameter '" + a.param + "'"};
  }
  if (a.steps < 1) throw CliError{kExitInvalid, "--steps must be at least 1"};
  if (a.ell < 2) throw CliError{kExitInvalid, "--ell must be at least 2"};
  if (!std::isfinite(a.from) || !std::isfinite(a.to)) throw CliError{kExitInvalid, "range must be finite"};

  std::ofstream file;
  if (!a.output.empty()) {
    file.open(a.output, std::ios::binary);
    if (!file) throw CliError{kExitInvalid, "cannot write '" + a.output + "'"};
  }
  std::ostream& out = a.output.empty() ? std::cout : file;

  const std::size_t ell = static_cast<std::size_t>(a.ell);
  out << a.param;
  for (std::size_t i = 1; i <= ell; ++i) out << ",lambda_" << i;
  out << ",out_of_band\n";
  std::vector<double> values(ell);
  for (long i = 0; i < a.steps; ++i) {
    const double t = a.steps == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(a.steps - 1);
    const double value = i + 1 == a.steps && a.steps > 1 ? a.to : a.from + t * (a.to - a.from);
    double x = a.x, y = a.y, z = a.z;
    if (a.param == "x") x = value;
    else if (a.param == "y") y = value;
    else z = value;
    std::size_t oob = 0;
    sweep_point(a, x, y, z, values, oob);
    out << fmt(value);
    for (double lam : values) out << ',' << fmt(lam);
    out << ',' << oob << '\n';
  }
  return kExitOk;
}

int cmd_dos(const std::string& spec, long samples) {
  if (samples < 2) throw CliError{kExitInvalid, "--samples must be at least 2"};
  MatrixPtr m = load_matrix(spec);
  const std::size_t n = static_cast<std::size_t>(samples);
  std::vector<double> k(n), rho(n);
  double integral = 0.0;
  check(qut_dos_curve(m.get(), n, k.data(), rho.data(), &integral));
  std::cout << "k,rho\n";
  for (std::size_t i = 0; i < n; ++i) std::cout << fmt(k[i]) << ',' << fmt(rho[i]) << '\n';
  std::cout << "integral," << fmt(integral) << '\n';
  return kExitOk;
}

int cmd_norm_integral(double x, double y, long points) {
  if (points < 64) throw CliError{kExitInvalid, "--points must be at least 64"};
  double value = 0.0;
  check(qut_norm_integral(x, y, static_cast<std::size_t>(points), &value));
  std::cout << fmt(value) << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Analytic diagonalization of quasi-uniform tridiagonal matrices"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(qut_version()));

  SolveArgs solve;
  auto* solve_cmd = app.add_subcommand("solve", "Diagonalize the matrix described by a JSON spec");
  solve_cmd->add_option("spec", solve.spec, "Matrix spec file, or - for standard input")->required();
  solve_cmd->add_flag("--vectors", solve.vectors, "Include eigenvectors");
  solve_cmd->add_flag("--oracle-check", solve.oracle_check, "Compare against the reference solver");
  solve_cmd->add_option("--format", solve.format, "Output format")
      ->check(CLI::IsMember({"json", "csv"}));
  solve_cmd->add_option("--tol", solve.tol, "Tolerance (default 1e-8, or QUT_TOL)");
  solve_cmd->add_option("--threads", solve.threads, "Worker threads for per-mode work");

  SweepArgs sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Eigenvalue table over one preset parameter");
  sweep_cmd->add_option("--preset", sweep.preset, "two-edge, deep-edge or asymmetric")
      ->required()
      ->check(CLI::IsMember({"two-edge", "deep-edge", "asymmetric"}));
  sweep_cmd->add_option("--param", sweep.param, "Swept parameter: x, y or z")->required();
  sweep_cmd->add_option("--from", sweep.from, "First parameter value")->required();
  sweep_cmd->add_option("--to", sweep.to, "Last parameter value")->required();
  sweep_cmd->add_option("--steps", sweep.steps, "Number of points, ends included")->required();
  sweep_cmd->add_option("--ell", sweep.ell, "Matrix size")->required();
  sweep_cmd->add_option("--x", sweep.x, "Fixed x");
  sweep_cmd->add_option("--y", sweep.y, "Fixed y");
  sweep_cmd->add_option("--z", sweep.z, "Fixed z");
  sweep_cmd->add_option("--output", sweep.output, "CSV file (default standard output)");
  sweep_cmd->add_option("--threads", sweep.threads, "Worker threads for per-mode work");

  std::string dos_spec;
  long dos_samples = 1001;
  auto* dos_cmd = app.add_subcommand("dos", "Density of states on a uniform k grid");
  dos_cmd->add_option("spec", dos_spec, "Matrix spec file, or - for standard input")->required();
  dos_cmd->add_option("--samples", dos_samples, "Grid points on [0, pi]");

  double ni_x = 0.0, ni_y = 1.0;
  long ni_points = 64;
  auto* ni_cmd = app.add_subcommand("norm-integral", "Continuum limit of the summed O_k1^2");
  ni_cmd->add_option("--x", ni_x, "Corner diagonal x")->required();
  ni_cmd->add_option("--y", ni_y, "Corner coupling y")->required();
  ni_cmd->add_option("--points", ni_points, "Initial trapezoid intervals (>= 64)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitParse;
  }

  try {
    if (*solve_cmd) return cmd_solve(solve);
    if (*sweep_cmd) return cmd_sweep(sweep);
    if (*dos_cmd) return cmd_dos(dos_spec, dos_samples);
    if (*ni_cmd) return cmd_norm_integral(ni_x, ni_y, ni_points);
  } catch (const CliError& e) {
    std::cerr << "qut: " << e.message << '\n';
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "qut: " << e.what() << '\n';
    return kExitSolver;
  }
  return kExitParse;
}
