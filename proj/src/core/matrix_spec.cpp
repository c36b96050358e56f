#include "core/matrix_spec.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "core/error.hpp"

namespace qut {

namespace {

using nlohmann::json;

[[noreturn]] void parse_fail(const std::string& what) { throw Error(ErrorCode::ParseError, what); }

double read_real(const json& j, const char* key) {
  if (!j.is_number()) parse_fail(std::string("field '") + key + "' must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) parse_fail(std::string("field '") + key + "' must be finite");
  return v;
}

std::vector<double> read_list(const json& side, const char* side_name, const char* key) {
  std::vector<double> out;
  if (!side.contains(key)) return out;
  const json& arr = side.at(key);
  const std::string name = std::string(side_name) + "." + key;
  if (!arr.is_array()) parse_fail("field '" + name + "' must be an array");
  out.reserve(arr.size());
  for (const json& v : arr) out.push_back(read_real(v, name.c_str()));
  return out;
}

std::size_t read_ell(const json& doc) {
  if (!doc.contains("ell")) parse_fail("missing field 'ell'");
  const json& e = doc.at("ell");
  if (!e.is_number_integer()) parse_fail("field 'ell' must be an integer");
  const auto v = e.get<long long>();
  if (v <= 0) throw Error(ErrorCode::InvalidArgument, "ell must be positive");
  return static_cast<std::size_t>(v);
}

double param(const json& doc, const char* key, double fallback) {
  if (doc.contains("params")) {
    const json& p = doc.at("params");
    if (!p.is_object()) parse_fail("field 'params' must be an object");
    if (p.contains(key)) return read_real(p.at(key), key);
  }
  if (doc.contains(key)) return read_real(doc.at(key), key);
  return fallback;
}

// Trapezoid sum over [0, pi] with `intervals` panels of an integrand that is
// even and 2 pi periodic, so the rule converges geometrically.
template <class Fn>
double trapezoid(Fn&& f, std::size_t intervals) {
  const double h = std::numbers::pi / static_cast<double>(intervals);
  double sum = 0.5 * (f(0.0) + f(std::numbers::pi));
  for (std::size_t i = 1; i < intervals; ++i) sum += f(h * static_cast<double>(i));
  return sum * h;
}

}  // namespace

const char* to_string(Preset p) noexcept {
  switch (p) {
    case Preset::TwoEdge: return "two-edge";
    case Preset::DeepEdge: return "deep-edge";
    case Preset::Asymmetric: return "asymmetric";
  }
  return "unknown";
}

std::optional<Preset> preset_from_string(std::string_view name) {
  if (name == "two-edge") return Preset::TwoEdge;
  if (name == "deep-edge") return Preset::DeepEdge;
  if (name == "asymmetric") return Preset::Asymmetric;
  return std::nullopt;
}

MatrixSpec preset_spec(Preset preset, std::size_t ell, const PresetParams& p) {
  MatrixSpec s;
  s.ell = ell;
  switch (preset) {
    case Preset::TwoEdge:
      s.left_a = {p.x};
      s.left_b = {p.y};
      s.right_a = {p.x};
      s.right_b = {p.y};
      break;
    case Preset::DeepEdge:
      s.left_a = {0.0, 0.0};
      s.left_b = {p.x, p.y};
      s.right_a = {0.0, 0.0};
      s.right_b = {p.y, p.x};
      break;
    case Preset::Asymmetric:
      s.left_a = {p.x};
      s.left_b = {p.y};
      s.right_a = {p.z};
      s.right_b = {1.0};
      break;
  }
  return s;
}

MatrixSpec parse_matrix_spec(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text.begin(), json_text.end());
  } catch (const json::parse_error& e) {
    parse_fail(std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) parse_fail("matrix spec must be a JSON object");

  const std::size_t ell = read_ell(doc);
  if (doc.contains("preset")) {
    const json& name = doc.at("preset");
    if (!name.is_string()) parse_fail("field 'preset' must be a string");
    const auto preset = preset_from_string(name.get<std::string>());
    if (!preset) {
      throw Error(ErrorCode::InvalidArgument, "unknown preset '" + name.get<std::string>() +
                                                  "' (expected two-edge, deep-edge or asymmetric)");
    }
    PresetParams p;
    p.x = param(doc, "x", p.x);
    p.y = param(doc, "y", p.y);
    p.z = param(doc, "z", p.z);
    return preset_spec(*preset, ell, p);
  }

  MatrixSpec s;
  s.ell = ell;
  if (doc.contains("bulk")) {
    const json& bulk = doc.at("bulk");
    if (!bulk.is_object()) parse_fail("field 'bulk' must be an object");
    if (bulk.contains("a")) s.bulk_a = read_real(bulk.at("a"), "bulk.a");
    if (bulk.contains("b")) s.bulk_b = read_real(bulk.at("b"), "bulk.b");
  }
  for (const char* side : {"left", "right"}) {
    if (!doc.contains(side)) continue;
    const json& obj = doc.at(side);
    if (!obj.is_object()) parse_fail(std::string("field '") + side + "' must be an object");
    auto a = read_list(obj, side, "a");
    auto b = read_list(obj, side, "b");
    if (a.size() != b.size()) {
      throw Error(ErrorCode::InvalidArgument,
                  std::string(side) + ".a and " + side + ".b must have equal lengths");
    }
    if (std::string_view(side) == "left") {
      s.left_a = std::move(a);
      s.left_b = std::move(b);
    } else {
      s.right_a = std::move(a);
      s.right_b = std::move(b);
    }
  }
  if (s.left_a.size() + s.right_a.size() >= s.ell) {
    throw Error(ErrorCode::BadIndices, "boundary rows leave no uniform block");
  }
  return s;
}

std::string to_json(const MatrixSpec& spec) {
  json doc;
  doc["ell"] = spec.ell;
  doc["bulk"] = {{"a", spec.bulk_a}, {"b", spec.bulk_b}};
  doc["left"] = {{"a", spec.left_a}, {"b", spec.left_b}};
  doc["right"] = {{"a", spec.right_a}, {"b", spec.right_b}};
  return doc.dump();
}

void expand_entries(const MatrixSpec& spec, std::vector<double>& diag, std::vector<double>& offdiag) {
  const std::size_t ell = spec.ell;
  const std::size_t left = spec.left_a.size();
  const std::size_t right = spec.right_a.size();
  if (ell == 0 || left + right >= ell || spec.left_b.size() != left || spec.right_b.size() != right) {
    throw Error(ErrorCode::InvalidArgument, "inconsistent matrix spec");
  }
  diag.assign(ell, spec.bulk_a);
  offdiag.assign(ell - 1, spec.bulk_b);
  for (std::size_t i = 0; i < left; ++i) {
    diag[i] = spec.left_a[i];
    offdiag[i] = spec.left_b[i];
  }
  for (std::size_t i = 0; i < right; ++i) {
    const std::size_t row = ell - right + i;
    diag[row] = spec.right_a[i];
    offdiag[row - 1] = spec.right_b[i];
  }
}

QutMatrix to_qut(const MatrixSpec& spec) {
  return make_qut(spec.ell, spec.bulk_a, spec.bulk_b, spec.left_a, spec.left_b, spec.right_a,
                  spec.right_b);
}

double norm_integral(double x, double y, std::size_t points) {
  if (points < 64) {
    std::ostringstream msg;
    msg << "norm integral needs at least 64 quadrature points, got " << points;
    throw Error(ErrorCode::InvalidArgument, msg.str());
  }
  const double y2 = y * y;
  const auto f = [&](double k) {
    const double s = std::sin(k);
    const double num = y2 * s * s;
    const double d = (2.0 - y2) * std::cos(k) - x;
    const double den = d * d + y2 * y2 * s * s;
    // 0/0 only where the numerator vanishes to second order.
    return den == 0.0 ? 0.0 : num / den;
  };
  constexpr std::size_t kMaxIntervals = std::size_t{1} << 24;
  std::size_t n = points;
  double prev = trapezoid(f, n);
  while (n < kMaxIntervals) {
    n *= 2;
    const double cur = trapezoid(f, n);
    if (std::fabs(cur - prev) < 1e-14) return 2.0 * cur / std::numbers::pi;
    prev = cur;
  }
  return 2.0 * prev / std::numbers::pi;
}

}  // namespace qut
