#pragma once

#include <initializer_list>
#include <vector>

namespace qut {

// Dense real polynomial in one variable, coefficients in ascending degree.
// The zero polynomial has no coefficients; otherwise the leading coefficient
// is nonzero.
class Poly {
 public:
  Poly() = default;
  explicit Poly(std::vector<double> coeffs);
  Poly(std::initializer_list<double> coeffs);

  static Poly constant(double c);
  static Poly monomial(int degree, double c = 1.0);
  // The identity polynomial xi.
  static Poly identity();

  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
  bool is_zero() const { return coeffs_.empty(); }
  const std::vector<double>& coeffs() const { return coeffs_; }
  double coeff(int i) const;

  double operator()(double x) const;
  // Horner value and first derivative in one pass.
  void evaluate(double x, double& value, double& derivative) const;

  Poly derivative() const;
  // p(scale * x + offset)
  Poly compose_linear(double scale, double offset) const;

  Poly& operator+=(const Poly& rhs);
  Poly& operator-=(const Poly& rhs);
  Poly& operator*=(double s);

  friend Poly operator+(Poly lhs, const Poly& rhs) { return lhs += rhs; }
  friend Poly operator-(Poly lhs, const Poly& rhs) { return lhs -= rhs; }
  friend Poly operator-(Poly p) { return p *= -1.0; }
  friend Poly operator*(Poly p, double s) { return p *= s; }
  friend Poly operator*(double s, Poly p) { return p *= s; }
  friend Poly operator*(const Poly& a, const Poly& b);
  friend bool operator==(const Poly&, const Poly&) = default;

 private:
  void trim();
  std::vector<double> coeffs_;
};

}  // namespace qut
