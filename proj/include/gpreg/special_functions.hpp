#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <vector>

/// Special functions backing the kernel catalog: Gamma, digamma at integers,
/// the modified Bessel function of the second kind, the Matern radial profile,
/// and exact Wendland radial polynomials.
namespace gpreg::special {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

/// Gamma function via the Lanczos approximation (g = 7, 9 coefficients) with
/// reflection for x < 1/2. Relative error is below 1e-13 on the ranges used here.
double gamma(double x);

/// 1/Gamma(x), exactly zero at the poles 0, -1, -2, ...
double reciprocal_gamma(double x);

/// sin(pi x) with argument reduction, exact zeros at integers.
double sin_pi(double x);

/// psi(m) = -gamma_E + sum_{k<m} 1/k for integer m >= 1.
double digamma_int(int m);

/// K_nu(rho) for nu > 0, rho > 0.
///
/// Branches:
///  - rho <= 2: ascending series. The (I_{-nu} - I_nu)/sin(nu pi) form when nu
///    is at least 1e-8 away from an integer, otherwise the logarithmic
///    integer-order series with digamma coefficients.
///  - 2 < rho, and rho <= 25 or nu large: Steed/Temme continued fraction for
///    K_mu, K_{mu+1} with |mu| <= 1/2 followed by upward recurrence.
///  - rho > 25 (moderate nu): Hankel large-argument expansion.
double bessel_k(double nu, double rho);

/// The (I_{-nu} - I_nu) series branch on its own. nu must not be an integer.
double bessel_k_series(double nu, double rho);

/// The integer-order logarithmic series branch on its own, n >= 0.
double bessel_k_integer_series(int n, double rho);

/// Continued-fraction branch on its own (valid for rho >= 2).
double bessel_k_continued_fraction(double nu, double rho);

/// Large-argument asymptotic branch on its own.
double bessel_k_asymptotic(double nu, double rho);

/// rho^nu K_nu(rho), finite as rho -> 0. Same branch selection as bessel_k.
double scaled_bessel_k(double nu, double rho);

/// Matern radial profile with unit lengthscale:
/// k_r(r) = 2^{1-nu}/Gamma(nu) (sqrt(2 nu) r)^nu K_nu(sqrt(2 nu) r), k_r(0) = 1.
double matern_radial(double nu, double r);

/// Polynomial on [0, 1] with exact rational coefficients, identically zero on [1, inf).
class PiecewisePolynomial {
public:
    PiecewisePolynomial() = default;
    explicit PiecewisePolynomial(std::vector<Rational> coefficients);

    /// Coefficient of rho^j (ascending order); zero beyond the degree.
    [[nodiscard]] Rational coefficient(std::size_t j) const;
    [[nodiscard]] const std::vector<Rational>& coefficients() const { return coeffs_; }
    [[nodiscard]] int degree() const;

    /// Numerator/denominator of coefficient j.
    [[nodiscard]] BigInt numerator(std::size_t j) const;
    [[nodiscard]] BigInt denominator(std::size_t j) const;

    /// Value at rho >= 0 (zero for rho >= 1). Negative rho is mirrored.
    [[nodiscard]] double operator()(double rho) const;
    [[nodiscard]] Rational exact_value(const Rational& rho) const;

    /// k-th derivative of the polynomial piece (on [0, 1]).
    [[nodiscard]] PiecewisePolynomial derivative(int k = 1) const;

    /// Value of the k-th derivative of the polynomial piece at rho in [0, 1).
    [[nodiscard]] double derivative_value(int k, double rho) const;

    /// Smallest odd j with nonzero coefficient, or -1 if every odd coefficient vanishes.
    [[nodiscard]] int lowest_odd_degree() const;

    friend bool operator==(const PiecewisePolynomial&, const PiecewisePolynomial&) = default;

private:
    void trim();

    std::vector<Rational> coeffs_;
    std::vector<double> float_coeffs_;
};

/// Applies rho -> int_rho^1 t p(t) dt / int_0^1 t p(t) dt to a polynomial supported on [0, 1].
PiecewisePolynomial radial_integral(const PiecewisePolynomial& p);

/// Wendland radial function I^n phi_{floor(d/2)+n+1}, phi_j(rho) = (1-rho)_+^j.
PiecewisePolynomial wendland_polynomial(int d, int n);

} // namespace gpreg::special
