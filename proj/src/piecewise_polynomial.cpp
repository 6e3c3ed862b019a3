#include "gpreg/special_functions.hpp"

#include "gpreg/errors.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace gpreg::special {

PiecewisePolynomial::PiecewisePolynomial(std::vector<Rational> coefficients)
    : coeffs_(std::move(coefficients)) {
    trim();
}

void PiecewisePolynomial::trim() {
    while (!coeffs_.empty() && coeffs_.back() == 0) {
        coeffs_.pop_back();
    }
    float_coeffs_.clear();
    float_coeffs_.reserve(coeffs_.size());
    for (const auto& c : coeffs_) {
        float_coeffs_.push_back(static_cast<double>(c));
    }
}

Rational PiecewisePolynomial::coefficient(std::size_t j) const {
    return j < coeffs_.size() ? coeffs_[j] : Rational(0);
}

int PiecewisePolynomial::degree() const {
    return static_cast<int>(coeffs_.size()) - 1;
}

BigInt PiecewisePolynomial::numerator(std::size_t j) const {
    return boost::multiprecision::numerator(coefficient(j));
}

BigInt PiecewisePolynomial::denominator(std::size_t j) const {
    return boost::multiprecision::denominator(coefficient(j));
}

double PiecewisePolynomial::operator()(double rho) const {
    const double r = std::abs(rho);
    if (r >= 1.0) {
        return 0.0;
    }
    double acc = 0.0;
    for (auto it = float_coeffs_.rbegin(); it != float_coeffs_.rend(); ++it) {
        acc = acc * r + *it;
    }
    return acc;
}

Rational PiecewisePolynomial::exact_value(const Rational& rho) const {
    Rational r = rho < 0 ? Rational(-rho) : rho;
    if (r >= 1) {
        return Rational(0);
    }
    Rational acc = 0;
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) {
        acc = acc * r + *it;
    }
    return acc;
}

PiecewisePolynomial PiecewisePolynomial::derivative(int k) const {
    if (k < 0) {
        throw DomainError("derivative order must be nonnegative");
    }
    std::vector<Rational> out = coeffs_;
    for (int step = 0; step < k; ++step) {
        if (out.empty()) {
            break;
        }
        std::vector<Rational> next;
        next.reserve(out.size() - 1);
        for (std::size_t j = 1; j < out.size(); ++j) {
            next.push_back(out[j] * static_cast<long>(j));
        }
        out = std::move(next);
    }
    return PiecewisePolynomial(std::move(out));
}

double PiecewisePolynomial::derivative_value(int k, double rho) const {
    const double r = std::abs(rho);
    if (r >= 1.0) {
        return 0.0;
    }
    // Horner on the differentiated coefficients, in floating point.
    double acc = 0.0;
    for (int j = degree(); j >= k; --j) {
        double falling = 1.0;
        for (int i = 0; i < k; ++i) {
            falling *= static_cast<double>(j - i);
        }
        acc = acc * r + falling * float_coeffs_[static_cast<std::size_t>(j)];
    }
    return acc;
}

int PiecewisePolynomial::lowest_odd_degree() const {
    for (std::size_t j = 1; j < coeffs_.size(); j += 2) {
        if (coeffs_[j] != 0) {
            return static_cast<int>(j);
        }
    }
    return -1;
}

PiecewisePolynomial radial_integral(const PiecewisePolynomial& p) {
    // F(rho) = int_rho^1 t p(t) dt = G(1) - G(rho), G(t) = sum c_j t^{j+2}/(j+2).
    const auto& c = p.coefficients();
    std::vector<Rational> antiderivative(c.size() + 2, Rational(0));
    for (std::size_t j = 0; j < c.size(); ++j) {
        antiderivative[j + 2] = c[j] / Rational(static_cast<long>(j + 2));
    }
    Rational at_one = 0;
    for (const auto& a : antiderivative) {
        at_one += a;
    }
    if (at_one == 0) {
        throw NumericalError("radial_integral: vanishing normalization");
    }
    std::vector<Rational> out(antiderivative.size());
    out[0] = at_one;
    for (std::size_t j = 1; j < antiderivative.size(); ++j) {
        out[j] = -antiderivative[j];
    }
    for (auto& v : out) {
        v /= at_one;
    }
    return PiecewisePolynomial(std::move(out));
}

PiecewisePolynomial wendland_polynomial(int d, int n) {
    if (d < 1) {
        throw DomainError("wendland_polynomial: d must be >= 1, got " + std::to_string(d));
    }
    if (n < 0) {
        throw DomainError("wendland_polynomial: n must be >= 0, got " + std::to_string(n));
    }
    const int power = d / 2 + n + 1;
    // (1 - rho)^power by the binomial theorem.
    std::vector<Rational> base(static_cast<std::size_t>(power) + 1);
    BigInt binom = 1;
    for (int j = 0; j <= power; ++j) {
        base[static_cast<std::size_t>(j)] = Rational(j % 2 == 0 ? binom : BigInt(-binom));
        binom = binom * (power - j) / (j + 1);
    }
    PiecewisePolynomial result(std::move(base));
    for (int i = 0; i < n; ++i) {
        result = radial_integral(result);
    }
    return result;
}

} // namespace gpreg::special
