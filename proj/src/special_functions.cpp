#include "gpreg/special_functions.hpp"

#include "gpreg/errors.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <string>

namespace gpreg::special {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kEulerGamma = 0.57721566490153286060651209008240243;

// Below this radius the ascending series are used; cancellation between the
// two series grows like e^{2 rho}, which is harmless up to here.
constexpr double kSeriesRadius = 2.0;
constexpr double kAsymptoticRadius = 25.0;
constexpr double kIntegerSnap = 1e-8;
constexpr double kSeriesTolerance = 1e-17;
constexpr int kMaxTerms = 500;

void check_arguments(double nu, double rho) {
    if (!std::isfinite(nu) || !std::isfinite(rho)) {
        throw DomainError("bessel_k: non-finite argument");
    }
    if (nu < 0.0) {
        throw DomainError("bessel_k: order must be nonnegative, got " + std::to_string(nu));
    }
    if (rho <= 0.0) {
        throw DomainError("bessel_k: argument must be positive, got " + std::to_string(rho));
    }
}

// Sum_{j>=0} q^j / (j! Gamma(j + a)), accumulated in fixed order.
double power_series_rgamma(double a, double q) {
    double term = reciprocal_gamma(a);
    double sum = term;
    for (int j = 0; j < kMaxTerms; ++j) {
        term *= q / ((j + 1.0) * (j + a));
        sum += term;
        if (std::abs(term) <= kSeriesTolerance * std::abs(sum) && j > 0) {
            break;
        }
    }
    return sum;
}

// rho^nu K_nu(rho) from the (I_{-nu} - I_nu)/sin(nu pi) representation.
double scaled_series(double nu, double rho) {
    const double half = 0.5 * rho;
    const double q = half * half;
    const double minus = power_series_rgamma(1.0 - nu, q);
    const double plus = power_series_rgamma(1.0 + nu, q);
    const double lead = std::pow(2.0, nu) * minus;
    const double tail = std::pow(2.0, -nu) * std::pow(rho, 2.0 * nu) * plus;
    return 0.5 * kPi * (lead - tail) / sin_pi(nu);
}

// rho^n K_n(rho) from the logarithmic integer-order series.
double scaled_integer_series(int n, double rho) {
    const double half = 0.5 * rho;
    const double q = half * half;

    // 1/2 (rho/2)^{-n} sum_{j<n} (n-j-1)!/j! (-q)^j, times rho^n.
    double finite = 0.0;
    {
        double fact_hi = std::tgamma(static_cast<double>(n)); // (n-1)!
        double fact_lo = 1.0;                                  // j!
        double power = 1.0;
        for (int j = 0; j < n; ++j) {
            finite += fact_hi / fact_lo * power;
            if (j + 1 < n) {
                fact_hi /= static_cast<double>(n - j - 1);
                fact_lo *= static_cast<double>(j + 1);
                power *= -q;
            }
        }
        finite *= 0.5 * std::pow(2.0, n);
    }

    // I_n(rho) = half^n sum q^j / (j! (n+j)!) and the digamma-weighted companion.
    double bessel_i_sum = 0.0;
    double digamma_sum = 0.0;
    {
        double term = 1.0 / std::tgamma(n + 1.0);
        double psi_a = -kEulerGamma;    // psi(j + 1)
        double psi_b = digamma_int(n + 1); // psi(n + j + 1)
        for (int j = 0; j < kMaxTerms; ++j) {
            bessel_i_sum += term;
            digamma_sum += (psi_a + psi_b) * term;
            const double next = term * q / ((j + 1.0) * (n + j + 1.0));
            psi_a += 1.0 / (j + 1.0);
            psi_b += 1.0 / (n + j + 1.0);
            term = next;
            if (std::abs(term) <= kSeriesTolerance * std::abs(bessel_i_sum) && j > 0) {
                break;
            }
        }
    }

    const double rho_n = std::pow(rho, n);
    const double half_n = std::pow(half, n);
    const double sign = (n % 2 == 0) ? 1.0 : -1.0;
    const double log_part = -sign * std::log(half) * rho_n * half_n * bessel_i_sum;
    const double digamma_part = sign * 0.5 * rho_n * half_n * digamma_sum;
    return finite + log_part + digamma_part;
}

double nearest_integer_offset(double nu, int& rounded) {
    const double r = std::round(nu);
    rounded = static_cast<int>(r);
    return std::abs(nu - r);
}

bool use_asymptotic(double nu, double rho) {
    return rho > kAsymptoticRadius && nu * nu < 4.0 * rho;
}

} // namespace

double sin_pi(double x) {
    double r = std::fmod(x, 2.0);
    if (r < 0.0) {
        r += 2.0;
    }
    if (r == 0.0 || r == 1.0) {
        return 0.0;
    }
    if (r > 1.0) {
        return -sin_pi(r - 1.0);
    }
    if (r > 0.5) {
        r = 1.0 - r;
    }
    return std::sin(kPi * r);
}

double gamma(double x) {
    static constexpr std::array<double, 9> kLanczos = {
        0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
        771.32342877765313,   -176.61502916214059,   12.507343278686905,
        -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7,
    };
    if (!std::isfinite(x)) {
        throw DomainError("gamma: non-finite argument");
    }
    if (x < 0.5) {
        const double s = sin_pi(x);
        if (s == 0.0) {
            throw DomainError("gamma: pole at " + std::to_string(x));
        }
        return kPi / (s * gamma(1.0 - x));
    }
    const double z = x - 1.0;
    double acc = kLanczos[0];
    for (std::size_t i = 1; i < kLanczos.size(); ++i) {
        acc += kLanczos[i] / (z + static_cast<double>(i));
    }
    const double t = z + 7.5;
    return std::sqrt(2.0 * kPi) * std::pow(t, z + 0.5) * std::exp(-t) * acc;
}

double reciprocal_gamma(double x) {
    if (x <= 0.0 && x == std::floor(x)) {
        return 0.0;
    }
    return 1.0 / gamma(x);
}

double digamma_int(int m) {
    if (m < 1) {
        throw DomainError("digamma_int: argument must be >= 1, got " + std::to_string(m));
    }
    if (m <= 64) {
        double sum = -kEulerGamma;
        for (int k = 1; k < m; ++k) {
            sum += 1.0 / k;
        }
        return sum;
    }
    // Asymptotic expansion; truncation error is far below 1e-16 for m > 64.
    const double x = m;
    const double inv2 = 1.0 / (x * x);
    return std::log(x) - 0.5 / x
        - inv2 * (1.0 / 12 - inv2 * (1.0 / 120 - inv2 * (1.0 / 252 - inv2 * (1.0 / 240))));
}

double bessel_k_series(double nu, double rho) {
    check_arguments(nu, rho);
    if (sin_pi(nu) == 0.0) {
        throw DomainError("bessel_k_series: integer order requires the integer branch");
    }
    return scaled_series(nu, rho) * std::pow(rho, -nu);
}

double bessel_k_integer_series(int n, double rho) {
    check_arguments(n, rho);
    return scaled_integer_series(n, rho) * std::pow(rho, -static_cast<double>(n));
}

double bessel_k_continued_fraction(double nu, double rho) {
    check_arguments(nu, rho);
    const double x = rho;
    const int steps = static_cast<int>(nu + 0.5);
    const double mu = nu - steps;
    const double a1 = 0.25 - mu * mu;
    double b = 2.0 * (1.0 + x);
    double d = 1.0 / b;
    double h = d;
    double delh = d;
    double q1 = 0.0;
    double q2 = 1.0;
    double q = a1;
    double c = a1;
    double a = -a1;
    double s = 1.0 + q * delh;
    for (int i = 1; i < 100000; ++i) {
        a -= 2 * i;
        c = -a * c / (i + 1.0);
        const double qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        const double dels = q * delh;
        s += dels;
        if (std::abs(dels / s) < 1e-17) {
            break;
        }
    }
    h = a1 * h;
    double k_mu = std::sqrt(kPi / (2.0 * x)) * std::exp(-x) / s;
    double k_mu1 = k_mu * (mu + x + 0.5 - h) / x;
    for (int i = 1; i <= steps; ++i) {
        const double next = (mu + i) * (2.0 / x) * k_mu1 + k_mu;
        k_mu = k_mu1;
        k_mu1 = next;
    }
    return k_mu;
}

double bessel_k_asymptotic(double nu, double rho) {
    check_arguments(nu, rho);
    const double four_nu2 = 4.0 * nu * nu;
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < kMaxTerms; ++k) {
        const double odd = 2.0 * k - 1.0;
        const double next = term * (four_nu2 - odd * odd) / (8.0 * k * rho);
        if (std::abs(next) > std::abs(term)) {
            break;
        }
        term = next;
        sum += term;
        if (std::abs(term) <= kSeriesTolerance * std::abs(sum)) {
            break;
        }
    }
    return std::sqrt(kPi / (2.0 * rho)) * std::exp(-rho) * sum;
}

double bessel_k(double nu, double rho) {
    check_arguments(nu, rho);
    if (rho <= kSeriesRadius) {
        int n = 0;
        if (nearest_integer_offset(nu, n) < kIntegerSnap) {
            return bessel_k_integer_series(n, rho);
        }
        return bessel_k_series(nu, rho);
    }
    if (use_asymptotic(nu, rho)) {
        return bessel_k_asymptotic(nu, rho);
    }
    return bessel_k_continued_fraction(nu, rho);
}

double scaled_bessel_k(double nu, double rho) {
    check_arguments(nu, rho);
    if (rho <= kSeriesRadius) {
        int n = 0;
        if (nearest_integer_offset(nu, n) < kIntegerSnap) {
            return scaled_integer_series(n, rho);
        }
        return scaled_series(nu, rho);
    }
    // Combine rho^nu with e^{-rho} in log space so large rho underflows cleanly.
    const double k = use_asymptotic(nu, rho)
        ? bessel_k_asymptotic(nu, rho) * std::exp(rho)
        : bessel_k_continued_fraction(nu, rho) * std::exp(rho);
    return k * std::exp(nu * std::log(rho) - rho);
}

double matern_radial(double nu, double r) {
    if (!(nu > 0.0) || !std::isfinite(nu)) {
        throw DomainError("matern_radial: nu must be positive, got " + std::to_string(nu));
    }
    if (!std::isfinite(r)) {
        throw DomainError("matern_radial: non-finite radius");
    }
    const double rr = std::abs(r);
    if (rr == 0.0) {
        return 1.0;
    }
    const double rho = std::sqrt(2.0 * nu) * rr;
    if (rho > 745.0) {
        return 0.0;
    }
    return std::pow(2.0, 1.0 - nu) / gamma(nu) * scaled_bessel_k(nu, rho);
}

} // namespace gpreg::special
