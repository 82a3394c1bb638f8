#pragma once

// Complex polynomials and a simultaneous root finder (Aberth-Ehrlich with a
// final Newton polish).

#include "rmt/core.hpp"

#include <initializer_list>
#include <limits>
#include <span>

namespace rmt {

/// Complex polynomial with coefficients in ascending degree.
class Polynomial {
public:
    Polynomial() : c_{Complex(0.0)} {}
    Polynomial(std::initializer_list<Complex> c) : c_(c) {
        if (c_.empty()) c_.push_back(0.0);
    }
    explicit Polynomial(std::vector<Complex> c) : c_(std::move(c)) {
        if (c_.empty()) c_.push_back(0.0);
    }

    /// a + b x
    static Polynomial linear(Complex a, Complex b) { return Polynomial{a, b}; }

    const std::vector<Complex>& coefficients() const noexcept { return c_; }
    Complex operator[](std::size_t k) const { return k < c_.size() ? c_[k] : Complex(0.0); }

    /// Degree after dropping exactly-zero leading coefficients.
    std::size_t degree() const {
        std::size_t d = c_.size() - 1;
        while (d > 0 && c_[d] == Complex(0.0)) --d;
        return d;
    }

    double max_abs_coefficient() const {
        double m = 0.0;
        for (const auto& v : c_) m = std::max(m, std::abs(v));
        return m;
    }

    /// Drops leading coefficients smaller than rel_tol * max |c_k|.
    Polynomial trimmed(double rel_tol = 0.0) const {
        const double cut = rel_tol * max_abs_coefficient();
        std::vector<Complex> c = c_;
        while (c.size() > 1 && std::abs(c.back()) <= cut) c.pop_back();
        return Polynomial(std::move(c));
    }

    Complex operator()(Complex z) const {
        Complex acc(0.0);
        for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * z + *it;
        return acc;
    }

    /// sum_k |c_k| x^k, the scale of Horner rounding error at |z| = x.
    double abs_bound(double x) const {
        double acc = 0.0;
        for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * x + std::abs(*it);
        return acc;
    }

    /// p(z) and p'(z) in one Horner pass.
    std::pair<Complex, Complex> value_and_derivative(Complex z) const {
        Complex p(0.0), dp(0.0);
        for (auto it = c_.rbegin(); it != c_.rend(); ++it) {
            dp = dp * z + p;
            p = p * z + *it;
        }
        return {p, dp};
    }

    friend Polynomial operator+(const Polynomial& a, const Polynomial& b) {
        std::vector<Complex> c(std::max(a.c_.size(), b.c_.size()));
        for (std::size_t k = 0; k < c.size(); ++k) c[k] = a[k] + b[k];
        return Polynomial(std::move(c));
    }
    friend Polynomial operator-(const Polynomial& a, const Polynomial& b) {
        std::vector<Complex> c(std::max(a.c_.size(), b.c_.size()));
        for (std::size_t k = 0; k < c.size(); ++k) c[k] = a[k] - b[k];
        return Polynomial(std::move(c));
    }
    friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
        std::vector<Complex> c(a.c_.size() + b.c_.size() - 1, Complex(0.0));
        for (std::size_t i = 0; i < a.c_.size(); ++i) {
            for (std::size_t j = 0; j < b.c_.size(); ++j) c[i + j] += a.c_[i] * b.c_[j];
        }
        return Polynomial(std::move(c));
    }
    friend Polynomial operator*(Complex s, const Polynomial& a) {
        std::vector<Complex> c = a.c_;
        for (auto& v : c) v *= s;
        return Polynomial(std::move(c));
    }
    friend Polynomial operator+(const Polynomial& a, Complex s) {
        std::vector<Complex> c = a.c_;
        c[0] += s;
        return Polynomial(std::move(c));
    }

private:
    std::vector<Complex> c_;
};

/// Expands prod_k (z - root_k).
inline Polynomial from_roots(std::span<const Complex> roots) {
    Polynomial p{Complex(1.0)};
    for (const auto& r : roots) p = p * Polynomial::linear(-r, 1.0);
    return p;
}

/// Residual bound used by the root-finder contract.
inline double root_residual_bound(const Polynomial& p, Complex root) {
    const auto d = static_cast<double>(p.degree());
    return 1e-8 * p.max_abs_coefficient() * std::pow(std::max(1.0, std::abs(root)), d);
}

/// All `degree` roots with multiplicity. Exactly-zero low-order coefficients
/// yield exact zero roots.
inline std::vector<Complex> poly_roots(const Polynomial& input) {
    const Polynomial p0 = input.trimmed(0.0);
    const std::size_t degree = p0.degree();
    if (degree == 0) throw InputError("poly_roots: polynomial has degree 0");

    std::vector<Complex> roots;
    std::size_t shift = 0;
    while (p0[shift] == Complex(0.0)) {
        roots.emplace_back(0.0);
        ++shift;
    }
    std::vector<Complex> rest(p0.coefficients().begin() + static_cast<std::ptrdiff_t>(shift),
                              p0.coefficients().end());
    const Polynomial p(std::move(rest));
    const std::size_t n = p.degree();
    if (n == 0) return roots;

    if (n == 1) {
        roots.push_back(-p[0] / p[1]);
        return roots;
    }

    // Initial guesses on a circle whose radius is the geometric mean of root moduli.
    const double radius = std::pow(std::abs(p[0] / p[n]), 1.0 / static_cast<double>(n));
    std::vector<Complex> z(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double angle = 2.0 * kPi * static_cast<double>(k) / static_cast<double>(n) + 0.4;
        z[k] = std::polar(radius, angle);
    }

    const int max_iter = 500;
    bool converged = false;
    for (int iter = 0; iter < max_iter && !converged; ++iter) {
        converged = true;
        for (std::size_t k = 0; k < n; ++k) {
            const auto [pv, dpv] = p.value_and_derivative(z[k]);
            // |p(z)| at the rounding level of Horner's scheme: nothing left to gain
            if (std::abs(pv) <= 8.0 * std::numeric_limits<double>::epsilon() * p.abs_bound(std::abs(z[k]))) continue;
            const Complex ratio = pv / dpv;
            Complex repulsion(0.0);
            for (std::size_t j = 0; j < n; ++j) {
                if (j != k) repulsion += 1.0 / (z[k] - z[j]);
            }
            Complex step = ratio / (1.0 - ratio * repulsion);
            if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) step = ratio;
            if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) continue;
            z[k] -= step;
            if (std::abs(step) > 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(z[k]))) {
                converged = false;
            }
        }
    }

    // One Newton step per root, kept only when it lowers the residual.
    for (auto& r : z) {
        const auto [pv, dpv] = p.value_and_derivative(r);
        if (dpv == Complex(0.0)) continue;
        const Complex cand = r - pv / dpv;
        if (std::abs(p(cand)) < std::abs(pv)) r = cand;
    }

    roots.insert(roots.end(), z.begin(), z.end());
    return roots;
}

}  // namespace rmt
