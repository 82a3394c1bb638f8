#pragma once

// Shock-process parameters shared by every series of a VARMA panel:
//   Y_a - sum_b b_beta Y_{a-beta} = sum_alpha a_alpha eps_{a-alpha}

#include "rmt/core.hpp"
#include "rmt/poly.hpp"

#include <sstream>

namespace rmt {

struct ArmaParams {
    std::vector<double> a{1.0};  // MA side a_0..a_q2, a_0 > 0
    std::vector<double> b;       // AR side b_1..b_q1

    static ArmaParams arma11(double a0, double a1, double b1) { return {{a0, a1}, {b1}}; }
    static ArmaParams white(double a0 = 1.0) { return {{a0}, {}}; }

    double a_at(std::size_t k) const { return k < a.size() ? a[k] : 0.0; }
    double b_at(std::size_t k) const { return k >= 1 && k <= b.size() ? b[k - 1] : 0.0; }

    /// Smallest modulus among roots of 1 - sum b_beta x^beta (infinity without AR part).
    double min_ar_root_modulus() const {
        std::vector<Complex> c{Complex(1.0)};
        for (double v : b) c.emplace_back(-v);
        const Polynomial p(std::move(c));
        if (p.degree() == 0) return std::numeric_limits<double>::infinity();
        double m = std::numeric_limits<double>::infinity();
        for (const auto& r : poly_roots(p)) m = std::min(m, std::abs(r));
        return m;
    }

    bool is_stationary() const { return min_ar_root_modulus() > 1.0 + 1e-12; }

    void require_valid() const {
        if (a.empty() || !(a[0] > 0.0)) throw InputError("ARMA parameters need a_0 > 0");
        for (double v : a) {
            if (!std::isfinite(v)) throw InputError("ARMA MA coefficients must be finite");
        }
        for (double v : b) {
            if (!std::isfinite(v)) throw InputError("ARMA AR coefficients must be finite");
        }
        if (!is_stationary()) {
            throw InputError("ARMA parameters are not stationary: AR polynomial has a root on or inside the unit circle");
        }
    }

    std::string describe() const {
        std::ostringstream os;
        os << "a=(";
        for (std::size_t k = 0; k < a.size(); ++k) os << (k ? "," : "") << a[k];
        os << ") b=(";
        for (std::size_t k = 0; k < b.size(); ++k) os << (k ? "," : "") << b[k];
        os << ")";
        return os.str();
    }
};

/// f(omega) = |sum_alpha a_alpha e^{i omega alpha}|^2 / |1 - sum_beta b_beta e^{i omega beta}|^2,
/// the symbol of the stationary autocovariance; the eigenvalue law of the
/// T x T autocovariance matrix tends to the law of f(omega), omega ~ U(-pi, pi).
inline double arma_spectral_function(const ArmaParams& p, double omega) {
    Complex num(0.0), den(1.0);
    for (std::size_t k = 0; k < p.a.size(); ++k) num += p.a[k] * std::polar(1.0, omega * static_cast<double>(k));
    for (std::size_t k = 0; k < p.b.size(); ++k) den -= p.b[k] * std::polar(1.0, omega * static_cast<double>(k + 1));
    return std::norm(num) / std::norm(den);
}

}  // namespace rmt
