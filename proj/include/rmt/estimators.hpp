#pragma once

// Covariance estimation, symmetric eigendecomposition, whitening and the
// cross-correlation matrix between two whitened panels.

#include "rmt/core.hpp"
#include "rmt/panel.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <optional>

namespace rmt {

/// Symmetric covariance (or correlation) matrix.
struct CovMatrix {
    Matrix entries;

    std::size_t dim() const noexcept { return static_cast<std::size_t>(entries.rows()); }
};

/// Pearson estimator c = (1/T) Y Y^T. For a standardized panel the diagonal is one.
inline CovMatrix pearson_cov(const Matrix& y) {
    if (y.cols() < 1) throw InputError("panel has no observations");
    Matrix c = y * y.transpose() / static_cast<double>(y.cols());
    c = 0.5 * (c + c.transpose()).eval();
    return {std::move(c)};
}

inline CovMatrix pearson_cov(const TimePanel& panel) { return pearson_cov(panel.values); }

/// Time-lagged covariance C_ij(lag) = (1/(T-lag)) sum_a X_ia Y_j,a+lag over the
/// overlap window. Rows index series of X, columns index series of Y.
inline Matrix lagged_cov(const Matrix& x, const Matrix& y, std::size_t lag) {
    if (x.cols() != y.cols()) throw InputError("lagged_cov: panels have different lengths");
    const auto t = static_cast<std::size_t>(x.cols());
    if (lag >= t) throw InputError("lag " + std::to_string(lag) + " must be smaller than T = " + std::to_string(t));
    const auto overlap = static_cast<Eigen::Index>(t - lag);
    return x.leftCols(overlap) * y.rightCols(overlap).transpose() / static_cast<double>(overlap);
}

inline Matrix lagged_cov(const TimePanel& x, const TimePanel& y, std::size_t lag) {
    return lagged_cov(x.values, y.values, lag);
}

struct SymEig {
    Vector values;   // ascending
    Matrix vectors;  // orthonormal columns
};

inline SymEig sym_eig(const Matrix& a) {
    if (a.rows() != a.cols()) throw InputError("sym_eig needs a square matrix");
    Eigen::SelfAdjointEigenSolver<Matrix> solver(a);
    if (solver.info() != Eigen::Success) throw NumericError("symmetric eigensolver failed");
    return {solver.eigenvalues(), solver.eigenvectors()};
}

inline SymEig sym_eig(const CovMatrix& c) { return sym_eig(c.entries); }

/// Which eigen-directions survive whitening.
struct WhitenPolicy {
    double drop_threshold = 1e-10;
    /// When set, also drop eigenvalues below this fraction of the
    /// Marchenko-Pastur lower edge (1 - sqrt(N/T))^2.
    std::optional<double> mp_edge_fraction;
};

struct RetainedEig {
    double eigenvalue;
    std::size_t index;  // position in the ascending spectrum of the covariance
};

/// K x T panel whose rows are orthonormal: values * values^T = identity.
struct WhitenedPanel {
    Matrix values;
    std::vector<RetainedEig> retained_eigs;  // descending by eigenvalue

    std::size_t rank() const noexcept { return static_cast<std::size_t>(values.rows()); }
    std::size_t n_obs() const noexcept { return static_cast<std::size_t>(values.cols()); }
};

/// X_hat = Lambda_K^{-1/2} V_K^T X / sqrt(T), restricted to retained eigenvalues.
inline WhitenedPanel whiten(const Matrix& x, const WhitenPolicy& policy = {}) {
    const auto n = static_cast<double>(x.rows());
    const auto t = static_cast<double>(x.cols());
    const auto eig = sym_eig(pearson_cov(x));
    double floor = policy.drop_threshold;
    if (policy.mp_edge_fraction) {
        const double r = n / t;
        const double lower = r < 1.0 ? std::pow(1.0 - std::sqrt(r), 2) : 0.0;
        floor = std::max(floor, *policy.mp_edge_fraction * lower);
    }
    WhitenedPanel out;
    for (Eigen::Index k = eig.values.size() - 1; k >= 0; --k) {
        if (eig.values(k) > floor) out.retained_eigs.push_back({eig.values(k), static_cast<std::size_t>(k)});
    }
    if (out.retained_eigs.empty()) throw InputError("whiten: every eigenvalue is below the drop threshold");
    const auto rank = static_cast<Eigen::Index>(out.retained_eigs.size());
    if (static_cast<double>(rank) >= t) {
        throw InputError("whiten: need T > retained rank (T = " + std::to_string(x.cols()) +
                         ", rank = " + std::to_string(rank) + ")");
    }
    Matrix basis(x.rows(), rank);
    for (Eigen::Index j = 0; j < rank; ++j) {
        const auto& r = out.retained_eigs[static_cast<std::size_t>(j)];
        basis.col(j) = eig.vectors.col(static_cast<Eigen::Index>(r.index)) / std::sqrt(r.eigenvalue * t);
    }
    out.values = basis.transpose() * x;
    return out;
}

inline WhitenedPanel whiten(const TimePanel& panel, const WhitenPolicy& policy = {}) {
    return whiten(panel.values, policy);
}

/// M x N cross matrix between output and input factors.
struct CrossMatrix {
    Matrix entries;
};

/// G = Y_hat X_hat^T.
inline CrossMatrix cross_matrix(const WhitenedPanel& out_w, const WhitenedPanel& in_w) {
    if (out_w.n_obs() != in_w.n_obs()) {
        throw InputError("cross_matrix: panels have different lengths (" + std::to_string(out_w.n_obs()) + " vs " +
                         std::to_string(in_w.n_obs()) + ")");
    }
    return {out_w.values * in_w.values.transpose()};
}

struct SvdResult {
    Vector singular_values;  // descending
    Matrix left;             // columns: output directions
    Matrix right;            // columns: input directions
};

/// G = U Sigma V^T (thin factors).
inline SvdResult svd(const Matrix& g) {
    if (!g.allFinite()) throw InputError("svd: matrix has non-finite entries");
    Eigen::BDCSVD<Matrix> solver(g, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return {solver.singularValues(), solver.matrixU(), solver.matrixV()};
}

inline SvdResult svd(const CrossMatrix& g) { return svd(g.entries); }

inline EmpiricalSpectrum eigen_spectrum(const CovMatrix& c) {
    const auto eig = sym_eig(c);
    return EmpiricalSpectrum::from_unsorted({eig.values.begin(), eig.values.end()}, SpectrumKind::eigenvalues);
}

inline EmpiricalSpectrum singular_spectrum(const CrossMatrix& g) {
    Eigen::BDCSVD<Matrix> solver(g.entries);
    const Vector s = solver.singularValues();
    return EmpiricalSpectrum::from_unsorted({s.begin(), s.end()}, SpectrumKind::singular_values);
}

}  // namespace rmt
