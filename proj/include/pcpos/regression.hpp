#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "pcpos/errors.hpp"

namespace pcpos {

/// f(x_{t-1}, beta) for one design row.
using RegressionFunction = std::function<double(const Eigen::Ref<const Eigen::RowVectorXd>&, const Eigen::VectorXd&)>;

[[nodiscard]] inline RegressionFunction linear_function() {
    return [](const Eigen::Ref<const Eigen::RowVectorXd>& x, const Eigen::VectorXd& beta) { return x.dot(beta); };
}

/// y_t = f(x_{t-1}, beta) + e_t. Row t-1 of X is the regressor vector x_{t-1}
/// paired with y_t, so y(i) and X.row(i) belong together.
struct RegressionData {
    Eigen::VectorXd y;
    Eigen::MatrixXd X;
    RegressionFunction f = linear_function();

    RegressionData() = default;
    RegressionData(Eigen::VectorXd y_, Eigen::MatrixXd X_, RegressionFunction f_ = linear_function())
        : y(std::move(y_)), X(std::move(X_)), f(std::move(f_)) {
        validate();
    }

    [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(y.size()); }
    [[nodiscard]] std::size_t columns() const noexcept { return static_cast<std::size_t>(X.cols()); }

    void validate() const {
        if (y.size() != X.rows()) throw DomainError("regression data: y and X row counts differ");
        if (y.size() < 5) throw DomainError("regression data: need at least 5 observations");
        if (X.cols() < 1) throw DomainError("regression data: X needs at least one column");
        if (!y.allFinite() || !X.allFinite()) throw DomainError("regression data: non-finite values");
    }

    /// Rows [first, first + count).
    [[nodiscard]] RegressionData slice(std::size_t first, std::size_t count) const {
        RegressionData out;
        out.y = y.segment(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(count));
        out.X = X.middleRows(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(count));
        out.f = f;
        return out;
    }

    [[nodiscard]] double fitted(std::size_t i, const Eigen::VectorXd& beta) const {
        return f(X.row(static_cast<Eigen::Index>(i)), beta);
    }
};

/// Residual signs at a hypothesized coefficient vector; 1 iff y_t - f(x_{t-1}, beta0) >= 0.
struct SignVector {
    std::vector<std::uint8_t> bits;
    Eigen::VectorXd beta0;

    [[nodiscard]] std::size_t size() const noexcept { return bits.size(); }
};

[[nodiscard]] inline SignVector residual_signs(const RegressionData& data, const Eigen::VectorXd& beta0) {
    SignVector s{std::vector<std::uint8_t>(data.size()), beta0};
    for (std::size_t i = 0; i < data.size(); ++i) s.bits[i] = (data.y(static_cast<Eigen::Index>(i)) - data.fitted(i, beta0)) >= 0.0;
    return s;
}

/// OLS coefficients; throws SingularDesign when X'X is rank deficient.
[[nodiscard]] inline Eigen::VectorXd ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    qr.setThreshold(1e-12);
    if (qr.rank() < X.cols()) throw SingularDesign("X'X is singular");
    return qr.solve(y);
}

}  // namespace pcpos
