#pragma once

// Confidence regions for beta by inverting the split-sample sign test over a
// grid, and projection intervals for scalar transforms of the region.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "pcpos/distributions.hpp"
#include "pcpos/errors.hpp"
#include "pcpos/random.hpp"
#include "pcpos/regression.hpp"
#include "pcpos/signtest.hpp"

namespace pcpos {

struct GridAxis {
    double lower = 0.0;
    double upper = 1.0;
    std::size_t count = 2;

    [[nodiscard]] double value(std::size_t i) const {
        if (i + 1 == count) return upper;
        return lower + (upper - lower) * static_cast<double>(i) / static_cast<double>(count - 1);
    }
};

/// Cartesian grid over beta0; the last coordinate varies fastest.
class ParamGrid {
public:
    ParamGrid() = default;
    explicit ParamGrid(std::vector<GridAxis> axes) : axes_(std::move(axes)) {
        if (axes_.empty()) throw DomainError("grid: at least one axis required");
        for (const auto& a : axes_) {
            if (a.count < 2) throw DomainError("grid: point counts must be at least 2");
            if (!std::isfinite(a.lower) || !std::isfinite(a.upper) || !(a.lower < a.upper))
                throw DomainError("grid: bounds must be finite with lower < upper");
        }
    }

    /// "lo:hi:n[,lo:hi:n...]"
    static ParamGrid parse(std::string_view text) {
        std::vector<GridAxis> axes;
        std::size_t start = 0;
        while (start <= text.size()) {
            const std::size_t comma = std::min(text.find(',', start), text.size());
            const std::string part = detail::trim(text.substr(start, comma - start));
            const auto c1 = part.find(':');
            const auto c2 = c1 == std::string::npos ? std::string::npos : part.find(':', c1 + 1);
            if (c2 == std::string::npos) throw ConfigError("grid axis '" + part + "' is not lo:hi:n");
            const double n = detail::to_double(part.substr(c2 + 1));
            if (n < 2 || n != std::floor(n)) throw ConfigError("grid axis '" + part + "' needs an integer count >= 2");
            axes.push_back({detail::to_double(part.substr(0, c1)), detail::to_double(part.substr(c1 + 1, c2 - c1 - 1)),
                            static_cast<std::size_t>(n)});
            start = comma + 1;
        }
        try {
            return ParamGrid(std::move(axes));
        } catch (const DomainError& e) {
            throw ConfigError(e.what());
        }
    }

    [[nodiscard]] std::size_t dimension() const noexcept { return axes_.size(); }
    [[nodiscard]] const std::vector<GridAxis>& axes() const noexcept { return axes_; }

    [[nodiscard]] std::size_t size() const noexcept {
        std::size_t n = axes_.empty() ? 0 : 1;
        for (const auto& a : axes_) n *= a.count;
        return n;
    }

    [[nodiscard]] std::vector<std::size_t> coordinates(std::size_t index) const {
        std::vector<std::size_t> c(axes_.size());
        for (std::size_t d = axes_.size(); d-- > 0;) {
            c[d] = index % axes_[d].count;
            index /= axes_[d].count;
        }
        return c;
    }

    [[nodiscard]] Eigen::VectorXd point(std::size_t index) const {
        const auto c = coordinates(index);
        Eigen::VectorXd b(static_cast<Eigen::Index>(axes_.size()));
        for (std::size_t d = 0; d < axes_.size(); ++d) b(static_cast<Eigen::Index>(d)) = axes_[d].value(c[d]);
        return b;
    }

    /// Indices of the points one step away along each axis.
    [[nodiscard]] std::vector<std::size_t> neighbours(std::size_t index) const {
        std::vector<std::size_t> out;
        std::size_t stride = 1;
        const auto c = coordinates(index);
        for (std::size_t d = axes_.size(); d-- > 0;) {
            if (c[d] > 0) out.push_back(index - stride);
            if (c[d] + 1 < axes_[d].count) out.push_back(index + stride);
            stride *= axes_[d].count;
        }
        return out;
    }

private:
    std::vector<GridAxis> axes_;
};

struct GridPointResult {
    Eigen::VectorXd beta0;
    double statistic = 0.0;
    double critical = 0.0;
    double p_value = 1.0;
    bool accepted = false;
    std::size_t m1 = 0;
    std::string error;  // non-empty when the test failed; such points count as rejected
};

struct ConfidenceRegion {
    ParamGrid grid;
    double alpha = 0.05;
    Eigen::VectorXd beta1;
    std::vector<GridPointResult> points;

    [[nodiscard]] std::vector<Eigen::VectorXd> accepted() const {
        std::vector<Eigen::VectorXd> out;
        for (const auto& p : points)
            if (p.accepted) out.push_back(p.beta0);
        return out;
    }
    [[nodiscard]] bool empty() const {
        return std::none_of(points.begin(), points.end(), [](const auto& p) { return p.accepted; });
    }
};

struct InversionConfig {
    double fraction = 0.1;
    PosTestConfig test{};
    /// Grids larger than this use `coarse_m1` inner replications...
    std::size_t large_grid = 100;
    std::size_t coarse_m1 = 199;
    /// ...and points on the region boundary are then rerun at test.m1.
    bool rerun_boundary = true;
};

namespace detail {

inline GridPointResult evaluate_point(const RegressionData& second, const Eigen::VectorXd& beta0,
                                      const Eigen::VectorXd& beta1, const PosTestConfig& cfg, std::uint64_t seed) {
    GridPointResult r;
    r.beta0 = beta0;
    r.m1 = cfg.m1;
    try {
        const TestOutcome out = point_optimal_test(second, beta0, beta1, cfg, seed);
        r.statistic = out.statistic;
        r.critical = out.critical;
        r.p_value = out.p_value;
        r.accepted = !out.reject;
    } catch (const std::exception& e) {
        r.accepted = false;
        r.p_value = 0.0;
        r.error = e.what();
    }
    return r;
}

}  // namespace detail

/// Runs the split-sample test at every grid point. The alternative is estimated
/// once from the first subsample and every point shares the same null draws.
[[nodiscard]] inline ConfidenceRegion invert_test(const RegressionData& data, const ParamGrid& grid, double alpha,
                                                  const InversionConfig& cfg, std::uint64_t seed) {
    if (grid.size() == 0) throw DomainError("invert_test: empty grid");
    if (grid.dimension() != data.columns()) throw DomainError("invert_test: grid dimension must match X columns");
    const std::size_t T = data.size();
    const std::size_t t1 = split_size(T, cfg.fraction);
    if (t1 < data.columns() + 1) throw DomainError("invert_test: first subsample too small for OLS");
    if (T - t1 < 10) throw DomainError("invert_test: second subsample needs at least 10 observations");
    const RegressionData first = data.slice(0, t1);
    const RegressionData second = data.slice(t1, T - t1);

    ConfidenceRegion region;
    region.grid = grid;
    region.alpha = alpha;
    region.beta1 = ols(first.X, first.y);

    PosTestConfig test = cfg.test;
    test.alpha = alpha;
    const bool coarse = grid.size() > cfg.large_grid && test.m1 > cfg.coarse_m1;
    PosTestConfig sweep = test;
    if (coarse) sweep.m1 = cfg.coarse_m1;

    region.points.resize(grid.size());
    parallel_for(grid.size(), [&](std::size_t i) {
        region.points[i] = detail::evaluate_point(second, grid.point(i), region.beta1, sweep, seed);
    });

    if (coarse && cfg.rerun_boundary) {
        std::vector<std::size_t> boundary;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            for (std::size_t n : grid.neighbours(i)) {
                if (region.points[n].accepted != region.points[i].accepted) {
                    boundary.push_back(i);
                    break;
                }
            }
        }
        std::vector<GridPointResult> redo(boundary.size());
        parallel_for(boundary.size(), [&](std::size_t k) {
            redo[k] = detail::evaluate_point(second, grid.point(boundary[k]), region.beta1, test, seed);
        });
        for (std::size_t k = 0; k < boundary.size(); ++k) region.points[boundary[k]] = std::move(redo[k]);
    }
    return region;
}

struct Interval {
    double lower = std::numeric_limits<double>::quiet_NaN();
    double upper = std::numeric_limits<double>::quiet_NaN();
    bool empty = true;

    [[nodiscard]] bool contains(double x) const { return !empty && x >= lower && x <= upper; }
};

/// [min, max] of transform over the accepted points.
[[nodiscard]] inline Interval project(const ConfidenceRegion& region,
                                      const std::function<double(const Eigen::VectorXd&)>& transform) {
    Interval out;
    for (const auto& p : region.points) {
        if (!p.accepted) continue;
        const double v = transform(p.beta0);
        if (out.empty) {
            out = {v, v, false};
        } else {
            out.lower = std::min(out.lower, v);
            out.upper = std::max(out.upper, v);
        }
    }
    return out;
}

}  // namespace pcpos
