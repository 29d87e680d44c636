#pragma once

// Discrete D-vine engine for binary sign sequences: vine arrays, truncation,
// conditional Bernoulli CDF recursions and the pi-matrix joint pmf algorithm.
//
// Indexing is 0-based internally: variable j in [0, T), tree t in [1, T-1].
// Tree t joins variables j-t and j conditional on (j-t+1..j-1).

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pcpos/copula.hpp"
#include "pcpos/errors.hpp"

namespace pcpos {

using SignSpan = std::span<const std::uint8_t>;

/// Vine array: column t (1-based) lists the partners of variable t in tree order,
/// with t itself on the diagonal.
class VineArray {
public:
    /// D-vine array: column t holds (t-1, t-2, ..., 1, t).
    static VineArray dvine(std::size_t T) {
        if (T == 0) throw DomainError("dvine_array: T must be positive");
        VineArray a;
        a.columns_.resize(T);
        for (std::size_t t = 1; t <= T; ++t) {
            auto& col = a.columns_[t - 1];
            for (std::size_t l = 1; l < t; ++l) col.push_back(t - l);
            col.push_back(t);
        }
        return a;
    }

    [[nodiscard]] std::size_t size() const noexcept { return columns_.size(); }
    /// Entry sigma_{l,t}, 1 <= l <= t <= T.
    [[nodiscard]] std::size_t at(std::size_t l, std::size_t t) const { return columns_.at(t - 1).at(l - 1); }
    [[nodiscard]] const std::vector<std::size_t>& column(std::size_t t) const { return columns_.at(t - 1); }

    /// Every column t is a permutation of {1..t-1} followed by the diagonal t.
    [[nodiscard]] bool is_valid() const {
        for (std::size_t t = 1; t <= size(); ++t) {
            const auto& col = column(t);
            if (col.size() != t || col.back() != t) return false;
            std::vector<bool> seen(t, false);
            for (std::size_t l = 0; l + 1 < t; ++l) {
                const std::size_t v = col[l];
                if (v < 1 || v >= t || seen[v]) return false;
                seen[v] = true;
            }
        }
        return true;
    }

private:
    std::vector<std::vector<std::size_t>> columns_;
};

[[nodiscard]] inline VineArray dvine_array(std::size_t T) { return VineArray::dvine(T); }

/// A D-vine over T binary variables: Bernoulli margins, one copula per tree,
/// and a truncation level beyond which every copula is the independence copula.
class VineSpec {
public:
    /// `success` holds P(s_t = 1). `tree_copulas[l-1]` is the copula shared by all
    /// edges of tree l; missing trees are independence. Truncation defaults to T-1.
    VineSpec(std::vector<double> success, std::vector<BivariateCopula> tree_copulas, std::size_t truncation = 0)
        : array_(VineArray::dvine(success.empty() ? throw DomainError("VineSpec: no margins") : success.size())),
          success_(std::move(success)) {
        for (double& p : success_) {
            if (!(p >= 0.0 && p <= 1.0)) throw DomainError("VineSpec: margin outside [0,1]");
            p = clamp_prob(p);
        }
        const std::size_t T = success_.size();
        const std::size_t max_trees = T - 1;
        truncation_ = truncation == 0 ? max_trees : std::min(truncation, max_trees);
        trees_.assign(max_trees, BivariateCopula::independence());
        for (std::size_t l = 0; l < std::min(tree_copulas.size(), truncation_); ++l) trees_[l] = tree_copulas[l];
    }

    /// All-independence vine.
    explicit VineSpec(std::vector<double> success) : VineSpec(std::move(success), {}) {}

    [[nodiscard]] std::size_t size() const noexcept { return success_.size(); }
    [[nodiscard]] std::size_t truncation() const noexcept { return truncation_; }
    [[nodiscard]] const VineArray& array() const noexcept { return array_; }
    [[nodiscard]] std::span<const double> margins() const noexcept { return success_; }
    [[nodiscard]] double margin(std::size_t j) const { return success_.at(j); }
    /// Copula of tree l (1-based).
    [[nodiscard]] const BivariateCopula& tree(std::size_t l) const { return trees_.at(l - 1); }
    [[nodiscard]] const std::vector<BivariateCopula>& trees() const noexcept { return trees_; }

    /// Number of trees the pmf algorithm has to visit: the deepest tree up to the
    /// truncation level whose copula is not the independence copula.
    [[nodiscard]] std::size_t effective_depth() const noexcept {
        std::size_t d = 0;
        for (std::size_t l = 1; l <= truncation_; ++l)
            if (!trees_[l - 1].is_independence()) d = l;
        return d;
    }

    /// The same vine restricted to the first n variables.
    [[nodiscard]] VineSpec prefix(std::size_t n) const {
        if (n == 0 || n > size()) throw DomainError("VineSpec::prefix: bad length");
        std::vector<double> m(success_.begin(), success_.begin() + static_cast<std::ptrdiff_t>(n));
        return VineSpec(std::move(m), trees_, n == 1 ? 0 : std::min(truncation_, n - 1));
    }

private:
    VineArray array_;
    std::vector<double> success_;
    std::vector<BivariateCopula> trees_;
    std::size_t truncation_ = 0;
};

/// Replaces the copulas of trees > p with the independence copula.
[[nodiscard]] inline VineSpec truncate(const VineSpec& spec, std::size_t p) {
    if (spec.size() < 2 || p < 1 || p > spec.size() - 1) throw DomainError("truncate: p must lie in [1, T-1]");
    std::vector<double> m(spec.margins().begin(), spec.margins().end());
    return VineSpec(std::move(m), spec.trees(), p);
}

/// Bernoulli cell [F^-, F^+] for sign s with success probability p.
[[nodiscard]] inline CellBounds sign_cell(std::uint8_t s, double p) noexcept {
    const double q = 1.0 - p;
    return s ? CellBounds{1.0, q} : CellBounds{q, 0.0};
}

/// (C++ - C-+ - C+- + C--) / (f_t f_j), floored at 1e-12.
[[nodiscard]] inline double discrete_pair_density(const CornerValues& c, double f_t, double f_j) {
    const double d = c.signed_sum() / (clamp_prob(f_t) * clamp_prob(f_j));
    return std::max(d, kProbFloor);
}

/// Scratch space of the pmf algorithm. One workspace per thread; reusable
/// across sign vectors and vines of the same or smaller length.
struct PmfWorkspace {
    std::size_t T = 0;
    std::vector<double> pi;  // row-major T x T, pi(t, j) = f_{(j-t):j} (0-based rows)
    std::vector<double> cpp, cpm, cmp, cmm;
    std::vector<double> Ubp, Ubm, Up, Um;  // U'^+, U'^-, U^+, U^-
    std::vector<double> ub, u, wb, w;      // u', u, w', w
    std::vector<double> Fp, Fm, f;         // margins

    void resize(std::size_t n) {
        T = n;
        pi.assign(n * n, 0.0);
        for (auto* v : {&cpp, &cpm, &cmp, &cmm, &Ubp, &Ubm, &Up, &Um, &ub, &u, &wb, &w, &Fp, &Fm, &f})
            v->assign(n, 0.0);
    }
    [[nodiscard]] double& at(std::size_t t, std::size_t j) { return pi[t * T + j]; }
};

namespace detail {

inline double checked_divisor(double f) {
    if (!(f > 0.0)) throw DegenerateConditional("conditional probability vanished in D-vine recursion");
    return std::max(f, kProbFloor);
}

inline double unit(double x) noexcept { return std::clamp(x, 0.0, 1.0); }

/// Rectangle with corners at (a, b) written into the corner vectors at index j.
inline double edge_rectangle(const BivariateCopula& c, PmfWorkspace& ws, std::size_t j, CellBounds a, CellBounds b) {
    const Rectangle r = rectangle(c, a, b);
    ws.cpp[j] = r.corners.cpp;
    ws.cpm[j] = r.corners.cpm;
    ws.cmp[j] = r.corners.cmp;
    ws.cmm[j] = r.corners.cmm;
    return r.mass;
}

/// Margins, tree 1 and trees 2..depth of the pi-matrix algorithm. On exit
/// u[j] = f_{j | (j-depth):(j-1)} and pi rows 0..depth are filled. Conditional
/// probabilities are floored so that every pair density is at least 1e-12;
/// without this, rectangles of extreme cells round to zero mass.
inline void run_trees(const VineSpec& spec, SignSpan s, PmfWorkspace& ws, std::size_t depth) {
    const std::size_t T = spec.size();
    if (s.size() != T) throw DomainError("sign vector length does not match the vine");
    if (ws.T != T) ws.resize(T);

    for (std::size_t j = 0; j < T; ++j) {
        if (s[j] > 1) throw DomainError("signs must be 0 or 1");
        const CellBounds c = sign_cell(s[j], spec.margin(j));
        ws.Fp[j] = c.plus;
        ws.Fm[j] = c.minus;
        ws.f[j] = c.plus - c.minus;
        ws.at(0, j) = ws.f[j];
        ws.u[j] = ws.f[j];
    }
    if (depth == 0 || T == 1) return;

    // tree 1: C_{j-1,j}(F_{j-1}, F_j)
    const BivariateCopula& c1 = spec.tree(1);
    for (std::size_t j = 1; j < T; ++j) {
        ws.at(1, j) = edge_rectangle(c1, ws, j, {ws.Fp[j - 1], ws.Fm[j - 1]}, {ws.Fp[j], ws.Fm[j]});
    }
    for (std::size_t j = 1; j < T; ++j) {
        const double fj = checked_divisor(ws.f[j]);
        const double fjm = checked_divisor(ws.f[j - 1]);
        ws.Ubp[j] = unit((ws.cpp[j] - ws.cpm[j]) / fj);
        ws.Ubm[j] = unit((ws.cmp[j] - ws.cmm[j]) / fj);
        ws.ub[j] = std::max(ws.Ubp[j] - ws.Ubm[j], kProbFloor * ws.f[j - 1]);
        ws.Up[j] = unit((ws.cpp[j] - ws.cmp[j]) / fjm);
        ws.Um[j] = unit((ws.cpm[j] - ws.cmm[j]) / fjm);
        ws.u[j] = std::max(ws.Up[j] - ws.Um[j], kProbFloor * ws.f[j]);
    }

    // trees 2..depth: C_{j-t,j | (j-t+1):(j-1)}(U'_{j-1}, U_j)
    for (std::size_t t = 2; t <= depth; ++t) {
        const BivariateCopula& ct = spec.tree(t);
        for (std::size_t j = t; j < T; ++j) {
            edge_rectangle(ct, ws, j, {ws.Ubp[j - 1], ws.Ubm[j - 1]}, {ws.Up[j], ws.Um[j]});
        }
        for (std::size_t j = t - 1; j < T; ++j) {
            ws.wb[j] = ws.ub[j];
            ws.w[j] = ws.u[j];
        }
        for (std::size_t j = t; j < T; ++j) {
            const double wj = checked_divisor(ws.w[j]);
            const double wbj = checked_divisor(ws.wb[j - 1]);
            ws.Ubp[j] = unit((ws.cpp[j] - ws.cpm[j]) / wj);
            ws.Ubm[j] = unit((ws.cmp[j] - ws.cmm[j]) / wj);
            ws.ub[j] = std::max(ws.Ubp[j] - ws.Ubm[j], kProbFloor * ws.wb[j - 1]);
            ws.Up[j] = unit((ws.cpp[j] - ws.cmp[j]) / wbj);
            ws.Um[j] = unit((ws.cpm[j] - ws.cmm[j]) / wbj);
            ws.u[j] = std::max(ws.Up[j] - ws.Um[j], kProbFloor * ws.w[j]);
        }
        for (std::size_t j = t; j < T; ++j) ws.at(t, j) = ws.at(t - 1, j - 1) * ws.u[j];
    }
}

inline std::size_t depth_of(const VineSpec& spec) { return std::min(spec.effective_depth(), spec.size() - 1); }

}  // namespace detail

/// Joint pmf P[s_1..s_T] under the vine. Trees beyond the effective depth are
/// independence copulas, which pass conditional CDFs through unchanged, so
/// their pi rows are filled without further copula evaluations.
[[nodiscard]] inline double joint_pmf(const VineSpec& spec, SignSpan signs, PmfWorkspace& ws) {
    const std::size_t depth = detail::depth_of(spec);
    detail::run_trees(spec, signs, ws, depth);
    const std::size_t T = spec.size();
    if (depth == 0) {
        double p = 1.0;
        for (std::size_t j = 0; j < T; ++j) p *= ws.f[j];
        ws.at(T - 1, T - 1) = p;
        return p;
    }
    for (std::size_t t = depth + 1; t < T; ++t) {
        for (std::size_t j = t; j < T; ++j) ws.at(t, j) = ws.at(t - 1, j - 1) * ws.u[j];
    }
    return ws.at(T - 1, T - 1);
}

[[nodiscard]] inline double joint_pmf(const VineSpec& spec, SignSpan signs) {
    PmfWorkspace ws;
    return joint_pmf(spec, signs, ws);
}

/// log P[s_1..s_T]; sums logs of the chain factors so long series do not underflow.
[[nodiscard]] inline double joint_log_pmf(const VineSpec& spec, SignSpan signs, PmfWorkspace& ws) {
    const std::size_t depth = detail::depth_of(spec);
    detail::run_trees(spec, signs, ws, depth);
    const std::size_t T = spec.size();
    double lp = 0.0;
    if (depth == 0) {
        for (std::size_t j = 0; j < T; ++j) lp += std::log(ws.f[j]);
        return lp;
    }
    lp = std::log(ws.at(depth, depth));
    for (std::size_t j = depth + 1; j < T; ++j) lp += std::log(ws.u[j]);
    return lp;
}

[[nodiscard]] inline double joint_log_pmf(const VineSpec& spec, SignSpan signs) {
    PmfWorkspace ws;
    return joint_log_pmf(spec, signs, ws);
}

/// P[s_t = 1 | s_1..s_{t-1}] for 1-based t in [2, T]; `prefix` holds s_1..s_{t-1}.
[[nodiscard]] inline double conditional_sign_prob(const VineSpec& spec, SignSpan prefix, std::size_t t) {
    if (t < 2 || t > spec.size()) throw DomainError("conditional_sign_prob: t must lie in [2, T]");
    if (prefix.size() != t - 1) throw DomainError("conditional_sign_prob: prefix length must be t-1");
    const VineSpec sub = spec.prefix(t);
    std::vector<std::uint8_t> s(prefix.begin(), prefix.end());
    s.push_back(1);
    PmfWorkspace ws;
    detail::run_trees(sub, s, ws, detail::depth_of(sub));
    return ws.u[t - 1];
}

/// Copula arguments of every edge of tree l (1-based): for j = l..T-1 the pair
/// (F^{+/-}_{j-l | (j-l+1):(j-1)}, F^{+/-}_{j | (j-l+1):(j-1)}) computed from
/// trees 1..l-1 of `spec`.
struct EdgeArguments {
    CellBounds first;
    CellBounds second;
};

[[nodiscard]] inline std::vector<EdgeArguments> tree_arguments(const VineSpec& spec, SignSpan signs, std::size_t l,
                                                               PmfWorkspace& ws) {
    const std::size_t T = spec.size();
    if (l < 1 || l >= T) throw DomainError("tree_arguments: tree index out of range");
    std::vector<EdgeArguments> out;
    out.reserve(T - l);
    if (l == 1) {
        detail::run_trees(spec, signs, ws, 0);
        for (std::size_t j = 1; j < T; ++j) out.push_back({{ws.Fp[j - 1], ws.Fm[j - 1]}, {ws.Fp[j], ws.Fm[j]}});
        return out;
    }
    // Trees 1..l-1 are evaluated with their own copulas even when independent,
    // since the arguments of tree l are wanted regardless of truncation.
    detail::run_trees(spec, signs, ws, l - 1);
    for (std::size_t j = l; j < T; ++j) out.push_back({{ws.Ubp[j - 1], ws.Ubm[j - 1]}, {ws.Up[j], ws.Um[j]}});
    return out;
}

}  // namespace pcpos
