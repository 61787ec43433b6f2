#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <vector>

namespace bbm {

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;
    std::size_t intervals = 0;
    bool converged = false;
};

namespace detail {

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15).
inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
    double a, b, value, error;
    bool operator<(const Panel& o) const { return error < o.error; }
};

template <class F>
Panel gauss_kronrod_15(F& f, double a, double b) {
    const double centre = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(centre);
    double kronrod = fc * kKronrodWeights[7];
    double gauss = fc * kGaussWeights[3];
    for (std::size_t j = 0; j < 7; ++j) {
        const double dx = half * kKronrodNodes[j];
        const double pair = f(centre - dx) + f(centre + dx);
        kronrod += kKronrodWeights[j] * pair;
        if (j % 2 == 1) gauss += kGaussWeights[j / 2] * pair;
    }
    return {a, b, kronrod * half, std::abs((kronrod - gauss) * half)};
}

}  // namespace detail

/// Globally adaptive G7-K15 integration of f over [a, b]: the panel with the
/// largest error estimate is bisected until the summed error is below
/// max(abs_tol, rel_tol * |value|) or max_intervals panels exist.
template <class F>
QuadratureResult integrate_adaptive(F&& f, double a, double b, double rel_tol, double abs_tol,
                                    std::size_t max_intervals) {
    QuadratureResult out;
    if (!(b > a)) {
        out.converged = true;
        return out;
    }
    std::priority_queue<detail::Panel> panels;
    panels.push(detail::gauss_kronrod_15(f, a, b));
    double value = panels.top().value;
    double error = panels.top().error;
    while (true) {
        if (error <= std::max(abs_tol, rel_tol * std::abs(value))) {
            out.converged = true;
            break;
        }
        if (panels.size() >= max_intervals) break;
        const detail::Panel worst = panels.top();
        panels.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        const auto left = detail::gauss_kronrod_15(f, worst.a, mid);
        const auto right = detail::gauss_kronrod_15(f, mid, worst.b);
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        panels.push(left);
        panels.push(right);
    }
    // Re-sum to shed accumulated cancellation in the running totals.
    value = 0.0;
    error = 0.0;
    out.intervals = panels.size();
    while (!panels.empty()) {
        value += panels.top().value;
        error += panels.top().error;
        panels.pop();
    }
    out.value = value;
    out.error = error;
    if (!out.converged) out.converged = error <= std::max(abs_tol, rel_tol * std::abs(value));
    return out;
}

/// Integral of f over (-infinity, b] via y = b - (1 - s) / s, s in (0, 1].
template <class F>
QuadratureResult integrate_to_upper(F&& f, double b, double rel_tol, double abs_tol, std::size_t max_intervals) {
    auto mapped = [&f, b](double s) {
        const double y = b - (1.0 - s) / s;
        const double v = f(y);
        return v == 0.0 ? 0.0 : v / (s * s);
    };
    return integrate_adaptive(mapped, 0.0, 1.0, rel_tol, abs_tol, max_intervals);
}

/// Integral over consecutive knots (the first may be -infinity), judged on
/// the total. Half of the error budget is shared out as an absolute
/// tolerance per piece, so negligible pieces are not refined to their own
/// relative accuracy; the share comes from a rough single-panel pass and is
/// recomputed from the refined total if the first attempt falls short.
template <class F>
QuadratureResult integrate_piecewise(F&& f, const std::vector<double>& knots, double rel_tol,
                                     std::size_t max_intervals) {
    QuadratureResult out;
    out.converged = true;
    if (knots.size() < 2) return out;
    const std::size_t pieces = knots.size() - 1;
    auto run = [&](std::size_t i, double abs_tol, std::size_t cap) {
        if (std::isinf(knots[i])) return integrate_to_upper(f, knots[i + 1], 0.5 * rel_tol, abs_tol, cap);
        return integrate_adaptive(f, knots[i], knots[i + 1], 0.5 * rel_tol, abs_tol, cap);
    };
    double estimate = 0.0;
    for (std::size_t i = 0; i < pieces; ++i) estimate += std::abs(run(i, 0.0, 1).value);
    for (int attempt = 0; attempt < 2; ++attempt) {
        const double abs_tol = 0.5 * rel_tol * estimate / static_cast<double>(pieces);
        out = {};
        for (std::size_t i = 0; i < pieces; ++i) {
            const auto piece = run(i, abs_tol, max_intervals);
            out.value += piece.value;
            out.error += piece.error;
            out.intervals += piece.intervals;
        }
        out.converged = out.error <= rel_tol * std::abs(out.value) || out.error == 0.0;
        if (out.converged) break;
        estimate = std::abs(out.value);
    }
    return out;
}

}  // namespace bbm
