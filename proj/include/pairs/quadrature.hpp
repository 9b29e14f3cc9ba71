#pragma once

#include <cmath>
#include <cstddef>
#include <queue>
#include <vector>

namespace pairs {

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
    bool converged = false;
    std::size_t evals = 0;
};

namespace gk_detail {

// Gauss 7 / Kronrod 15 on [-1, 1].
inline constexpr double kronrod_nodes[8] = {
    0.000000000000000000000000000000000e+00,
    2.077849550078984676006894037732449e-01,
    4.058451513773971669066064120769615e-01,
    5.860872354676911302941448382587296e-01,
    7.415311855993944398638647732807884e-01,
    8.648644233597690727897127886409262e-01,
    9.491079123427585245261896840478513e-01,
    9.914553711208126392068546975263285e-01};

inline constexpr double kronrod_weights[8] = {
    2.094821410847278280129991748917143e-01,
    2.044329400752988924141619992346491e-01,
    1.903505780647854099132564024210137e-01,
    1.690047266392679028265834265985503e-01,
    1.406532597155259187451895905102379e-01,
    1.047900103222501838398763225415180e-01,
    6.309209262997855329070066318920429e-02,
    2.293532201052922496373200805896959e-02};

// Gauss weights for nodes 0, 2, 4, 6 of the Kronrod set.
inline constexpr double gauss_weights[4] = {
    4.179591836734693877551020408163265e-01,
    3.818300505051189449503697754889751e-01,
    2.797053914892766679014677714237796e-01,
    1.294849661688696932706114326790820e-01};

template <class F>
inline void gk15(const F& f, double lo, double hi, double& result, double& err) {
    const double c = 0.5 * (lo + hi);
    const double h = 0.5 * (hi - lo);

    const double fc = f(c);
    double kronrod = kronrod_weights[0] * fc;
    double gauss = gauss_weights[0] * fc;
    for (int j = 1; j < 8; ++j) {
        const double dx = h * kronrod_nodes[j];
        const double fsum = f(c - dx) + f(c + dx);
        kronrod += kronrod_weights[j] * fsum;
        if (j % 2 == 0) gauss += gauss_weights[j / 2] * fsum;
    }
    result = kronrod * h;
    const double diff = std::fabs((kronrod - gauss) * h);
    // Standard QUADPACK-style error inflation.
    err = diff * std::sqrt(std::min(1.0, 200.0 * diff / std::max(std::fabs(result), 1e-300)));
    if (!(err > 0.0) || err < diff) err = diff;
}

struct Segment {
    double lo, hi, value, error;
    bool operator<(const Segment& o) const { return error < o.error; }
};

} // namespace gk_detail

// Adaptive Gauss-Kronrod 7/15 on a finite interval. Bisects the segment with
// the largest error estimate until abs/rel tolerance or the segment budget.
template <class F>
QuadResult integrate_gk(const F& f, double lo, double hi, double abs_tol, double rel_tol,
                        std::size_t max_segments = 4000) {
    QuadResult out;
    if (lo == hi) {
        out.converged = true;
        return out;
    }

    std::priority_queue<gk_detail::Segment> heap;
    gk_detail::Segment s{lo, hi, 0.0, 0.0};
    gk_detail::gk15(f, lo, hi, s.value, s.error);
    out.evals = 15;
    double total = s.value;
    double total_err = s.error;
    heap.push(s);

    while (heap.size() < max_segments) {
        const double tol = std::max(abs_tol, rel_tol * std::fabs(total));
        if (total_err <= tol) break;
        gk_detail::Segment worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.lo + worst.hi);
        if (mid <= worst.lo || mid >= worst.hi) { // interval exhausted at machine precision
            heap.push(worst);
            break;
        }
        gk_detail::Segment left{worst.lo, mid, 0.0, 0.0};
        gk_detail::Segment right{mid, worst.hi, 0.0, 0.0};
        gk_detail::gk15(f, left.lo, left.hi, left.value, left.error);
        gk_detail::gk15(f, right.lo, right.hi, right.value, right.error);
        out.evals += 30;
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }

    out.value = total;
    out.error = total_err;
    out.converged = total_err <= std::max(abs_tol, rel_tol * std::fabs(total));
    return out;
}

} // namespace pairs
