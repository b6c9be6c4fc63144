#include "cogdec/lbfgs.hpp"

#include <cmath>
#include <deque>
#include <string>

#include "cogdec/errors.hpp"

namespace cogdec {

namespace {

struct Pair {
    Vector s, y;
    double rho;
};

// Strong Wolfe line search (Nocedal & Wright alg. 3.5/3.6, cubic-free
// bisection zoom). Returns the accepted step; updates x, fx, g in place.
double line_search(const Objective& f, const Vector& x0, double f0,
                   const Vector& g0, const Vector& d, Vector& x, double& fx,
                   Vector& g, const LbfgsOptions& opts) {
    const double dg0 = g0.dot(d);
    if (dg0 >= 0.0) return 0.0;  // not a descent direction; caller restarts

    double alpha_prev = 0.0, f_prev = f0, dg_prev = dg0;
    double alpha = 1.0;
    double alpha_lo = 0.0, alpha_hi = 0.0, f_lo = f0;
    bool bracketed = false;

    auto eval = [&](double a) {
        x = x0 + a * d;
        fx = f(x, g);
        return g.dot(d);
    };

    for (int it = 0; it < opts.max_line_search; ++it) {
        double dg = eval(alpha);
        if (!std::isfinite(fx)) {
            alpha *= 0.5;
            continue;
        }
        if (fx > f0 + opts.wolfe_c1 * alpha * dg0 || (it > 0 && fx >= f_prev)) {
            alpha_lo = alpha_prev;
            f_lo = f_prev;
            alpha_hi = alpha;
            bracketed = true;
            break;
        }
        if (std::abs(dg) <= -opts.wolfe_c2 * dg0) return alpha;  // strong Wolfe met
        if (dg >= 0.0) {
            alpha_lo = alpha;
            f_lo = fx;
            alpha_hi = alpha_prev;
            bracketed = true;
            break;
        }
        alpha_prev = alpha;
        f_prev = fx;
        dg_prev = dg;
        alpha *= 2.0;
    }
    (void)dg_prev;

    if (!bracketed) return alpha;  // best effort; caller checks progress

    // Zoom by bisection.
    for (int it = 0; it < opts.max_line_search; ++it) {
        alpha = 0.5 * (alpha_lo + alpha_hi);
        double dg = eval(alpha);
        if (!std::isfinite(fx) || fx > f0 + opts.wolfe_c1 * alpha * dg0 || fx >= f_lo) {
            alpha_hi = alpha;
        } else {
            if (std::abs(dg) <= -opts.wolfe_c2 * dg0) return alpha;
            if (dg * (alpha_hi - alpha_lo) >= 0.0) alpha_hi = alpha_lo;
            alpha_lo = alpha;
            f_lo = fx;
        }
    }
    eval(alpha_lo > 0.0 ? alpha_lo : alpha);
    return alpha;
}

}  // namespace

LbfgsResult lbfgs_minimize(const Objective& f, const Vector& x0,
                           const LbfgsOptions& opts) {
    LbfgsResult res;
    res.x = x0;
    Vector g(x0.size());
    res.fx = f(res.x, g);
    if (!std::isfinite(res.fx))
        throw numeric_error("non-finite objective at initial point (iteration 0)");

    std::deque<Pair> history;
    Vector q, d, x_new = res.x, g_new = g;

    for (res.iters = 0; res.iters < opts.max_iters; ++res.iters) {
        res.grad_norm = g.lpNorm<Eigen::Infinity>();
        if (res.grad_norm <= opts.grad_tol) {
            res.converged = true;
            return res;
        }

        // Two-loop recursion.
        q = g;
        std::vector<double> alphas(history.size());
        for (std::size_t i = history.size(); i-- > 0;) {
            alphas[i] = history[i].rho * history[i].s.dot(q);
            q -= alphas[i] * history[i].y;
        }
        if (!history.empty()) {
            const auto& last = history.back();
            q *= last.s.dot(last.y) / last.y.squaredNorm();
        }
        for (std::size_t i = 0; i < history.size(); ++i) {
            const double beta = history[i].rho * history[i].y.dot(q);
            q += (alphas[i] - beta) * history[i].s;
        }
        d = -q;

        if (g.dot(d) >= 0.0) {  // safeguard: fall back to steepest descent
            history.clear();
            d = -g;
        }

        double fx_new = res.fx;
        Vector x_prev = res.x;
        Vector g_prev = g;
        x_new = res.x;
        g_new = g;
        double fx_prev = res.fx;
        double step = line_search(f, x_prev, fx_prev, g_prev, d, x_new, fx_new, g_new, opts);
        if (!std::isfinite(fx_new))
            throw numeric_error("non-finite objective during line search (iteration " +
                                std::to_string(res.iters) + ")");
        if (step <= 0.0 || fx_new > fx_prev + 1e-16 * std::abs(fx_prev) + 1e-300) {
            // No progress possible along d; accept current point as converged.
            res.converged = res.grad_norm <= opts.grad_tol;
            return res;
        }

        Pair pair;
        pair.s = x_new - x_prev;
        pair.y = g_new - g_prev;
        const double sy = pair.s.dot(pair.y);
        if (sy > 1e-12 * pair.s.norm() * pair.y.norm()) {
            pair.rho = 1.0 / sy;
            history.push_back(std::move(pair));
            if (static_cast<int>(history.size()) > opts.memory) history.pop_front();
        }

        res.x = x_new;
        res.fx = fx_new;
        g = g_new;
    }
    res.grad_norm = g.lpNorm<Eigen::Infinity>();
    res.converged = res.grad_norm <= opts.grad_tol;
    return res;
}

}  // namespace cogdec
