#include "robgasp/optimizer.hpp"

#include <cmath>
#include <algorithm>
#include <deque>
#include <limits>
#include <vector>

#include "robgasp/errors.hpp"

namespace robgasp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Counted {
    const ObjectiveFunction& f;
    long n_f = 0;
    long n_g = 0;

    double operator()(const Eigen::VectorXd& x, Eigen::VectorXd* g) {
        ++n_f;
        if (g) ++n_g;
        double v = f(x, g);
        if (!std::isfinite(v) || (g && !g->allFinite())) v = kInf;
        return v;
    }
};

Eigen::VectorXd clamp(const Eigen::VectorXd& x, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
    return x.cwiseMax(lo).cwiseMin(hi);
}

// Mask of coordinates free to move: not pinned at a bound with the gradient pushing outward.
Eigen::ArrayXd free_mask(const Eigen::VectorXd& x, const Eigen::VectorXd& g, const Eigen::VectorXd& lo,
                         const Eigen::VectorXd& hi) {
    Eigen::ArrayXd m = Eigen::ArrayXd::Ones(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if ((x(i) <= lo(i) && g(i) > 0.0) || (x(i) >= hi(i) && g(i) < 0.0)) m(i) = 0.0;
    }
    return m;
}

struct Pair {
    Eigen::VectorXd s;
    Eigen::VectorXd y;
};

Eigen::VectorXd two_loop(const std::deque<Pair>& mem, const Eigen::VectorXd& g, const Eigen::ArrayXd& mask) {
    Eigen::VectorXd q = (g.array() * mask).matrix();
    std::vector<double> alpha(mem.size());
    std::vector<double> rho(mem.size());
    for (std::size_t k = mem.size(); k-- > 0;) {
        const Eigen::VectorXd s = (mem[k].s.array() * mask).matrix();
        const Eigen::VectorXd y = (mem[k].y.array() * mask).matrix();
        const double sy = s.dot(y);
        rho[k] = sy > 0.0 ? 1.0 / sy : 0.0;
        alpha[k] = rho[k] * s.dot(q);
        q -= alpha[k] * y;
    }
    double gamma = 1.0;
    if (!mem.empty()) {
        const Eigen::VectorXd s = (mem.back().s.array() * mask).matrix();
        const Eigen::VectorXd y = (mem.back().y.array() * mask).matrix();
        const double yy = y.squaredNorm();
        if (yy > 0.0 && s.dot(y) > 0.0) gamma = s.dot(y) / yy;
    }
    Eigen::VectorXd r = gamma * q;
    for (std::size_t k = 0; k < mem.size(); ++k) {
        const Eigen::VectorXd s = (mem[k].s.array() * mask).matrix();
        const Eigen::VectorXd y = (mem[k].y.array() * mask).matrix();
        const double b = rho[k] * y.dot(r);
        r += s * (alpha[k] - b);
    }
    return -(r.array() * mask).matrix();
}

}  // namespace

OptimizerResult minimize_lbfgs(const ObjectiveFunction& f, const Eigen::VectorXd& x0, const Eigen::VectorXd& lower,
                               const Eigen::VectorXd& upper, const OptimizerOptions& options) {
    if (x0.size() != lower.size() || x0.size() != upper.size()) {
        throw ConfigError("optimizer: start and bounds have different lengths");
    }
    if ((upper.array() < lower.array()).any()) throw ConfigError("optimizer: upper bound below lower bound");
    if (options.max_iter < 0) throw ConfigError("optimizer: negative iteration budget");

    Counted obj{f};
    OptimizerResult res;
    res.x = clamp(x0, lower, upper);

    if (options.max_iter == 0) {
        res.f = obj(res.x, nullptr);
        res.n_objective = obj.n_f;
        res.n_gradient = obj.n_g;
        res.status = "iteration budget exhausted";
        return res;
    }

    Eigen::VectorXd g(x0.size());
    res.f = obj(res.x, &g);
    res.grad = g;
    if (!std::isfinite(res.f)) {
        res.n_objective = obj.n_f;
        res.n_gradient = obj.n_g;
        res.status = "non-finite objective at start";
        return res;
    }

    std::deque<Pair> mem;
    const double c1 = 1e-4;
    const double c2 = 0.9;
    bool restarted = false;

    for (res.iterations = 0; res.iterations < options.max_iter;) {
        const Eigen::ArrayXd mask = free_mask(res.x, g, lower, upper);
        const double pg_norm = (g.array() * mask).abs().maxCoeff();
        if (pg_norm < options.grad_tol) {
            res.converged = true;
            res.status = "projected gradient below tolerance";
            break;
        }

        Eigen::VectorXd d = two_loop(mem, g, mask);
        double slope = g.dot(d);
        if (!(slope < 0.0)) {
            mem.clear();
            d = -(g.array() * mask).matrix();
            slope = g.dot(d);
        }

        double step = mem.empty() ? std::min(1.0, 1.0 / (g.array() * mask).matrix().norm()) : 1.0;
        double lo = 0.0;
        double hi = kInf;
        Eigen::VectorXd x_new;
        Eigen::VectorXd g_new(g.size());
        double f_new = kInf;
        bool accepted = false;
        for (int ls = 0; ls < options.max_line_search; ++ls) {
            const Eigen::VectorXd trial = res.x + step * d;
            x_new = clamp(trial, lower, upper);
            const bool clipped = (x_new - trial).cwiseAbs().maxCoeff() > 0.0;
            f_new = obj(x_new, &g_new);
            const double decrease = g.dot(x_new - res.x);
            if (!(f_new <= res.f + c1 * decrease)) {
                hi = step;
            } else if (!clipped && g_new.dot(d) < c2 * slope) {
                lo = step;
            } else {
                accepted = true;
                break;
            }
            step = std::isfinite(hi) ? 0.5 * (lo + hi) : 2.0 * step;
            if (std::isfinite(hi) && hi - lo < 1e-16 * std::max(1.0, hi)) break;
        }
        // Armijo-only acceptance when the curvature bracket collapsed on a valid point.
        if (!accepted && lo > 0.0) {
            x_new = clamp(res.x + lo * d, lower, upper);
            f_new = obj(x_new, &g_new);
            accepted = f_new <= res.f + c1 * g.dot(x_new - res.x);
        }
        if (!accepted) {
            if (!restarted && !mem.empty()) {
                mem.clear();
                restarted = true;
                continue;
            }
            res.status = "line search failed";
            break;
        }
        restarted = false;
        ++res.iterations;

        const Eigen::VectorXd s = x_new - res.x;
        const Eigen::VectorXd y = g_new - g;
        if (s.dot(y) > 1e-10 * s.norm() * y.norm()) {
            mem.push_back({s, y});
            if (static_cast<int>(mem.size()) > options.memory) mem.pop_front();
        }
        const double f_old = res.f;
        res.x = x_new;
        res.f = f_new;
        g = g_new;
        if (std::abs(f_old - f_new) <= options.f_rel_tol * std::max(1.0, std::abs(f_new))) {
            res.converged = true;
            res.status = "relative objective change below tolerance";
            break;
        }
    }
    if (res.status.empty()) res.status = "iteration budget exhausted";
    res.grad = g;
    res.n_objective = obj.n_f;
    res.n_gradient = obj.n_g;
    return res;
}

}  // namespace robgasp
