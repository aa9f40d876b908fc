#include "qnd/observables.hpp"

#include "qnd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace qnd {

void ObservableSeries::append(double t, const Matrix& rho, const SpinOperators& ops, double lambda_value) {
    const Matrix& jxm = ops.jx.matrix();
    const Matrix& jym = ops.jy.matrix();
    const Matrix& jzm = ops.jz.matrix();
    const double mean_x = expectation(jxm, rho).real();
    const double y2 = expectation(jym * jym, rho).real();
    const double z2 = expectation(jzm * jzm, rho).real();
    tau.push_back(t);
    jx.push_back(mean_x);
    jy2.push_back(y2);
    jz2.push_back(z2);
    xi2.push_back(std::abs(mean_x) >= 1e-9 ? ops.system.n_atoms() * z2 / (mean_x * mean_x)
                                           : std::numeric_limits<double>::quiet_NaN());
    purity.push_back(rho.cwiseAbs2().sum());
    lambda.push_back(lambda_value);
}

double xi2_z(const Matrix& rho, const SpinOperators& ops) {
    const double mean_x = expectation(ops.jx.matrix(), rho).real();
    if (std::abs(mean_x) < 1e-9) {
        throw RegimeError("xi2_z: <Jx> vanishes, squeezing parameter undefined");
    }
    const Matrix& jz = ops.jz.matrix();
    const double z2 = expectation(jz * jz, rho).real();
    return ops.system.n_atoms() * z2 / (mean_x * mean_x);
}

double xi2_z(const DensityMatrix& state, const SpinOperators& ops) {
    return xi2_z(state.matrix(), ops);
}

double xi2_general(const DensityMatrix& state, const std::array<double, 3>& n1,
                   const std::array<double, 3>& n2, const std::array<double, 3>& n3,
                   const SpinOperators& ops) {
    auto dot = [](const std::array<double, 3>& a, const std::array<double, 3>& b) {
        return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    };
    const std::array<const std::array<double, 3>*, 3> frame{&n1, &n2, &n3};
    for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
            const double expected = a == b ? 1.0 : 0.0;
            if (std::abs(dot(*frame[a], *frame[b]) - expected) > 1e-10) {
                throw ValidationError("xi2_general: frame is not orthonormal");
            }
        }
    }
    const Matrix& rho = state.matrix();
    const Matrix j1 = ops.along(n1);
    const double mean1 = expectation(j1, rho).real();
    const double var1 = expectation(j1 * j1, rho).real() - mean1 * mean1;
    const double mean2 = expectation(ops.along(n2), rho).real();
    const double mean3 = expectation(ops.along(n3), rho).real();
    const double denom = mean2 * mean2 + mean3 * mean3;
    if (denom < 1e-12) throw RegimeError("xi2_general: mean spin normal to n1 vanishes");
    return ops.system.n_atoms() * var1 / denom;
}

AnalyticPredictions analytic_predictions(double tau, int n_atoms, double efficiency) {
    if (!(tau >= 0.0)) throw ValidationError("analytic_predictions: tau must be >= 0");
    if (n_atoms < 1) throw ValidationError("analytic_predictions: N must be >= 1");
    if (!(efficiency > 0.0 && efficiency <= 1.0)) {
        throw ValidationError("analytic_predictions: efficiency must lie in (0, 1]");
    }
    const double big_j = 0.5 * n_atoms;
    AnalyticPredictions p{};
    p.jz2 = 1.0 / (4.0 * efficiency * tau + 2.0 / big_j);
    p.jx = big_j * std::exp(-0.5 * tau);
    p.xi2 = std::exp(tau) / (1.0 + efficiency * n_atoms * tau);
    p.tau_star = 1.0 / efficiency;
    p.xi2_min = std::exp(1.0 / efficiency) / n_atoms;
    return p;
}

double interpolate_quadratic(const std::vector<double>& tau, const std::vector<double>& values,
                             std::size_t center, double t) {
    if (center == 0 || center + 1 >= tau.size()) {
        throw ValidationError("interpolate_quadratic: center must be an interior index");
    }
    const double x0 = tau[center - 1], x1 = tau[center], x2 = tau[center + 1];
    const double y0 = values[center - 1], y1 = values[center], y2 = values[center + 1];
    const double l0 = (t - x1) * (t - x2) / ((x0 - x1) * (x0 - x2));
    const double l1 = (t - x0) * (t - x2) / ((x1 - x0) * (x1 - x2));
    const double l2 = (t - x0) * (t - x1) / ((x2 - x0) * (x2 - x1));
    return y0 * l0 + y1 * l1 + y2 * l2;
}

SeriesMinimum find_minimum(const std::vector<double>& tau, const std::vector<double>& values) {
    if (tau.size() != values.size() || tau.size() < 3) {
        throw ValidationError("find_minimum: need at least three aligned samples");
    }
    std::size_t best = 0;
    bool found = false;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (std::isnan(values[i])) continue;
        if (!found || values[i] < values[best]) {
            best = i;
            found = true;
        }
    }
    if (!found) throw RegimeError("find_minimum: series has no defined values");
    if (best == 0 || best + 1 == values.size() || std::isnan(values[best - 1]) ||
        std::isnan(values[best + 1])) {
        throw RegimeError("find_minimum: minimum lies on the series boundary (tau=" +
                          std::to_string(tau[best]) + "); extend t_max");
    }
    const double x0 = tau[best - 1], x1 = tau[best], x2 = tau[best + 1];
    const double y0 = values[best - 1], y1 = values[best], y2 = values[best + 1];
    // Vertex of the parabola through the three points.
    const double num = (x1 - x0) * (x1 - x0) * (y1 - y2) - (x1 - x2) * (x1 - x2) * (y1 - y0);
    const double den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
    double vertex = x1;
    if (den != 0.0) vertex = x1 - 0.5 * num / den;
    vertex = std::clamp(vertex, x0, x2);
    return {vertex, interpolate_quadratic(tau, values, best, vertex), best};
}

SeriesMinimum find_minimum(const ObservableSeries& series) {
    return find_minimum(series.tau, series.xi2);
}

namespace {

struct LineFit {
    double slope;
    double intercept;
    double rms;
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    LineFit f{sxy / sxx, 0.0, 0.0};
    f.intercept = my - f.slope * mx;
    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (f.intercept + f.slope * x[i]);
        ss += r * r;
    }
    f.rms = std::sqrt(ss / n);
    return f;
}

}  // namespace

ScalingFit fit_inverse_scaling(const std::vector<ScalingPoint>& points) {
    if (points.size() < 3) throw ValidationError("fit_inverse_scaling: need at least 3 points");
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].n_atoms <= 0 || !(points[i].xi2_min > 0.0)) {
            throw ValidationError("fit_inverse_scaling: N and xi2_min must be positive");
        }
        if (i > 0 && points[i].n_atoms <= points[i - 1].n_atoms) {
            throw ValidationError("fit_inverse_scaling: N must be strictly increasing");
        }
    }
    ScalingFit fit{};
    fit.points = points;
    for (const auto& p : points) fit.n_xi2.push_back(p.n_atoms * p.xi2_min);

    // Largest-N half, but never fewer than three points.
    const std::size_t used = std::max<std::size_t>(3, (points.size() + 1) / 2);
    fit.fitted_from = points.size() - std::min(used, points.size());

    std::vector<double> log_n, log_xi, inv_n, n_xi;
    for (std::size_t i = fit.fitted_from; i < points.size(); ++i) {
        log_n.push_back(std::log(static_cast<double>(points[i].n_atoms)));
        log_xi.push_back(std::log(points[i].xi2_min));
        inv_n.push_back(1.0 / points[i].n_atoms);
        n_xi.push_back(fit.n_xi2[i]);
    }
    const LineFit loglog = least_squares(log_n, log_xi);
    fit.exponent = loglog.slope;
    fit.loglog_prefactor = std::exp(loglog.intercept);
    fit.residual = loglog.rms;
    const LineFit asym = least_squares(inv_n, n_xi);
    fit.coefficient = asym.intercept;
    fit.correction = asym.slope;
    return fit;
}

double stop_time_for_target(double xi2_target, int n_atoms, double efficiency) {
    const auto pred = analytic_predictions(0.0, n_atoms, efficiency);
    if (!(xi2_target < 1.0)) {
        if (xi2_target == 1.0) return 0.0;
        throw ValidationError("stop_time_for_target: target must not exceed 1");
    }
    if (!(xi2_target > pred.xi2_min)) {
        throw RegimeError("stop_time_for_target: target below the attainable minimum e^{1/eta}/N");
    }
    const double eta_n = efficiency * n_atoms;
    auto f = [&](double t) { return std::exp(t) / (1.0 + eta_n * t) - xi2_target; };
    // The closed form decreases on [0, 1 - 1/(eta N)] and the target lies above its minimum.
    double lo = 0.0;
    double hi = std::max(0.0, 1.0 - 1.0 / eta_n);
    if (f(hi) > 0.0) throw RegimeError("stop_time_for_target: target unreachable");
    while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace qnd
