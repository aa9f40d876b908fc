#include "qnd/cli.hpp"

#include "qnd/constants.hpp"
#include "qnd/errors.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

namespace qnd::cli {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::string canonical_key(std::string key) {
    std::replace(key.begin(), key.end(), '_', '-');
    return key;
}

[[noreturn]] void bad_value(const std::string& key, const Setting& s, const std::string& why) {
    throw ValidationError(s.origin + ": " + key + "='" + s.value + "': " + why);
}

double to_double(const std::string& key, const Setting& s) {
    double v = 0.0;
    const char* begin = s.value.data();
    const char* end = begin + s.value.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v)) bad_value(key, s, "expected a finite number");
    return v;
}

long long to_integer(const std::string& key, const Setting& s) {
    long long v = 0;
    const char* begin = s.value.data();
    const char* end = begin + s.value.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end) bad_value(key, s, "expected an integer");
    return v;
}

std::uint64_t to_unsigned(const std::string& key, const Setting& s) {
    std::uint64_t v = 0;
    const char* begin = s.value.data();
    const char* end = begin + s.value.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end) bad_value(key, s, "expected a non-negative integer");
    return v;
}

bool to_bool(const std::string& key, const Setting& s) {
    if (s.value == "true" || s.value == "1" || s.value == "yes") return true;
    if (s.value == "false" || s.value == "0" || s.value == "no") return false;
    bad_value(key, s, "expected true or false");
}

std::vector<int> to_int_list(const std::string& key, const Setting& s) {
    std::vector<int> out;
    std::stringstream ss(s.value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const Setting one{trim(item), s.origin};
        out.push_back(static_cast<int>(to_integer(key, one)));
    }
    if (out.empty()) bad_value(key, s, "expected a comma-separated list");
    return out;
}

}  // namespace

const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys{
        "n", "n-list", "m", "eta", "law", "scale", "lambda0", "dt", "t-max", "sample-interval",
        "k", "seed", "index", "workers", "output",
        "preset", "regime", "gamma", "kappa", "g", "area", "area-min", "wavelength", "power",
        "detuning", "omega", "feedback-delay", "alpha-override", "epsilon", "coefficient"};
    return keys;
}

bool is_boolean_key(const std::string& key) { return key == "area-min"; }

Settings parse_config_text(const std::string& text, const std::string& source) {
    Settings out;
    const auto& keys = known_keys();
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string where = source + ":" + std::to_string(lineno);
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ValidationError(where + ": expected 'key = value'");
        const std::string key = canonical_key(trim(line.substr(0, eq)));
        const std::string value = trim(line.substr(eq + 1));
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
            throw ValidationError(where + ": unknown key '" + key + "'");
        }
        if (value.empty()) throw ValidationError(where + ": empty value for '" + key + "'");
        out[key] = {value, where};
    }
    return out;
}

Settings read_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path);
}

Settings layer(const Settings& base, const Settings& over) {
    Settings out = base;
    for (const auto& [k, v] : over) out[k] = v;
    return out;
}

Settings default_settings(const std::string& subcommand) {
    Settings d;
    auto set = [&](const std::string& k, const std::string& v) { d[k] = {v, "default"}; };
    set("n", "20");
    set("m", "1");
    set("eta", "1");
    set("law", "analytic");
    set("scale", "1");
    set("lambda0", "0");
    set("dt", "0.001");
    set("t-max", "2");
    set("sample-interval", "0.01");
    set("k", "100");
    set("seed", "1");
    set("index", "0");
    set("workers", "1");
    set("output", "-");
    set("epsilon", "0.2");
    set("coefficient", "3.49");
    if (subcommand == "trajectory" || subcommand == "ensemble") {
        set("dt", "0.0001");
        set("t-max", "1.5");
        set("n", "10");
    }
    if (subcommand == "sweep") set("n-list", "10,20,30,40,50,60,70,80,90,100");
    if (subcommand == "design") {
        set("preset", "cs");
        set("n", "10000000");
    }
    return d;
}

MeParams RunConfig::me_params() const {
    MeParams p;
    p.measurement_strength = measurement_strength;
    p.efficiency = efficiency;
    p.dt = dt;
    p.t_max = t_max;
    p.sample_interval = sample_interval;
    p.validate();
    return p;
}

FeedbackLaw RunConfig::feedback_law(int n) const {
    FeedbackLaw law_out;
    law_out.kind = law;
    law_out.scale = scale;
    law_out.efficiency = efficiency;
    law_out.n_atoms = n;
    law_out.lambda0 = lambda0;
    law_out.validate();
    return law_out;
}

RunConfig make_config(const std::string& subcommand, const Settings& settings) {
    static const std::set<std::string> subcommands{"evolve", "trajectory", "ensemble", "sweep", "design"};
    if (!subcommands.count(subcommand)) throw ValidationError("unknown subcommand '" + subcommand + "'");
    RunConfig c;
    c.subcommand = subcommand;
    auto has = [&](const char* k) { return settings.count(k) > 0; };
    auto get = [&](const char* k) -> const Setting& { return settings.at(k); };
    auto num = [&](const char* k) { return to_double(k, get(k)); };

    if (has("n")) {
        const auto v = to_integer("n", get("n"));
        const long long cap = subcommand == "design" ? 2000000000LL : 400;
        if (v < 1 || v > cap) bad_value("n", get("n"), "must lie in [1, " + std::to_string(cap) + "]");
        c.n_atoms = static_cast<int>(v);
    }
    if (has("n-list")) {
        c.n_list = to_int_list("n-list", get("n-list"));
        for (std::size_t i = 0; i < c.n_list.size(); ++i) {
            if (c.n_list[i] < 1 || c.n_list[i] > 400) bad_value("n-list", get("n-list"), "entries must lie in [1, 400]");
            if (i > 0 && c.n_list[i] <= c.n_list[i - 1]) bad_value("n-list", get("n-list"), "must be strictly increasing");
        }
    }
    if (has("m")) {
        c.measurement_strength = num("m");
        if (c.measurement_strength < 0.0) bad_value("m", get("m"), "must be >= 0");
    }
    if (has("eta")) {
        c.efficiency = num("eta");
        if (!(c.efficiency > 0.0 && c.efficiency <= 1.0)) bad_value("eta", get("eta"), "must lie in (0, 1]");
    }
    if (has("law")) {
        try {
            c.law = parse_law_kind(get("law").value);
        } catch (const ValidationError& e) {
            bad_value("law", get("law"), e.what());
        }
    }
    if (has("scale")) {
        c.scale = num("scale");
        if (c.scale < 0.0) bad_value("scale", get("scale"), "must be >= 0");
    }
    if (has("lambda0")) {
        c.lambda0 = num("lambda0");
        if (c.lambda0 < 0.0) bad_value("lambda0", get("lambda0"), "must be >= 0");
    }
    if (has("dt")) {
        c.dt = num("dt");
        if (!(c.dt > 0.0 && c.dt <= 1e-2)) bad_value("dt", get("dt"), "must lie in (0, 0.01]");
    }
    if (has("t-max")) {
        c.t_max = num("t-max");
        if (!(c.t_max > 0.0)) bad_value("t-max", get("t-max"), "must be > 0");
    }
    if (has("sample-interval")) {
        c.sample_interval = num("sample-interval");
        if (!(c.sample_interval > 0.0)) bad_value("sample-interval", get("sample-interval"), "must be > 0");
    }
    if (has("k")) {
        const auto v = to_integer("k", get("k"));
        if (v < 1) bad_value("k", get("k"), "must be >= 1");
        c.trajectories = static_cast<int>(v);
    }
    if (has("seed")) c.master_seed = to_unsigned("seed", get("seed"));
    if (has("index")) c.index = to_unsigned("index", get("index"));
    if (has("workers")) {
        const auto v = to_integer("workers", get("workers"));
        if (v < 1 || v > 256) bad_value("workers", get("workers"), "must lie in [1, 256]");
        c.workers = static_cast<int>(v);
    }
    if (has("output")) c.output = get("output").value;

    if (has("preset")) {
        c.preset = get("preset").value;
        if (c.preset != "cs" && c.preset != "none") bad_value("preset", get("preset"), "expected cs or none");
    }
    if (has("regime")) {
        const auto& r = get("regime").value;
        if (r == "cavity") c.regime = design::Regime::Cavity;
        else if (r == "freespace") c.regime = design::Regime::FreeSpace;
        else bad_value("regime", get("regime"), "expected cavity or freespace");
    }
    auto positive = [&](const char* k, std::optional<double>& slot) {
        if (!has(k)) return;
        slot = num(k);
        if (!(*slot > 0.0)) bad_value(k, get(k), "must be > 0");
    };
    positive("gamma", c.gamma);
    positive("kappa", c.kappa);
    positive("g", c.g);
    positive("area", c.area);
    positive("wavelength", c.wavelength);
    positive("power", c.power);
    positive("detuning", c.detuning);
    positive("omega", c.omega);
    positive("alpha-override", c.alpha_override);
    if (has("feedback-delay")) {
        c.feedback_delay = num("feedback-delay");
        if (*c.feedback_delay < 0.0) bad_value("feedback-delay", get("feedback-delay"), "must be >= 0");
    }
    if (has("area-min")) c.area_min = to_bool("area-min", get("area-min"));
    if (has("epsilon")) {
        c.epsilon = num("epsilon");
        if (c.epsilon < 0.0) bad_value("epsilon", get("epsilon"), "must be >= 0");
    }
    if (has("coefficient")) {
        c.coefficient = num("coefficient");
        if (!(c.coefficient > 0.0)) bad_value("coefficient", get("coefficient"), "must be > 0");
    }

    if (subcommand != "design") {
        (void)c.me_params();
        (void)c.feedback_law(c.n_atoms);
    }
    return c;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (v == 0.0) return "0";  // folds -0
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

namespace {

void write_row(std::ostream& os, std::initializer_list<double> values) {
    bool first = true;
    for (double v : values) {
        if (!first) os << ',';
        os << format_double(v);
        first = false;
    }
    os << '\n';
}

}  // namespace

void write_series_csv(std::ostream& os, const ObservableSeries& s) {
    os << "tau,jx,jy2,jz2,xi2,purity,lambda\n";
    for (std::size_t i = 0; i < s.size(); ++i) {
        write_row(os, {s.tau[i], s.jx[i], s.jy2[i], s.jz2[i], s.xi2[i], s.purity[i], s.lambda[i]});
    }
}

void write_trajectory_csv(std::ostream& os, const TrajectoryRecord& r) {
    os << "tau,Ic_dt,Jx_c,Jz_c,Jz2_c,purity_c\n";
    for (std::size_t i = 0; i < r.times.size(); ++i) {
        write_row(os, {r.times[i], r.photocurrent[i], r.cond_means[i][0], r.cond_means[i][1],
                       r.cond_means[i][2], r.cond_purity[i]});
    }
    os << "# seed=" << r.seed << '\n';
}

void write_ensemble_csv(std::ostream& os, const EnsembleResult& r) {
    const auto& s = r.series;
    os << "tau,jx,jy2,jz2,xi2,purity,lambda,trace_dist_to_me,stat_scale\n";
    double worst = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        write_row(os, {s.tau[i], s.jx[i], s.jy2[i], s.jz2[i], s.xi2[i], s.purity[i], s.lambda[i],
                       r.trace_distance[i], r.stat_scale});
        worst = std::max(worst, r.trace_distance[i]);
    }
    os << "# trajectories=" << r.trajectories << '\n';
    os << "# max_trace_dist=" << format_double(worst) << '\n';
    os << "# min_cond_purity=" << format_double(r.min_cond_purity) << '\n';
}

EvolveSummary summarize(const ObservableSeries& series) {
    EvolveSummary out;
    try {
        const auto min = find_minimum(series);
        out.minimum = min;
        out.purity_at_min = interpolate_quadratic(series.tau, series.purity, min.index, min.tau_star);
    } catch (const RegimeError&) {
    }
    return out;
}

SweepResult run_sweep(const RunConfig& config) {
    const auto params = config.me_params();
    std::vector<int> ns = config.n_list.empty() ? std::vector<int>{config.n_atoms} : config.n_list;
    SweepResult result;
    result.rows.resize(ns.size());

    auto work = [&](std::size_t i) {
        SweepRow& row = result.rows[i];
        row.n_atoms = ns[i];
        try {
            const auto ops = shared_spin_operators(ns[i]);
            const auto sol = integrate_me(css_x(*ops), params, config.feedback_law(ns[i]), *ops);
            const auto min = find_minimum(sol.series);
            row.minimum = min;
            row.purity_at_min = interpolate_quadratic(sol.series.tau, sol.series.purity, min.index, min.tau_star);
        } catch (const std::exception& e) {
            row.failure = e.what();
        }
    };
    // Largest N first: they dominate the cost.
    std::vector<std::size_t> order(ns.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = order.size() - 1 - i;
    const int workers = std::min<int>(config.workers, static_cast<int>(ns.size()));
    if (workers <= 1) {
        for (auto i : order) work(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t k = next++; k < order.size(); k = next++) work(order[k]);
            });
        }
        for (auto& t : pool) t.join();
    }

    std::vector<ScalingPoint> points;
    for (const auto& row : result.rows) {
        if (row.minimum) points.push_back({row.n_atoms, row.minimum->xi2_min});
    }
    if (points.size() >= 3) result.fit = fit_inverse_scaling(points);
    return result;
}

void write_sweep_csv(std::ostream& os, const SweepResult& r) {
    os << "n,tau_star,xi2_min,n_xi2_min,purity_at_min\n";
    for (const auto& row : r.rows) {
        if (!row.minimum) continue;
        os << row.n_atoms << ',' << format_double(row.minimum->tau_star) << ','
           << format_double(row.minimum->xi2_min) << ',' << format_double(row.n_atoms * row.minimum->xi2_min)
           << ',' << format_double(row.purity_at_min) << '\n';
    }
    for (const auto& row : r.rows) {
        if (!row.failure.empty()) os << "# failed n=" << row.n_atoms << " reason=" << row.failure << '\n';
    }
    if (r.fit) {
        const auto& f = *r.fit;
        os << "# exponent=" << format_double(f.exponent) << '\n';
        os << "# coefficient=" << format_double(f.coefficient) << '\n';
        os << "# correction=" << format_double(f.correction) << '\n';
        os << "# loglog_prefactor=" << format_double(f.loglog_prefactor) << '\n';
        os << "# residual=" << format_double(f.residual) << '\n';
        os << "# fitted_from_n=" << f.points[f.fitted_from].n_atoms << '\n';
    } else {
        os << "# fit=unavailable (fewer than 3 minima)\n";
    }
}

namespace {

design::ExperimentalParams design_params(const RunConfig& c) {
    design::ExperimentalParams p;
    if (c.preset == "cs") p = design::cesium_preset();
    if (c.regime) p.regime = *c.regime;
    p.n_atoms = c.n_atoms;
    if (c.gamma) p.gamma = *c.gamma;
    if (c.wavelength) p.wavelength = *c.wavelength;
    if (c.power) p.power = *c.power;
    if (c.detuning) p.detuning = *c.detuning;
    if (c.omega) p.omega = *c.omega;
    if (c.feedback_delay) p.feedback_delay = *c.feedback_delay;
    if (c.kappa) p.kappa = *c.kappa;
    if (c.g) p.g = *c.g;
    if (c.area) p.area = *c.area;
    if (c.area_min) p.area = design::diffraction_area(p.wavelength);
    return p;
}

void write_design_report(std::ostream& os, const RunConfig& c, const design::ExperimentalParams& p) {
    const double alpha = c.alpha_override ? *c.alpha_override : design::alpha(p);
    const auto squeeze = design::attainable_squeezing(alpha, p.n_atoms);
    const auto laser = design::laser_constraints(p, alpha);
    const auto budget = design::loss_rate_and_budget(alpha, laser.measurement_strength, p.n_atoms,
                                                     1.0 / laser.measurement_strength);
    const auto bound_at = [&](double a) { return design::laser_constraints(p, a).power_bound; };
    const auto floor = design::single_shot_floor(c.epsilon, p.n_atoms);
    const double fb_coeff = laser.feedback_time * p.n_atoms / (alpha * alpha);
    const std::string regime = p.regime == design::Regime::Cavity ? "cavity" : "freespace";

    os << "Experimental design report (order-of-magnitude estimates)\n";
    os << "  regime " << regime << ", N = " << format_double(p.n_atoms) << ", alpha = " << format_double(alpha)
       << (c.alpha_override ? " (override)" : "") << '\n';
    os << "  attainable squeezing xi^2 ~ sqrt(alpha/N) = " << format_double(squeeze.xi2) << " ["
       << design::to_string(squeeze.regime) << "]\n";
    os << "  measurement strength M = " << format_double(laser.measurement_strength) << " 1/s\n";
    os << "  atoms lost by t = 1/M: " << format_double(budget.atoms_lost)
       << (budget.total_loss ? " (total loss)" : "") << '\n';
    os << "  far detuning Gamma/gamma = " << format_double(laser.far_detuned_ratio)
       << (laser.far_detuned_ok ? " ok" : " VIOLATED") << " (threshold " << design::kMuchLessRatio << ")\n";
    os << "  power bound P/Delta^2 << " << format_double(laser.power_bound) << " W s^2 (any squeezing: "
       << format_double(bound_at(p.n_atoms)) << ", Heisenberg: " << format_double(bound_at(1.0 / p.n_atoms))
       << ")\n";
    os << "  feedback time tau_fb ~ 1/(NM) = " << format_double(laser.feedback_time) << " s = "
       << format_double(fb_coeff) << " alpha^2/N s; delay " << format_double(p.feedback_delay) << " s "
       << (laser.delay_ok ? "ok" : "too slow") << '\n';
    os << "  single-shot feedback with error eps = " << format_double(c.epsilon) << ": xi^2 >= "
       << format_double(floor.xi2_floor) << "; continuous " << format_double(c.coefficient)
       << "/N wins for N > "
       << (c.epsilon > 0.0 ? format_double(design::single_shot_crossover(c.coefficient, c.epsilon)) : "0")
       << '\n';
    os << "  note: gamma used as given (no 2 pi), following the worked example arithmetic\n";
    os << '\n';
    os << "[values]\n";
    auto kv = [&](const char* k, double v) { os << k << '=' << format_double(v) << '\n'; };
    os << "regime=" << regime << '\n';
    kv("n", p.n_atoms);
    kv("alpha", alpha);
    kv("xi2_attainable", squeeze.xi2);
    os << "squeezing_class=" << design::to_string(squeeze.regime) << '\n';
    kv("measurement_strength", laser.measurement_strength);
    kv("loss_rate", budget.loss_rate);
    kv("atoms_lost_at_1_over_m", budget.atoms_lost);
    kv("far_detuned_ratio", laser.far_detuned_ratio);
    os << "far_detuned_ok=" << (laser.far_detuned_ok ? "true" : "false") << '\n';
    kv("much_less_threshold", design::kMuchLessRatio);
    kv("power_bound", laser.power_bound);
    kv("power_ratio", laser.power_ratio);
    kv("power_bound_any_squeezing", bound_at(p.n_atoms));
    kv("power_bound_sqrtn", bound_at(1.0));
    kv("power_bound_heisenberg", bound_at(1.0 / p.n_atoms));
    kv("feedback_time", laser.feedback_time);
    kv("feedback_time_coefficient", fb_coeff);
    kv("feedback_delay", p.feedback_delay);
    os << "delay_ok=" << (laser.delay_ok ? "true" : "false") << '\n';
    kv("single_shot_err_variance", floor.err_variance);
    kv("single_shot_xi2_floor", floor.xi2_floor);
    if (c.epsilon > 0.0) kv("single_shot_crossover_n", design::single_shot_crossover(c.coefficient, c.epsilon));
    os << "precision=order_of_magnitude\n";
}

int execute(const RunConfig& c, std::ostream& out, std::ostream& err) {
    if (c.subcommand == "evolve") {
        const auto ops = shared_spin_operators(c.n_atoms);
        const auto sol = integrate_me(css_x(*ops), c.me_params(), c.feedback_law(c.n_atoms), *ops);
        write_series_csv(out, sol.series);
        const auto summary = summarize(sol.series);
        if (summary.minimum) {
            out << "# tau_star=" << format_double(summary.minimum->tau_star) << '\n';
            out << "# xi2_min=" << format_double(summary.minimum->xi2_min) << '\n';
            out << "# purity_at_min=" << format_double(summary.purity_at_min) << '\n';
            out << "# out_of_regime_after_tau=" << format_double(summary.minimum->tau_star) << '\n';
        } else {
            out << "# minimum=none (no interior minimum of xi2)\n";
        }
        return kOk;
    }
    if (c.subcommand == "trajectory") {
        const auto ops = shared_spin_operators(c.n_atoms);
        const auto seed = NoiseStream::derive_seed(c.master_seed, c.index);
        const auto rec = simulate_trajectory(css_x(*ops), c.me_params(), c.feedback_law(c.n_atoms), seed, *ops);
        write_trajectory_csv(out, rec);
        return kOk;
    }
    if (c.subcommand == "ensemble") {
        const auto ops = shared_spin_operators(c.n_atoms);
        EnsembleOptions opt;
        opt.workers = c.workers;
        const auto res = ensemble_average(css_x(*ops), c.me_params(), c.feedback_law(c.n_atoms), c.trajectories,
                                          c.master_seed, *ops, opt);
        write_ensemble_csv(out, res);
        for (std::size_t i = 0; i < res.trace_distance.size(); ++i) {
            if (res.trace_distance[i] > 5.0 * res.stat_scale) {
                err << "ensemble: trace distance " << res.trace_distance[i] << " at tau=" << res.series.tau[i]
                    << " exceeds 5 x stat_scale (" << 5.0 * res.stat_scale << ")\n";
                return kThreshold;
            }
        }
        return kOk;
    }
    if (c.subcommand == "sweep") {
        const auto res = run_sweep(c);
        write_sweep_csv(out, res);
        for (const auto& row : res.rows) {
            if (!row.failure.empty()) {
                err << "sweep: N=" << row.n_atoms << " failed: " << row.failure << '\n';
            }
        }
        const bool failed = std::any_of(res.rows.begin(), res.rows.end(),
                                        [](const SweepRow& r) { return !r.failure.empty(); });
        return failed ? kNumerical : kOk;
    }
    if (c.subcommand == "design") {
        write_design_report(out, c, design_params(c));
        return kOk;
    }
    throw ValidationError("unknown subcommand '" + c.subcommand + "'");
}

}  // namespace

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
    try {
        if (config.output == "-") return execute(config, out, err);
        std::ostringstream buffer;
        const int code = execute(config, buffer, err);
        std::ofstream file(config.output, std::ios::binary | std::ios::trunc);
        if (!file) {
            err << "error: cannot open output file '" << config.output << "'\n";
            return kValidation;
        }
        file << buffer.str();
        return code;
    } catch (const ValidationError& e) {
        err << "validation error: " << e.what() << '\n';
        return kValidation;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << '\n';
        return kNumerical;
    } catch (const RegimeError& e) {
        err << "regime error: " << e.what() << '\n';
        return kNumerical;
    }
}

int run_with_settings(const std::string& subcommand, const Settings& flags, std::ostream& out, std::ostream& err) {
    try {
        Settings merged = default_settings(subcommand);
        if (auto it = flags.find("config"); it != flags.end()) {
            merged = layer(merged, read_config_file(it->second.value));
        }
        Settings explicit_flags = flags;
        explicit_flags.erase("config");
        merged = layer(merged, explicit_flags);
        return run(make_config(subcommand, merged), out, err);
    } catch (const ValidationError& e) {
        err << "validation error: " << e.what() << '\n';
        return kValidation;
    }
}

}  // namespace qnd::cli
