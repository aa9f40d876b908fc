#pragma once

#include "qnd/design.hpp"
#include "qnd/dynamics.hpp"
#include "qnd/feedback.hpp"
#include "qnd/observables.hpp"
#include "qnd/stochastic.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace qnd::cli {

enum ExitCode : int {
    kOk = 0,
    kValidation = 2,
    kNumerical = 3,
    kThreshold = 4,
};

/// A raw setting value and where it came from, for diagnostics.
struct Setting {
    std::string value;
    std::string origin;
};

using Settings = std::map<std::string, Setting>;

/// Every key accepted by flags and config files (flag spelling, without dashes).
const std::vector<std::string>& known_keys();
bool is_boolean_key(const std::string& key);

/// Flat `key = value` file, `#` comments. Throws ValidationError naming the line.
Settings parse_config_text(const std::string& text, const std::string& source);
Settings read_config_file(const std::string& path);

/// Later layers override earlier ones.
Settings layer(const Settings& base, const Settings& over);

struct RunConfig {
    std::string subcommand;
    int n_atoms = 20;
    std::vector<int> n_list;
    double measurement_strength = 1.0;
    double efficiency = 1.0;
    FeedbackLaw::Kind law = FeedbackLaw::Kind::Analytic;
    double scale = 1.0;
    double lambda0 = 0.0;
    double dt = 1e-3;
    double t_max = 2.0;
    double sample_interval = 1e-2;
    int trajectories = 100;
    std::uint64_t master_seed = 1;
    std::uint64_t index = 0;
    int workers = 1;
    std::string output = "-";

    // design
    std::string preset;
    std::optional<design::Regime> regime;
    std::optional<double> gamma, kappa, g, area, wavelength, power, detuning, omega, feedback_delay;
    bool area_min = false;
    std::optional<double> alpha_override;
    double epsilon = 0.2;
    double coefficient = 3.49;

    MeParams me_params() const;
    FeedbackLaw feedback_law(int n_atoms) const;
};

/// Subcommand-specific defaults (e.g. dt = 1e-4 for stochastic runs).
Settings default_settings(const std::string& subcommand);

/// Typed conversion and range validation of the layered settings.
RunConfig make_config(const std::string& subcommand, const Settings& settings);

/// Runs a subcommand, writing its CSV or report to `out` and diagnostics to `err`.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Convenience: defaults < config file (if `config` key present) < flags, then run.
int run_with_settings(const std::string& subcommand, const Settings& flags, std::ostream& out, std::ostream& err);

// CSV emitters (locale independent, shortest round-trip decimal, LF endings).
std::string format_double(double v);
void write_series_csv(std::ostream& os, const ObservableSeries& series);
void write_trajectory_csv(std::ostream& os, const TrajectoryRecord& record);
void write_ensemble_csv(std::ostream& os, const EnsembleResult& result);

struct SweepRow {
    int n_atoms;
    std::optional<SeriesMinimum> minimum;
    double purity_at_min = 0.0;
    std::string failure;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::optional<ScalingFit> fit;
};

/// Runs integrate_me for every N (in parallel when workers > 1) and fits the minima.
SweepResult run_sweep(const RunConfig& config);
void write_sweep_csv(std::ostream& os, const SweepResult& result);

/// Minimum and purity at the minimum of one evolve run.
struct EvolveSummary {
    std::optional<SeriesMinimum> minimum;
    double purity_at_min = 0.0;
};

EvolveSummary summarize(const ObservableSeries& series);

}  // namespace qnd::cli
