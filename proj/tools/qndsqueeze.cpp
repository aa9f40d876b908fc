#include "qnd/cli.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <string>

namespace {

const std::map<std::string, std::string>& help_text() {
    static const std::map<std::string, std::string> text{
        {"n", "number of atoms N"},
        {"n-list", "comma-separated atom numbers for sweep"},
        {"m", "measurement strength M"},
        {"eta", "detection efficiency in (0, 1]"},
        {"law", "feedback law: off|constant|analytic|conditional"},
        {"scale", "multiplier applied to the feedback strength"},
        {"lambda0", "feedback strength for --law constant"},
        {"dt", "integration step in tau = M t"},
        {"t-max", "final tau"},
        {"sample-interval", "output spacing in tau (multiple of dt)"},
        {"k", "number of trajectories"},
        {"seed", "master seed"},
        {"index", "trajectory index"},
        {"workers", "worker threads"},
        {"output", "output file, - for stdout"},
        {"preset", "design preset: cs|none"},
        {"regime", "cavity|freespace"},
        {"gamma", "spontaneous emission rate (1/s)"},
        {"kappa", "cavity decay rate (1/s)"},
        {"g", "one-photon Rabi frequency (rad/s)"},
        {"area", "beam area (m^2)"},
        {"area-min", "use the diffraction-scale area"},
        {"wavelength", "probe wavelength (m)"},
        {"power", "probe power (W)"},
        {"detuning", "probe detuning (rad/s)"},
        {"omega", "probe angular frequency (rad/s)"},
        {"feedback-delay", "feedback loop latency (s)"},
        {"alpha-override", "use this loss parameter instead of computing it"},
        {"epsilon", "single-shot feedback error"},
        {"coefficient", "continuous-feedback coefficient c in xi2_min = c/N"},
    };
    return text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Squeezing by continuous QND measurement and feedback"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    struct Sub {
        CLI::App* app;
        std::map<std::string, std::string> values;
        std::map<std::string, bool> flags;
        std::string config;
    };
    std::map<std::string, Sub> subs;
    const std::map<std::string, std::string> descriptions{
        {"evolve", "integrate the feedback master equation"},
        {"trajectory", "simulate one conditioned trajectory"},
        {"ensemble", "average K trajectories and compare to the master equation"},
        {"sweep", "find the squeezing minimum for several N and fit the scaling"},
        {"design", "order-of-magnitude experimental design report"},
    };
    for (const auto& [name, desc] : descriptions) {
        Sub& s = subs[name];
        s.app = app.add_subcommand(name, desc);
        s.app->add_option("--config", s.config, "flat key = value config file");
        for (const auto& key : qnd::cli::known_keys()) {
            const std::string flag = "--" + key;
            if (qnd::cli::is_boolean_key(key)) {
                s.app->add_flag(flag, s.flags[key], help_text().at(key));
            } else {
                s.app->add_option(flag, s.values[key], help_text().at(key));
            }
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : qnd::cli::kValidation;
    }

    for (auto& [name, s] : subs) {
        if (!s.app->parsed()) continue;
        qnd::cli::Settings flags;
        if (s.app->count("--config") > 0) flags["config"] = {s.config, "flag --config"};
        for (const auto& key : qnd::cli::known_keys()) {
            if (s.app->count("--" + key) == 0) continue;
            if (qnd::cli::is_boolean_key(key)) {
                flags[key] = {s.flags[key] ? "true" : "false", "flag --" + key};
            } else {
                flags[key] = {s.values[key], "flag --" + key};
            }
        }
        return qnd::cli::run_with_settings(name, flags, std::cout, std::cerr);
    }
    return qnd::cli::kValidation;
}
