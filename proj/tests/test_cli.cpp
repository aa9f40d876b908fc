#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qnd/cli.hpp"
#include "qnd/errors.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace qnd;
using namespace qnd::cli;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome call(const std::string& sub, const std::map<std::string, std::string>& flags) {
    Settings s;
    for (const auto& [k, v] : flags) s[k] = {v, "flag --" + k};
    std::ostringstream out, err;
    const int code = run_with_settings(sub, s, out, err);
    return {code, out.str(), err.str()};
}

std::vector<std::vector<std::string>> rows(const std::string& csv) {
    std::vector<std::vector<std::string>> out;
    std::istringstream is(csv);
    std::string line;
    std::getline(is, line);  // header
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        out.push_back(cells);
    }
    return out;
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

std::string footer(const std::string& csv, const std::string& key) {
    const std::string tag = "# " + key + "=";
    const auto pos = csv.find(tag);
    if (pos == std::string::npos) return {};
    const auto end = csv.find('\n', pos);
    return csv.substr(pos + tag.size(), end - pos - tag.size());
}

std::string kv(const std::string& report, const std::string& key) {
    std::istringstream is(report);
    std::string line;
    while (std::getline(is, line)) {
        if (line.rfind(key + "=", 0) == 0) return line.substr(key.size() + 1);
    }
    return {};
}

int run_exe(const std::string& args, std::string* stdout_text = nullptr) {
    const std::string cmd = std::string(QNDSQUEEZE_EXE) + " " + args + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string text;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) text.append(buf, n);
    const int status = pclose(pipe);
    if (stdout_text) *stdout_text = text;
    return WEXITSTATUS(status);
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("qndsqueeze_test_" + name);
}

}  // namespace

TEST_CASE("config text parsing") {
    const auto s = parse_config_text("# comment\n n = 12 \nlaw=off # trailing\n\nt_max = 0.5\n", "cfg");
    CHECK(s.at("n").value == "12");
    CHECK(s.at("law").value == "off");
    CHECK(s.at("t-max").value == "0.5");
    CHECK(s.at("n").origin == "cfg:2");
    try {
        parse_config_text("n = 3\nbogus = 1\n", "cfg");
        FAIL("expected an error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("cfg:2") != std::string::npos);
        CHECK(std::string(e.what()).find("bogus") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config_text("n 3\n", "cfg"), ValidationError);
    CHECK_THROWS_AS(parse_config_text("n =\n", "cfg"), ValidationError);
}

TEST_CASE("config values are validated with their origin") {
    auto bad = [](const std::string& key, const std::string& value) {
        Settings s = default_settings("evolve");
        s[key] = {value, "my.cfg:7"};
        try {
            make_config("evolve", s);
        } catch (const ValidationError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    CHECK(bad("n", "abc").find("my.cfg:7") != std::string::npos);
    CHECK(bad("n", "0").find("n=") != std::string::npos);
    CHECK_FALSE(bad("eta", "1.5").empty());
    CHECK_FALSE(bad("dt", "0.05").empty());
    CHECK_FALSE(bad("law", "magic").empty());
    CHECK_FALSE(bad("m", "-1").empty());
    CHECK_FALSE(bad("sample-interval", "0.0015").empty());
    CHECK_FALSE(bad("n-list", "10,30,20").empty());
    CHECK_FALSE(bad("scale", "nan").empty());
    CHECK(bad("n", "25").empty());
    CHECK_THROWS_AS(make_config("plot", default_settings("plot")), ValidationError);
}

TEST_CASE("flags override config values override defaults") {
    const auto path = temp_file("precedence.cfg");
    {
        std::ofstream f(path);
        f << "n = 12\nscale = 1.2\n";
    }
    Settings flags;
    flags["config"] = {path.string(), "flag --config"};
    flags["n"] = {"14", "flag --n"};
    auto merged = layer(layer(default_settings("evolve"), read_config_file(path.string())), {{"n", flags["n"]}});
    const auto c = make_config("evolve", merged);
    CHECK(c.n_atoms == 14);
    CHECK(c.scale == 1.2);
    CHECK(c.efficiency == 1.0);
    CHECK(c.dt == 1e-3);
    CHECK(make_config("trajectory", default_settings("trajectory")).dt == 1e-4);

    // Same precedence through the full entry point: a footer reflects N=14 and scale 1.2.
    std::ostringstream out, err;
    flags["t-max"] = {"1.2", "flag --t-max"};
    CHECK(run_with_settings("evolve", flags, out, err) == kOk);
    const auto direct = call("evolve", {{"n", "14"}, {"scale", "1.2"}, {"t-max", "1.2"}});
    CHECK(out.str() == direct.out);
    std::filesystem::remove(path);

    flags["config"] = {"/nonexistent/file.cfg", "flag --config"};
    std::ostringstream o2, e2;
    CHECK(run_with_settings("evolve", flags, o2, e2) == kValidation);
}

TEST_CASE("number formatting is shortest round-trip and locale independent") {
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(2.0) == "2");
    CHECK(format_double(-0.0) == "0");
    CHECK(format_double(1e-5) == "1e-05");
    CHECK(format_double(std::nan("")) == "nan");
    const double x = 0.978123456789123;
    CHECK(std::stod(format_double(x)) == x);
}

TEST_CASE("evolve output and footer") {
    const auto r = call("evolve", {{"n", "20"}, {"law", "analytic"}});
    REQUIRE(r.code == kOk);
    CHECK(first_line(r.out) == "tau,jx,jy2,jz2,xi2,purity,lambda");
    CHECK(r.out.find('\r') == std::string::npos);
    const double purity = std::stod(footer(r.out, "purity_at_min"));
    CHECK(purity == doctest::Approx(0.978).epsilon(0.005 / 0.978));
    CHECK(std::stod(footer(r.out, "tau_star")) > 0.5);
    CHECK(rows(r.out).size() == 201);
    CHECK(rows(r.out).front().size() == 7);
}

TEST_CASE("evolve without feedback keeps the Jz moments") {
    const auto r = call("evolve", {{"n", "20"}, {"law", "off"}, {"t-max", "1"}});
    REQUIRE(r.code == kOk);
    for (const auto& row : rows(r.out)) {
        const double tau = std::stod(row[0]);
        CHECK(std::stod(row[3]) == doctest::Approx(5.0).epsilon(1e-9));
        CHECK(std::stod(row[4]) == doctest::Approx(std::exp(tau)).epsilon(1e-8));
    }
    CHECK(r.out.find("# minimum=none") != std::string::npos);
}

TEST_CASE("evolve with no measurement is frozen") {
    const auto r = call("evolve", {{"n", "8"}, {"m", "0"}, {"law", "off"}, {"t-max", "0.5"}});
    REQUIRE(r.code == kOk);
    const auto data = rows(r.out);
    for (const auto& row : data) {
        for (std::size_t c = 1; c < row.size(); ++c) CHECK(row[c] == data.front()[c]);
    }
    // The analytic law scales with M, so it vanishes too; a fixed nonzero lambda cannot.
    CHECK(call("evolve", {{"m", "0"}, {"law", "analytic"}, {"t-max", "0.1"}}).code == kOk);
    CHECK(call("evolve", {{"m", "0"}, {"law", "constant"}, {"lambda0", "0.5"}}).code == kValidation);
}

TEST_CASE("trajectory and ensemble CSVs") {
    const auto t = call("trajectory", {{"n", "6"}, {"t-max", "0.3"}, {"seed", "9"}, {"index", "0"}});
    REQUIRE(t.code == kOk);
    CHECK(first_line(t.out) == "tau,Ic_dt,Jx_c,Jz_c,Jz2_c,purity_c");
    const auto e = call("ensemble", {{"n", "6"}, {"t-max", "0.3"}, {"seed", "9"}, {"k", "1"}});
    REQUIRE(e.code == kOk);
    CHECK(first_line(e.out) == "tau,jx,jy2,jz2,xi2,purity,lambda,trace_dist_to_me,stat_scale");
    const auto tr = rows(t.out), er = rows(e.out);
    REQUIRE(tr.size() == er.size());
    for (std::size_t i = 0; i < tr.size(); ++i) {
        CHECK(tr[i][0] == er[i][0]);  // tau
        CHECK(tr[i][2] == er[i][1]);  // Jx_c vs jx
        CHECK(tr[i][4] == er[i][3]);  // Jz2_c vs jz2
        CHECK(tr[i][5] == er[i][5]);  // purity
    }
}

TEST_CASE("ensemble output is byte-identical across runs and worker counts") {
    const std::map<std::string, std::string> base{{"n", "6"}, {"t-max", "0.4"}, {"k", "20"}, {"seed", "3"}};
    auto with_workers = base;
    with_workers["workers"] = "3";
    const auto a = call("ensemble", base);
    const auto b = call("ensemble", base);
    const auto c = call("ensemble", with_workers);
    REQUIRE(a.code == kOk);
    CHECK(a.out == b.out);
    CHECK(a.out == c.out);
    auto other_seed = base;
    other_seed["seed"] = "4";
    CHECK(call("ensemble", other_seed).out != a.out);
}

TEST_CASE("sweep output") {
    const auto r = call("sweep", {{"n-list", "4,6,8,10"}, {"t-max", "1.5"}, {"workers", "2"}});
    REQUIRE(r.code == kOk);
    CHECK(first_line(r.out) == "n,tau_star,xi2_min,n_xi2_min,purity_at_min");
    CHECK(rows(r.out).size() == 4);
    CHECK_FALSE(footer(r.out, "exponent").empty());
    CHECK_FALSE(footer(r.out, "coefficient").empty());
    const auto serial = call("sweep", {{"n-list", "4,6,8,10"}, {"t-max", "1.5"}});
    CHECK(serial.out == r.out);

    // Too short a run leaves every minimum on the boundary.
    const auto short_run = call("sweep", {{"n-list", "4,6,8"}, {"t-max", "0.2"}});
    CHECK(short_run.code == kNumerical);
    CHECK(short_run.out.find("# failed n=4") != std::string::npos);
}

TEST_CASE("design report") {
    const auto r = call("design", {});
    REQUIRE(r.code == kOk);
    CHECK(kv(r.out, "precision") == "order_of_magnitude");
    CHECK(std::abs(std::log10(std::stod(kv(r.out, "power_bound_any_squeezing")) / 1e-18)) <= 1.0);
    CHECK(std::abs(std::log10(std::stod(kv(r.out, "power_bound_heisenberg")) / 1e-33)) <= 1.0);
    CHECK(std::abs(std::log10(std::stod(kv(r.out, "feedback_time_coefficient")) / 10.0)) <= 1.0);

    const auto o = call("design", {{"alpha-override", "1"}, {"n", "100"}});
    CHECK(std::stod(kv(o.out, "xi2_attainable")) == doctest::Approx(0.1));
    CHECK(kv(o.out, "squeezing_class") == "sqrtN");

    const auto a = call("design", {{"regime", "freespace"}, {"area", "1e-6"}, {"area-min", "true"}});
    CHECK(std::stod(kv(a.out, "alpha")) == doctest::Approx(1.0).epsilon(1e-12));

    CHECK(call("design", {{"regime", "cavity"}}).code == kValidation);
    const auto cav = call("design", {{"regime", "cavity"}, {"kappa", "1e6"}, {"g", "1e7"}});
    CHECK(cav.code == kOk);
    CHECK(std::stod(kv(cav.out, "alpha")) == doctest::Approx(1e6 * 5e6 / 1e14));
}

TEST_CASE("executable exit codes and output files") {
    std::string text;
    CHECK(run_exe("evolve --n 6 --t-max 1", &text) == 0);
    CHECK(first_line(text) == "tau,jx,jy2,jz2,xi2,purity,lambda");
    CHECK(run_exe("evolve --n 0") == 2);
    CHECK(run_exe("evolve --no-such-flag 1") == 2);
    CHECK(run_exe("sweep --n-list 4,6,8 --t-max 0.2") == 3);
    const auto path = temp_file("out.csv");
    CHECK(run_exe("evolve --n 4 --t-max 1 --output " + path.string(), &text) == 0);
    CHECK(text.empty());
    std::ifstream f(path);
    std::stringstream ss;
    ss << f.rdbuf();
    CHECK(ss.str() == call("evolve", {{"n", "4"}, {"t-max", "1"}}).out);
    std::filesystem::remove(path);
    const auto cfg = temp_file("exe.cfg");
    {
        std::ofstream c(cfg);
        c << "n = 5\nt-max = 1\n";
    }
    CHECK(run_exe("evolve --config " + cfg.string() + " --n 6", &text) == 0);
    CHECK(text == call("evolve", {{"n", "6"}, {"t-max", "1"}}).out);
    std::filesystem::remove(cfg);
    CHECK(run_exe("design --area-min", &text) == 0);
}
