#include "CLI11.hpp"
#include "commands.hpp"

#include <fstream>
#include <iostream>
#include <map>
#include <optional>

using nlohmann::json;

namespace {

struct Flags {
    std::string config_path, out_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> samples;
    std::optional<int> jobs;
    std::optional<double> time_budget;
    std::string model;
    std::optional<int> n;
    std::vector<std::string> sets;
    // command-specific numbers and lists, keyed by config field
    std::map<std::string, std::optional<double>> numbers;
    std::map<std::string, std::vector<double>> lists;
    std::optional<int> depth, levels, base;
    std::string D, x;
};

json parse_json(const std::string& text, const std::string& what)
{
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw pgmt::cli::ConfigError(what + ": " + e.what());
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Parabolic measure toolkit experiments"};
    app.require_subcommand(1);
    Flags f;

    auto common = [&f](CLI::App* sub) {
        sub->add_option("--config", f.config_path, "JSON config file")->check(CLI::ExistingFile);
        sub->add_option("--seed", f.seed, "RNG seed");
        sub->add_option("--samples", f.samples, "Sample budget");
        sub->add_option("--jobs", f.jobs, "Worker threads");
        sub->add_option("--time-budget", f.time_budget, "Seconds before the report is cut short (0 = none)");
        sub->add_option("--out", f.out_path, "Write the JSON report here instead of standard output");
        sub->add_option("--set", f.sets, "Override a config field: key=<json value>");
    };
    auto model_flags = [&f](CLI::App* sub) {
        sub->add_option("--model", f.model, "flat | vertical-line | quadric | cone | kp | holder");
        sub->add_option("--n", f.n, "Horizontal dimension");
    };
    auto number = [&f](CLI::App* sub, const std::string& name, const std::string& key, const std::string& help) {
        sub->add_option(name, f.numbers[key], help);
    };
    auto list = [&f](CLI::App* sub, const std::string& name, const std::string& key, const std::string& help) {
        sub->add_option(name, f.lists[key], help)->delimiter(',');
    };

    std::map<std::string, CLI::App*> subs;
    for (const auto& name : pgmt::cli::command_names()) {
        CLI::App* sub = app.add_subcommand(name);
        common(sub);
        subs[name] = sub;
    }
    for (const char* name : {"verify-uniform", "moments", "beta", "bwgl", "wcd", "square-function"}) model_flags(subs[name]);
    number(subs["verify-uniform"], "--centers", "centers", "Number of random centres");
    number(subs["verify-uniform"], "--r-min", "r_min", "Smallest radius");
    number(subs["verify-uniform"], "--r-max", "r_max", "Largest radius");
    list(subs["moments"], "--s-grid", "s_grid", "Comma-separated s values");
    number(subs["beta"], "--r", "r", "Ball radius");
    subs["bwgl"]->add_option("--depth", f.depth, "Generations below the roots");
    number(subs["bwgl"], "--eta", "eta", "Bad-cube threshold");
    number(subs["wcd"], "--r", "r", "Ball radius");
    number(subs["wcd"], "--eps", "eps", "Tolerance");
    subs["quadric-expansion"]->add_option("--D", f.D, "Symmetric matrix as JSON, e.g. [[1,0],[0,-1]]");
    subs["quadric-expansion"]->add_option("--x", f.x, "Horizontal point as JSON, e.g. [0.7,0.7]");
    list(subs["quadric-expansion"], "--radii", "radii", "Comma-separated radii");
    subs["counterexample"]->add_option("--base", f.base, "Lacunary base a >= 4");
    subs["counterexample"]->add_option("--levels", f.levels, "Number of levels J");
    list(subs["counterexample"], "--scales", "scales", "Comma-separated decreasing scales");
    number(subs["square-function"], "--R", "R", "Outer radius");
    number(subs["square-function"], "--q", "q", "Exponent");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        std::string command;
        for (const auto& [name, sub] : subs)
            if (sub->parsed()) command = name;

        json cfg = json::object();
        if (!f.config_path.empty()) {
            std::ifstream in(f.config_path);
            std::stringstream ss;
            ss << in.rdbuf();
            cfg = parse_json(ss.str(), f.config_path);
            if (cfg.contains("command") && cfg.at("command") != command)
                throw pgmt::cli::ConfigError("config command '" + cfg.at("command").dump() + "' does not match subcommand '" +
                                             command + "'");
        }
        cfg["command"] = command;
        if (f.seed) cfg["seed"] = *f.seed;
        if (f.samples) cfg["samples"] = *f.samples;
        if (f.jobs) cfg["jobs"] = *f.jobs;
        if (f.time_budget) cfg["time_budget"] = *f.time_budget;
        if (!f.model.empty() || f.n) {
            json m = cfg.contains("model") ? cfg.at("model") : json{{"kind", "flat"}, {"n", 2}};
            if (!f.model.empty()) m["kind"] = f.model;
            if (f.n) m["n"] = *f.n;
            cfg["model"] = m;
        }
        for (const auto& [key, v] : f.numbers)
            if (v) cfg[key] = key == "centers" ? json(static_cast<int>(*v)) : json(*v);
        for (const auto& [key, v] : f.lists)
            if (!v.empty()) cfg[key] = v;
        if (f.depth) cfg["depth"] = *f.depth;
        if (f.base) cfg["base"] = *f.base;
        if (f.levels) cfg["levels"] = *f.levels;
        if (!f.D.empty()) cfg["D"] = parse_json(f.D, "--D");
        if (!f.x.empty()) cfg["x"] = parse_json(f.x, "--x");
        for (const auto& s : f.sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos || eq == 0) throw pgmt::cli::ConfigError("--set expects key=value, got '" + s + "'");
            cfg[s.substr(0, eq)] = parse_json(s.substr(eq + 1), "--set " + s.substr(0, eq));
        }

        const json report = pgmt::cli::run(cfg);
        const std::string text = report.dump(2) + "\n";
        if (f.out_path.empty()) {
            std::cout << text;
        } else {
            std::ofstream out(f.out_path);
            if (!out) throw pgmt::cli::ConfigError("cannot write '" + f.out_path + "'");
            out << text;
            std::cout << pgmt::cli::summary_table(report);
        }
        return report.at("pass").get<bool>() ? 0 : 1;
    } catch (const pgmt::cli::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
