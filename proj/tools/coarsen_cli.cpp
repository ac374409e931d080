// Command-line front end: one subcommand per experiment. Settings are taken
// from the subcommand defaults, then --config FILE, then explicit flags.

#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "coarsen/experiments.hpp"

namespace {

struct FlagValues {
    std::map<std::string, std::string> values;
    std::string config_file;
};

void add_flags(CLI::App& sub, FlagValues& flags) {
    auto flag = [&](const std::string& name, const std::string& key, const std::string& help) {
        sub.add_option_function<std::string>(
            name, [&flags, key](const std::string& v) { flags.values[key] = v; }, help);
    };
    flag("--lambda", "lambda", "Comma-separated lambda values");
    flag("--m", "m", "Comma-separated radii; a..b for a range");
    flag("--p", "p", "Supernode width");
    flag("--q", "q", "Supernode height");
    flag("--max-iter", "max_iter", "Iteration cap");
    flag("--tol", "tol", "Relative change stopping tolerance");
    flag("--out", "out", "Output directory");
    flag("--format", "format", "csv or csv+svg");
    flag("--jobs", "jobs", "Concurrent sweep points");
    flag("--mirror", "mirror", "lambda-sweep: also solve at 8 - lambda (true|false)");
    sub.add_option("--config", flags.config_file, "key=value settings file");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Local coarsening transformations of the 2D Helmholtz stencil"};
    app.require_subcommand(1);

    FlagValues flags;
    for (const auto& name : coarsen::subcommand_names()) add_flags(*app.add_subcommand(name), flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    const std::string name = app.get_subcommands().front()->get_name();
    coarsen::RunConfig config;
    try {
        config = coarsen::default_config(name);
        if (!flags.config_file.empty()) coarsen::load_config_file(config, flags.config_file);
        for (const auto& [key, value] : flags.values) coarsen::apply_setting(config, key, value);
    } catch (const coarsen::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    }
    return coarsen::execute(config, std::cerr);
}
