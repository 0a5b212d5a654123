/// @file
/// @brief Experiment runner: `waveholtz <command> [--config FILE] [--key value ...] [--out DIR] [--check]`.

#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "waveholtz/experiments.hpp"

namespace
{
    constexpr int exit_config = 1;
    constexpr int exit_solver = 2;
    constexpr int exit_check = 3;

    /// `--key value` and `--key=value` pairs left over by the option parser
    void apply_overrides(wh::ExperimentConfig& cfg, const std::vector<std::string>& extras)
    {
        for (std::size_t i = 0; i < extras.size(); ++i)
        {
            const std::string& arg = extras[i];
            if (arg.rfind("--", 0) != 0)
                throw wh::ConfigError("unexpected argument '" + arg + "'");
            const std::string body = arg.substr(2);
            const auto eq = body.find('=');
            if (eq != std::string::npos)
            {
                cfg.set(body.substr(0, eq), body.substr(eq + 1));
                continue;
            }
            if (i + 1 >= extras.size())
                throw wh::ConfigError("missing value for '" + arg + "'");
            cfg.set(body, extras[++i]);
        }
    }
}

int main(int argc, char** argv)
{
    CLI::App app{"WaveHoltz Helmholtz experiments"};
    app.allow_extras();

    std::string command, config_file, out_dir = "out";
    bool check = false, print_config = false;
    std::string commands_help = "one of:";
    for (const auto& c : wh::experiment_commands())
        commands_help += " " + c;
    app.add_option("command", command, commands_help)->required();
    app.add_option("--config", config_file, "flat key=value settings file");
    app.add_option("--out", out_dir, "output directory for CSV files");
    app.add_flag("--check", check, "assert the acceptance criteria of the experiment (exit code 3 on failure)");
    app.add_flag("--print-config", print_config, "print the effective settings and exit");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp& e)
    {
        return app.exit(e);
    }
    catch (const CLI::ParseError& e)
    {
        app.exit(e);
        return exit_config;
    }

    wh::ExperimentConfig cfg;
    try
    {
        bool known = false;
        for (const auto& c : wh::experiment_commands())
            known = known || c == command;
        if (!known)
            throw wh::ConfigError("unknown command '" + command + "' (" + commands_help + ")");
        cfg = wh::ExperimentConfig::for_command(command);
        if (!config_file.empty())
            cfg.apply_file(config_file);
        apply_overrides(cfg, app.remaining());
    }
    catch (const wh::ConfigError& e)
    {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config;
    }

    if (print_config)
    {
        std::cout << cfg.serialize();
        return 0;
    }

    wh::ExperimentResult result;
    try
    {
        result = wh::run_experiment(command, cfg, out_dir, check);
    }
    catch (const wh::ConfigError& e)
    {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config;
    }
    catch (const std::exception& e)
    {
        std::cerr << "solver failure: " << e.what() << "\n";
        return exit_solver;
    }

    for (const auto& line : result.summary)
        std::cout << line << "\n";
    for (const auto& f : result.files)
        std::cout << "wrote " << f.string() << "\n";
    if (check)
    {
        for (const auto& c : result.checks)
            std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << (c.detail.empty() ? "" : " [" + c.detail + "]") << "\n";
        if (!result.all_passed())
            return exit_check;
    }
    return 0;
}
