#include "ttdensity/experiments.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <iostream>

namespace {

nlohmann::json load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ttdensity::ConfigError("cannot open config file " + path);
    nlohmann::json config;
    is >> config;
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"layered tensor-train density surrogates"};
    app.require_subcommand(1);

    std::string config_path;
    std::string output_dir = "out";
    auto* run = app.add_subcommand("run", "run an experiment config");
    run->add_option("config", config_path, "JSON config file")->required();
    run->add_option("-o,--output", output_dir, "output directory");

    std::string validate_path;
    auto* validate =
        app.add_subcommand("validate", "check a config without running it");
    validate->add_option("config", validate_path, "JSON config file")
        ->required();

    std::string surrogate_path;
    auto* inspect =
        app.add_subcommand("inspect", "summarize a saved surrogate file");
    inspect->add_option("surrogate", surrogate_path, "surrogate JSON file")
        ->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            auto manifest = ttdensity::experiments::run_experiment(
                load_config(config_path), output_dir);
            std::cout << "wrote " << output_dir << " (config hash "
                      << manifest.at("config_hash").get<std::string>() << ")\n";
            for (const auto& f : manifest.at("outputs"))
                std::cout << "  " << f.get<std::string>() << "\n";
        } else if (validate->parsed()) {
            ttdensity::experiments::validate_config(load_config(validate_path));
            std::cout << "config ok\n";
        } else if (inspect->parsed()) {
            std::cout << ttdensity::experiments::inspect_surrogate(
                surrogate_path);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
