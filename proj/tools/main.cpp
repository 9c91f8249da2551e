#include <iostream>

#include "CLI11.hpp"
#include "app.hpp"

int main(int argc, char** argv) {
    CLI::App cli{"Singly periodic maximal surfaces in Minkowski space"};
    std::string command, config;
    std::optional<std::string> out;
    std::optional<int> replicas;
    bool normalize = false;
    cli.add_option("command", command, "validate | periods | spinors | build | catenoid | moduli-scan")
        ->required()
        ->check(CLI::IsMember(maxperiodic::app::command_names()));
    cli.add_option("--config", config, "JSON configuration")->required();
    cli.add_option("--out", out, "output directory (overrides output.directory)");
    cli.add_option("--replicas", replicas, "fundamental domains in the OBJ export")->check(CLI::Range(1, 64));
    cli.add_flag("--normalize-e1-height", normalize, "translate x3 so that the end E1 is asymptotic to x3 = 0");
    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = cli.exit(e);
        return rc == 0 ? 0 : static_cast<int>(maxperiodic::ExitCode::validation);
    }
    return maxperiodic::app::main_entry(command, config, out, replicas, normalize, std::cerr);
}
