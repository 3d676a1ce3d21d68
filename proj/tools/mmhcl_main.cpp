// mmhcl — experiment CLI: synthetic data generation, training, evaluation,
// ablations, top-k sweeps and uncertainty dumps. One command per process;
// every run lands in its own directory with a manifest.

#include "mmhcl/harness.hpp"
#include "mmhcl/io.hpp"
#include "mmhcl/version.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <iostream>
#include <string>
#include <vector>

int main(int argc, char** argv) {
    CLI::App app{"mmhcl: multimodal heterogeneous category-set learning testbed"};
    app.set_version_flag("--version", std::string("mmhcl ") + mmhcl::kVersion);
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "runs";
    std::vector<std::string> overrides;
    bool eval_check = false;

    const std::vector<std::string> commands = {"gen-data", "train",   "eval",
                                               "ablate",   "sweep-k", "dump-uncertainty"};
    for (const std::string& name : commands) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "JSON config file");
        sub->add_option("--set", overrides, "override config keys, e.g. --set train.epochs=30");
        sub->add_option("--out", out_dir, "output root directory (default: runs)");
        if (name == "eval")
            sub->add_flag("--check", eval_check, "validate the report and exit 3 on failure");
    }

    CLI11_PARSE(app, argc, argv);
    const std::string command = app.get_subcommands().front()->get_name();

    nlohmann::json user_config = nlohmann::json::object();
    try {
        if (!config_path.empty())
            user_config = nlohmann::json::parse(mmhcl::read_text_file(config_path));
        for (const std::string& assignment : overrides)
            mmhcl::apply_override(user_config, assignment);
        if (eval_check) mmhcl::apply_override(user_config, "eval.check.enabled=true");
    } catch (const std::exception& e) {
        std::cerr << nlohmann::json{{"error", {{"kind", "config"}, {"message", e.what()}}}}.dump()
                  << "\n";
        return mmhcl::kExitConfigError;
    }

    return mmhcl::run_command(command, user_config, out_dir);
}
