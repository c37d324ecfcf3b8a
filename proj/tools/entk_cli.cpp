#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "commands.hpp"
#include "config.hpp"
#include "entk/errors.hpp"
#include "entk/parallel.hpp"

namespace {

struct Common {
    std::string config;
    std::vector<std::string> sets;
    long long seed = -1;
    int threads = -1;
    std::string out;
};

void add_common(CLI::App* sub, Common& c)
{
    sub->add_option("-c,--config", c.config, "JSON config file");
    sub->add_option("--set", c.sets, "override a config key, e.g. --set mc.samples=50")->take_all();
    sub->add_option("--seed", c.seed, "random seed (overrides the config)");
    sub->add_option("--threads", c.threads, "worker threads (overrides config and ENTK_THREADS)");
    sub->add_option("-o,--out", c.out, "output directory (overrides the config)");
}

entk::cli::RunConfig resolve(const Common& c)
{
    std::vector<std::string> sets = c.sets;
    if (c.seed >= 0) sets.push_back("seed=" + std::to_string(c.seed));
    if (c.threads >= 0) sets.push_back("threads=" + std::to_string(c.threads));
    if (!c.out.empty()) sets.push_back("output_dir=" + entk::cli::json(c.out).dump());
    auto rc = entk::cli::load_config(c.config, sets);
    if (rc.threads > 0) entk::set_thread_count(rc.threads);
    return rc;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Infinite-width kernels of group convolutional networks"};
    app.set_version_flag("--version", std::string(ENTK_VERSION));
    app.require_subcommand(1);

    Common common;
    bool inject = false;
    using Fn = int (*)(const entk::cli::RunConfig&);
    std::vector<std::pair<CLI::App*, Fn>> cmds;
    auto add = [&](const char* name, const char* help, Fn fn) {
        CLI::App* sub = app.add_subcommand(name, help);
        add_common(sub, common);
        cmds.emplace_back(sub, fn);
    };
    add("gram", "NNGP and NTK Gram matrices of the training pool (resumable)", entk::cli::cmd_gram);
    add("predict", "kernel predictors over train sizes, equivariant vs baseline", entk::cli::cmd_predict);
    add("mc", "Monte Carlo convergence of finite-width kernels", entk::cli::cmd_mc);
    add("verify", "augmentation equivalence checks", entk::cli::cmd_verify);
    add("featurize", "spherical features of molecules", entk::cli::cmd_featurize);
    CLI::App* self = app.add_subcommand("selftest", "numerical self checks");
    self->add_flag("--inject-fault", inject, "use a sign-flipped gconv lemma (the oracle check must fail)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(entk::ExitCode::config_error);
    }

    try {
        if (self->parsed()) return entk::cli::cmd_selftest(inject);
        for (auto& [sub, fn] : cmds)
            if (sub->parsed()) return fn(resolve(common));
    } catch (const entk::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(e.exit_code());
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(entk::ExitCode::config_error);
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(entk::ExitCode::config_error);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(entk::ExitCode::numerical_failure);
    }
    return 0;
}
