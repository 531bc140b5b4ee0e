// Command-line front end. Values from --config are applied first; flags given on the command line win.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "fovea/cli.hpp"
#include "fovea/errors.hpp"
#include "fovea/scene_io.hpp"
#include "fovea/tsa.hpp"

namespace fs = std::filesystem;
using namespace fovea;

namespace {

template <typename T>
void set_if(const std::optional<T>& flag, T& field) {
    if (flag) field = *flag;
}

struct Common {
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string config;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--seed", c.seed, "Random seed");
    cmd->add_option("--out", c.out, "Output directory")->required();
    cmd->add_option("--config", c.config, "JSON config file; explicit flags override it");
}

nlohmann::json config_doc(const Common& c) {
    if (c.config.empty()) return nlohmann::json::object();
    return load_json(c.config);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Prototype-guided feature enhancement and attention-distance tooling"};
    app.require_subcommand(1);

    // gen
    Common gen_c;
    std::optional<std::size_t> gen_episodes, gen_k, gen_classes, gen_queries, gen_size, gen_dim;
    std::optional<double> gen_clutter, gen_style, gen_noise;
    std::optional<std::string> gen_domain;
    auto* gen = app.add_subcommand("gen", "Generate synthetic episodes");
    add_common(gen, gen_c);
    gen->add_option("--episodes", gen_episodes, "Number of episodes");
    gen->add_option("--k", gen_k, "Support shots per class");
    gen->add_option("--classes", gen_classes, "Number of classes");
    gen->add_option("--queries", gen_queries, "Query scenes per episode");
    gen->add_option("--grid", gen_size, "Grid side length");
    gen->add_option("--dim", gen_dim, "Feature dimension");
    gen->add_option("--clutter", gen_clutter, "Clutter level in [0, 1]");
    gen->add_option("--style", gen_style, "Style offset magnitude");
    gen->add_option("--noise", gen_noise, "Per-channel noise sigma");
    gen->add_option("--domain", gen_domain, "source or target");

    // run
    Common run_c;
    std::optional<std::string> run_episodes;
    std::optional<double> run_tau, run_tau_fg, run_tau_bg, run_gamma, run_gamma_fg, run_gamma_bg, run_temp, run_lambda,
        run_pbias, run_wscale;
    std::optional<std::size_t> run_layers;
    bool run_no_enhance = false;
    auto* run = app.add_subcommand("run", "Evaluate episodes with and without enhancement");
    add_common(run, run_c);
    run->add_option("--episodes", run_episodes, "Directory written by gen");
    run->add_option("--tau", run_tau, "Similarity threshold for both branches");
    run->add_option("--tau-fg", run_tau_fg, "Foreground similarity threshold");
    run->add_option("--tau-bg", run_tau_bg, "Background similarity threshold");
    run->add_option("--gamma", run_gamma, "Enhancement strength for both branches");
    run->add_option("--gamma-fg", run_gamma_fg, "Foreground enhancement strength");
    run->add_option("--gamma-bg", run_gamma_bg, "Background enhancement strength");
    run->add_option("--temperature", run_temp, "Class-weight softmax temperature");
    run->add_option("--lambda", run_lambda, "Alignment loss weight (recorded)");
    run->add_option("--layers", run_layers, "Encoder layers");
    run->add_option("--position-bias", run_pbias, "Encoder logit penalty per grid unit");
    run->add_option("--weight-scale", run_wscale, "Encoder weight scale");
    run->add_flag("--no-enhance", run_no_enhance, "Skip the enhanced path");

    // extract
    Common ex_c;
    std::vector<std::string> ex_scenes;
    std::optional<std::size_t> ex_shots;
    auto* extract = app.add_subcommand("extract", "Build a prototype repository from annotated scenes");
    add_common(extract, ex_c);
    extract->add_option("--scenes", ex_scenes, "Scene files or episode directories");
    extract->add_option("--shots", ex_shots, "Shots recorded in the repository metadata");

    // align
    Common al_c;
    std::optional<std::string> al_episode, al_repo, al_bank, al_domain;
    std::optional<std::size_t> al_steps, al_shared, al_text_dim;
    std::optional<double> al_lr, al_tau, al_lambda;
    bool al_check = false;
    auto* align = app.add_subcommand("align", "Optimize the text-background alignment projections");
    add_common(align, al_c);
    align->add_option("--episode", al_episode, "Episode directory supplying support scenes");
    align->add_option("--repo", al_repo, "Prototype repository (built from the support set if omitted)");
    align->add_option("--bank", al_bank, "Text bank JSON (built-in bank if omitted)");
    align->add_option("--bank-domain", al_domain, "Built-in bank domain");
    align->add_option("--steps", al_steps, "Gradient steps");
    align->add_option("--shared-dim", al_shared, "Shared embedding dimension");
    align->add_option("--text-dim", al_text_dim, "Text embedding dimension");
    align->add_option("--lr", al_lr, "Learning rate");
    align->add_option("--tau-ctr", al_tau, "Contrastive temperature");
    align->add_option("--lambda", al_lambda, "Alignment loss weight");
    align->add_flag("--check-grad", al_check, "Verify analytic gradients; exit 3 on mismatch");

    // profile
    Common pr_c;
    std::optional<std::string> pr_dump, pr_after;
    auto* profile = app.add_subcommand("profile", "Attention-distance profile of a dump");
    add_common(profile, pr_c);
    profile->add_option("--dump", pr_dump, "Attention dump JSON");
    profile->add_option("--after", pr_after, "Second dump; writes per-layer deltas");

    // bank
    std::string bank_domain = "synthetic";
    std::string bank_out;
    std::size_t bank_size = kDefaultBankSize;
    auto* bank = app.add_subcommand("bank", "Export a built-in text bank");
    bank->add_option("--domain", bank_domain, "Domain family");
    bank->add_option("--size", bank_size, "Number of entries");
    bank->add_option("--out", bank_out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(ErrorCategory::Usage);
    }

    try {
        if (*gen) {
            auto cfg = cli::gen_config_from_json(config_doc(gen_c));
            set_if(gen_c.seed, cfg.seed);
            set_if(gen_episodes, cfg.episodes);
            set_if(gen_k, cfg.geometry.shots);
            set_if(gen_classes, cfg.geometry.n_classes);
            set_if(gen_queries, cfg.geometry.n_query);
            if (gen_size) cfg.geometry.height = cfg.geometry.width = *gen_size;
            set_if(gen_dim, cfg.geometry.dim);
            set_if(gen_clutter, cfg.clutter_level);
            set_if(gen_style, cfg.style_magnitude);
            set_if(gen_noise, cfg.noise_sigma);
            if (gen_domain) cfg.domain = domain_from_string(*gen_domain);
            return cli::cmd_gen(cfg, gen_c.out, std::cout);
        }
        if (*run) {
            auto cfg = cli::run_config_from_json(config_doc(run_c));
            set_if(run_c.seed, cfg.seed);
            if (run_episodes) cfg.episodes = *run_episodes;
            if (run_tau) cfg.enhancement.tau_fg = cfg.enhancement.tau_bg = *run_tau;
            set_if(run_tau_fg, cfg.enhancement.tau_fg);
            set_if(run_tau_bg, cfg.enhancement.tau_bg);
            if (run_gamma) cfg.enhancement.gamma_fg = cfg.enhancement.gamma_bg = *run_gamma;
            set_if(run_gamma_fg, cfg.enhancement.gamma_fg);
            set_if(run_gamma_bg, cfg.enhancement.gamma_bg);
            set_if(run_temp, cfg.enhancement.temperature);
            set_if(run_lambda, cfg.lambda_bg);
            set_if(run_layers, cfg.encoder.n_layers);
            set_if(run_pbias, cfg.encoder.position_bias);
            set_if(run_wscale, cfg.encoder.weight_scale);
            if (run_no_enhance) cfg.enhance = false;
            return cli::cmd_run(cfg, run_c.out, std::cout);
        }
        if (*extract) {
            auto cfg = cli::extract_config_from_json(config_doc(ex_c));
            set_if(ex_c.seed, cfg.seed);
            if (!ex_scenes.empty()) cfg.scenes.assign(ex_scenes.begin(), ex_scenes.end());
            if (ex_shots) cfg.shots = *ex_shots;
            return cli::cmd_extract(cfg, ex_c.out, std::cout);
        }
        if (*align) {
            auto cfg = cli::align_config_from_json(config_doc(al_c));
            set_if(al_c.seed, cfg.seed);
            if (al_episode) cfg.episode = *al_episode;
            if (al_repo) cfg.repository = fs::path(*al_repo);
            if (al_bank) cfg.bank = fs::path(*al_bank);
            set_if(al_domain, cfg.bank_domain);
            set_if(al_steps, cfg.steps);
            set_if(al_shared, cfg.shared_dim);
            set_if(al_text_dim, cfg.text_dim);
            set_if(al_lr, cfg.learning_rate);
            set_if(al_tau, cfg.tau_ctr);
            set_if(al_lambda, cfg.lambda_bg);
            if (al_check) cfg.check_grad = true;
            return cli::cmd_align(cfg, al_c.out, std::cout);
        }
        if (*profile) {
            auto cfg = cli::profile_config_from_json(config_doc(pr_c));
            set_if(pr_c.seed, cfg.seed);
            if (pr_dump) cfg.dump = *pr_dump;
            if (pr_after) cfg.after = fs::path(*pr_after);
            return cli::cmd_profile(cfg, pr_c.out, std::cout);
        }
        if (*bank) return cli::cmd_bank(bank_domain, bank_size, bank_out, std::cout);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return static_cast<int>(e.category());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return static_cast<int>(ErrorCategory::Data);
    }
    return static_cast<int>(ErrorCategory::Usage);
}
