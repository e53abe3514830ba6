#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ddn/cli.hpp"
#include "ddn/errors.hpp"

namespace {

// Register the full shared option set on a subcommand; every config-file key
// has a matching flag.
void add_options(CLI::App* cmd, ddn::cli::RunConfig& cfg, std::string& horizons_spec) {
  cmd->add_option("--config", [&cfg](const std::vector<std::string>& paths) {
        for (const auto& p : paths) ddn::cli::load_config_file(cfg, p);
        return true;
      },
      "key=value config file; flags override its values")
      ->trigger_on_parse();
  cmd->add_option("--seed", cfg.seed, "master seed");
  cmd->add_option("--feature-dim,-D", cfg.feature_dim, "observation dimensionality D");
  cmd->add_option("--actions,-A", cfg.num_actions, "action vocabulary size A");
  cmd->add_option("--predicates,-P", cfg.num_predicates, "predicate count P_n");
  cmd->add_option("--latent-dim", cfg.latent_dim, "latent embedding width");
  cmd->add_option("--alpha", cfg.alpha, "state-loss weight in the combined loss");
  cmd->add_option("--lr", cfg.lr, "Adam learning rate");
  cmd->add_option("--batch", cfg.batch, "batch size (clamped to dataset size)");
  cmd->add_option("--epochs", cfg.epochs, "training epochs");
  cmd->add_option("--beta", cfg.beta, "planner iteration budget (0 = 20*H)");
  cmd->add_option("--eta", cfg.eta, "planner beam width");
  cmd->add_option("--epsilon", cfg.epsilon, "planner goal threshold");
  cmd->add_option("--kb", cfg.k_b, "planner branching factor (0 = min(A, 20))");
  cmd->add_option("--horizon,--horizons", horizons_spec,
                  "horizons: '3', '3:5' or comma list");
  cmd->add_option("--n", cfg.n, "sequences to generate");
  cmd->add_option("--sigma", cfg.sigma, "observation noise scale");
  cmd->add_option("--ablation", cfg.ablation, "full | no-T | no-P");
  cmd->add_flag("--teacher-forcing", cfg.teacher_forcing,
                "train on ground-truth inputs instead of cross-fed predictions");
  cmd->add_option("--policy", cfg.policy, "plan policy: ddn | greedy | random | rb | rnn");
  cmd->add_option("--threads", cfg.threads, "worker threads (results are unchanged)");
  cmd->add_option("--out-dir", cfg.out_dir, "output directory");
  cmd->add_option("--data", cfg.data, "dataset path");
  cmd->add_option("--train-data", cfg.train_data, "training dataset path (rb policy)");
  cmd->add_option("--checkpoint", cfg.checkpoint, "model checkpoint path");
  cmd->add_option("--input", cfg.input, "input artifact (eval / inspect)");
  cmd->add_option("--out", cfg.out, "output file override");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latent-space procedure planning with dual dynamics models"};
  app.require_subcommand(1);

  ddn::cli::RunConfig cfg;
  std::string horizons_spec;

  CLI::App* gen = app.add_subcommand("gen", "generate a synthetic task and datasets");
  CLI::App* train = app.add_subcommand("train", "train a model on a dataset");
  CLI::App* plan = app.add_subcommand("plan", "plan action sequences for a test set");
  CLI::App* walkthrough =
      app.add_subcommand("walkthrough", "order observation pools for a test set");
  CLI::App* eval = app.add_subcommand("eval", "compute metrics from a plans/orderings csv");
  CLI::App* inspect = app.add_subcommand("inspect", "dump the header of a binary artifact");
  for (CLI::App* cmd : {gen, train, plan, walkthrough, eval, inspect}) {
    add_options(cmd, cfg, horizons_spec);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ddn::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  return ddn::cli::guarded([&] {
    if (!horizons_spec.empty()) cfg.horizons = ddn::cli::parse_horizons(horizons_spec);
    if (gen->parsed()) ddn::cli::cmd_gen(cfg);
    if (train->parsed()) ddn::cli::cmd_train(cfg);
    if (plan->parsed()) ddn::cli::cmd_plan(cfg);
    if (walkthrough->parsed()) ddn::cli::cmd_walkthrough(cfg);
    if (eval->parsed()) ddn::cli::cmd_eval(cfg);
    if (inspect->parsed()) ddn::cli::cmd_inspect(cfg);
  });
}
