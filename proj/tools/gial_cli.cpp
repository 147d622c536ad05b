// Command-line front end: generate, analyze, train, ablate, sweep.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "gial/error.hpp"
#include "gial/experiment.hpp"

namespace fs = std::filesystem;

namespace {

enum ExitCode { kOk = 0, kUsage = 2, kData = 3, kNumerical = 4 };

struct TrainOverrides {
  std::optional<double> alpha, beta, learning_rate, l2_weight;
  std::optional<std::string> encoder, encoder_role, selection;
  std::optional<std::size_t> dim, encoder_layers, heads, generator_layers, patience, max_epochs, discriminator_steps;
  std::optional<std::uint64_t> seed;
  bool strict_grid = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--alpha", alpha, "Weight of the mutual-information term");
    cmd->add_option("--beta", beta, "Weight of the counterfactual discriminator term");
    cmd->add_option("--lr", learning_rate, "Adam learning rate");
    cmd->add_option("--l2", l2_weight, "Weight decay on weight matrices");
    cmd->add_option("--encoder", encoder, "gcn or gat")->check(CLI::IsMember({"gcn", "gat"}));
    cmd->add_option("--encoder-role", encoder_role, "shared or max_only")
        ->check(CLI::IsMember({"shared", "max_only"}));
    cmd->add_option("--selection", selection, "factual_mse, oracle_pehe or final_epoch")
        ->check(CLI::IsMember({"factual_mse", "oracle_pehe", "final_epoch"}));
    cmd->add_option("--dim", dim, "Representation width");
    cmd->add_option("--encoder-layers", encoder_layers);
    cmd->add_option("--heads", heads, "Attention heads (gat)");
    cmd->add_option("--generator-layers", generator_layers);
    cmd->add_option("--patience", patience);
    cmd->add_option("--epochs", max_epochs, "Maximum epochs");
    cmd->add_option("--discriminator-steps", discriminator_steps);
    cmd->add_option("--seed", seed);
    cmd->add_flag("--strict-grid", strict_grid, "Reject values outside the hyperparameter grid");
  }

  gial::TrainConfig apply(gial::TrainConfig c) const {
    if (alpha) c.alpha = *alpha;
    if (beta) c.beta = *beta;
    if (learning_rate) c.learning_rate = *learning_rate;
    if (l2_weight) c.l2_weight = *l2_weight;
    if (encoder) c.encoder = gial::encoder_kind_from_string(*encoder);
    if (encoder_role) c.encoder_role = *encoder_role == "shared" ? gial::EncoderRole::shared : gial::EncoderRole::max_only;
    if (selection) {
      c.selection = *selection == "factual_mse"   ? gial::SelectionCriterion::factual_mse
                    : *selection == "oracle_pehe" ? gial::SelectionCriterion::oracle_pehe
                                                  : gial::SelectionCriterion::final_epoch;
    }
    if (dim) c.representation_dim = *dim;
    if (encoder_layers) c.encoder_layers = *encoder_layers;
    if (heads) c.attention_heads = *heads;
    if (generator_layers) c.generator_layers = *generator_layers;
    if (patience) c.patience = *patience;
    if (max_epochs) c.max_epochs = *max_epochs;
    if (discriminator_steps) c.discriminator_steps = *discriminator_steps;
    if (seed) c.seed = *seed;
    if (strict_grid) c.strict_grid = true;
    return c;
  }
};

struct RunArgs {
  std::string manifest;
  std::string config;
  std::string out;
  TrainOverrides overrides;

  gial::TrainConfig train_config() const {
    gial::TrainConfig base;
    if (!config.empty()) base = gial::load_train_config(config);
    gial::TrainConfig c = overrides.apply(base);
    c.validate();
    return c;
  }
};

void add_run_options(CLI::App* cmd, RunArgs& args) {
  cmd->add_option("--manifest", args.manifest, "Dataset manifest JSON")->required();
  cmd->add_option("--config", args.config, "Training config JSON");
  cmd->add_option("--out", args.out, "Output directory")->required();
  args.overrides.attach(cmd);
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph infomax adversarial learning for networked treatment effects"};
  app.require_subcommand(1);

  // generate
  std::string gen_config_path, gen_out;
  std::optional<std::uint64_t> gen_seed;
  std::optional<std::size_t> gen_nodes;
  std::optional<double> gen_homophily, gen_bias;
  auto* generate = app.add_subcommand("generate", "Write a synthetic dataset");
  generate->add_option("--config", gen_config_path, "Generator config JSON");
  generate->add_option("--out", gen_out, "Output directory")->required();
  generate->add_option("--seed", gen_seed);
  generate->add_option("--nodes", gen_nodes);
  generate->add_option("--homophily", gen_homophily);
  generate->add_option("--bias", gen_bias);

  // analyze
  std::string edges_path, treatment_path, census_csv;
  auto* analyze = app.add_subcommand("analyze", "Count homogeneous and heterogeneous edges");
  analyze->add_option("--edges", edges_path, "Edge list, u<TAB>v per line")->required();
  analyze->add_option("--treatment", treatment_path, "Treatment per node (first CSV column)")->required();
  analyze->add_option("--csv", census_csv, "Also write the census as CSV");

  RunArgs train_args, ablate_args, sweep_args;
  auto* train = app.add_subcommand("train", "Train, evaluate and write report.json and trace.csv");
  add_run_options(train, train_args);

  std::vector<std::string> variants{"full", "no_smi", "no_cd"};
  auto* ablate = app.add_subcommand("ablate", "Train the full model and its ablations");
  add_run_options(ablate, ablate_args);
  ablate->add_option("--variants", variants, "Subset of full,no_smi,no_cd")
      ->delimiter(',')
      ->check(CLI::IsMember({"full", "no_smi", "no_cd"}));

  std::vector<double> alphas(gial::kTradeoffGrid.begin(), gial::kTradeoffGrid.end());
  std::vector<double> betas = alphas;
  std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());
  auto* sweep = app.add_subcommand("sweep", "Grid over alpha and beta");
  add_run_options(sweep, sweep_args);
  sweep->add_option("--alphas", alphas, "Comma-separated alpha values")->delimiter(',');
  sweep->add_option("--betas", betas, "Comma-separated beta values")->delimiter(',');
  sweep->add_option("--jobs", jobs, "Parallel runs")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*generate) {
      gial::GenConfig cfg;
      if (!gen_config_path.empty()) cfg = gial::load_gen_config(gen_config_path);
      if (gen_seed) cfg.seed = *gen_seed;
      if (gen_nodes) cfg.nodes = *gen_nodes;
      if (gen_homophily) cfg.homophily = *gen_homophily;
      if (gen_bias) cfg.bias = *gen_bias;
      cfg.validate();
      std::vector<std::string> warnings;
      const fs::path manifest = gial::generate_to_dir(cfg, gen_out, &warnings);
      print_warnings(warnings);
      std::cout << manifest.string() << '\n';
    } else if (*analyze) {
      const gial::EdgeCensus census = gial::analyze_files(edges_path, treatment_path);
      std::cout << gial::census_to_json(census) << '\n';
      if (!census_csv.empty()) gial::write_text_file(census_csv, gial::census_to_csv(census));
    } else if (*train) {
      const gial::TrainConfig cfg = train_args.train_config();
      const gial::Dataset data = gial::load_dataset(train_args.manifest);
      const auto report = gial::run_experiment(data, cfg, train_args.out);
      std::cout << gial::to_json(report) << '\n';
    } else if (*ablate) {
      const gial::TrainConfig cfg = ablate_args.train_config();
      const gial::Dataset data = gial::load_dataset(ablate_args.manifest);
      std::vector<gial::Variant> vs;
      for (const auto& v : variants) vs.push_back(gial::variant_from_string(v));
      const auto reports = gial::run_ablation(data, cfg, ablate_args.out, vs);
      std::cout << gial::read_text_file(fs::path(ablate_args.out) / "ablation.csv");
    } else if (*sweep) {
      const gial::TrainConfig cfg = sweep_args.train_config();
      const gial::Dataset data = gial::load_dataset(sweep_args.manifest);
      gial::run_sweep(data, cfg, alphas, betas, jobs, sweep_args.out);
      std::cout << gial::read_text_file(fs::path(sweep_args.out) / "sweep.csv");
    }
  } catch (const gial::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const gial::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const gial::ContractViolation& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const gial::DimensionError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  }
  return kOk;
}
