#include "qgame/errors.hpp"
#include "qgame/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

qgame::ExperimentConfig resolve(const std::string& config, const std::string& preset, const std::string& fallback) {
  if (!config.empty()) return qgame::load_config(config);
  return qgame::preset(preset.empty() ? fallback : preset);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-agent zero-sum game synchronization: simulation, policy iteration and online learning"};
  app.require_subcommand(1);

  std::string config, preset, out = "out";
  std::optional<std::uint64_t> seed;
  std::string which = "coop";

  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* c = sub->add_option("--config", config, "JSON experiment configuration");
    if (config_required) c->required();
    sub->add_option("--out", out, "output directory")->capture_default_str();
    sub->add_option("--seed", seed, "override the configured seed");
  };
  auto add_preset = [&](CLI::App* sub) {
    sub->add_option("--preset", preset, "built-in configuration")
        ->check(CLI::IsMember(qgame::preset_names()));
  };

  auto* sim = app.add_subcommand("simulate", "roll out configured feedback gains");
  add_common(sim, true);
  auto* pi_coop = app.add_subcommand("pi-coop", "model-based or data-driven policy iteration, cooperative");
  add_common(pi_coop, true);
  auto* pi_non = app.add_subcommand("pi-noncoop", "policy iteration, non-cooperative");
  add_common(pi_non, true);
  auto* learn_coop = app.add_subcommand("learn-coop", "online actor-critic-disturber learning, cooperative");
  add_common(learn_coop, false);
  add_preset(learn_coop);
  auto* learn_non = app.add_subcommand("learn-noncoop", "online learning with adversary estimators");
  add_common(learn_non, false);
  add_preset(learn_non);
  auto* verify = app.add_subcommand("verify", "attenuation, L2-gain and saddle checks at learned policies");
  add_common(verify, false);
  add_preset(verify);
  auto* repro = app.add_subcommand("reproduce-paper", "four-agent reference experiment with figure data");
  repro->add_option("--case", which, "coop or noncoop")->check(CLI::IsMember({"coop", "noncoop"}));
  add_common(repro, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    auto finish = [&](qgame::ExperimentConfig cfg) {
      if (seed) cfg.set_seed(*seed);
      return cfg;
    };
    qgame::RunOutcome outcome;
    if (*sim) {
      outcome = qgame::run_simulate(finish(qgame::load_config(config)), out);
    } else if (*pi_coop) {
      outcome = qgame::run_policy_iteration(finish(qgame::load_config(config)), qgame::GameMode::cooperative, out);
    } else if (*pi_non) {
      outcome = qgame::run_policy_iteration(finish(qgame::load_config(config)), qgame::GameMode::noncooperative, out);
    } else if (*learn_coop) {
      outcome = qgame::run_learning(finish(resolve(config, preset, "paper-sec5-coop")), qgame::GameMode::cooperative, out);
    } else if (*learn_non) {
      outcome = qgame::run_learning(finish(resolve(config, preset, "paper-sec5-noncoop")),
                                    qgame::GameMode::noncooperative, out);
    } else if (*verify) {
      outcome = qgame::run_verify(finish(resolve(config, preset, "paper-sec5-coop")), out);
    } else if (*repro) {
      const bool coop = which == "coop";
      qgame::ExperimentConfig cfg = resolve(config, "", coop ? "paper-sec5-coop" : "paper-sec5-noncoop");
      outcome = qgame::reproduce(finish(cfg), coop ? qgame::GameMode::cooperative : qgame::GameMode::noncooperative,
                                 out);
    }
    std::cout << outcome.summary.dump(2) << '\n';
    return 0;
  } catch (const qgame::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return qgame::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
