// iblab: information bottleneck laboratory on exact discrete distributions.

#include "iblab/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

void add_common(CLI::App& sub, iblab::cli::RunConfig& cfg, std::size_t& card_t, std::size_t& card_s) {
  sub.add_option("--instance", cfg.instance, "JointXY JSON path or family spec, e.g. noisy_mod:n=8,k=2,eta=0.2")
      ->capture_default_str();
  sub.add_option("--betas", cfg.betas, "comma list or log:<count>:<lo>:<hi> / lin:<count>:<lo>:<hi>");
  sub.add_option_function<double>(
      "--target-compression", [&cfg](double r) { cfg.target_compression = r; },
      "sweep: bisect beta between the grid endpoints for this I(X;T) in nats");
  sub.add_option("--surrogate", cfg.surrogate, "identity | square | power:<u> | exp:<scale>");
  sub.add_option("--card-t", card_t, "cardinality of T");
  sub.add_option("--card-s", card_s, "cardinality of S");
  sub.add_option("--seed", cfg.optimizer.seed, "master seed")->capture_default_str();
  sub.add_option_function<int>(
      "--restarts", [&cfg](int r) { cfg.optimizer.restarts = r; cfg.restarts_set = true; },
      "gradient-descent restarts (default 10, 20 for disenib)");
  sub.add_option("--step-size", cfg.optimizer.step_size, "gradient step per unit of row mass p(x)")->capture_default_str();
  sub.add_option("--max-iters", cfg.optimizer.max_iters, "iterations per restart")->capture_default_str();
  sub.add_option("--grad-tolerance", cfg.optimizer.grad_tolerance, "stop when the gradient max-norm falls below")
      ->capture_default_str();
  sub.add_option("--init-scale", cfg.optimizer.init_scale, "std of initial logits")->capture_default_str();
  sub.add_option("--threads", cfg.optimizer.threads, "worker threads for restarts (0 = all cores)");
  sub.add_option("--epsilon", cfg.epsilon, "consistency threshold in nats")->capture_default_str();
  sub.add_option("--trials", cfg.trials, "random tuples per verification suite")->capture_default_str();
  sub.add_option("--out", cfg.out, "output file (stdout when omitted)");
  sub.add_option("--manifest", cfg.manifest, "run manifest path (default <out>.manifest.json)");
  sub.add_option("--encoders", cfg.encoders, "disenib: also write the learned encoders here");
  sub.add_option("--format", cfg.format, "csv | json | text");
  sub.add_flag("--bits", cfg.bits, "display console summaries in bits");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Information bottleneck laboratory on exact discrete distributions"};
  app.require_subcommand(1);
  iblab::cli::RunConfig cfg;
  std::size_t card_t = 0, card_s = 0;
  const std::pair<const char*, const char*> commands[] = {
      {"gen", "write a JointXY instance as JSON"},
      {"sweep", "optimize the IB Lagrangian over a beta grid (CSV)"},
      {"curve", "trace the IB curve with a convex surrogate (CSV)"},
      {"disenib", "optimize the disentangled objective and report consistency (JSON)"},
      {"check", "run the variational sandwich and gap-identity suites"},
  };
  for (const auto& [name, help] : commands) add_common(*app.add_subcommand(name, help), cfg, card_t, card_s);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return iblab::cli::kValidation;
  }
  cfg.subcommand = app.get_subcommands().front()->get_name();
  if (card_t > 0) cfg.card_t = card_t;
  if (card_s > 0) cfg.card_s = card_s;
  return iblab::cli::run(cfg, std::cout, std::cerr);
}
