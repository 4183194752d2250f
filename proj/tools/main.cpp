#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "slipsim/io.hpp"
#include "slipsim/model.hpp"
#include "slipsim/stats.hpp"

namespace fs = std::filesystem;
using namespace slipsim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitViolation = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;

struct SimulateOptions {
  ModelConfig config;
  std::int64_t replicates = 1;
  std::string out_dir = "slipsim-out";
};

struct StatsOptions {
  std::string in_dir;
  std::string out_dir;
  int lambda_bins = 21;
  std::int64_t tau_linear_max = 10;
  int slippage_bins = 80;
  std::optional<double> slippage_lo;
  std::optional<double> slippage_hi;
};

struct VerifyOptions {
  ModelConfig config;
  std::int64_t fault_index = -1;  // trade index to misprice in the detector path
};

struct ModelFlags {
  CLI::Option* n;
  CLI::Option* mu;
  CLI::Option* sigma;
  CLI::Option* trades;
  CLI::Option* warmup;
  CLI::Option* seed;
  CLI::Option* initial_price;
  std::string config_file;
};

ModelFlags add_model_flags(CLI::App* cmd, ModelConfig& cfg) {
  ModelFlags f;
  f.n = cmd->add_option("--n", cfg.n_agents, "total number of agents")->envname("SLIPSIM_N");
  f.mu = cmd->add_option("--mu", cfg.mu, "mean of the aggressiveness distribution")
             ->envname("SLIPSIM_MU");
  f.sigma = cmd->add_option("--sigma", cfg.sigma, "std deviation of the aggressiveness distribution")
                ->envname("SLIPSIM_SIGMA");
  f.trades = cmd->add_option("--trades", cfg.n_trades, "number of trades to record after warmup")
                 ->envname("SLIPSIM_TRADES");
  f.warmup =
      cmd->add_option("--warmup", cfg.warmup_trades, "warmup trades to discard (-1: 10% of --trades)")
          ->envname("SLIPSIM_WARMUP");
  f.seed = cmd->add_option("--seed", cfg.seed, "RNG seed")->envname("SLIPSIM_SEED");
  f.initial_price = cmd->add_option("--initial-price", cfg.initial_price, "starting price")
                        ->envname("SLIPSIM_INITIAL_PRICE");
  cmd->add_option("--config", f.config_file, "config file with key=value lines");
  return f;
}

// Applies config-file values to fields not already set by a flag or env var.
// Throws std::invalid_argument on unreadable files or unknown keys.
void apply_config_file(const ModelFlags& flags, ModelConfig& cfg) {
  if (flags.config_file.empty()) return;
  std::ifstream in(flags.config_file);
  if (!in) throw std::invalid_argument("config: cannot read " + flags.config_file);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto strip = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    const std::string t = strip(line);
    if (t.empty() || t[0] == '#' || t[0] == '[') continue;
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config: malformed line " + std::to_string(lineno));
    }
    const std::string key = strip(t.substr(0, eq));
    const std::string value = strip(t.substr(eq + 1));
    const auto set_i64 = [&](CLI::Option* opt, std::int64_t& field) {
      if (opt->count() == 0) field = std::stoll(value);
    };
    if (key == "n") {
      set_i64(flags.n, cfg.n_agents);
    } else if (key == "mu") {
      if (flags.mu->count() == 0) cfg.mu = std::stod(value);
    } else if (key == "sigma") {
      if (flags.sigma->count() == 0) cfg.sigma = std::stod(value);
    } else if (key == "trades") {
      set_i64(flags.trades, cfg.n_trades);
    } else if (key == "warmup") {
      set_i64(flags.warmup, cfg.warmup_trades);
    } else if (key == "seed") {
      if (flags.seed->count() == 0) cfg.seed = std::stoull(value);
    } else if (key == "initial_price") {
      if (flags.initial_price->count() == 0) cfg.initial_price = std::stod(value);
    } else {
      throw std::invalid_argument("config: unknown key '" + key + "'");
    }
  }
}

StatsAccumulators accumulate(const RunArtifacts& run, const StatsBinning& binning) {
  StatsAccumulators accs(binning);
  for (const TradeLogRow& row : run.trades) accs.record_trade(row);
  for (const ExecutionRecord& rec : run.executions) accs.record_execution(rec);
  return accs;
}

std::vector<ManifestEntry> write_run_files(const fs::path& dir, const RunArtifacts& run,
                                           const fs::path& rel_prefix) {
  write_trade_log(dir / "trades.tsv", run.trades);
  write_execution_records(dir / "executions.tsv", run.executions);
  write_open_positions(dir / "open_positions.tsv", run.open_positions);
  std::vector<ManifestEntry> entries;
  for (const char* name : {"trades.tsv", "executions.tsv", "open_positions.tsv"}) {
    entries.push_back(
        ManifestEntry{(rel_prefix / name).generic_string(), fnv1a_file_digest(dir / name)});
  }
  return entries;
}

int cmd_simulate(const SimulateOptions& opt) {
  try {
    opt.config.validate();
    if (opt.replicates < 1) throw std::invalid_argument("replicates: must be >= 1");
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    const fs::path out_dir(opt.out_dir);
    fs::create_directories(out_dir);
    std::vector<ManifestEntry> entries;
    StatsAccumulators merged;

    if (opt.replicates == 1) {
      const RunArtifacts run = run_simulation(opt.config);
      entries = write_run_files(out_dir, run, "");
      merged = accumulate(run, StatsBinning{});
    } else {
      std::vector<std::future<RunArtifacts>> futures;
      for (std::int64_t r = 0; r < opt.replicates; ++r) {
        ModelConfig cfg = opt.config;
        cfg.seed = RngStream::mix(opt.config.seed ^ static_cast<std::uint64_t>(r));
        futures.push_back(std::async(std::launch::async,
                                     [cfg]() { return run_simulation(cfg); }));
      }
      for (std::int64_t r = 0; r < opt.replicates; ++r) {
        const RunArtifacts run = futures[static_cast<std::size_t>(r)].get();
        char sub[32];
        std::snprintf(sub, sizeof(sub), "rep%03lld", static_cast<long long>(r));
        fs::create_directories(out_dir / sub);
        auto rep_entries = write_run_files(out_dir / sub, run, sub);
        entries.insert(entries.end(), rep_entries.begin(), rep_entries.end());
        merged.merge(accumulate(run, StatsBinning{}));
      }
    }

    write_summary(out_dir / "summary.txt", summarize(merged));
    entries.push_back(ManifestEntry{"summary.txt", fnv1a_file_digest(out_dir / "summary.txt")});
    write_manifest(out_dir / "manifest.json", opt.config, opt.replicates, entries);
    std::cout << "wrote " << entries.size() + 1 << " files to " << out_dir.string() << '\n';
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "simulate failed: " << e.what() << '\n';
    return kExitIo;
  }
}

int cmd_verify(const VerifyOptions& opt) {
  try {
    opt.config.validate();
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  }

  struct Violation {
    std::int64_t trade_index;
    std::string identity;
  };
  std::vector<Violation> violations;
  double max_residual = 0.0;
  double max_dw_mismatch = 0.0;
  double max_tr_mismatch = 0.0;

  const auto observer = [&](const TradeAudit& audit) {
    // Bit-exact: the buyer loses and the seller gains the very same notional,
    // so the applied deltas must reproduce it without tolerance.
    const bool cash_ok =
        audit.buyer_after.cash == audit.buyer_before.cash - audit.notional &&
        audit.seller_after.cash == audit.seller_before.cash + audit.notional;
    const Qty d_pos = (audit.buyer_after.position - audit.buyer_before.position) +
                      (audit.seller_after.position - audit.seller_before.position);
    if (!cash_ok || d_pos != 0) {
      violations.push_back({audit.trade.index, "cash/position conservation"});
    }

    for (const AgentAccount* pair : {&audit.buyer_before, &audit.seller_before}) {
      const bool is_buyer = pair == &audit.buyer_before;
      const AgentAccount& after = is_buyer ? audit.buyer_after : audit.seller_after;
      const double two_form =
          (static_cast<double>(after.position) * audit.trade.price -
           static_cast<double>(pair->position) * audit.prev_price) -
          static_cast<double>(after.position - pair->position) * audit.trade.price;
      const double direct = delta_wealth(pair->position, audit.prev_price, audit.trade.price);
      const double scale = std::max({std::abs(two_form), std::abs(direct), 1.0});
      const double mismatch = std::abs(two_form - direct) / scale;
      max_dw_mismatch = std::max(max_dw_mismatch, mismatch);
      if (mismatch > 1e-12) violations.push_back({audit.trade.index, "delta-W two-form"});

      // TR from the fill sum vs -W from the cash account (dual route).
      Price fill = audit.trade.price;
      if (audit.trade.index == opt.fault_index) fill += 1e-6;  // injected mispricing
      const Qty delta_x = is_buyer ? 1 : -1;
      const double tr = static_cast<double>(delta_x) * (fill - pair->reference_price);
      const double w = wealth(after, audit.trade.price);
      const double tr_mismatch = std::abs(tr + w);
      max_tr_mismatch = std::max(max_tr_mismatch, tr_mismatch);
      if (tr_mismatch > 1e-9) violations.push_back({audit.trade.index, "TR = -W identity"});
    }

    const double tol = std::max(
        1e-9, 1e-9 * (audit.v_buy_before + audit.v_sell_before) *
                  std::abs(audit.trade.price - audit.prev_price));
    max_residual = std::max(max_residual, std::abs(audit.residual));
    if (std::abs(audit.residual) > tol) {
      violations.push_back({audit.trade.index, "market delta-W identity"});
    }
  };

  try {
    run_simulation(opt.config, observer);
  } catch (const std::exception& e) {
    std::cerr << "verify failed: " << e.what() << '\n';
    return kExitIo;
  }

  // Pairwise zero-sum scenario: one buyer, one seller, shared reference price.
  MarketState pair_state;
  pair_state.last_price = 100.0;
  AgentAccount b = open_account(Side::Buyer, 1, 100.0, 0);
  b.id = 1;
  AgentAccount s = open_account(Side::Seller, 1, 100.0, 0);
  s.id = 2;
  apply_trade(pair_state, b, s, 1, 101.0);
  const double tr_b = -wealth(b, pair_state.last_price);
  const double tr_s = -wealth(s, pair_state.last_price);
  std::cout << "pairwise zero-sum: TR^b = " << format_double(tr_b)
            << ", TR^s = " << format_double(tr_s)
            << ", sum = " << format_double(tr_b + tr_s) << '\n';
  if (tr_b + tr_s != 0.0) violations.push_back({pair_state.trade_count, "pairwise zero-sum"});

  std::cout << "max |sum dW residual| = " << format_double(max_residual) << '\n';
  std::cout << "max delta-W two-form rel mismatch = " << format_double(max_dw_mismatch) << '\n';
  std::cout << "max |TR + W| = " << format_double(max_tr_mismatch) << '\n';

  if (!violations.empty()) {
    std::cout << violations.size() << " violation(s):\n";
    for (const Violation& v : violations) {
      std::cout << "  trade " << v.trade_index << ": " << v.identity << '\n';
    }
    return kExitViolation;
  }
  std::cout << "verify: all identities hold\n";
  return kExitOk;
}

int cmd_stats(const StatsOptions& opt) {
  Manifest manifest;
  std::vector<TradeLogRow> trades;
  std::vector<ExecutionRecord> executions;
  const fs::path in_dir(opt.in_dir);
  try {
    manifest = read_manifest(in_dir / "manifest.json");
    if (manifest.replicates <= 1) {
      trades = read_trade_log(in_dir / "trades.tsv");
      executions = read_execution_records(in_dir / "executions.tsv");
    } else {
      for (std::int64_t r = 0; r < manifest.replicates; ++r) {
        char sub[32];
        std::snprintf(sub, sizeof(sub), "rep%03lld", static_cast<long long>(r));
        auto t = read_trade_log(in_dir / sub / "trades.tsv");
        auto e = read_execution_records(in_dir / sub / "executions.tsv");
        trades.insert(trades.end(), t.begin(), t.end());
        executions.insert(executions.end(), e.begin(), e.end());
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "cannot load artifacts: " << e.what() << '\n';
    return kExitUsage;
  }
  if (trades.empty() || executions.size() < 3) {
    std::cerr << "artifacts contain too little data\n";
    return kExitUsage;
  }

  StatsBinning binning;
  binning.lambda_bins = opt.lambda_bins;
  binning.tau_linear_max = opt.tau_linear_max;
  binning.slippage_bins = opt.slippage_bins;
  if (opt.slippage_lo && opt.slippage_hi) {
    binning.slippage_lo = *opt.slippage_lo;
    binning.slippage_hi = *opt.slippage_hi;
  } else {
    // auto-scale from the data, first pass
    double lo = executions.front().slippage;
    double hi = lo;
    for (const ExecutionRecord& r : executions) {
      lo = std::min(lo, r.slippage);
      hi = std::max(hi, r.slippage);
    }
    const double pad = std::max(1e-12, (hi - lo) * 1e-9);
    binning.slippage_lo = lo;
    binning.slippage_hi = hi + pad;
  }
  double tau_hi = 1.0;
  for (const ExecutionRecord& r : executions) {
    tau_hi = std::max(tau_hi, static_cast<double>(r.execution_time));
  }
  binning.exec_time_lo = 0.0;
  binning.exec_time_hi = tau_hi + 1.0;
  binning.exec_time_bins = static_cast<int>(std::min(tau_hi + 1.0, 500.0));

  StatsAccumulators accs(binning);
  for (const TradeLogRow& row : trades) accs.record_trade(row);
  for (const ExecutionRecord& rec : executions) accs.record_execution(rec);

  try {
    const fs::path out_dir = opt.out_dir.empty() ? in_dir : fs::path(opt.out_dir);
    fs::create_directories(out_dir);
    write_histogram_table(out_dir / "fig1_slippage_hist.tsv", accs.slippage_hist());
    write_histogram_table(out_dir / "fig1b_exec_time_hist.tsv", accs.exec_time_hist());
    write_binned_mean_table(out_dir / "fig2_imbalance_vs_dp.tsv", accs.lambda_vs_dp(), "lambda",
                            "dp");
    write_binned_mean_table(out_dir / "fig3_slippage_vs_tau.tsv", accs.tau_vs_slippage(), "tau",
                            "slippage");
    write_summary(out_dir / "summary.txt", summarize(accs));
    std::cout << "wrote figure data to " << out_dir.string() << '\n';
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "stats failed: " << e.what() << '\n';
    return kExitIo;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"negotiation-based market simulator and slippage accounting"};
  app.require_subcommand(1);

  SimulateOptions sim_opt;
  CLI::App* sim = app.add_subcommand("simulate", "run the model and write artifacts");
  const ModelFlags sim_flags = add_model_flags(sim, sim_opt.config);
  sim->add_option("--replicates", sim_opt.replicates, "independent runs with derived seeds")
      ->envname("SLIPSIM_REPLICATES");
  sim->add_option("--out-dir", sim_opt.out_dir, "output directory")->envname("SLIPSIM_OUT_DIR");

  VerifyOptions ver_opt;
  ver_opt.config.n_trades = 2000;
  CLI::App* ver = app.add_subcommand("verify", "run a short simulation asserting all identities");
  const ModelFlags ver_flags = add_model_flags(ver, ver_opt.config);
  ver->add_option("--inject-fault", ver_opt.fault_index)->group("");  // test hook, hidden

  StatsOptions st_opt;
  CLI::App* st = app.add_subcommand("stats", "recompute figure data from run artifacts");
  st->add_option("--in-dir", st_opt.in_dir, "artifact directory")->required();
  st->add_option("--out-dir", st_opt.out_dir, "output directory (default: in-dir)");
  st->add_option("--lambda-bins", st_opt.lambda_bins, "imbalance bins over [-1,1]");
  st->add_option("--tau-linear-max", st_opt.tau_linear_max, "unit-width tau bins up to this");
  st->add_option("--slip-bins", st_opt.slippage_bins, "slippage histogram bins");
  double slo{}, shi{};
  auto* olo = st->add_option("--slip-lo", slo, "slippage histogram lower bound");
  auto* ohi = st->add_option("--slip-hi", shi, "slippage histogram upper bound");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (olo->count() > 0) st_opt.slippage_lo = slo;
  if (ohi->count() > 0) st_opt.slippage_hi = shi;

  try {
    if (sim->parsed()) apply_config_file(sim_flags, sim_opt.config);
    if (ver->parsed()) apply_config_file(ver_flags, ver_opt.config);
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return kExitUsage;
  }

  if (sim->parsed()) return cmd_simulate(sim_opt);
  if (ver->parsed()) return cmd_verify(ver_opt);
  if (st->parsed()) return cmd_stats(st_opt);
  return kExitUsage;
}
