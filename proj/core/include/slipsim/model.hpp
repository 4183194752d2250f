#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "slipsim/accounting.hpp"
#include "slipsim/negotiation.hpp"
#include "slipsim/types.hpp"

namespace slipsim {

struct ModelConfig {
  std::int64_t n_agents = 10;
  double mu = -0.5;
  double sigma = 0.2;
  std::uint64_t seed = 0;
  std::int64_t n_trades = 1;
  std::int64_t warmup_trades = -1;  // -1: 10% of n_trades
  Price initial_price = 0.0;
  std::int64_t resample_cap = 10'000'000;  // resamples without a trade before aborting

  std::int64_t effective_warmup() const {
    return warmup_trades >= 0 ? warmup_trades : n_trades / 10;
  }
  // Throws std::invalid_argument naming the offending field.
  void validate() const;
};

struct ExecutionRecord {
  AgentId agent_id{};
  Side side{};
  std::int64_t arrival_index{};
  std::int64_t liquidation_index{};
  std::int64_t execution_time{};  // tau, in trades
  Price reference_price{};
  Price fill_price{};
  double slippage{};
};

struct OpenPositionRecord {
  AgentId agent_id{};
  Side side{};
  std::int64_t arrival_index{};
  Price reference_price{};
  Price mark_price{};
  double provisional_slippage{};
};

struct TradeLogRow {
  std::int64_t index{};
  Price price{};
  AgentId buyer_id{};
  AgentId seller_id{};
  double v_buy_before{};
  double v_sell_before{};
  double lambda_before{};
  double delta_p{};
  double sum_dw_residual{};
};

// Named substreams keep agent selection, aggressiveness draws and side
// assignment decoupled, so the trade log is a pure function of (seed, config).
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  std::mt19937_64& agent_selection() { return agent_selection_; }
  std::mt19937_64& aggressiveness() { return aggressiveness_; }
  std::mt19937_64& side_assignment() { return side_assignment_; }

  static std::uint64_t mix(std::uint64_t x);  // splitmix64 finalizer

 private:
  std::mt19937_64 agent_selection_;
  std::mt19937_64 aggressiveness_;
  std::mt19937_64 side_assignment_;
};

struct Population {
  MarketState state;
  QuoteBook book;
  AgentId next_agent_id{};
};

struct TradeOutcome {
  Trade trade;
  AgentAccount buyer;   // final, liquidated
  AgentAccount seller;  // final, liquidated
};

// Per-trade audit trail handed to an observer; used by verification paths.
struct TradeAudit {
  Trade trade;
  Price prev_price{};
  double v_buy_before{};
  double v_sell_before{};
  double notional{};  // the exact cash amount moved between the parties
  double residual{};
  AgentAccount buyer_before;
  AgentAccount seller_before;
  AgentAccount buyer_after;
  AgentAccount seller_after;
  std::vector<Qty> positions_before;  // all active agents, pre-trade
};

using TradeObserver = std::function<void(const TradeAudit&)>;

struct RunArtifacts {
  std::vector<TradeLogRow> trades;
  std::vector<ExecutionRecord> executions;  // liquidated after warmup
  std::vector<OpenPositionRecord> open_positions;
  Population final_population;
};

Population init_population(const ModelConfig& config, RngStream& rng);

// Replaces one uniformly chosen agent's aggressiveness with a fresh draw.
void resample_step(Population& pop, const ModelConfig& config, RngStream& rng);

// If the trade condition holds, executes a unit trade between the two most
// aggressive agents at the rule's price and retires both from state and book.
std::optional<TradeOutcome> try_trade(Population& pop, PriceRule rule = &midpoint_price);

// Creates two arrivals sequentially; each is a buyer with probability
// N^S / (N^S + N^B) over the counts at its own draw time.
std::pair<AgentId, AgentId> replenish(Population& pop, const ModelConfig& config, RngStream& rng);

// Runs until n_trades + warmup trades have fired. Throws std::runtime_error
// if resample_cap events pass without a trade.
RunArtifacts run_simulation(const ModelConfig& config, const TradeObserver& observer = {});

}  // namespace slipsim
