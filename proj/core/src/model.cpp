#include "slipsim/model.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace slipsim {
namespace {

double draw_epsilon(const ModelConfig& config, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(config.mu, config.sigma);
  return dist(rng);
}

void add_agent(Population& pop, Side side, double epsilon, const ModelConfig&) {
  AgentAccount account =
      open_account(side, 1, pop.state.last_price, pop.state.trade_count);
  account.id = pop.next_agent_id++;
  pop.book.insert(side, Quote{account.id, account.arrival_index, epsilon});
  pop.state.accounts.push_back(account);
}

ExecutionRecord make_record(const AgentAccount& a, const Trade& trade) {
  const Qty delta_x = a.side == Side::Buyer ? 1 : -1;
  const std::array<Fill, 1> fills{Fill{delta_x, trade.price}};
  ExecutionRecord rec;
  rec.agent_id = a.id;
  rec.side = a.side;
  rec.arrival_index = a.arrival_index;
  rec.liquidation_index = *a.liquidation_index;
  rec.execution_time = rec.liquidation_index - rec.arrival_index;
  rec.reference_price = a.reference_price;
  rec.fill_price = trade.price;
  rec.slippage = slippage(fills, a.reference_price);
  return rec;
}

}  // namespace

void ModelConfig::validate() const {
  if (n_agents < 2) throw std::invalid_argument("n_agents: must be >= 2");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("sigma: must be > 0");
  if (!std::isfinite(mu)) throw std::invalid_argument("mu: must be finite");
  if (n_trades < 1) throw std::invalid_argument("n_trades: must be >= 1");
  if (warmup_trades < -1) throw std::invalid_argument("warmup_trades: must be >= 0");
  if (!std::isfinite(initial_price)) throw std::invalid_argument("initial_price: must be finite");
  if (resample_cap < 1) throw std::invalid_argument("resample_cap: must be >= 1");
}

std::uint64_t RngStream::mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t seed)
    : agent_selection_(mix(seed ^ 0x61676E74ULL)),
      aggressiveness_(mix(seed ^ 0x65707331ULL)),
      side_assignment_(mix(seed ^ 0x73696465ULL)) {}

Population init_population(const ModelConfig& config, RngStream& rng) {
  config.validate();
  Population pop;
  pop.state.last_price = config.initial_price;
  const std::int64_t n_buyers = config.n_agents / 2;
  for (std::int64_t i = 0; i < config.n_agents; ++i) {
    const Side side = i < n_buyers ? Side::Buyer : Side::Seller;
    add_agent(pop, side, draw_epsilon(config, rng.aggressiveness()), config);
  }
  return pop;
}

void resample_step(Population& pop, const ModelConfig& config, RngStream& rng) {
  const std::size_t n = pop.book.size();
  if (n == 0) throw std::logic_error("resample_step: empty population");
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::size_t idx = pick(rng.agent_selection());
  Quote& q = idx < pop.book.buyers.size() ? pop.book.buyers[idx]
                                          : pop.book.sellers[idx - pop.book.buyers.size()];
  q.epsilon = draw_epsilon(config, rng.aggressiveness());
}

std::optional<TradeOutcome> try_trade(Population& pop, PriceRule rule) {
  if (pop.book.buyers.empty() || pop.book.sellers.empty()) return std::nullopt;
  const MaxQuote best_buy = max_aggressiveness(pop.book, Side::Buyer);
  const MaxQuote best_sell = max_aggressiveness(pop.book, Side::Seller);
  if (!trade_condition(best_buy.epsilon, best_sell.epsilon)) return std::nullopt;

  const Price price = rule(pop.state.last_price, best_buy.epsilon, best_sell.epsilon);
  AgentAccount* buyer = pop.state.find(best_buy.agent_id);
  AgentAccount* seller = pop.state.find(best_sell.agent_id);
  if (buyer == nullptr || seller == nullptr) {
    throw std::logic_error("try_trade: book and state disagree on active agents");
  }
  const Trade trade = apply_trade(pop.state, *buyer, *seller, 1, price);

  TradeOutcome outcome{trade, *buyer, *seller};
  pop.book.erase(trade.buyer_id);
  pop.book.erase(trade.seller_id);
  pop.state.remove(trade.buyer_id);
  pop.state.remove(trade.seller_id);
  return outcome;
}

std::pair<AgentId, AgentId> replenish(Population& pop, const ModelConfig& config, RngStream& rng) {
  std::pair<AgentId, AgentId> ids{};
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 0; k < 2; ++k) {
    const double n_buy = static_cast<double>(pop.book.buyers.size());
    const double n_sell = static_cast<double>(pop.book.sellers.size());
    const double p_buyer = n_sell / (n_sell + n_buy);
    const Side side = unit(rng.side_assignment()) < p_buyer ? Side::Buyer : Side::Seller;
    const AgentId id = pop.next_agent_id;
    add_agent(pop, side, draw_epsilon(config, rng.aggressiveness()), config);
    (k == 0 ? ids.first : ids.second) = id;
  }
  return ids;
}

RunArtifacts run_simulation(const ModelConfig& config, const TradeObserver& observer) {
  config.validate();
  RngStream rng(config.seed);
  Population pop = init_population(config, rng);

  const std::int64_t warmup = config.effective_warmup();
  const std::int64_t total = config.n_trades + warmup;

  RunArtifacts out;
  out.trades.reserve(static_cast<std::size_t>(total));

  std::int64_t since_trade = 0;
  while (pop.state.trade_count < total) {
    if (++since_trade > config.resample_cap) {
      throw std::runtime_error(
          "run_simulation: no trade within " + std::to_string(config.resample_cap) +
          " resample events (after trade " + std::to_string(pop.state.trade_count) +
          "); config likely degenerate");
    }
    resample_step(pop, config, rng);

    const MaxQuote best_buy = max_aggressiveness(pop.book, Side::Buyer);
    const MaxQuote best_sell = max_aggressiveness(pop.book, Side::Seller);
    if (!trade_condition(best_buy.epsilon, best_sell.epsilon)) continue;

    // Snapshot the pre-trade state the market identity is written against.
    const Price prev_price = pop.state.last_price;
    const OutstandingVolumes vols = outstanding_volumes(pop.state);
    std::vector<Qty> positions_before;
    AgentAccount buyer_before;
    AgentAccount seller_before;
    if (observer) {
      positions_before.reserve(pop.state.accounts.size());
      for (const AgentAccount& a : pop.state.accounts) positions_before.push_back(a.position);
      buyer_before = *pop.state.find(best_buy.agent_id);
      seller_before = *pop.state.find(best_sell.agent_id);
    }
    double sum_x = 0.0;
    for (const AgentAccount& a : pop.state.accounts) sum_x += static_cast<double>(a.position);

    std::optional<TradeOutcome> outcome = try_trade(pop);
    if (!outcome) throw std::logic_error("run_simulation: condition held but no trade fired");
    since_trade = 0;

    const double dp = outcome->trade.price - prev_price;
    const double residual = sum_x * dp + (vols.buy - vols.sell) * dp;

    TradeLogRow row;
    row.index = outcome->trade.index;
    row.price = outcome->trade.price;
    row.buyer_id = outcome->trade.buyer_id;
    row.seller_id = outcome->trade.seller_id;
    row.v_buy_before = vols.buy;
    row.v_sell_before = vols.sell;
    row.lambda_before = (vols.buy - vols.sell) / (vols.buy + vols.sell);
    row.delta_p = dp;
    row.sum_dw_residual = residual;
    out.trades.push_back(row);

    if (outcome->trade.index > warmup) {
      out.executions.push_back(make_record(outcome->buyer, outcome->trade));
      out.executions.push_back(make_record(outcome->seller, outcome->trade));
    }

    if (observer) {
      TradeAudit audit;
      audit.trade = outcome->trade;
      audit.prev_price = prev_price;
      audit.v_buy_before = vols.buy;
      audit.v_sell_before = vols.sell;
      audit.notional =
          static_cast<double>(outcome->trade.quantity) * outcome->trade.price;
      audit.residual = residual;
      audit.buyer_before = buyer_before;
      audit.seller_before = seller_before;
      audit.buyer_after = outcome->buyer;
      audit.seller_after = outcome->seller;
      audit.positions_before = std::move(positions_before);
      observer(audit);
    }

    replenish(pop, config, rng);
  }

  for (const AgentAccount& a : pop.state.accounts) {
    OpenPositionRecord rec;
    rec.agent_id = a.id;
    rec.side = a.side;
    rec.arrival_index = a.arrival_index;
    rec.reference_price = a.reference_price;
    rec.mark_price = pop.state.last_price;
    rec.provisional_slippage = provisional_slippage(a, pop.state.last_price);
    out.open_positions.push_back(rec);
  }
  out.final_population = std::move(pop);
  return out;
}

}  // namespace slipsim
