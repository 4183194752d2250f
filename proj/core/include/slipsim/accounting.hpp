#pragma once

#include <optional>
#include <span>
#include <vector>

#include "slipsim/types.hpp"

namespace slipsim {

// Double-entry account of one agent. Opened with cash = -position * reference
// price, so mark-to-market wealth starts at exactly zero.
struct AgentAccount {
  AgentId id{};
  Side side{};
  std::int64_t arrival_index{};  // trade count at arrival
  Price reference_price{};       // last trade price at arrival
  Qty position{};
  double cash{};
  std::optional<std::int64_t> liquidation_index{};  // set when position hits 0

  bool liquidated() const { return position == 0; }
};

struct Trade {
  std::int64_t index{};
  Price price{};
  Qty quantity{};
  AgentId buyer_id{};
  AgentId seller_id{};
};

struct MarketState {
  Price last_price{};
  std::int64_t trade_count{};
  std::vector<AgentAccount> accounts;  // active (non-liquidated) agents

  AgentAccount* find(AgentId id);
  const AgentAccount* find(AgentId id) const;
  void remove(AgentId id);
};

struct OutstandingVolumes {
  double buy{};   // V^B: total quantity still to buy
  double sell{};  // V^S: total quantity still to sell
};

// One fill of an agent: signed quantity change at a price.
struct Fill {
  Qty delta_x{};
  Price price{};
};

AgentAccount open_account(Side side, Qty quantity_magnitude, Price last_price,
                          std::int64_t arrival_index);

// Moves q units from seller to buyer at price p, updates cash accounts,
// advances the trade count and last price, and stamps liquidation indices.
// Throws std::invalid_argument on side mismatch or overshoot.
Trade apply_trade(MarketState& state, AgentAccount& buyer, AgentAccount& seller, Qty q, Price p);

inline double wealth(const AgentAccount& a, Price p) {
  return static_cast<double>(a.position) * p + a.cash;
}

inline double delta_wealth(Qty position_before, Price p_prev, Price p_new) {
  return static_cast<double>(position_before) * (p_new - p_prev);
}

// Sum of delta_x * (price - reference) over the fills.
double slippage(std::span<const Fill> fills, Price reference);

// Slippage of a fully liquidated order; throws std::invalid_argument if the
// fills do not sum to -initial_position.
double completed_slippage(std::span<const Fill> fills, Price reference, Qty initial_position);

// Mark-to-market slippage of a still-open position, reported separately from
// completed executions.
inline double provisional_slippage(const AgentAccount& a, Price mark) { return -wealth(a, mark); }

// Throws std::logic_error if either side is empty.
OutstandingVolumes outstanding_volumes(const MarketState& state);

// Residual of the market wealth identity: sum over active agents of
// x * dP plus (V^B - V^S) * dP, evaluated on the pre-trade state. Zero in
// exact arithmetic.
double market_delta_wealth_residual(const MarketState& before, Price new_price);

}  // namespace slipsim
