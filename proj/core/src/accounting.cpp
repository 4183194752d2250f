#include "slipsim/accounting.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace slipsim {

AgentAccount* MarketState::find(AgentId id) {
  auto it = std::find_if(accounts.begin(), accounts.end(),
                         [id](const AgentAccount& a) { return a.id == id; });
  return it == accounts.end() ? nullptr : &*it;
}

const AgentAccount* MarketState::find(AgentId id) const {
  return const_cast<MarketState*>(this)->find(id);
}

void MarketState::remove(AgentId id) {
  std::erase_if(accounts, [id](const AgentAccount& a) { return a.id == id; });
}

AgentAccount open_account(Side side, Qty quantity_magnitude, Price last_price,
                          std::int64_t arrival_index) {
  if (quantity_magnitude <= 0) {
    throw std::invalid_argument("open_account: quantity_magnitude must be >= 1, got " +
                                std::to_string(quantity_magnitude));
  }
  if (!std::isfinite(last_price)) {
    throw std::invalid_argument("open_account: last_price must be finite");
  }
  AgentAccount a;
  a.side = side;
  a.arrival_index = arrival_index;
  a.reference_price = last_price;
  a.position = side == Side::Buyer ? -quantity_magnitude : quantity_magnitude;
  a.cash = -static_cast<double>(a.position) * last_price;
  return a;
}

Trade apply_trade(MarketState& state, AgentAccount& buyer, AgentAccount& seller, Qty q, Price p) {
  if (q <= 0) throw std::invalid_argument("apply_trade: quantity must be positive");
  if (!std::isfinite(p)) throw std::invalid_argument("apply_trade: price must be finite");
  if (buyer.id == seller.id) throw std::invalid_argument("apply_trade: self-trade");
  if (buyer.position >= 0) throw std::invalid_argument("apply_trade: buyer has no position to cover");
  if (seller.position <= 0) throw std::invalid_argument("apply_trade: seller has nothing to sell");
  if (q > -buyer.position || q > seller.position) {
    throw std::invalid_argument("apply_trade: overshoot, trade would flip a position's sign");
  }

  const double notional = static_cast<double>(q) * p;
  buyer.cash -= notional;
  buyer.position += q;
  seller.cash += notional;
  seller.position -= q;

  state.last_price = p;
  ++state.trade_count;
  if (buyer.position == 0) buyer.liquidation_index = state.trade_count;
  if (seller.position == 0) seller.liquidation_index = state.trade_count;

  return Trade{state.trade_count, p, q, buyer.id, seller.id};
}

double slippage(std::span<const Fill> fills, Price reference) {
  double tr = 0.0;
  for (const Fill& f : fills) tr += static_cast<double>(f.delta_x) * (f.price - reference);
  return tr;
}

double completed_slippage(std::span<const Fill> fills, Price reference, Qty initial_position) {
  Qty total = 0;
  for (const Fill& f : fills) total += f.delta_x;
  if (total != -initial_position) {
    throw std::invalid_argument("completed_slippage: fills do not liquidate the position");
  }
  return slippage(fills, reference);
}

OutstandingVolumes outstanding_volumes(const MarketState& state) {
  Qty buy = 0;
  Qty sell = 0;
  for (const AgentAccount& a : state.accounts) {
    if (a.position > 0) sell += a.position;
    if (a.position < 0) buy -= a.position;
  }
  if (buy == 0 || sell == 0) {
    throw std::logic_error("outstanding_volumes: one side of the market is empty");
  }
  return OutstandingVolumes{static_cast<double>(buy), static_cast<double>(sell)};
}

double market_delta_wealth_residual(const MarketState& before, Price new_price) {
  const double dp = new_price - before.last_price;
  double sum_dw = 0.0;
  for (const AgentAccount& a : before.accounts) {
    sum_dw += delta_wealth(a.position, before.last_price, new_price);
  }
  const OutstandingVolumes v = outstanding_volumes(before);
  return sum_dw + (v.buy - v.sell) * dp;
}

}  // namespace slipsim
