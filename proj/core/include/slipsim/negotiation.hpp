#pragma once

#include <cstdint>
#include <vector>

#include "slipsim/types.hpp"

namespace slipsim {

// A seller quoting epsilon accepts last_price - epsilon or higher; a buyer
// pays up to last_price + epsilon. Negative epsilon demands improvement.
struct Quote {
  AgentId agent_id{};
  std::int64_t arrival_index{};
  double epsilon{};
};

struct QuoteBook {
  std::vector<Quote> buyers;
  std::vector<Quote> sellers;

  std::vector<Quote>& side(Side s) { return s == Side::Buyer ? buyers : sellers; }
  const std::vector<Quote>& side(Side s) const { return s == Side::Buyer ? buyers : sellers; }
  std::size_t size() const { return buyers.size() + sellers.size(); }

  void insert(Side s, const Quote& q) { side(s).push_back(q); }
  bool erase(AgentId id);
  Quote* find(AgentId id);
};

struct MaxQuote {
  double epsilon{};
  AgentId agent_id{};
};

// Largest epsilon on a side; ties go to the earliest arrival, then the
// smallest id. Throws std::invalid_argument on an empty side.
MaxQuote max_aggressiveness(const QuoteBook& book, Side s);

inline bool trade_condition(double eps_max_buy, double eps_max_sell) {
  return eps_max_buy + eps_max_sell >= 0.0;
}

struct PriceBand {
  Price low{};
  Price high{};
};

// Admissible trade price interval; requires trade_condition to hold.
PriceBand price_band(Price last_price, double eps_max_buy, double eps_max_sell);

// Shipped price rule: midpoint of the two concessions.
Price midpoint_price(Price last_price, double eps_max_buy, double eps_max_sell);

// Pluggable price rule; midpoint_price is the only shipped instance.
using PriceRule = Price (*)(Price, double, double);

}  // namespace slipsim
