#include "slipsim/negotiation.hpp"

#include <algorithm>
#include <stdexcept>

namespace slipsim {

bool QuoteBook::erase(AgentId id) {
  const auto pred = [id](const Quote& q) { return q.agent_id == id; };
  return std::erase_if(buyers, pred) + std::erase_if(sellers, pred) > 0;
}

Quote* QuoteBook::find(AgentId id) {
  const auto pred = [id](const Quote& q) { return q.agent_id == id; };
  if (auto it = std::find_if(buyers.begin(), buyers.end(), pred); it != buyers.end()) return &*it;
  if (auto it = std::find_if(sellers.begin(), sellers.end(), pred); it != sellers.end()) return &*it;
  return nullptr;
}

MaxQuote max_aggressiveness(const QuoteBook& book, Side s) {
  const std::vector<Quote>& quotes = book.side(s);
  if (quotes.empty()) {
    throw std::invalid_argument("max_aggressiveness: empty side");
  }
  const Quote* best = &quotes.front();
  for (const Quote& q : quotes) {
    if (q.epsilon > best->epsilon ||
        (q.epsilon == best->epsilon &&
         (q.arrival_index < best->arrival_index ||
          (q.arrival_index == best->arrival_index && q.agent_id < best->agent_id)))) {
      best = &q;
    }
  }
  return MaxQuote{best->epsilon, best->agent_id};
}

PriceBand price_band(Price last_price, double eps_max_buy, double eps_max_sell) {
  if (!trade_condition(eps_max_buy, eps_max_sell)) {
    throw std::logic_error("price_band: trade condition does not hold");
  }
  return PriceBand{last_price - eps_max_sell, last_price + eps_max_buy};
}

Price midpoint_price(Price last_price, double eps_max_buy, double eps_max_sell) {
  if (!trade_condition(eps_max_buy, eps_max_sell)) {
    throw std::logic_error("midpoint_price: trade condition does not hold");
  }
  return last_price + (eps_max_buy - eps_max_sell) / 2.0;
}

}  // namespace slipsim
