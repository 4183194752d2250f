#pragma once

#include <cstdint>

namespace slipsim {

// Prices are real-valued and unbounded below: the additive Gaussian price
// model can walk negative, which is accepted and unremarkable here.
using Price = double;

// Signed asset quantity. Buyers hold x < 0 (a position to cover), sellers
// x > 0; x = 0 means liquidated.
using Qty = std::int64_t;

using AgentId = std::uint64_t;

enum class Side : std::uint8_t { Buyer = 0, Seller = 1 };

inline const char* to_string(Side s) { return s == Side::Buyer ? "buyer" : "seller"; }

}  // namespace slipsim
