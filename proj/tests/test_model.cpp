#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <vector>

#include "slipsim/model.hpp"

using namespace slipsim;

namespace {

ModelConfig reference_config() {
  ModelConfig cfg;
  cfg.n_agents = 10;
  cfg.mu = -0.5;
  cfg.sigma = 0.2;
  return cfg;
}

}  // namespace

TEST_CASE("config validation names the offending field") {
  ModelConfig cfg = reference_config();
  cfg.sigma = 0.0;
  CHECK_THROWS_WITH_AS(cfg.validate(), "sigma: must be > 0", std::invalid_argument);
  cfg = reference_config();
  cfg.n_agents = 1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = reference_config();
  cfg.n_trades = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("init_population splits floor/ceil and starts at zero wealth") {
  ModelConfig cfg = reference_config();
  RngStream rng(1);
  Population pop = init_population(cfg, rng);
  CHECK(pop.book.buyers.size() == 5);
  CHECK(pop.book.sellers.size() == 5);
  CHECK(pop.state.accounts.size() == 10);
  for (const AgentAccount& a : pop.state.accounts) {
    CHECK(wealth(a, pop.state.last_price) == 0.0);
    CHECK(std::abs(a.position) == 1);
  }

  cfg.n_agents = 3;
  RngStream rng3(1);
  Population pop3 = init_population(cfg, rng3);
  CHECK(pop3.book.buyers.size() == 1);
  CHECK(pop3.book.sellers.size() == 2);
}

TEST_CASE("init_population is deterministic in the seed") {
  ModelConfig cfg = reference_config();
  RngStream a(42), b(42), c(43);
  const Population pa = init_population(cfg, a);
  const Population pb = init_population(cfg, b);
  const Population pc = init_population(cfg, c);
  for (std::size_t i = 0; i < pa.book.buyers.size(); ++i) {
    CHECK(pa.book.buyers[i].epsilon == pb.book.buyers[i].epsilon);
  }
  bool any_diff = false;
  for (std::size_t i = 0; i < pa.book.buyers.size(); ++i) {
    any_diff = any_diff || pa.book.buyers[i].epsilon != pc.book.buyers[i].epsilon;
  }
  CHECK(any_diff);
}

TEST_CASE("resample_step changes exactly one quote and keeps the book size") {
  ModelConfig cfg = reference_config();
  RngStream rng(7);
  Population pop = init_population(cfg, rng);
  for (int step = 0; step < 200; ++step) {
    std::vector<double> before;
    for (const Quote& q : pop.book.buyers) before.push_back(q.epsilon);
    for (const Quote& q : pop.book.sellers) before.push_back(q.epsilon);
    resample_step(pop, cfg, rng);
    std::vector<double> after;
    for (const Quote& q : pop.book.buyers) after.push_back(q.epsilon);
    for (const Quote& q : pop.book.sellers) after.push_back(q.epsilon);
    REQUIRE(after.size() == before.size());
    int changed = 0;
    for (std::size_t i = 0; i < before.size(); ++i) changed += before[i] != after[i];
    CHECK(changed <= 1);  // == 0 only if the fresh draw hit the old value
  }
}

TEST_CASE("resample_step selects agents uniformly (chi-square) and draws N(mu, sigma)") {
  ModelConfig cfg = reference_config();
  RngStream rng(13);
  Population pop = init_population(cfg, rng);
  constexpr int kSteps = 100000;
  std::map<AgentId, int> hits;
  double eps_sum = 0.0;
  int eps_count = 0;
  for (int step = 0; step < kSteps; ++step) {
    std::vector<std::pair<AgentId, double>> before;
    for (const Quote& q : pop.book.buyers) before.emplace_back(q.agent_id, q.epsilon);
    for (const Quote& q : pop.book.sellers) before.emplace_back(q.agent_id, q.epsilon);
    resample_step(pop, cfg, rng);
    std::vector<std::pair<AgentId, double>> after;
    for (const Quote& q : pop.book.buyers) after.emplace_back(q.agent_id, q.epsilon);
    for (const Quote& q : pop.book.sellers) after.emplace_back(q.agent_id, q.epsilon);
    for (std::size_t i = 0; i < before.size(); ++i) {
      if (before[i].second != after[i].second) {
        ++hits[after[i].first];
        eps_sum += after[i].second;
        ++eps_count;
      }
    }
  }
  // chi-square against uniform 1/10; draws repeating the previous value are
  // not observable above, which is measure-zero for continuous epsilon
  const double expected = static_cast<double>(eps_count) / 10.0;
  double chi2 = 0.0;
  for (const auto& [id, n] : hits) {
    chi2 += (n - expected) * (n - expected) / expected;
  }
  CHECK(hits.size() == 10);
  CHECK(chi2 < 27.877);  // 99.9% quantile, 9 degrees of freedom

  const double mean = eps_sum / eps_count;
  CHECK(std::abs(mean - cfg.mu) < 3.0 * cfg.sigma / std::sqrt(static_cast<double>(eps_count)));
}

TEST_CASE("try_trade fires only when the condition holds and liquidates both") {
  ModelConfig cfg = reference_config();
  RngStream rng(1);
  Population pop = init_population(cfg, rng);
  pop.state.last_price = 100.0;
  for (Quote& q : pop.book.buyers) q.epsilon = -1.0;
  for (Quote& q : pop.book.sellers) q.epsilon = -1.0;
  pop.book.buyers[2].epsilon = 0.2;
  pop.book.sellers[1].epsilon = -0.1;

  const AgentId buyer_id = pop.book.buyers[2].agent_id;
  const AgentId seller_id = pop.book.sellers[1].agent_id;
  const auto outcome = try_trade(pop);
  REQUIRE(outcome.has_value());
  CHECK(outcome->trade.price == doctest::Approx(100.15).epsilon(1e-12));
  CHECK(outcome->trade.buyer_id == buyer_id);
  CHECK(outcome->trade.seller_id == seller_id);
  CHECK(outcome->buyer.position == 0);
  CHECK(outcome->seller.position == 0);
  CHECK(outcome->buyer.liquidation_index == 1);
  CHECK(pop.book.size() == 8);
  CHECK(pop.state.accounts.size() == 8);

  // condition now fails for everyone left
  const auto none = try_trade(pop);
  CHECK_FALSE(none.has_value());
  CHECK(pop.state.trade_count == 1);

  // arrivals reference the new last price
  replenish(pop, cfg, rng);
  CHECK(pop.state.accounts.size() == 10);
  for (const AgentAccount& a : pop.state.accounts) {
    if (a.arrival_index == 1) {
      CHECK(a.reference_price == doctest::Approx(100.15).epsilon(1e-12));
    }
  }
}

TEST_CASE("replenish keeps at least one agent per side") {
  ModelConfig cfg = reference_config();
  // 8 sellers, 0 buyers: an arrival must be a buyer with probability 1
  for (int rep = 0; rep < 50; ++rep) {
    RngStream rng(static_cast<std::uint64_t>(rep));
    Population pop;
    pop.next_agent_id = 0;
    for (int i = 0; i < 8; ++i) {
      AgentAccount a = open_account(Side::Seller, 1, 0.0, 0);
      a.id = pop.next_agent_id++;
      pop.book.insert(Side::Seller, Quote{a.id, 0, -1.0});
      pop.state.accounts.push_back(a);
    }
    replenish(pop, cfg, rng);
    CHECK(pop.book.buyers.size() >= 1);
    CHECK(pop.book.size() == 10);
  }
}

TEST_CASE("replenish arrival side frequency matches N_S / (N_S + N_B)") {
  ModelConfig cfg = reference_config();
  RngStream rng(21);
  constexpr int kTrials = 20000;
  int first_buyer = 0;
  for (int t = 0; t < kTrials; ++t) {
    Population pop;
    for (int i = 0; i < 8; ++i) {
      const Side side = i < 4 ? Side::Buyer : Side::Seller;
      AgentAccount a = open_account(side, 1, 0.0, 0);
      a.id = pop.next_agent_id++;
      pop.book.insert(side, Quote{a.id, 0, -1.0});
      pop.state.accounts.push_back(a);
    }
    const std::size_t buyers_before = pop.book.buyers.size();
    replenish(pop, cfg, rng);
    // remaining 4/4: first arrival is a buyer w.p. 0.5
    if (pop.book.buyers.size() + pop.book.sellers.size() != 10) FAIL("population size");
    const AgentAccount* first = nullptr;
    for (const AgentAccount& a : pop.state.accounts) {
      if (a.id == 8) first = &a;
    }
    REQUIRE(first != nullptr);
    first_buyer += first->side == Side::Buyer;
    (void)buyers_before;
  }
  const double p = static_cast<double>(first_buyer) / kTrials;
  CHECK(std::abs(p - 0.5) < 3.0 * std::sqrt(0.25 / kTrials));
}

TEST_CASE("run_simulation is deterministic and keeps every invariant") {
  ModelConfig cfg = reference_config();
  cfg.n_trades = 2000;
  cfg.seed = 99;

  std::vector<std::size_t> population_sizes;
  const TradeObserver observer = [&](const TradeAudit& audit) {
    CHECK(audit.trade.quantity == 1);
    CHECK(audit.v_buy_before >= 1.0);
    CHECK(audit.v_sell_before >= 1.0);
    const double tol = std::max(1e-9, 1e-9 * (audit.v_buy_before + audit.v_sell_before) *
                                          std::abs(audit.trade.price - audit.prev_price));
    CHECK(std::abs(audit.residual) <= tol);
  };

  const RunArtifacts a = run_simulation(cfg, observer);
  const RunArtifacts b = run_simulation(cfg);
  REQUIRE(a.trades.size() == b.trades.size());
  for (std::size_t i = 0; i < a.trades.size(); ++i) {
    CHECK(a.trades[i].price == b.trades[i].price);
    CHECK(a.trades[i].buyer_id == b.trades[i].buyer_id);
    CHECK(a.trades[i].seller_id == b.trades[i].seller_id);
  }

  CHECK(a.final_population.state.accounts.size() == 10);
  CHECK(a.trades.size() == 2200);  // includes 10% warmup
  CHECK(a.open_positions.size() == 10);

  for (const ExecutionRecord& rec : a.executions) {
    CHECK(rec.execution_time >= 1);
    CHECK(rec.liquidation_index > cfg.effective_warmup());
    const double dx = rec.side == Side::Buyer ? 1.0 : -1.0;
    CHECK(rec.slippage == dx * (rec.fill_price - rec.reference_price));
  }

  ModelConfig other = cfg;
  other.seed = 100;
  const RunArtifacts c = run_simulation(other);
  bool differs = c.trades.size() != a.trades.size();
  for (std::size_t i = 0; !differs && i < a.trades.size(); ++i) {
    differs = a.trades[i].price != c.trades[i].price;
  }
  CHECK(differs);
  (void)population_sizes;
}

TEST_CASE("run_simulation aborts on a degenerate config") {
  ModelConfig cfg = reference_config();
  cfg.mu = -50.0;
  cfg.sigma = 0.01;
  cfg.n_trades = 10;
  cfg.resample_cap = 20000;
  CHECK_THROWS_AS(run_simulation(cfg), std::runtime_error);
}

TEST_CASE("next-trade participation is 1/N_B for a frozen i.i.d. population") {
  // freeze 3 buyers and 5 sellers; redraw everyone fresh each trial
  constexpr int kBuyers = 3;
  constexpr int kSellers = 5;
  constexpr int kTrials = 100000;
  std::mt19937_64 rng(55);
  std::normal_distribution<double> normal(-0.5, 0.2);
  std::map<AgentId, int> wins;
  for (int t = 0; t < kTrials; ++t) {
    QuoteBook book;
    for (int i = 0; i < kBuyers; ++i) {
      book.insert(Side::Buyer, Quote{static_cast<AgentId>(i), 0, normal(rng)});
    }
    for (int i = 0; i < kSellers; ++i) {
      book.insert(Side::Seller, Quote{static_cast<AgentId>(100 + i), 0, normal(rng)});
    }
    ++wins[max_aggressiveness(book, Side::Buyer).agent_id];
  }
  const double p = 1.0 / kBuyers;
  const double se = std::sqrt(p * (1.0 - p) / kTrials);
  for (const auto& [id, n] : wins) {
    CHECK(std::abs(static_cast<double>(n) / kTrials - p) < 3.0 * se);
  }
}
