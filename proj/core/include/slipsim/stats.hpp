#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "slipsim/model.hpp"

namespace slipsim {

// lambda = (V^B - V^S) / (V^B + V^S), in [-1, 1].
double imbalance(double v_buy, double v_sell);

// Streaming central moments up to order 3 (Welford / Pebay updates).
class MomentAccumulator {
 public:
  void add(double x);
  void merge(const MomentAccumulator& other);

  std::int64_t count() const { return n_; }
  double mean() const { return mean_; }
  double sum() const { return mean_ * static_cast<double>(n_); }
  double variance() const;  // sample variance, n >= 2
  double std_error() const;
  // Adjusted Fisher-Pearson sample skewness; throws for n < 3.
  double skewness() const;

  double m2() const { return m2_; }
  double m3() const { return m3_; }

 private:
  std::int64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
  double m3_ = 0.0;
};

// Streaming covariance and correlation of an (x, y) stream.
class CovarianceAccumulator {
 public:
  void add(double x, double y);
  void merge(const CovarianceAccumulator& other);

  std::int64_t count() const { return n_; }
  double covariance() const;   // sample covariance, n >= 2
  double correlation() const;  // Pearson r
  // t-statistic of r against zero: r * sqrt((n-2)/(1-r^2)).
  double correlation_t() const;

 private:
  std::int64_t n_ = 0;
  double mean_x_ = 0.0;
  double mean_y_ = 0.0;
  double c_ = 0.0;
  double m2x_ = 0.0;
  double m2y_ = 0.0;
};

// Uniform-width histogram with under/overflow and moment accumulators.
class Histogram {
 public:
  Histogram() = default;
  Histogram(double lo, double hi, int bins);
  static Histogram from_samples(std::span<const double> xs, int bins);

  void add(double x);
  void merge(const Histogram& other);

  double lo() const { return lo_; }
  double hi() const { return hi_; }
  int bins() const { return static_cast<int>(counts_.size()); }
  double bin_lo(int i) const;
  double bin_hi(int i) const;
  std::int64_t bin_count(int i) const { return counts_[static_cast<std::size_t>(i)]; }
  std::int64_t underflow() const { return underflow_; }
  std::int64_t overflow() const { return overflow_; }
  std::int64_t total() const { return moments_.count(); }
  const MomentAccumulator& moments() const { return moments_; }

 private:
  double lo_ = 0.0;
  double hi_ = 1.0;
  std::vector<std::int64_t> counts_;
  std::int64_t underflow_ = 0;
  std::int64_t overflow_ = 0;
  MomentAccumulator moments_;
};

// Mean of a dependent variable conditioned on bins of an independent one.
class BinnedConditionalMean {
 public:
  BinnedConditionalMean() = default;
  explicit BinnedConditionalMean(std::vector<double> edges);

  void add(double x, double y);
  void merge(const BinnedConditionalMean& other);

  int bins() const { return static_cast<int>(edges_.size()) - 1; }
  double bin_lo(int i) const { return edges_[static_cast<std::size_t>(i)]; }
  double bin_hi(int i) const { return edges_[static_cast<std::size_t>(i) + 1]; }
  std::int64_t bin_count(int i) const { return counts_[static_cast<std::size_t>(i)]; }
  double bin_mean(int i) const;
  double bin_std_error(int i) const;
  std::int64_t dropped() const { return dropped_; }

 private:
  std::vector<double> edges_;
  std::vector<std::int64_t> counts_;
  std::vector<double> sums_;
  std::vector<double> sum_sqs_;
  std::int64_t dropped_ = 0;
};

std::vector<double> uniform_edges(double lo, double hi, int bins);
// Unit-width tau bins up to linear_max, then geometric with the given ratio.
std::vector<double> tau_edges(std::int64_t linear_max = 10, double ratio = 1.5,
                              double tau_max = 1e6);

struct StatsBinning {
  int lambda_bins = 21;
  std::int64_t tau_linear_max = 10;
  double tau_log_ratio = 1.5;
  double tau_max = 1e6;
  double slippage_lo = -5.0;
  double slippage_hi = 5.0;
  int slippage_bins = 80;
  double exec_time_lo = 0.0;
  double exec_time_hi = 200.0;
  int exec_time_bins = 200;
};

// Everything needed to reproduce the figure data and the market-identity
// ledger from a stream of trades and completed executions. Accumulators from
// replicate runs with identical binning merge associatively.
class StatsAccumulators {
 public:
  StatsAccumulators() : StatsAccumulators(StatsBinning{}) {}
  explicit StatsAccumulators(const StatsBinning& binning);

  void record_trade(const TradeLogRow& row);
  void record_execution(const ExecutionRecord& rec);
  void merge(const StatsAccumulators& other);

  const StatsBinning& binning() const { return binning_; }
  const BinnedConditionalMean& lambda_vs_dp() const { return lambda_vs_dp_; }
  const CovarianceAccumulator& lambda_dp_cov() const { return lambda_dp_cov_; }
  const Histogram& slippage_hist() const { return slippage_hist_; }
  const Histogram& exec_time_hist() const { return exec_time_hist_; }
  const BinnedConditionalMean& tau_vs_slippage() const { return tau_vs_slippage_; }
  const MomentAccumulator& slippage_moments() const { return slippage_hist_.moments(); }
  std::int64_t trade_count() const { return lambda_dp_cov_.count(); }
  std::int64_t execution_count() const { return slippage_hist_.total(); }
  double sum_dw_total() const { return sum_dw_total_; }
  double sum_imbalance_dp() const { return sum_imbalance_dp_; }
  double max_abs_residual() const { return max_abs_residual_; }

 private:
  StatsBinning binning_;
  BinnedConditionalMean lambda_vs_dp_;
  CovarianceAccumulator lambda_dp_cov_;
  Histogram slippage_hist_;
  Histogram exec_time_hist_;
  BinnedConditionalMean tau_vs_slippage_;
  double sum_dw_total_ = 0.0;      // running sum of per-trade total delta-W
  double sum_imbalance_dp_ = 0.0;  // running sum of (V^B - V^S) * dP
  double max_abs_residual_ = 0.0;
};

struct BinSummary {
  double lo{};
  double hi{};
  std::int64_t count{};
  double mean{};
  double std_error{};
};

struct SummaryReport {
  std::int64_t n_trades{};
  std::int64_t n_executions{};
  double mean_slippage{};
  double slippage_std_error{};
  double slippage_skewness{};
  double mean_execution_time{};
  double lambda_dp_covariance{};
  double lambda_dp_correlation{};
  double lambda_dp_correlation_t{};
  double sum_dw_total{};
  double sum_imbalance_dp{};
  double max_abs_residual{};
  std::vector<BinSummary> lambda_bins;  // mean dP per lambda bin, occupied only
  std::vector<BinSummary> tau_bins;     // mean slippage per tau bin, occupied only
};

// Throws std::runtime_error with fewer than 3 completed executions.
SummaryReport summarize(const StatsAccumulators& accs);

}  // namespace slipsim
