#include "slipsim/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace slipsim {

double imbalance(double v_buy, double v_sell) {
  const double total = v_buy + v_sell;
  if (!(total > 0.0)) throw std::invalid_argument("imbalance: both volumes are zero");
  return (v_buy - v_sell) / total;
}

void MomentAccumulator::add(double x) {
  const double n1 = static_cast<double>(n_);
  ++n_;
  const double n = static_cast<double>(n_);
  const double delta = x - mean_;
  const double dn = delta / n;
  const double term1 = delta * dn * n1;
  mean_ += dn;
  m3_ += term1 * dn * (n - 2.0) - 3.0 * dn * m2_;
  m2_ += term1;
}

void MomentAccumulator::merge(const MomentAccumulator& o) {
  if (o.n_ == 0) return;
  if (n_ == 0) {
    *this = o;
    return;
  }
  const double na = static_cast<double>(n_);
  const double nb = static_cast<double>(o.n_);
  const double n = na + nb;
  const double delta = o.mean_ - mean_;
  const double d2 = delta * delta;
  const double m3 = m3_ + o.m3_ + delta * d2 * na * nb * (na - nb) / (n * n) +
                    3.0 * delta * (na * o.m2_ - nb * m2_) / n;
  const double m2 = m2_ + o.m2_ + d2 * na * nb / n;
  mean_ += delta * nb / n;
  m2_ = m2;
  m3_ = m3;
  n_ += o.n_;
}

double MomentAccumulator::variance() const {
  if (n_ < 2) return 0.0;
  return m2_ / static_cast<double>(n_ - 1);
}

double MomentAccumulator::std_error() const {
  if (n_ < 2) return 0.0;
  return std::sqrt(variance() / static_cast<double>(n_));
}

double MomentAccumulator::skewness() const {
  if (n_ < 3) throw std::runtime_error("skewness undefined for fewer than 3 samples");
  const double n = static_cast<double>(n_);
  if (m2_ <= 0.0) return 0.0;
  const double g1 = std::sqrt(n) * m3_ / std::pow(m2_, 1.5);
  return g1 * std::sqrt(n * (n - 1.0)) / (n - 2.0);
}

void CovarianceAccumulator::add(double x, double y) {
  ++n_;
  const double n = static_cast<double>(n_);
  const double dx = x - mean_x_;
  const double dy = y - mean_y_;
  mean_x_ += dx / n;
  mean_y_ += dy / n;
  c_ += dx * (y - mean_y_);
  m2x_ += dx * (x - mean_x_);
  m2y_ += dy * (y - mean_y_);
}

void CovarianceAccumulator::merge(const CovarianceAccumulator& o) {
  if (o.n_ == 0) return;
  if (n_ == 0) {
    *this = o;
    return;
  }
  const double na = static_cast<double>(n_);
  const double nb = static_cast<double>(o.n_);
  const double n = na + nb;
  const double dx = o.mean_x_ - mean_x_;
  const double dy = o.mean_y_ - mean_y_;
  c_ += o.c_ + dx * dy * na * nb / n;
  m2x_ += o.m2x_ + dx * dx * na * nb / n;
  m2y_ += o.m2y_ + dy * dy * na * nb / n;
  mean_x_ += dx * nb / n;
  mean_y_ += dy * nb / n;
  n_ += o.n_;
}

double CovarianceAccumulator::covariance() const {
  if (n_ < 2) return 0.0;
  return c_ / static_cast<double>(n_ - 1);
}

double CovarianceAccumulator::correlation() const {
  if (n_ < 2 || m2x_ <= 0.0 || m2y_ <= 0.0) return 0.0;
  return c_ / std::sqrt(m2x_ * m2y_);
}

double CovarianceAccumulator::correlation_t() const {
  if (n_ < 3) return 0.0;
  const double r = correlation();
  const double denom = 1.0 - r * r;
  if (denom <= 0.0) return std::numeric_limits<double>::infinity();
  return r * std::sqrt(static_cast<double>(n_ - 2) / denom);
}

Histogram::Histogram(double lo, double hi, int bins) : lo_(lo), hi_(hi) {
  if (!(hi > lo) || bins < 1) throw std::invalid_argument("Histogram: bad range or bin count");
  counts_.assign(static_cast<std::size_t>(bins), 0);
}

Histogram Histogram::from_samples(std::span<const double> xs, int bins) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double x : xs) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  if (xs.empty() || !(hi > lo)) {
    lo = xs.empty() ? 0.0 : lo - 0.5;
    hi = lo + 1.0;
  }
  const double pad = (hi - lo) * 1e-9;
  Histogram h(lo, hi + pad, bins);
  for (double x : xs) h.add(x);
  return h;
}

void Histogram::add(double x) {
  moments_.add(x);
  if (x < lo_) {
    ++underflow_;
    return;
  }
  if (x >= hi_) {
    // the exact upper edge belongs to the last bin
    if (x == hi_) {
      ++counts_.back();
    } else {
      ++overflow_;
    }
    return;
  }
  const double w = (hi_ - lo_) / static_cast<double>(counts_.size());
  auto idx = static_cast<std::size_t>((x - lo_) / w);
  if (idx >= counts_.size()) idx = counts_.size() - 1;
  ++counts_[idx];
}

void Histogram::merge(const Histogram& o) {
  if (lo_ != o.lo_ || hi_ != o.hi_ || counts_.size() != o.counts_.size()) {
    throw std::invalid_argument("Histogram::merge: incompatible binning");
  }
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += o.counts_[i];
  underflow_ += o.underflow_;
  overflow_ += o.overflow_;
  moments_.merge(o.moments_);
}

double Histogram::bin_lo(int i) const {
  const double w = (hi_ - lo_) / static_cast<double>(counts_.size());
  return lo_ + w * i;
}

double Histogram::bin_hi(int i) const {
  const double w = (hi_ - lo_) / static_cast<double>(counts_.size());
  return lo_ + w * (i + 1);
}

BinnedConditionalMean::BinnedConditionalMean(std::vector<double> edges) : edges_(std::move(edges)) {
  if (edges_.size() < 2 || !std::is_sorted(edges_.begin(), edges_.end())) {
    throw std::invalid_argument("BinnedConditionalMean: need ascending edges");
  }
  const std::size_t n = edges_.size() - 1;
  counts_.assign(n, 0);
  sums_.assign(n, 0.0);
  sum_sqs_.assign(n, 0.0);
}

void BinnedConditionalMean::add(double x, double y) {
  if (x < edges_.front() || x >= edges_.back()) {
    if (x == edges_.back()) {
      ++counts_.back();
      sums_.back() += y;
      sum_sqs_.back() += y * y;
      return;
    }
    ++dropped_;
    return;
  }
  const auto it = std::upper_bound(edges_.begin(), edges_.end(), x);
  const auto idx = static_cast<std::size_t>(it - edges_.begin()) - 1;
  ++counts_[idx];
  sums_[idx] += y;
  sum_sqs_[idx] += y * y;
}

void BinnedConditionalMean::merge(const BinnedConditionalMean& o) {
  if (edges_ != o.edges_) {
    throw std::invalid_argument("BinnedConditionalMean::merge: incompatible edges");
  }
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    counts_[i] += o.counts_[i];
    sums_[i] += o.sums_[i];
    sum_sqs_[i] += o.sum_sqs_[i];
  }
  dropped_ += o.dropped_;
}

double BinnedConditionalMean::bin_mean(int i) const {
  const auto idx = static_cast<std::size_t>(i);
  if (counts_[idx] == 0) throw std::runtime_error("bin_mean: empty bin");
  return sums_[idx] / static_cast<double>(counts_[idx]);
}

double BinnedConditionalMean::bin_std_error(int i) const {
  const auto idx = static_cast<std::size_t>(i);
  const auto n = static_cast<double>(counts_[idx]);
  if (counts_[idx] < 2) return 0.0;
  const double mean = sums_[idx] / n;
  const double var = std::max(0.0, (sum_sqs_[idx] - n * mean * mean) / (n - 1.0));
  return std::sqrt(var / n);
}

std::vector<double> uniform_edges(double lo, double hi, int bins) {
  if (!(hi > lo) || bins < 1) throw std::invalid_argument("uniform_edges: bad range");
  std::vector<double> edges(static_cast<std::size_t>(bins) + 1);
  for (int i = 0; i <= bins; ++i) {
    edges[static_cast<std::size_t>(i)] = lo + (hi - lo) * static_cast<double>(i) / bins;
  }
  return edges;
}

std::vector<double> tau_edges(std::int64_t linear_max, double ratio, double tau_max) {
  std::vector<double> edges;
  for (std::int64_t t = 1; t <= linear_max + 1; ++t) edges.push_back(static_cast<double>(t));
  double e = edges.back();
  while (e < tau_max) {
    e = std::max(e * ratio, e + 1.0);
    edges.push_back(e);
  }
  return edges;
}

StatsAccumulators::StatsAccumulators(const StatsBinning& binning)
    : binning_(binning),
      lambda_vs_dp_(uniform_edges(-1.0, 1.0, binning.lambda_bins)),
      slippage_hist_(binning.slippage_lo, binning.slippage_hi, binning.slippage_bins),
      exec_time_hist_(binning.exec_time_lo, binning.exec_time_hi, binning.exec_time_bins),
      tau_vs_slippage_(tau_edges(binning.tau_linear_max, binning.tau_log_ratio, binning.tau_max)) {}

void StatsAccumulators::record_trade(const TradeLogRow& row) {
  lambda_vs_dp_.add(row.lambda_before, row.delta_p);
  lambda_dp_cov_.add(row.lambda_before, row.delta_p);
  sum_dw_total_ += -(row.v_buy_before - row.v_sell_before) * row.delta_p;
  sum_imbalance_dp_ += (row.v_buy_before - row.v_sell_before) * row.delta_p;
  max_abs_residual_ = std::max(max_abs_residual_, std::abs(row.sum_dw_residual));
}

void StatsAccumulators::record_execution(const ExecutionRecord& rec) {
  slippage_hist_.add(rec.slippage);
  exec_time_hist_.add(static_cast<double>(rec.execution_time));
  tau_vs_slippage_.add(static_cast<double>(rec.execution_time), rec.slippage);
}

void StatsAccumulators::merge(const StatsAccumulators& o) {
  lambda_vs_dp_.merge(o.lambda_vs_dp_);
  lambda_dp_cov_.merge(o.lambda_dp_cov_);
  slippage_hist_.merge(o.slippage_hist_);
  exec_time_hist_.merge(o.exec_time_hist_);
  tau_vs_slippage_.merge(o.tau_vs_slippage_);
  sum_dw_total_ += o.sum_dw_total_;
  sum_imbalance_dp_ += o.sum_imbalance_dp_;
  max_abs_residual_ = std::max(max_abs_residual_, o.max_abs_residual_);
}

SummaryReport summarize(const StatsAccumulators& accs) {
  if (accs.execution_count() < 3) {
    throw std::runtime_error("summarize: need at least 3 completed executions");
  }
  SummaryReport r;
  r.n_trades = accs.trade_count();
  r.n_executions = accs.execution_count();
  r.mean_slippage = accs.slippage_moments().mean();
  r.slippage_std_error = accs.slippage_moments().std_error();
  r.slippage_skewness = accs.slippage_moments().skewness();
  r.mean_execution_time = accs.exec_time_hist().moments().mean();
  r.lambda_dp_covariance = accs.lambda_dp_cov().covariance();
  r.lambda_dp_correlation = accs.lambda_dp_cov().correlation();
  r.lambda_dp_correlation_t = accs.lambda_dp_cov().correlation_t();
  r.sum_dw_total = accs.sum_dw_total();
  r.sum_imbalance_dp = accs.sum_imbalance_dp();
  r.max_abs_residual = accs.max_abs_residual();

  const BinnedConditionalMean& lb = accs.lambda_vs_dp();
  for (int i = 0; i < lb.bins(); ++i) {
    if (lb.bin_count(i) == 0) continue;
    r.lambda_bins.push_back(
        BinSummary{lb.bin_lo(i), lb.bin_hi(i), lb.bin_count(i), lb.bin_mean(i), lb.bin_std_error(i)});
  }
  const BinnedConditionalMean& tb = accs.tau_vs_slippage();
  for (int i = 0; i < tb.bins(); ++i) {
    if (tb.bin_count(i) == 0) continue;
    r.tau_bins.push_back(
        BinSummary{tb.bin_lo(i), tb.bin_hi(i), tb.bin_count(i), tb.bin_mean(i), tb.bin_std_error(i)});
  }
  return r;
}

}  // namespace slipsim
