#include "slipsim/io.hpp"

#include <charconv>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace slipsim {
namespace {

using json = nlohmann::json;

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path.string());
  return in;
}

std::vector<std::string> split_tab(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

Side parse_side(const std::string& s) {
  if (s == "buyer") return Side::Buyer;
  if (s == "seller") return Side::Seller;
  throw std::runtime_error("bad side value: " + s);
}

std::int64_t parse_i64(const std::string& s) {
  std::int64_t v{};
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    throw std::runtime_error("bad integer field: " + s);
  }
  return v;
}

void check_header(const std::string& got, const std::string& want,
                  const std::filesystem::path& path) {
  if (got != want) {
    throw std::runtime_error("unexpected header in " + path.string() + ": " + got);
  }
}

constexpr const char* kTradeHeader =
    "index\tprice\tbuyer_id\tseller_id\tv_buy_before\tv_sell_before\tlambda_before\tdelta_p\t"
    "sum_dw_residual";
constexpr const char* kExecHeader =
    "agent_id\tside\ti_a\tk_a\ttau\treference_price\tfill_price\tslippage";

}  // namespace

std::string format_double(double x) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  if (ec != std::errc{}) throw std::runtime_error("format_double failed");
  return std::string(buf, p);
}

double parse_double(const std::string& s) {
  double v{};
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    throw std::runtime_error("bad numeric field: " + s);
  }
  return v;
}

void write_trade_log(const std::filesystem::path& path, std::span<const TradeLogRow> rows) {
  std::ofstream out = open_out(path);
  out << kTradeHeader << '\n';
  for (const TradeLogRow& r : rows) {
    out << r.index << '\t' << format_double(r.price) << '\t' << r.buyer_id << '\t' << r.seller_id
        << '\t' << format_double(r.v_buy_before) << '\t' << format_double(r.v_sell_before) << '\t'
        << format_double(r.lambda_before) << '\t' << format_double(r.delta_p) << '\t'
        << format_double(r.sum_dw_residual) << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<TradeLogRow> read_trade_log(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty trade log: " + path.string());
  check_header(line, kTradeHeader, path);
  std::vector<TradeLogRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_tab(line);
    if (f.size() != 9) throw std::runtime_error("malformed trade log row: " + line);
    TradeLogRow r;
    r.index = parse_i64(f[0]);
    r.price = parse_double(f[1]);
    r.buyer_id = static_cast<AgentId>(parse_i64(f[2]));
    r.seller_id = static_cast<AgentId>(parse_i64(f[3]));
    r.v_buy_before = parse_double(f[4]);
    r.v_sell_before = parse_double(f[5]);
    r.lambda_before = parse_double(f[6]);
    r.delta_p = parse_double(f[7]);
    r.sum_dw_residual = parse_double(f[8]);
    rows.push_back(r);
  }
  return rows;
}

void write_execution_records(const std::filesystem::path& path,
                             std::span<const ExecutionRecord> records) {
  std::ofstream out = open_out(path);
  out << kExecHeader << '\n';
  for (const ExecutionRecord& r : records) {
    out << r.agent_id << '\t' << to_string(r.side) << '\t' << r.arrival_index << '\t'
        << r.liquidation_index << '\t' << r.execution_time << '\t'
        << format_double(r.reference_price) << '\t' << format_double(r.fill_price) << '\t'
        << format_double(r.slippage) << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<ExecutionRecord> read_execution_records(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty execution log: " + path.string());
  check_header(line, kExecHeader, path);
  std::vector<ExecutionRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_tab(line);
    if (f.size() != 8) throw std::runtime_error("malformed execution row: " + line);
    ExecutionRecord r;
    r.agent_id = static_cast<AgentId>(parse_i64(f[0]));
    r.side = parse_side(f[1]);
    r.arrival_index = parse_i64(f[2]);
    r.liquidation_index = parse_i64(f[3]);
    r.execution_time = parse_i64(f[4]);
    r.reference_price = parse_double(f[5]);
    r.fill_price = parse_double(f[6]);
    r.slippage = parse_double(f[7]);
    records.push_back(r);
  }
  return records;
}

void write_open_positions(const std::filesystem::path& path,
                          std::span<const OpenPositionRecord> records) {
  std::ofstream out = open_out(path);
  out << "agent_id\tside\ti_a\treference_price\tmark_price\tprovisional_slippage\n";
  for (const OpenPositionRecord& r : records) {
    out << r.agent_id << '\t' << to_string(r.side) << '\t' << r.arrival_index << '\t'
        << format_double(r.reference_price) << '\t' << format_double(r.mark_price) << '\t'
        << format_double(r.provisional_slippage) << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_summary(const std::filesystem::path& path, const SummaryReport& r) {
  std::ofstream out = open_out(path);
  out << "n_trades\t" << r.n_trades << '\n';
  out << "n_executions\t" << r.n_executions << '\n';
  out << "mean_slippage\t" << format_double(r.mean_slippage) << '\n';
  out << "slippage_std_error\t" << format_double(r.slippage_std_error) << '\n';
  out << "slippage_skewness\t" << format_double(r.slippage_skewness) << '\n';
  out << "mean_execution_time\t" << format_double(r.mean_execution_time) << '\n';
  out << "lambda_dp_covariance\t" << format_double(r.lambda_dp_covariance) << '\n';
  out << "lambda_dp_correlation\t" << format_double(r.lambda_dp_correlation) << '\n';
  out << "lambda_dp_correlation_t\t" << format_double(r.lambda_dp_correlation_t) << '\n';
  out << "sum_dw_total\t" << format_double(r.sum_dw_total) << '\n';
  out << "sum_imbalance_dp\t" << format_double(r.sum_imbalance_dp) << '\n';
  out << "max_abs_residual\t" << format_double(r.max_abs_residual) << '\n';
  out << "\n# lambda_bin_lo\tlambda_bin_hi\tcount\tmean_dp\tstd_error\n";
  for (const BinSummary& b : r.lambda_bins) {
    out << format_double(b.lo) << '\t' << format_double(b.hi) << '\t' << b.count << '\t'
        << format_double(b.mean) << '\t' << format_double(b.std_error) << '\n';
  }
  out << "\n# tau_bin_lo\ttau_bin_hi\tcount\tmean_slippage\tstd_error\n";
  for (const BinSummary& b : r.tau_bins) {
    out << format_double(b.lo) << '\t' << format_double(b.hi) << '\t' << b.count << '\t'
        << format_double(b.mean) << '\t' << format_double(b.std_error) << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_histogram_table(const std::filesystem::path& path, const Histogram& h) {
  std::ofstream out = open_out(path);
  out << "bin_lo\tbin_hi\tcount\n";
  for (int i = 0; i < h.bins(); ++i) {
    out << format_double(h.bin_lo(i)) << '\t' << format_double(h.bin_hi(i)) << '\t'
        << h.bin_count(i) << '\n';
  }
  out << "# underflow\t" << h.underflow() << "\n# overflow\t" << h.overflow() << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_binned_mean_table(const std::filesystem::path& path, const BinnedConditionalMean& b,
                             const std::string& x_name, const std::string& y_name) {
  std::ofstream out = open_out(path);
  out << x_name << "_lo\t" << x_name << "_hi\tcount\tmean_" << y_name << "\tstd_error\n";
  for (int i = 0; i < b.bins(); ++i) {
    if (b.bin_count(i) == 0) continue;
    out << format_double(b.bin_lo(i)) << '\t' << format_double(b.bin_hi(i)) << '\t'
        << b.bin_count(i) << '\t' << format_double(b.bin_mean(i)) << '\t'
        << format_double(b.bin_std_error(i)) << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::uint64_t fnv1a_file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot digest missing file: " + path.string());
  std::uint64_t h = 0xCBF29CE484222325ULL;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const std::streamsize n = in.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001B3ULL;
    }
    if (!in) break;
  }
  return h;
}

void write_manifest(const std::filesystem::path& path, const ModelConfig& config,
                    std::int64_t replicates, const std::vector<ManifestEntry>& outputs) {
  json j;
  j["artifact"] = kArtifactName;
  j["version"] = kArtifactVersion;
  j["created_utc"] = []() {
    char buf[32];
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return std::string(buf);
  }();
  j["config"] = {{"n", config.n_agents},
                 {"mu", config.mu},
                 {"sigma", config.sigma},
                 {"seed", config.seed},
                 {"trades", config.n_trades},
                 {"warmup", config.effective_warmup()},
                 {"initial_price", config.initial_price},
                 {"resample_cap", config.resample_cap}};
  j["replicates"] = replicates;
  j["outputs"] = json::array();
  for (const ManifestEntry& e : outputs) {
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(e.digest));
    j["outputs"].push_back({{"file", e.file}, {"fnv1a64", std::string(hex)}});
  }
  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("corrupt manifest " + path.string() + ": " + e.what());
  }
  Manifest m;
  try {
    m.artifact = j.at("artifact").get<std::string>();
    m.version = j.at("version").get<std::string>();
    const json& c = j.at("config");
    m.config.n_agents = c.at("n").get<std::int64_t>();
    m.config.mu = c.at("mu").get<double>();
    m.config.sigma = c.at("sigma").get<double>();
    m.config.seed = c.at("seed").get<std::uint64_t>();
    m.config.n_trades = c.at("trades").get<std::int64_t>();
    m.config.warmup_trades = c.at("warmup").get<std::int64_t>();
    m.config.initial_price = c.at("initial_price").get<double>();
    m.config.resample_cap = c.at("resample_cap").get<std::int64_t>();
    m.replicates = j.at("replicates").get<std::int64_t>();
    for (const json& e : j.at("outputs")) {
      ManifestEntry entry;
      entry.file = e.at("file").get<std::string>();
      entry.digest = std::stoull(e.at("fnv1a64").get<std::string>(), nullptr, 16);
      m.outputs.push_back(entry);
    }
  } catch (const json::exception& e) {
    throw std::runtime_error("manifest missing fields in " + path.string() + ": " + e.what());
  }
  if (m.artifact != kArtifactName) {
    throw std::runtime_error("manifest artifact mismatch: " + m.artifact);
  }
  return m;
}

}  // namespace slipsim
