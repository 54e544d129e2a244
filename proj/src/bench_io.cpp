#include "gks/bench.hpp"

#include <toml.hpp>

#include <atomic>
#include <charconv>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace gks {

void ExperimentConfig::resolve() {
  struct Defaults {
    std::size_t N;
    double alpha, sigma, outlier_alpha, outlier_sigma, dt;
  };
  Defaults def{};
  if (experiment == "dc-impulse") def = {200, 0.01, 0.1, 0.0, 0.0, 0.0};
  else if (experiment == "dc-outliers") def = {200, 0.1, 0.1, 0.0, 0.0, 0.0};
  else if (experiment == "rates") def = {100, 0.0, 0.5, 0.1, 5.0, 0.7};
  else if (experiment == "constrained") def = {100, 0.0, 0.05, 0.1, 10.0, 0.1};
  else throw Error(ErrorCode::Config, "unknown experiment '" + experiment + "'");
  if (N == 0) N = def.N;
  if (alpha < 0) alpha = def.alpha;
  if (sigma < 0) sigma = def.sigma;
  if (outlier_alpha < 0) outlier_alpha = def.outlier_alpha;
  if (outlier_sigma < 0) outlier_sigma = def.outlier_sigma;
  if (dt < 0) dt = def.dt > 0 ? def.dt : 0.1;
  if (runs == 0) throw Error(ErrorCode::Config, "runs must be positive");
  if (!(sigma > 0) || !(dt > 0) || !(gamma > 0) || !(huber_kappa > 0))
    throw Error(ErrorCode::Config, "sigma, dt, gamma and huber_kappa must be positive");
  if (alpha > 1 || outlier_alpha > 1) throw Error(ErrorCode::Config, "probabilities must lie in [0, 1]");
  if (!(gamma_min > 0) || gamma_max < gamma_min || gamma_count == 0)
    throw Error(ErrorCode::Config, "bad gamma grid");
  if (!(cp_tau_scale > 0)) throw Error(ErrorCode::Config, "cp_tau_scale must be positive");
  if (cp_tau < 0 || cp_sigma < 0) throw Error(ErrorCode::Config, "CP steps must be nonnegative");
  if (folds < 2) throw Error(ErrorCode::Config, "folds must be at least 2");
  if (!(ip_theta > 0 && ip_theta < 1)) throw Error(ErrorCode::Config, "ip_theta must lie in (0, 1)");
}

namespace {

template <class T>
T get_number(const toml::node& node, const std::string& key) {
  if constexpr (std::is_floating_point_v<T>) {
    if (auto v = node.value<double>()) return static_cast<T>(*v);
  } else {
    if (auto v = node.as_integer()) {
      const std::int64_t i = v->get();
      if (i < 0 && std::is_unsigned_v<T>) throw Error(ErrorCode::Config, key + " must be nonnegative");
      return static_cast<T>(i);
    }
  }
  throw Error(ErrorCode::Config, "wrong type for key '" + key + "'");
}

std::uint64_t get_seed(const toml::node& node) {
  if (auto v = node.as_integer()) {
    if (v->get() < 0) throw Error(ErrorCode::Config, "seed must be nonnegative");
    return static_cast<std::uint64_t>(v->get());
  }
  // seeds above 2^63 do not fit a TOML integer, so a decimal string is accepted too
  if (auto s = node.as_string()) {
    const std::string& t = s->get();
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
    if (ec == std::errc() && ptr == t.data() + t.size() && !t.empty()) return out;
  }
  throw Error(ErrorCode::Config, "seed must be a nonnegative integer");
}

}  // namespace

ExperimentConfig parse_config_toml(const std::string& text) {
  toml::table tbl;
  try {
    tbl = toml::parse(text);
  } catch (const toml::parse_error& e) {
    throw Error(ErrorCode::Config, std::string("TOML parse error: ") + std::string(e.description()));
  }
  ExperimentConfig cfg;
  for (auto&& [k, node] : tbl) {
    const std::string key(k.str());
    if (key == "experiment") {
      auto s = node.as_string();
      if (!s) throw Error(ErrorCode::Config, "experiment must be a string");
      cfg.experiment = s->get();
    } else if (key == "seed") cfg.seed = get_seed(node);
    else if (key == "runs") cfg.runs = get_number<std::size_t>(node, key);
    else if (key == "N") cfg.N = get_number<std::size_t>(node, key);
    else if (key == "alpha") cfg.alpha = get_number<double>(node, key);
    else if (key == "sigma") cfg.sigma = get_number<double>(node, key);
    else if (key == "sigma_d") cfg.sigma_d = get_number<double>(node, key);
    else if (key == "outlier_factor") cfg.outlier_factor = get_number<double>(node, key);
    else if (key == "outlier_alpha") cfg.outlier_alpha = get_number<double>(node, key);
    else if (key == "outlier_sigma") cfg.outlier_sigma = get_number<double>(node, key);
    else if (key == "dt") cfg.dt = get_number<double>(node, key);
    else if (key == "gamma") cfg.gamma = get_number<double>(node, key);
    else if (key == "gamma_min") cfg.gamma_min = get_number<double>(node, key);
    else if (key == "gamma_max") cfg.gamma_max = get_number<double>(node, key);
    else if (key == "gamma_count") cfg.gamma_count = get_number<std::size_t>(node, key);
    else if (key == "folds") cfg.folds = get_number<std::size_t>(node, key);
    else if (key == "huber_kappa") cfg.huber_kappa = get_number<double>(node, key);
    else if (key == "ip_theta") cfg.ip_theta = get_number<double>(node, key);
    else if (key == "ip_eps") cfg.ip_eps = get_number<double>(node, key);
    else if (key == "ip_max_iters") cfg.ip_max_iters = get_number<int>(node, key);
    else if (key == "subgrad_iters") cfg.subgrad_iters = get_number<int>(node, key);
    else if (key == "cp_iters") cfg.cp_iters = get_number<int>(node, key);
    else if (key == "cp_tau") cfg.cp_tau = get_number<double>(node, key);
    else if (key == "cp_sigma") cfg.cp_sigma = get_number<double>(node, key);
    else if (key == "cp_tau_scale") cfg.cp_tau_scale = get_number<double>(node, key);
    else if (key == "threads") cfg.threads = get_number<unsigned>(node, key);
    else throw Error(ErrorCode::Config, "unknown key '" + key + "'");
  }
  return cfg;
}

ExperimentConfig load_config_toml(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_toml(ss.str());
}

std::string config_to_toml(const ExperimentConfig& cfg) {
  toml::table t;
  t.insert("experiment", cfg.experiment);
  if (cfg.seed <= static_cast<std::uint64_t>(INT64_MAX)) t.insert("seed", static_cast<std::int64_t>(cfg.seed));
  else t.insert("seed", std::to_string(cfg.seed));
  t.insert("runs", static_cast<std::int64_t>(cfg.runs));
  t.insert("N", static_cast<std::int64_t>(cfg.N));
  t.insert("alpha", cfg.alpha);
  t.insert("sigma", cfg.sigma);
  t.insert("sigma_d", cfg.sigma_d);
  t.insert("outlier_factor", cfg.outlier_factor);
  t.insert("outlier_alpha", cfg.outlier_alpha);
  t.insert("outlier_sigma", cfg.outlier_sigma);
  t.insert("dt", cfg.dt);
  t.insert("gamma", cfg.gamma);
  t.insert("gamma_min", cfg.gamma_min);
  t.insert("gamma_max", cfg.gamma_max);
  t.insert("gamma_count", static_cast<std::int64_t>(cfg.gamma_count));
  t.insert("folds", static_cast<std::int64_t>(cfg.folds));
  t.insert("huber_kappa", cfg.huber_kappa);
  t.insert("ip_theta", cfg.ip_theta);
  t.insert("ip_eps", cfg.ip_eps);
  t.insert("ip_max_iters", static_cast<std::int64_t>(cfg.ip_max_iters));
  t.insert("subgrad_iters", static_cast<std::int64_t>(cfg.subgrad_iters));
  t.insert("cp_iters", static_cast<std::int64_t>(cfg.cp_iters));
  t.insert("cp_tau", cfg.cp_tau);
  t.insert("cp_sigma", cfg.cp_sigma);
  t.insert("cp_tau_scale", cfg.cp_tau_scale);
  t.insert("threads", static_cast<std::int64_t>(cfg.threads));
  std::ostringstream os;
  os << t << '\n';
  return os.str();
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

namespace {

std::string quote_field(const std::string& f) {
  if (f.find_first_of(",\"\n\r") == std::string::npos) return f;
  std::string out = "\"";
  for (char c : f) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void append_row(std::string& out, const std::vector<std::string>& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out += ',';
    out += quote_field(row[i]);
  }
  out += '\n';
}

}  // namespace

std::string to_csv(const CsvTable& table) {
  std::string out;
  append_row(out, table.header);
  for (const auto& r : table.rows) {
    if (r.size() != table.header.size()) throw Error(ErrorCode::DimensionMismatch, "CSV row width mismatch");
    append_row(out, r);
  }
  return out;
}

CsvTable parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') field += text[++i];
      else if (c == '"') quoted = false;
      else field += c;
    } else if (c == '"') {
      quoted = any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        row.push_back(std::move(field));
        records.push_back(std::move(row));
      }
      field.clear();
      row.clear();
      any = false;
    } else {
      field += c;
      any = true;
    }
  }
  if (quoted) throw Error(ErrorCode::Io, "unterminated quote in CSV");
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    records.push_back(std::move(row));
  }
  CsvTable t;
  if (records.empty()) return t;
  t.header = std::move(records.front());
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].size() != t.header.size())
      throw Error(ErrorCode::Io, "CSV row " + std::to_string(i) + " has the wrong number of fields");
    t.rows.push_back(std::move(records[i]));
  }
  return t;
}

void write_csv(const std::string& path, const CsvTable& table) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out << to_csv(table);
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path);
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

CsvTable fit_table_csv(const FitTable& table) {
  CsvTable t;
  t.header.push_back("run");
  t.header.insert(t.header.end(), table.columns.begin(), table.columns.end());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    std::vector<std::string> r{std::to_string(i)};
    for (double v : table.rows[i]) r.push_back(format_double(v));
    t.rows.push_back(std::move(r));
  }
  return t;
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& f) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = count;
        }
      }
    });
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace gks
