#include "gks/model_io.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace gks {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorCode::Config, what); }

Mat read_matrix(const json& j, std::size_t rows, std::size_t cols, const std::string& name) {
  if (!j.is_array()) fail(name + ": expected an array");
  Mat out(rows, cols);
  if (!j.empty() && j.front().is_array()) {
    if (j.size() != rows) fail(name + ": expected " + std::to_string(rows) + " rows");
    for (std::size_t i = 0; i < rows; ++i) {
      if (!j[i].is_array() || j[i].size() != cols) fail(name + ": row " + std::to_string(i) + " has wrong length");
      for (std::size_t c = 0; c < cols; ++c) out(i, c) = j[i][c].get<double>();
    }
  } else {
    if (j.size() != rows * cols) fail(name + ": expected " + std::to_string(rows * cols) + " entries");
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t c = 0; c < cols; ++c) out(i, c) = j[i * cols + c].get<double>();
  }
  return out;
}

Vec read_vector(const json& j, std::size_t len, const std::string& name) {
  if (!j.is_array() || j.size() != len) fail(name + ": expected an array of length " + std::to_string(len));
  Vec out(len);
  for (std::size_t i = 0; i < len; ++i) out(i) = j[i].get<double>();
  return out;
}

std::vector<Mat> read_matrix_seq(const json& root, const char* key, std::size_t N, std::size_t rows,
                                 std::size_t cols, bool optional) {
  if (!root.contains(key)) {
    if (optional) return {};
    fail(std::string("missing field ") + key);
  }
  const json& j = root.at(key);
  if (!j.is_array() || j.size() != N) fail(std::string(key) + ": expected " + std::to_string(N) + " entries");
  std::vector<Mat> out;
  out.reserve(N);
  for (std::size_t t = 0; t < N; ++t)
    out.push_back(read_matrix(j[t], rows, cols, std::string(key) + "[" + std::to_string(t) + "]"));
  return out;
}

std::vector<Vec> read_vector_seq(const json& root, const char* key, std::size_t N, std::size_t len, bool optional) {
  if (!root.contains(key)) {
    if (optional) return {};
    fail(std::string("missing field ") + key);
  }
  const json& j = root.at(key);
  if (!j.is_array() || j.size() != N) fail(std::string(key) + ": expected " + std::to_string(N) + " entries");
  std::vector<Vec> out;
  out.reserve(N);
  for (std::size_t t = 0; t < N; ++t)
    out.push_back(read_vector(j[t], len, std::string(key) + "[" + std::to_string(t) + "]"));
  return out;
}

json matrix_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
    rows.push_back(row);
  }
  return rows;
}

json vector_json(const Vec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

}  // namespace

LtvModel parse_model_json(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    fail(std::string("invalid JSON: ") + e.what());
  }
  try {
    LtvModel m;
    m.N = root.at("N").get<std::size_t>();
    m.n = root.at("n").get<std::size_t>();
    m.m = root.at("m").get<std::size_t>();
    m.p = root.value("p", std::size_t{0});
    m.A_seq = read_matrix_seq(root, "A_seq", m.N, m.n, m.n, false);
    m.B_seq = read_matrix_seq(root, "B_seq", m.N, m.n, m.p, m.p == 0);
    m.C_seq = read_matrix_seq(root, "C_seq", m.N, m.m, m.n, false);
    m.Q_seq = read_matrix_seq(root, "Q_seq", m.N, m.n, m.n, false);
    m.R_seq = read_matrix_seq(root, "R_seq", m.N, m.m, m.m, false);
    m.S_seq = read_matrix_seq(root, "S_seq", m.N, m.n, m.m, true);
    m.mu = root.contains("mu") ? read_vector(root.at("mu"), m.n, "mu") : Vec::Zero(m.n);
    m.Pi = read_matrix(root.at("Pi"), m.n, m.n, "Pi");
    m.u_seq = read_vector_seq(root, "u_seq", m.N, m.p, m.p == 0);
    m.y_seq = read_vector_seq(root, "y_seq", m.N, m.m, false);
    m.offset_seq = read_vector_seq(root, "offset_seq", m.N, m.n, true);
    if (m.B_seq.empty()) m.B_seq.assign(m.N, Mat::Zero(m.n, 0));
    if (m.u_seq.empty()) m.u_seq.assign(m.N, Vec::Zero(0));
    if (root.contains("observed")) {
      const json& o = root.at("observed");
      if (!o.is_array() || o.size() != m.N) fail("observed: expected " + std::to_string(m.N) + " entries");
      for (const auto& b : o) m.observed.push_back(b.get<bool>());
    }
    return m;
  } catch (const json::exception& e) {
    fail(std::string("schema error: ") + e.what());
  }
}

LtvModel load_model_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_model_json(ss.str());
}

std::string model_to_json(const LtvModel& m) {
  json root;
  root["N"] = m.N;
  root["n"] = m.n;
  root["m"] = m.m;
  root["p"] = m.p;
  auto mats = [](const std::vector<Mat>& seq) {
    json arr = json::array();
    for (const auto& a : seq) arr.push_back(matrix_json(a));
    return arr;
  };
  auto vecs = [](const std::vector<Vec>& seq) {
    json arr = json::array();
    for (const auto& a : seq) arr.push_back(vector_json(a));
    return arr;
  };
  root["A_seq"] = mats(m.A_seq);
  root["B_seq"] = mats(m.B_seq);
  root["C_seq"] = mats(m.C_seq);
  root["Q_seq"] = mats(m.Q_seq);
  root["R_seq"] = mats(m.R_seq);
  if (!m.S_seq.empty()) root["S_seq"] = mats(m.S_seq);
  root["mu"] = vector_json(m.mu);
  root["Pi"] = matrix_json(m.Pi);
  root["u_seq"] = vecs(m.u_seq);
  root["y_seq"] = vecs(m.y_seq);
  if (!m.offset_seq.empty()) root["offset_seq"] = vecs(m.offset_seq);
  if (!m.observed.empty()) root["observed"] = m.observed;
  return root.dump(2);
}

}  // namespace gks
