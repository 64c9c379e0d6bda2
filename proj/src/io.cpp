#include "lsid/io.hpp"

#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "json.hpp"

namespace lsid {

namespace {

using nlohmann::json;

[[noreturn]] void io_fail(const std::string& path, const std::string& what) {
  throw std::runtime_error(path + ": " + what);
}

json matrix_to_json(const Matrix& M) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Matrix json_to_matrix(const json& j, const std::string& key) {
  if (!j.is_array() || j.empty()) throw std::runtime_error("field '" + key + "' must be a nested array");
  // A flat numeric array is accepted as a single column.
  if (j.front().is_number()) {
    Matrix M(static_cast<Eigen::Index>(j.size()), 1);
    for (std::size_t i = 0; i < j.size(); ++i) M(static_cast<Eigen::Index>(i), 0) = j[i].get<double>();
    return M;
  }
  const std::size_t cols = j.front().size();
  Matrix M(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != cols)
      throw std::runtime_error("field '" + key + "' has ragged rows");
    for (std::size_t c = 0; c < cols; ++c)
      M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = j[i][c].get<double>();
  }
  return M;
}

Vector json_to_vector(const json& j, const std::string& key) {
  Matrix M = json_to_matrix(j, key);
  if (M.cols() != 1 && M.rows() != 1) throw std::runtime_error("field '" + key + "' must be a vector");
  if (M.cols() == 1) return M.col(0);
  return M.row(0).transpose();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) io_fail(path, "cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_double(const std::string& s, const std::string& path, int line_no) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    io_fail(path, "line " + std::to_string(line_no) + ": bad number '" + s + "'");
  }
}

}  // namespace

std::string format_double(double v) {
  std::array<char, 64> buf;
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

void write_text_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) io_fail(tmp, "cannot open for writing");
    out << content;
    out.flush();
    if (!out) io_fail(tmp, "write failed");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) io_fail(path, "rename failed");
}

ContinuousModel load_model(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    io_fail(path, std::string("invalid JSON: ") + e.what());
  }
  ContinuousModel m;
  try {
    m.A = json_to_matrix(j.at("A"), "A");
    m.B = json_to_matrix(j.at("B"), "B");
    m.C = json_to_matrix(j.at("C"), "C");
    if (m.C.cols() == 1 && m.C.rows() > 1) m.C = Matrix(m.C.transpose());
    m.D = j.at("D").get<double>();
    m.Q = json_to_matrix(j.at("Q"), "Q");
    m.mu1 = json_to_vector(j.at("mu1"), "mu1");
    m.P1 = json_to_matrix(j.at("P1"), "P1");
  } catch (const json::exception& e) {
    io_fail(path, std::string("missing or mistyped field: ") + e.what());
  }
  try {
    return validate(m);
  } catch (const std::exception& e) {
    io_fail(path, e.what());
  }
}

void save_model(const ContinuousModel& m, const std::string& path) {
  json j;
  j["A"] = matrix_to_json(m.A);
  j["B"] = matrix_to_json(m.B);
  j["C"] = matrix_to_json(m.C);
  j["D"] = m.D;
  j["Q"] = matrix_to_json(m.Q);
  j["mu1"] = vector_to_json(m.mu1);
  j["P1"] = matrix_to_json(m.P1);
  write_text_atomic(path, j.dump(2) + "\n");
}

void write_trace_csv(const std::string& path, const Vector& u, const Vector& z,
                     const QuantizedTrace& trace) {
  const int N = trace.size();
  if (u.size() != N || z.size() != N)
    throw std::invalid_argument("write_trace_csv: column length mismatch");
  std::string out = "k,t,u,z,y,a,b,event\n";
  for (int k = 0; k < N; ++k) {
    out += std::to_string(k + 1);
    out += ',';
    out += format_double(k * trace.delta);
    out += ',';
    out += format_double(u(k));
    out += ',';
    out += format_double(z(k));
    out += ',';
    out += format_double(trace.y(k));
    out += ',';
    out += format_double(trace.a(k));
    out += ',';
    out += format_double(trace.b(k));
    out += ',';
    out += trace.event_flag[k] ? '1' : '0';
    out += '\n';
  }
  write_text_atomic(path, out);
}

TraceFile read_trace_csv(const std::string& path, double delta, double tau) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line)) io_fail(path, "empty file");
  if (split_csv_line(line) != std::vector<std::string>{"k", "t", "u", "z", "y", "a", "b", "event"})
    io_fail(path, "unexpected header '" + line + "'");

  std::vector<std::array<double, 8>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != 8) io_fail(path, "line " + std::to_string(line_no) + ": expected 8 columns");
    std::array<double, 8> row;
    for (int c = 0; c < 8; ++c) row[c] = parse_double(fields[c], path, line_no);
    rows.push_back(row);
  }
  const int N = static_cast<int>(rows.size());
  if (N == 0) io_fail(path, "no data rows");

  TraceFile tf;
  tf.u.resize(N);
  tf.z.resize(N);
  tf.trace.y.resize(N);
  tf.trace.a.resize(N);
  tf.trace.b.resize(N);
  tf.trace.event_flag.resize(N);
  tf.trace.delta = delta;
  tf.trace.tau = tau;
  for (int k = 0; k < N; ++k) {
    if (static_cast<int>(rows[k][0]) != k + 1)
      io_fail(path, "row " + std::to_string(k + 1) + ": k column out of order");
    tf.u(k) = rows[k][2];
    tf.z(k) = rows[k][3];
    tf.trace.y(k) = rows[k][4];
    tf.trace.a(k) = rows[k][5];
    tf.trace.b(k) = rows[k][6];
    tf.trace.event_flag[k] = rows[k][7] != 0.0;
  }
  return tf;
}

void write_events_csv(const std::string& path, const EventRecord& events) {
  std::string out = "l,t_l,y_l\n";
  for (std::size_t l = 0; l < events.times.size(); ++l) {
    out += std::to_string(l + 1);
    out += ',';
    out += format_double(events.times[l]);
    out += ',';
    out += format_double(events.values[l]);
    out += '\n';
  }
  write_text_atomic(path, out);
}

void save_em_trace(const EMTrace& trace, const std::string& path) {
  json j;
  j["converged"] = trace.converged;
  j["iterations"] = json::array();
  for (const auto& rec : trace.iterations) {
    json it;
    json re = json::array(), im = json::array();
    for (Eigen::Index i = 0; i < rec.invariants.poles.size(); ++i) {
      re.push_back(rec.invariants.poles(i).real());
      im.push_back(rec.invariants.poles(i).imag());
    }
    it["poles_re"] = std::move(re);
    it["poles_im"] = std::move(im);
    it["cb"] = rec.invariants.cb;
    it["d"] = rec.invariants.d;
    it["cqc"] = rec.invariants.cqc;
    it["objective"] = rec.objective;
    it["neg2_loglik"] = rec.neg2_loglik;
    it["seconds"] = rec.seconds;
    j["iterations"].push_back(std::move(it));
  }
  write_text_atomic(path, j.dump(2) + "\n");
}

}  // namespace lsid
