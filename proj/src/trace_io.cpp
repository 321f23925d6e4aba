#include "offac/trace_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "offac/errors.hpp"

namespace offac {

namespace {

constexpr const char* kDiagHeader =
    "t,s,a,alpha,omega,tau,V,W,xi,chi,delta,mse,gap,gap_next,V_next,W_next,target_shift,step_tv,"
    "has_window,window_from,window_tv,window_qpi_shift,window_omega_sum,has_decomposition,T1,T2,T3,T4";

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double to_d(const std::string& s, const std::string& path) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::ParseError, path + ": bad number '" + s + "'");
  }
}

std::int64_t to_i(const std::string& s, const std::string& path) {
  try {
    std::size_t used = 0;
    long long v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::ParseError, path + ": bad integer '" + s + "'");
  }
}

}  // namespace

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorKind::IoError, "write failed for " + path);
}

void write_trace_csv(const std::string& path, const std::string& run_id, std::uint64_t seed,
                     const std::vector<Snapshot>& snaps) {
  std::string text = kTraceHeader;
  text += '\n';
  for (const Snapshot& x : snaps) {
    text += run_id + ',' + std::to_string(seed) + ',' + std::to_string(x.t) + ',' + std::to_string(x.s) + ',' +
            std::to_string(x.a);
    for (double v : {x.alpha, x.omega, x.tau, x.V, x.W, x.xi, x.chi, x.mse}) text += ',' + format_double(v);
    if (x.has_decomposition) {
      for (double v : {x.dec.T1, x.dec.T2, x.dec.T3, x.dec.T4}) text += ',' + format_double(v);
    } else {
      text += ",,,,";
    }
    text += '\n';
  }
  write_file(path, text);
}

void write_diag_csv(const std::string& path, const std::vector<Snapshot>& snaps) {
  std::string text = kDiagHeader;
  text += '\n';
  for (const Snapshot& x : snaps) {
    text += std::to_string(x.t) + ',' + std::to_string(x.s) + ',' + std::to_string(x.a);
    for (double v : {x.alpha, x.omega, x.tau, x.V, x.W, x.xi, x.chi, x.delta, x.mse, x.gap, x.gap_next, x.V_next,
                     x.W_next, x.target_shift, x.step_tv})
      text += ',' + format_double(v);
    text += x.has_window ? ",1," : ",0,";
    text += std::to_string(x.window_from);
    for (double v : {x.window_tv, x.window_qpi_shift, x.window_omega_sum}) text += ',' + format_double(v);
    text += x.has_decomposition ? ",1" : ",0";
    for (double v : {x.dec.T1, x.dec.T2, x.dec.T3, x.dec.T4}) text += ',' + format_double(v);
    text += '\n';
  }
  write_file(path, text);
}

std::vector<Snapshot> read_diag_csv(const std::string& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line) || line != kDiagHeader) throw Error(ErrorKind::ParseError, path + ": bad header");
  std::vector<Snapshot> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto c = split(line);
    if (c.size() != 28) throw Error(ErrorKind::ParseError, path + ": expected 28 columns");
    Snapshot x;
    std::size_t i = 0;
    x.t = to_i(c[i++], path);
    x.s = static_cast<int>(to_i(c[i++], path));
    x.a = static_cast<int>(to_i(c[i++], path));
    for (double* f : {&x.alpha, &x.omega, &x.tau, &x.V, &x.W, &x.xi, &x.chi, &x.delta, &x.mse, &x.gap,
                      &x.gap_next, &x.V_next, &x.W_next, &x.target_shift, &x.step_tv})
      *f = to_d(c[i++], path);
    x.has_window = to_i(c[i++], path) != 0;
    x.window_from = to_i(c[i++], path);
    for (double* f : {&x.window_tv, &x.window_qpi_shift, &x.window_omega_sum}) *f = to_d(c[i++], path);
    x.has_decomposition = to_i(c[i++], path) != 0;
    for (double* f : {&x.dec.T1, &x.dec.T2, &x.dec.T3, &x.dec.T4}) *f = to_d(c[i++], path);
    out.push_back(x);
  }
  return out;
}

std::vector<TraceRow> read_trace_csv(const std::string& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader) throw Error(ErrorKind::ParseError, path + ": bad header");
  std::vector<TraceRow> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto c = split(line);
    if (c.size() != 17) throw Error(ErrorKind::ParseError, path + ": expected 17 columns");
    TraceRow r;
    r.run_id = c[0];
    r.seed = static_cast<std::uint64_t>(to_i(c[1], path));
    r.t = to_i(c[2], path);
    r.mse = to_d(c[12], path);
    out.push_back(r);
  }
  return out;
}

}  // namespace offac
