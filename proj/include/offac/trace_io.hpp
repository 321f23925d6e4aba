#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "offac/diagnostics.hpp"

namespace offac {

inline constexpr const char* kTraceHeader = "run_id,seed,t,s,a,alpha,omega,tau,V,W,xi,chi,mse,T1,T2,T3,T4";

std::string format_double(double x);

void write_trace_csv(const std::string& path, const std::string& run_id, std::uint64_t seed,
                     const std::vector<Snapshot>& snaps);
// Full snapshot dump, enough to re-run the verdicts offline.
void write_diag_csv(const std::string& path, const std::vector<Snapshot>& snaps);
std::vector<Snapshot> read_diag_csv(const std::string& path);

struct TraceRow {
  std::string run_id;
  std::uint64_t seed = 0;
  std::int64_t t = 0;
  double mse = 0.0;
};
std::vector<TraceRow> read_trace_csv(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

}  // namespace offac
