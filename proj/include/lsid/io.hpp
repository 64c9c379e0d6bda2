#pragma once

// File formats: model JSON, trace/event CSVs, and the per-run EM trace JSON.
// Every write goes through a temp-file rename so readers never see a partial
// file; doubles are printed shortest-round-trip so rereading is exact.

#include <string>

#include "lsid/em.hpp"
#include "lsid/model.hpp"
#include "lsid/sampler.hpp"

namespace lsid {

// Shortest decimal string that parses back to exactly v.
std::string format_double(double v);

// Writes content to path atomically (temp file + rename). Throws on I/O failure.
void write_text_atomic(const std::string& path, const std::string& content);

// Model JSON with keys A, B, C, Q, P1 (row-major nested arrays), mu1 (array),
// D (number). load validates the result.
ContinuousModel load_model(const std::string& path);
void save_model(const ContinuousModel& m, const std::string& path);

// Trace CSV columns: k,t,u,z,y,a,b,event with k starting at 1 and t = (k-1)*delta.
void write_trace_csv(const std::string& path, const Vector& u, const Vector& z,
                     const QuantizedTrace& trace);

struct TraceFile {
  Vector u;
  Vector z;  // simulated noiseless output, carried for baseline identification
  QuantizedTrace trace;
};

// Rereads a trace CSV; delta and tau are not stored in the file and must come
// from the experiment configuration.
TraceFile read_trace_csv(const std::string& path, double delta, double tau);

// Event CSV columns: l,t_l,y_l with l starting at 1.
void write_events_csv(const std::string& path, const EventRecord& events);

// Per-iteration invariant parameters, objective, likelihood and timing.
void save_em_trace(const EMTrace& trace, const std::string& path);

}  // namespace lsid
