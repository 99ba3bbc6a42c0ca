#include "reddiff/trace.hpp"

#include <cstdio>
#include <sstream>

namespace reddiff {

namespace {

void put_real(std::ostream& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out << buf;
}

}  // namespace

void write_trace_csv(std::ostream& out, const RunTrace& trace) {
  out << kTraceCsvHeader << '\n';
  for (const auto& r : trace.records) {
    out << r.step << ',' << r.t << ',';
    put_real(out, r.loss);
    out << ',';
    put_real(out, r.recon);
    out << ',';
    put_real(out, r.reg_inner);
    out << ',';
    put_real(out, r.eps_residual_norm);
    out << ',';
    put_real(out, r.signal_residual_norm);
    out << '\n';
  }
}

std::string trace_to_csv(const RunTrace& trace) {
  std::ostringstream os;
  write_trace_csv(os, trace);
  return os.str();
}

}  // namespace reddiff
