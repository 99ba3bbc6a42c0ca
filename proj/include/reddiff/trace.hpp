#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace reddiff {

/// One optimizer step. For minibatch plans, loss/recon/reg_inner are batch
/// means while t and both residual norms describe the batch's first timestep.
struct TraceRecord {
  int step = 0;
  int t = 0;
  double loss = 0.0;
  double recon = 0.0;                 // ||y - f(mu)||^2
  double reg_inner = 0.0;             // lambda_t * r^T mu, r the stopped noise residual
  double eps_residual_norm = 0.0;     // ||eps_theta - eps||
  double signal_residual_norm = 0.0;  // ||mu_hat_t - mu||
};

struct RunTrace {
  std::vector<TraceRecord> records;
};

inline constexpr const char* kTraceCsvHeader =
    "step,t,loss,recon,reg_inner,eps_residual_norm,signal_residual_norm";

/// CSV with kTraceCsvHeader; reals printed with 17 significant digits so the
/// file round-trips the doubles exactly.
void write_trace_csv(std::ostream& out, const RunTrace& trace);
std::string trace_to_csv(const RunTrace& trace);

}  // namespace reddiff
