#pragma once

#include <optional>
#include <string>

#include "osearch/refine.hpp"
#include "osearch/simulate.hpp"

namespace osearch {

// Post-synthesis enrichments stored alongside a feasibility certificate.
struct FactorRecord {
  int t = 0;
  std::vector<cd> b;
  double residual = 0.0;  // autocorrelation mismatch
};

struct CertificateFile {
  FeasibilityCertificate feas;
  std::vector<FactorRecord> factors;      // feasible runs only
  std::optional<SimulationReport> sim;    // feasible runs only
  double gram_equality_residual = -1.0;   // verify_gram_tuple, -1 = not run
  double gram_min_eigenvalue = 0.0;
  double final_entry = 0.0;
  double epsilon = 0.0;
};

// JSON serialization.  Round trips exactly (doubles are written with
// shortest round-trip precision).
void save_certificate(const CertificateFile& c, const std::string& path);
CertificateFile load_certificate(const std::string& path);

// Refinement checkpoint: enough state to continue a run (grid, LP basis,
// iteration log, RNG-free).  Same JSON fidelity guarantees.
struct Checkpoint {
  int n = 0;
  int k = 0;
  Grid grid;
  std::vector<RowRef> basis;
  std::vector<IterationLog> log;
  double seconds_so_far = 0.0;
  Tolerances tol;
};
void save_checkpoint(const Checkpoint& c, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace osearch
