#pragma once

#include <limits>
#include <vector>

namespace tap {

/// One outer-iteration record of a solver run.
struct ConvergenceRecord {
    int iter = 0;
    double objective = 0.0;       // F(t^k)
    double gap = std::numeric_limits<double>::quiet_NaN();  // duality gap, NaN if not evaluated
    double smoothness = 0.0;      // accepted L estimate
    int sinkhorn_sweeps = 0;      // inner iterations spent this outer step
    double elapsed_ms = 0.0;
};

using ConvergenceHistory = std::vector<ConvergenceRecord>;

}  // namespace tap
