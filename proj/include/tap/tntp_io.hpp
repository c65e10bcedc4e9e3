#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <utility>

#include "tap/convergence.hpp"
#include "tap/network.hpp"

namespace tap {

class ParseError : public std::runtime_error {
  public:
    ParseError(int line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    int line() const { return line_; }

  private:
    int line_;
};

/// Sparse trip table keyed by 1-based (origin, destination) zone ids.
struct TripTable {
    std::map<std::pair<int, int>, double> trips;
    double total = 0.0;           // sum of entries
    double declared_total = 0.0;  // <TOTAL OD FLOW> metadata, 0 if absent
    int max_zone = 0;
};

/// Parse a TNTP network file (metadata header + link rows).
Network parse_net(const std::string& text);

/// Parse a TNTP trips file into a sparse table.
TripTable parse_trips(const std::string& text);

/// Derive origin/destination marginals and the OD pair mask from a trip table.
DemandSpec marginals(const TripTable& trips);

/// Format a double with 17 significant digits.
std::string fmt17(double x);

/// Write flows.csv, demand.csv and convergence.csv into out_dir.
/// d_vehicle is the trip matrix in vehicle units over demand.zones.
void write_tables(const Network& net, const DemandSpec& demand, const FlowVector& flows,
                  const CostVector& times, const Eigen::MatrixXd& d_vehicle,
                  const ConvergenceHistory& history, const std::string& out_dir);

}  // namespace tap
