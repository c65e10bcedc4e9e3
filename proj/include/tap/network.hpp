#pragma once

#include <Eigen/Dense>
#include <vector>

#include "tap/link_cost.hpp"

namespace tap {

using CostVector = Eigen::VectorXd;
using FlowVector = Eigen::VectorXd;
using BoolMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Directed road network. Node and link ids are 0-based internally;
/// TNTP files are 1-based and re-emitted 1-based on output.
struct Network {
    int node_count = 0;
    int zone_count = 0;
    int first_thru_node = 1;  // 1-based file convention; nodes below it are centroids
    std::vector<int> tail;    // per link, 0-based
    std::vector<int> head;
    std::vector<LinkParams> links;

    int link_count() const { return static_cast<int>(links.size()); }

    CostVector free_flow_times() const {
        CostVector t(link_count());
        for (int e = 0; e < link_count(); ++e) t[e] = links[e].free_flow_time;
        return t;
    }
};

/// Trip demand over a common list of active zones. l and w are in vehicle
/// units; total is Lambda. od_mask marks the admissible (origin, destination)
/// pairs, indexed by position in `zones`.
struct DemandSpec {
    std::vector<int> zones;  // 0-based node ids
    Eigen::VectorXd l;       // per-zone origin totals
    Eigen::VectorXd w;       // per-zone destination totals
    double total = 0.0;      // Lambda
    BoolMask od_mask;        // zones x zones
    Eigen::MatrixXd d_ref;   // reference trip matrix (vehicle units); 0x0 if absent

    int zone_dim() const { return static_cast<int>(zones.size()); }
};

}  // namespace tap
