#pragma once

#include <vector>

#include "tap/network.hpp"

namespace tap {

/// Single-source shortest-path tree. dist is +inf for unreachable nodes;
/// pred_link[v] is the incoming link id on the tree path, -1 at the origin
/// and at unreachable nodes.
struct ShortestPathTree {
    int origin = 0;  // 0-based node id
    Eigen::VectorXd dist;
    std::vector<int> pred_link;
};

/// Dijkstra with a binary heap and lazy deletion. Honors first_thru_node:
/// centroid nodes (file index below first_thru_node) other than the origin
/// are settled but never expanded.
ShortestPathTree sssp(const Network& net, const CostVector& t, int origin);

/// Shortest-path cost matrix over demand.zones; entries outside od_mask are 0.
/// When trees is non-null it receives one tree per zone, in zone order.
Eigen::MatrixXd cost_matrix(const Network& net, const CostVector& t, const DemandSpec& demand,
                            std::vector<ShortestPathTree>* trees = nullptr);

/// All-or-nothing assignment: route each d_vehicle(i, j) wholly along the
/// tree path, accumulating node loads down each tree. Throws if some pair
/// with positive demand is unreachable.
FlowVector aon_assign(const Network& net, const std::vector<ShortestPathTree>& trees,
                      const DemandSpec& demand, const Eigen::MatrixXd& d_vehicle);

/// Danskin subgradient with tie handling: demand is routed over the DAG of
/// links lying on a near-shortest path (label slack below tie_tol relative),
/// split at each node proportionally to split_weights, equally when the
/// weights vanish. Any such flow is a valid subgradient aggregation; with
/// unique shortest paths this coincides with aon_assign. Splitting ties by
/// the inverse-BPR flows makes the gradient vanish at equilibria where
/// several used routes share the optimal cost, which a single tree path
/// cannot do.
FlowVector aon_assign_split(const Network& net, const std::vector<ShortestPathTree>& trees,
                            const DemandSpec& demand, const Eigen::MatrixXd& d_vehicle,
                            const CostVector& t, const Eigen::VectorXd& split_weights,
                            double tie_tol = 1e-4);

}  // namespace tap
