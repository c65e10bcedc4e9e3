#include "tap/shortest_paths.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <queue>
#include <stdexcept>

namespace tap {

namespace {

// Forward star: links sorted by tail, stable in link-id order.
struct ForwardStar {
    std::vector<int> offset;  // node_count + 1
    std::vector<int> link;    // link ids

    explicit ForwardStar(const Network& net) {
        offset.assign(net.node_count + 1, 0);
        for (int e = 0; e < net.link_count(); ++e) ++offset[net.tail[e] + 1];
        for (int v = 0; v < net.node_count; ++v) offset[v + 1] += offset[v];
        link.resize(net.link_count());
        std::vector<int> fill = offset;
        for (int e = 0; e < net.link_count(); ++e) link[fill[net.tail[e]]++] = e;
    }
};

}  // namespace

ShortestPathTree sssp(const Network& net, const CostVector& t, int origin) {
    if (origin < 0 || origin >= net.node_count)
        throw std::invalid_argument("sssp: origin out of range");
    if (t.size() != net.link_count())
        throw std::invalid_argument("sssp: cost vector size mismatch");
    for (int e = 0; e < net.link_count(); ++e)
        if (!(t[e] >= 0.0) || !std::isfinite(t[e]))
            throw std::invalid_argument("sssp: costs must be finite and non-negative");

    const double inf = std::numeric_limits<double>::infinity();
    ShortestPathTree tree;
    tree.origin = origin;
    tree.dist = Eigen::VectorXd::Constant(net.node_count, inf);
    tree.pred_link.assign(net.node_count, -1);

    const ForwardStar star(net);

    // (dist, node) min-heap; node index breaks ties for determinism.
    using Entry = std::pair<double, int>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> heap;
    std::vector<char> settled(net.node_count, 0);

    tree.dist[origin] = 0.0;
    heap.emplace(0.0, origin);
    while (!heap.empty()) {
        auto [d, u] = heap.top();
        heap.pop();
        if (settled[u]) continue;  // lazy deletion
        settled[u] = 1;
        // Centroids cannot serve as intermediate nodes.
        if (u != origin && u + 1 < net.first_thru_node) continue;
        for (int k = star.offset[u]; k < star.offset[u + 1]; ++k) {
            int e = star.link[k];
            int v = net.head[e];
            double nd = d + t[e];
            if (nd < tree.dist[v]) {
                tree.dist[v] = nd;
                tree.pred_link[v] = e;
                heap.emplace(nd, v);
            }
        }
    }
    for (int v = 0; v < net.node_count; ++v)
        if (!std::isfinite(tree.dist[v])) tree.pred_link[v] = -1;
    return tree;
}

Eigen::MatrixXd cost_matrix(const Network& net, const CostVector& t, const DemandSpec& demand,
                            std::vector<ShortestPathTree>* trees) {
    const int z = demand.zone_dim();
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(z, z);
    if (trees) trees->clear();
    for (int i = 0; i < z; ++i) {
        ShortestPathTree tree = sssp(net, t, demand.zones[i]);
        for (int j = 0; j < z; ++j)
            if (demand.od_mask(i, j)) T(i, j) = tree.dist[demand.zones[j]];
        if (trees) trees->push_back(std::move(tree));
    }
    return T;
}

FlowVector aon_assign(const Network& net, const std::vector<ShortestPathTree>& trees,
                      const DemandSpec& demand, const Eigen::MatrixXd& d_vehicle) {
    const int z = demand.zone_dim();
    if (static_cast<int>(trees.size()) != z)
        throw std::invalid_argument("aon_assign: one tree per zone expected");
    FlowVector f = FlowVector::Zero(net.link_count());
    std::vector<double> load(net.node_count);
    std::vector<int> order(net.node_count);

    for (int i = 0; i < z; ++i) {
        const ShortestPathTree& tree = trees[i];
        std::fill(load.begin(), load.end(), 0.0);
        bool any = false;
        for (int j = 0; j < z; ++j) {
            if (!demand.od_mask(i, j)) continue;
            double d = d_vehicle(i, j);
            if (d <= 0.0) continue;
            int node = demand.zones[j];
            if (!std::isfinite(tree.dist[node]))
                throw std::runtime_error("aon_assign: positive demand on unreachable pair");
            load[node] += d;
            any = true;
        }
        if (!any) continue;
        // Push loads down the tree in decreasing-distance order.
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (tree.dist[a] != tree.dist[b]) return tree.dist[a] > tree.dist[b];
            return a > b;
        });
        for (int v : order) {
            if (load[v] <= 0.0 || tree.pred_link[v] < 0) continue;
            int e = tree.pred_link[v];
            f[e] += load[v];
            load[net.tail[e]] += load[v];
        }
    }
    return f;
}

FlowVector aon_assign_split(const Network& net, const std::vector<ShortestPathTree>& trees,
                            const DemandSpec& demand, const Eigen::MatrixXd& d_vehicle,
                            const CostVector& t, const Eigen::VectorXd& split_weights,
                            double tie_tol) {
    const int z = demand.zone_dim();
    if (static_cast<int>(trees.size()) != z)
        throw std::invalid_argument("aon_assign_split: one tree per zone expected");
    if (split_weights.size() != net.link_count())
        throw std::invalid_argument("aon_assign_split: weight vector size mismatch");

    // Reverse star: incoming links per node, stable in link-id order.
    std::vector<int> offset(net.node_count + 1, 0), in_link(net.link_count());
    for (int e = 0; e < net.link_count(); ++e) ++offset[net.head[e] + 1];
    for (int v = 0; v < net.node_count; ++v) offset[v + 1] += offset[v];
    {
        std::vector<int> fill = offset;
        for (int e = 0; e < net.link_count(); ++e) in_link[fill[net.head[e]]++] = e;
    }

    FlowVector f = FlowVector::Zero(net.link_count());
    std::vector<double> load(net.node_count);
    std::vector<int> order(net.node_count), tight;
    std::vector<double> ramp;

    for (int i = 0; i < z; ++i) {
        const ShortestPathTree& tree = trees[i];
        std::fill(load.begin(), load.end(), 0.0);
        bool any = false;
        for (int j = 0; j < z; ++j) {
            if (!demand.od_mask(i, j)) continue;
            double d = d_vehicle(i, j);
            if (d <= 0.0) continue;
            int node = demand.zones[j];
            if (!std::isfinite(tree.dist[node]))
                throw std::runtime_error("aon_assign_split: positive demand on unreachable pair");
            load[node] += d;
            any = true;
        }
        if (!any) continue;

        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (tree.dist[a] != tree.dist[b]) return tree.dist[a] > tree.dist[b];
            return a > b;
        });
        for (int v : order) {
            if (load[v] <= 0.0 || v == tree.origin || !std::isfinite(tree.dist[v])) continue;
            const double band = tie_tol * (1.0 + std::abs(tree.dist[v]));
            // Ramp each weight down linearly over the slack band so the
            // routing field stays continuous in t; a hard cutoff makes the
            // iterates chatter on the cutoff surface.
            tight.clear();
            double wsum = 0.0;
            int best = -1;
            for (int k = offset[v]; k < offset[v + 1]; ++k) {
                int e = in_link[k];
                int u = net.tail[e];
                if (u != tree.origin && u + 1 < net.first_thru_node) continue;
                if (!std::isfinite(tree.dist[u]) || tree.dist[u] >= tree.dist[v]) continue;
                double slack = tree.dist[u] + t[e] - tree.dist[v];
                if (slack >= band) continue;
                tight.push_back(e);
                ramp.push_back(1.0 - std::max(slack, 0.0) / band);
                wsum += std::max(split_weights[e], 0.0) * ramp.back();
                if (best < 0 || slack <= 0.0) best = e;
            }
            if (tight.empty()) {  // cannot happen for a valid tree; stay on it
                int e = tree.pred_link[v];
                f[e] += load[v];
                load[net.tail[e]] += load[v];
                continue;
            }
            if (wsum > 0.0) {
                for (std::size_t k = 0; k < tight.size(); ++k) {
                    int e = tight[k];
                    double share =
                        load[v] * std::max(split_weights[e], 0.0) * ramp[k] / wsum;
                    f[e] += share;
                    load[net.tail[e]] += share;
                }
            } else {  // all weights vanish (free flow): keep the tree path
                int e = tree.pred_link[v] >= 0 ? tree.pred_link[v] : best;
                f[e] += load[v];
                load[net.tail[e]] += load[v];
            }
            ramp.clear();
        }
    }
    return f;
}

}  // namespace tap
