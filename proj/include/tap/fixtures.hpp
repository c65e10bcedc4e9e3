#pragma once

#include "tap/network.hpp"
#include "tap/tntp_io.hpp"

namespace tap::fixtures {

/// One congestible link 1 -> 2 carrying a unit of demand; equilibrium time
/// 10.09375, flow 1.
inline std::pair<Network, DemandSpec> single_link() {
    Network net;
    net.node_count = 2;
    net.zone_count = 2;
    net.first_thru_node = 1;
    net.tail = {0};
    net.head = {1};
    net.links = {LinkParams{10.0, 2.0, 0.15, 4.0}};

    TripTable trips;
    trips.trips[{1, 2}] = 1.0;
    trips.total = 1.0;
    trips.max_zone = 2;
    return {net, marginals(trips)};
}

/// Two parallel links 1 -> 2 with affine costs 1 + f and 2 + f; total demand
/// 3 splits (2, 1) at common time 3.
inline std::pair<Network, DemandSpec> parallel_links() {
    Network net;
    net.node_count = 2;
    net.zone_count = 2;
    net.first_thru_node = 1;
    net.tail = {0, 0};
    net.head = {1, 1};
    net.links = {LinkParams{1.0, 1.0, 1.0, 1.0}, LinkParams{2.0, 1.0, 0.5, 1.0}};

    TripTable trips;
    trips.trips[{1, 2}] = 3.0;
    trips.total = 3.0;
    trips.max_zone = 2;
    return {net, marginals(trips)};
}

/// Three zones on a directed triangle (both directions of each edge), four
/// OD pairs with positive reference demand.
inline std::pair<Network, DemandSpec> triangle() {
    Network net;
    net.node_count = 3;
    net.zone_count = 3;
    net.first_thru_node = 1;
    auto add = [&](int a, int b, double tbar, double cap) {
        net.tail.push_back(a);
        net.head.push_back(b);
        net.links.push_back(LinkParams{tbar, cap, 0.5, 2.0});
    };
    add(0, 1, 1.0, 2.0);
    add(1, 0, 1.0, 2.0);
    add(1, 2, 1.5, 2.0);
    add(2, 1, 1.5, 2.0);
    add(0, 2, 2.0, 2.0);
    add(2, 0, 2.0, 2.0);

    TripTable trips;
    trips.trips[{1, 2}] = 2.0;
    trips.trips[{1, 3}] = 1.0;
    trips.trips[{2, 3}] = 1.0;
    trips.trips[{3, 2}] = 1.0;
    trips.total = 5.0;
    trips.max_zone = 3;
    return {net, marginals(trips)};
}

/// Two zones joined by identical parallel routes in both directions with
/// symmetric marginals; the equilibrium is fully symmetric.
inline std::pair<Network, DemandSpec> symmetric_two_route() {
    Network net;
    net.node_count = 2;
    net.zone_count = 2;
    net.first_thru_node = 1;
    auto add = [&](int a, int b) {
        net.tail.push_back(a);
        net.head.push_back(b);
        net.links.push_back(LinkParams{1.0, 1.0, 1.0, 2.0});
    };
    add(0, 1);
    add(0, 1);
    add(1, 0);
    add(1, 0);

    TripTable trips;
    trips.trips[{1, 2}] = 2.0;
    trips.trips[{2, 1}] = 2.0;
    trips.total = 4.0;
    trips.max_zone = 2;
    return {net, marginals(trips)};
}

}  // namespace tap::fixtures
