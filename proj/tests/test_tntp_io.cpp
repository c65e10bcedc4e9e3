#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "tap/tntp_io.hpp"

using namespace tap;

namespace {

const char* kMinimalNet =
    "<NUMBER OF NODES> 2\n"
    "<NUMBER OF LINKS> 1\n"
    "<FIRST THRU NODE> 1\n"
    "<END OF METADATA>\n"
    "~ init term capacity length fftime b power speed toll type ;\n"
    "1 2 100 1 10 0.15 4 0 0 1 ;\n";

std::string read_data(const char* name) {
    std::ifstream f(std::string(TAP_DATA_DIR) + "/" + name, std::ios::binary);
    REQUIRE(f);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("parse_net minimal file") {
    Network net = parse_net(kMinimalNet);
    CHECK(net.node_count == 2);
    CHECK(net.link_count() == 1);
    CHECK(net.first_thru_node == 1);
    CHECK(net.tail[0] == 0);
    CHECK(net.head[0] == 1);
    CHECK(net.links[0].free_flow_time == 10.0);
    CHECK(net.links[0].capacity == 100.0);
    CHECK(net.links[0].kappa == 0.15);
    CHECK(net.links[0].power_inv == 4.0);
}

TEST_CASE("parse_net Sioux Falls") {
    Network net = parse_net(read_data("SiouxFalls_net.tntp"));
    CHECK(net.node_count == 24);
    CHECK(net.link_count() == 76);
    CHECK(net.zone_count == 24);
    CHECK(net.first_thru_node == 1);
}

TEST_CASE("parse_net error paths") {
    SUBCASE("declared/actual link count mismatch") {
        std::string text =
            "<NUMBER OF NODES> 2\n<NUMBER OF LINKS> 2\n<FIRST THRU NODE> 1\n"
            "<END OF METADATA>\n1 2 100 1 10 0.15 4 0 0 1 ;\n";
        CHECK_THROWS_AS(parse_net(text), ParseError);
    }
    SUBCASE("missing metadata") {
        CHECK_THROWS_AS(parse_net("1 2 100 1 10 0.15 4 0 0 1 ;\n"), ParseError);
    }
    SUBCASE("non-numeric field has a line number") {
        std::string text =
            "<NUMBER OF NODES> 2\n<NUMBER OF LINKS> 1\n<FIRST THRU NODE> 1\n"
            "<END OF METADATA>\n1 2 oops 1 10 0.15 4 0 0 1 ;\n";
        try {
            parse_net(text);
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.line() == 5);
        }
    }
    SUBCASE("non-positive capacity rejected") {
        std::string text =
            "<NUMBER OF NODES> 2\n<NUMBER OF LINKS> 1\n<FIRST THRU NODE> 1\n"
            "<END OF METADATA>\n1 2 0 1 10 0.15 4 0 0 1 ;\n";
        CHECK_THROWS_AS(parse_net(text), ParseError);
    }
}

TEST_CASE("parse_trips basics") {
    std::string text =
        "<TOTAL OD FLOW> 150\n<END OF METADATA>\n"
        "Origin 1\n2 : 100; 3 : 50;\n";
    TripTable t = parse_trips(text);
    CHECK(t.total == doctest::Approx(150.0));
    CHECK(t.trips.at({1, 2}) == doctest::Approx(100.0));
    CHECK(t.trips.at({1, 3}) == doctest::Approx(50.0));

    SUBCASE("empty origin block is fine") {
        std::string empty =
            "<TOTAL OD FLOW> 100\n<END OF METADATA>\n"
            "Origin 1\nOrigin 2\n1 : 100;\n";
        TripTable e = parse_trips(empty);
        CHECK(e.total == doctest::Approx(100.0));
        CHECK(e.trips.count({1, 2}) == 0);
    }
    SUBCASE("malformed entry has a line number") {
        std::string bad = "<END OF METADATA>\nOrigin 1\n2 100;\n";
        try {
            parse_trips(bad);
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.line() == 3);
        }
    }
}

TEST_CASE("parse_trips Sioux Falls total") {
    TripTable t = parse_trips(read_data("SiouxFalls_trips.tntp"));
    CHECK(t.total == doctest::Approx(360600.0).epsilon(1e-12));
    CHECK(t.max_zone == 24);
}

TEST_CASE("marginals") {
    SUBCASE("row and column sums") {
        TripTable t;
        t.trips[{1, 2}] = 100;
        t.trips[{1, 3}] = 50;
        t.trips[{2, 3}] = 50;
        t.total = 200;
        DemandSpec spec = marginals(t);
        CHECK(spec.zone_dim() == 3);
        CHECK(spec.l[0] == doctest::Approx(150.0));
        CHECK(spec.l[1] == doctest::Approx(50.0));
        CHECK(spec.w[1] == doctest::Approx(100.0));
        CHECK(spec.w[2] == doctest::Approx(100.0));
        CHECK(spec.total == doctest::Approx(200.0));
        CHECK(spec.l.sum() == doctest::Approx(spec.w.sum()));
    }
    SUBCASE("symmetric 2x2") {
        TripTable t;
        t.trips[{1, 2}] = 25;
        t.trips[{2, 1}] = 25;
        // intra-zonal entries are dropped
        t.trips[{1, 1}] = 25;
        t.trips[{2, 2}] = 25;
        DemandSpec spec = marginals(t);
        CHECK(spec.l[0] == doctest::Approx(25.0));
        CHECK(spec.l[1] == doctest::Approx(25.0));
        CHECK(spec.w[0] == doctest::Approx(25.0));
        CHECK(spec.w[1] == doctest::Approx(25.0));
    }
    SUBCASE("all-zero matrix is an error") {
        TripTable t;
        CHECK_THROWS(marginals(t));
    }
    SUBCASE("Sioux Falls marginals") {
        DemandSpec spec = marginals(parse_trips(read_data("SiouxFalls_trips.tntp")));
        CHECK(spec.zone_dim() == 24);
        CHECK(spec.l.minCoeff() > 0.0);
        CHECK(spec.w.minCoeff() > 0.0);
        CHECK(spec.total == doctest::Approx(360600.0));
        CHECK(spec.l.sum() == doctest::Approx(spec.w.sum()));
    }
}

TEST_CASE("write_tables") {
    Network net = parse_net(kMinimalNet);
    TripTable t;
    t.trips[{1, 2}] = 5;
    DemandSpec spec = marginals(t);

    FlowVector f(1);
    f << 5.0;
    CostVector times(1);
    times << 10.5;
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2, 2);
    d(0, 1) = 5.0;
    ConvergenceHistory hist;
    for (int k = 1; k <= 3; ++k) {
        ConvergenceRecord r;
        r.iter = k;
        r.objective = -double(k);
        hist.push_back(r);
    }

    auto dir = std::filesystem::temp_directory_path() / "tap_write_tables_test";
    std::filesystem::remove_all(dir);
    write_tables(net, spec, f, times, d, hist, dir.string());

    auto count_lines = [&](const char* name) {
        std::ifstream in(dir / name);
        REQUIRE(in);
        int n = 0;
        std::string line;
        while (std::getline(in, line)) ++n;
        return n;
    };
    CHECK(count_lines("flows.csv") == 2);        // header + one link
    CHECK(count_lines("convergence.csv") == 4);  // header + 3 records

    // demand table sums to Lambda
    std::ifstream in(dir / "demand.csv");
    std::string line;
    std::getline(in, line);  // header
    double sum = 0.0;
    while (std::getline(in, line)) {
        auto pos = line.rfind(',');
        sum += std::stod(line.substr(pos + 1));
    }
    CHECK(sum == doctest::Approx(5.0).epsilon(1e-6));
    std::filesystem::remove_all(dir);
}

TEST_CASE("numeric round trip at 17 significant digits") {
    // Values survive a text round trip bit-for-bit.
    for (double v : {10.09375, 0.15, 1.0 / 3.0, 25900.20064, 4840.086266870737}) {
        CHECK(std::stod(fmt17(v)) == v);
    }
    Network net = parse_net(kMinimalNet);
    Network net2 = parse_net(kMinimalNet);
    CHECK(net.links[0].free_flow_time == net2.links[0].free_flow_time);
    CHECK(net.links[0].capacity == net2.links[0].capacity);
}
