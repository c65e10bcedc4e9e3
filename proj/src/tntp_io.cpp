#include "tap/tntp_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <vector>

namespace tap {

namespace {

std::string strip_comment(const std::string& line) {
    auto pos = line.find('~');
    return pos == std::string::npos ? line : line.substr(0, pos);
}

bool blank(const std::string& s) {
    for (char c : s)
        if (!std::isspace(static_cast<unsigned char>(c))) return false;
    return true;
}

std::vector<std::string> tokenize(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

double parse_number(const std::string& tok, int line_no) {
    try {
        std::size_t used = 0;
        double v = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw ParseError(line_no, "expected a number, got '" + tok + "'");
    }
}

int parse_int(const std::string& tok, int line_no) {
    double v = parse_number(tok, line_no);
    int i = static_cast<int>(v);
    if (static_cast<double>(i) != v)
        throw ParseError(line_no, "expected an integer, got '" + tok + "'");
    return i;
}

// Reads "<KEY> value" metadata lines up to <END OF METADATA>.
// Returns the 0-based index of the first line after the header.
std::size_t read_metadata(const std::vector<std::string>& lines,
                          std::map<std::string, std::string>& meta) {
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string s = strip_comment(lines[i]);
        if (blank(s)) continue;
        auto open = s.find('<');
        if (open == std::string::npos)
            throw ParseError(static_cast<int>(i) + 1, "expected metadata, got '" + s + "'");
        auto close = s.find('>', open);
        if (close == std::string::npos)
            throw ParseError(static_cast<int>(i) + 1, "unterminated metadata key");
        std::string key = s.substr(open + 1, close - open - 1);
        std::string value = s.substr(close + 1);
        while (!value.empty() && std::isspace(static_cast<unsigned char>(value.front())))
            value.erase(value.begin());
        while (!value.empty() && std::isspace(static_cast<unsigned char>(value.back())))
            value.pop_back();
        if (key == "END OF METADATA") return i + 1;
        meta[key] = value;
    }
    throw ParseError(static_cast<int>(lines.size()), "missing <END OF METADATA>");
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::string cur;
    for (char c : text) {
        if (c == '\n') {
            lines.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) lines.push_back(cur);
    return lines;
}

}  // namespace

Network parse_net(const std::string& text) {
    auto lines = split_lines(text);
    std::map<std::string, std::string> meta;
    std::size_t first_data = read_metadata(lines, meta);

    auto require = [&](const char* key) -> const std::string& {
        auto it = meta.find(key);
        if (it == meta.end())
            throw ParseError(1, std::string("missing metadata key <") + key + ">");
        return it->second;
    };

    Network net;
    net.node_count = parse_int(require("NUMBER OF NODES"), 1);
    net.first_thru_node = parse_int(require("FIRST THRU NODE"), 1);
    const int declared_links = parse_int(require("NUMBER OF LINKS"), 1);
    net.zone_count = meta.count("NUMBER OF ZONES")
                         ? parse_int(meta.at("NUMBER OF ZONES"), 1)
                         : net.node_count;

    int rows = 0;
    for (std::size_t i = first_data; i < lines.size(); ++i) {
        const int line_no = static_cast<int>(i) + 1;
        std::string s = strip_comment(lines[i]);
        if (blank(s)) continue;
        auto toks = tokenize(s);
        if (!toks.empty() && toks.back() == ";") toks.pop_back();
        if (!toks.empty() && toks.back().back() == ';') toks.back().pop_back();
        if (toks.size() < 7)
            throw ParseError(line_no, "link row needs at least 7 fields");
        int init = parse_int(toks[0], line_no);
        int term = parse_int(toks[1], line_no);
        double capacity = parse_number(toks[2], line_no);
        double fftime = parse_number(toks[4], line_no);
        double b = parse_number(toks[5], line_no);
        double power = parse_number(toks[6], line_no);
        if (init < 1 || init > net.node_count || term < 1 || term > net.node_count)
            throw ParseError(line_no, "node id out of range");
        ++rows;
        if (init == term) continue;  // drop self-loops
        if (capacity <= 0.0) throw ParseError(line_no, "capacity must be positive");
        if (fftime <= 0.0) throw ParseError(line_no, "free-flow time must be positive");
        LinkParams p{fftime, capacity, b, power};
        p.validate();
        net.tail.push_back(init - 1);
        net.head.push_back(term - 1);
        net.links.push_back(p);
    }
    if (rows != declared_links)
        throw ParseError(static_cast<int>(lines.size()),
                         "declared " + std::to_string(declared_links) + " links, found " +
                             std::to_string(rows));
    return net;
}

TripTable parse_trips(const std::string& text) {
    auto lines = split_lines(text);
    std::map<std::string, std::string> meta;
    std::size_t first_data = read_metadata(lines, meta);

    TripTable table;
    if (meta.count("TOTAL OD FLOW"))
        table.declared_total = parse_number(meta.at("TOTAL OD FLOW"), 1);

    int origin = 0;
    for (std::size_t i = first_data; i < lines.size(); ++i) {
        const int line_no = static_cast<int>(i) + 1;
        std::string s = strip_comment(lines[i]);
        if (blank(s)) continue;
        auto toks = tokenize(s);
        if (toks[0] == "Origin") {
            if (toks.size() < 2) throw ParseError(line_no, "Origin without a zone id");
            origin = parse_int(toks[1], line_no);
            table.max_zone = std::max(table.max_zone, origin);
            continue;
        }
        if (origin == 0) throw ParseError(line_no, "trip entry before any Origin block");
        // Entries "j : v;" -- possibly several per line; ':' may be glued to tokens.
        std::string flat;
        for (auto& t : toks) flat += t + " ";
        std::istringstream is(flat);
        std::string entry;
        while (std::getline(is, entry, ';')) {
            if (blank(entry)) continue;
            auto colon = entry.find(':');
            if (colon == std::string::npos)
                throw ParseError(line_no, "malformed trip entry '" + entry + "'");
            std::string dest_s = entry.substr(0, colon);
            std::string val_s = entry.substr(colon + 1);
            auto dtoks = tokenize(dest_s);
            auto vtoks = tokenize(val_s);
            if (dtoks.size() != 1 || vtoks.size() != 1)
                throw ParseError(line_no, "malformed trip entry '" + entry + "'");
            int dest = parse_int(dtoks[0], line_no);
            double v = parse_number(vtoks[0], line_no);
            if (v < 0.0) throw ParseError(line_no, "negative demand");
            table.max_zone = std::max(table.max_zone, dest);
            if (v > 0.0) {
                table.trips[{origin, dest}] += v;
                table.total += v;
            }
        }
    }
    if (table.declared_total > 0.0 &&
        std::abs(table.total - table.declared_total) > 0.005 * table.declared_total) {
        std::cerr << "warning: trips sum " << fmt17(table.total)
                  << " disagrees with <TOTAL OD FLOW> " << fmt17(table.declared_total)
                  << " by more than 0.5%\n";
    }
    return table;
}

DemandSpec marginals(const TripTable& table) {
    if (table.trips.empty()) throw std::invalid_argument("marginals: no demand");

    // Active zones: positive row or column activity.
    std::map<int, double> row_sum, col_sum;
    for (auto& [ij, v] : table.trips) {
        if (ij.first == ij.second) continue;  // intra-zonal trips are out of model
        row_sum[ij.first] += v;
        col_sum[ij.second] += v;
    }
    std::map<int, int> zone_index;
    DemandSpec spec;
    for (auto& [z, v] : row_sum)
        if (v > 0.0 && !zone_index.count(z)) {
            zone_index[z] = spec.zone_dim();
            spec.zones.push_back(z - 1);
        }
    for (auto& [z, v] : col_sum)
        if (v > 0.0 && !zone_index.count(z)) {
            zone_index[z] = spec.zone_dim();
            spec.zones.push_back(z - 1);
        }
    // Deterministic order: sort by zone id and rebuild the index.
    std::sort(spec.zones.begin(), spec.zones.end());
    zone_index.clear();
    for (int k = 0; k < spec.zone_dim(); ++k) zone_index[spec.zones[k] + 1] = k;

    const int z = spec.zone_dim();
    spec.l = Eigen::VectorXd::Zero(z);
    spec.w = Eigen::VectorXd::Zero(z);
    spec.d_ref = Eigen::MatrixXd::Zero(z, z);
    spec.od_mask = BoolMask::Constant(z, z, false);
    for (int i = 0; i < z; ++i)
        for (int j = 0; j < z; ++j)
            if (i != j) spec.od_mask(i, j) = true;
    for (auto& [ij, v] : table.trips) {
        if (ij.first == ij.second) continue;
        int i = zone_index.at(ij.first);
        int j = zone_index.at(ij.second);
        spec.d_ref(i, j) += v;
    }
    spec.l = spec.d_ref.rowwise().sum();
    spec.w = spec.d_ref.colwise().sum();
    spec.total = spec.l.sum();
    if (spec.total <= 0.0) throw std::invalid_argument("marginals: no demand");
    return spec;
}

std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

void write_tables(const Network& net, const DemandSpec& demand, const FlowVector& flows,
                  const CostVector& times, const Eigen::MatrixXd& d_vehicle,
                  const ConvergenceHistory& history, const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);

    auto open = [&](const char* name) {
        std::ofstream f(fs::path(out_dir) / name);
        if (!f) throw std::runtime_error(std::string("cannot write ") + out_dir + "/" + name);
        return f;
    };

    {
        auto f = open("flows.csv");
        f << "link_id,tail,head,flow,time,time_over_fftime\n";
        for (int e = 0; e < net.link_count(); ++e) {
            f << e + 1 << ',' << net.tail[e] + 1 << ',' << net.head[e] + 1 << ','
              << fmt17(flows[e]) << ',' << fmt17(times[e]) << ','
              << fmt17(times[e] / net.links[e].free_flow_time) << '\n';
        }
    }
    {
        auto f = open("demand.csv");
        f << "origin,destination,trips\n";
        for (int i = 0; i < demand.zone_dim(); ++i)
            for (int j = 0; j < demand.zone_dim(); ++j)
                if (demand.od_mask(i, j))
                    f << demand.zones[i] + 1 << ',' << demand.zones[j] + 1 << ','
                      << fmt17(d_vehicle(i, j)) << '\n';
    }
    {
        auto f = open("convergence.csv");
        f << "iter,F,gap,L_estimate,sinkhorn_iters,elapsed_ms\n";
        for (const auto& r : history)
            f << r.iter << ',' << fmt17(r.objective) << ',' << fmt17(r.gap) << ','
              << fmt17(r.smoothness) << ',' << r.sinkhorn_sweeps << ','
              << fmt17(r.elapsed_ms) << '\n';
    }
}

}  // namespace tap
