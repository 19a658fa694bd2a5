#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "opfbound/core.hpp"

namespace opfbound::netdata {

inline constexpr double kPi = 3.14159265358979323846;

// Angle bounds substituted when a case file marks a branch unconstrained
// (ANGMIN/ANGMAX of 0/0 or magnitudes >= 90 degrees).
inline constexpr double kDefaultAngleBound = 30.0 * kPi / 180.0;

struct Bus {
  int id = 0;
  double vmin = 0.0;   // p.u.
  double vmax = 0.0;   // p.u.
  double pd = 0.0;     // p.u.
  double qd = 0.0;     // p.u.
  double gs = 0.0;     // shunt conductance, p.u. consumed at |V| = 1
  double bs = 0.0;     // shunt susceptance, p.u. injected at |V| = 1
  bool is_reference = false;
};

struct Generator {
  int bus = 0;
  double pmin = 0.0, pmax = 0.0;  // p.u.
  double qmin = 0.0, qmax = 0.0;  // p.u.
  double c2 = 0.0;                // $/p.u.^2-hr, base-scaled
  double c1 = 0.0;                // $/p.u.-hr, base-scaled
  double c0 = 0.0;                // $
};

struct Branch {
  int from_bus = 0;
  int to_bus = 0;
  std::complex<double> series_admittance;  // 1/(r + ix), p.u.
  double shunt_susceptance = 0.0;          // total line charging b_sh, p.u.
  double tap = 1.0;                        // tau >= 0 (1 for a line)
  double shift = 0.0;                      // rad
  double s_rating = 0.0;                   // p.u.; 0 means unlimited
  double ang_min = -kDefaultAngleBound;    // rad
  double ang_max = kDefaultAngleBound;     // rad

  std::complex<double> complex_tap() const {
    return std::polar(tap, shift);
  }
};

// Incidence of one branch at one bus.
struct Incidence {
  int branch = 0;
  bool at_from = true;
};

struct Network {
  double base_mva = 100.0;
  std::vector<Bus> buses;
  std::vector<Generator> generators;
  std::vector<Branch> branches;

  // bus index (into buses) keyed by bus id, plus per-bus incident branches.
  std::map<int, int> bus_index;
  std::vector<std::vector<Incidence>> adjacency;

  // Substitutions applied while parsing (angle defaults, synthesized
  // reference bus). Informational; validate() stays silent about them.
  std::vector<std::string> parse_notes;

  int index_of(int bus_id) const {
    auto it = bus_index.find(bus_id);
    if (it == bus_index.end())
      throw std::runtime_error("unknown bus id " + std::to_string(bus_id));
    return it->second;
  }

  void rebuild_index() {
    bus_index.clear();
    for (int i = 0; i < static_cast<int>(buses.size()); ++i)
      bus_index[buses[i].id] = i;
    adjacency.assign(buses.size(), {});
    for (int e = 0; e < static_cast<int>(branches.size()); ++e) {
      auto f = bus_index.find(branches[e].from_bus);
      auto t = bus_index.find(branches[e].to_bus);
      if (f != bus_index.end()) adjacency[f->second].push_back({e, true});
      if (t != bus_index.end()) adjacency[t->second].push_back({e, false});
    }
  }
};

namespace detail {

struct Matrix {
  std::vector<std::vector<double>> rows;
  std::vector<int> line_numbers;
};

inline std::string strip_comment(const std::string& line) {
  auto pos = line.find('%');
  return pos == std::string::npos ? line : line.substr(0, pos);
}

inline bool parse_number(const std::string& tok, double& out) {
  char* end = nullptr;
  out = std::strtod(tok.c_str(), &end);
  return end != tok.c_str() && *end == '\0';
}

// Reads "mpc.<name> = [ rows ];" into a numeric matrix. MATPOWER rows are
// whitespace-separated numbers, one row per line, each optionally ending
// with ';'.
inline std::optional<Matrix> read_section(const std::vector<std::string>& lines,
                                          const std::string& name) {
  const std::string key = "mpc." + name;
  for (size_t i = 0; i < lines.size(); ++i) {
    std::string s = strip_comment(lines[i]);
    auto kpos = s.find(key);
    if (kpos == std::string::npos) continue;
    auto epos = s.find('=', kpos);
    if (epos == std::string::npos) continue;
    auto bpos = s.find('[', epos);
    if (bpos == std::string::npos)
      throw std::runtime_error("line " + std::to_string(i + 1) + ": expected '[' after " + key);
    Matrix m;
    std::string rest = s.substr(bpos + 1);
    size_t li = i;
    bool closed = false;
    while (true) {
      auto close = rest.find(']');
      std::string body = close == std::string::npos ? rest : rest.substr(0, close);
      for (char& c : body)
        if (c == ';' || c == ',') c = ' ';
      std::istringstream iss(body);
      std::vector<double> row;
      std::string tok;
      while (iss >> tok) {
        double v;
        if (!parse_number(tok, v))
          throw std::runtime_error("line " + std::to_string(li + 1) + ": bad number '" + tok +
                                   "' in " + key);
        row.push_back(v);
      }
      if (!row.empty()) {
        m.rows.push_back(std::move(row));
        m.line_numbers.push_back(static_cast<int>(li + 1));
      }
      if (close != std::string::npos) {
        closed = true;
        break;
      }
      if (++li >= lines.size()) break;
      rest = strip_comment(lines[li]);
    }
    if (!closed)
      throw std::runtime_error("line " + std::to_string(i + 1) + ": unterminated " + key + " section");
    return m;
  }
  return std::nullopt;
}

inline std::optional<double> read_scalar(const std::vector<std::string>& lines,
                                         const std::string& name) {
  const std::string key = "mpc." + name;
  for (size_t i = 0; i < lines.size(); ++i) {
    std::string s = strip_comment(lines[i]);
    auto kpos = s.find(key);
    if (kpos == std::string::npos) continue;
    auto epos = s.find('=', kpos);
    if (epos == std::string::npos) continue;
    std::string rest = s.substr(epos + 1);
    for (char& c : rest)
      if (c == ';') c = ' ';
    std::istringstream iss(rest);
    std::string tok;
    if (!(iss >> tok)) continue;
    double v;
    if (!parse_number(tok, v))
      throw std::runtime_error("line " + std::to_string(i + 1) + ": bad number for " + key);
    return v;
  }
  return std::nullopt;
}

inline double at(const std::vector<double>& row, size_t col, double fallback) {
  return col < row.size() ? row[col] : fallback;
}

}  // namespace detail

// Parses MATPOWER case text into a per-unit network. Sections baseMVA, bus,
// gen, branch and gencost are required; only polynomial costs (model 2) of
// degree <= 2 are accepted. Out-of-service branches and generators are
// dropped. All quantities are converted to per-unit on baseMVA and cost
// coefficients rescaled so the objective stays in $/hr.
inline Network parse_case(const std::string& text) {
  std::vector<std::string> lines;
  {
    std::istringstream iss(text);
    std::string line;
    while (std::getline(iss, line)) lines.push_back(line);
  }

  Network net;
  auto base = detail::read_scalar(lines, "baseMVA");
  if (!base) throw std::runtime_error("line 1: missing mpc.baseMVA");
  if (*base <= 0) throw std::runtime_error("line 1: baseMVA must be positive");
  net.base_mva = *base;

  auto bus_m = detail::read_section(lines, "bus");
  auto gen_m = detail::read_section(lines, "gen");
  auto branch_m = detail::read_section(lines, "branch");
  auto cost_m = detail::read_section(lines, "gencost");
  if (!bus_m) throw std::runtime_error("missing mpc.bus section");
  if (!gen_m) throw std::runtime_error("missing mpc.gen section");
  if (!branch_m) throw std::runtime_error("missing mpc.branch section");
  if (!cost_m) throw std::runtime_error("missing mpc.gencost section");

  const double b = net.base_mva;

  for (size_t r = 0; r < bus_m->rows.size(); ++r) {
    const auto& row = bus_m->rows[r];
    int ln = bus_m->line_numbers[r];
    if (row.size() < 13)
      throw std::runtime_error("line " + std::to_string(ln) + ": bus row needs 13 columns");
    Bus bus;
    bus.id = static_cast<int>(row[0]);
    int type = static_cast<int>(row[1]);
    if (type == 4) continue;  // isolated bus
    bus.pd = row[2] / b;
    bus.qd = row[3] / b;
    bus.gs = row[4] / b;
    bus.bs = row[5] / b;
    bus.vmax = row[11];
    bus.vmin = row[12];
    bus.is_reference = (type == 3);
    net.buses.push_back(bus);
  }

  std::vector<size_t> live_gen_rows;
  for (size_t r = 0; r < gen_m->rows.size(); ++r) {
    const auto& row = gen_m->rows[r];
    int ln = gen_m->line_numbers[r];
    if (row.size() < 10)
      throw std::runtime_error("line " + std::to_string(ln) + ": gen row needs 10 columns");
    if (row[7] <= 0) continue;  // out of service
    Generator g;
    g.bus = static_cast<int>(row[0]);
    g.qmax = row[3] / b;
    g.qmin = row[4] / b;
    g.pmax = row[8] / b;
    g.pmin = row[9] / b;
    net.generators.push_back(g);
    live_gen_rows.push_back(r);
  }

  if (cost_m->rows.size() != gen_m->rows.size())
    throw std::runtime_error("line " + std::to_string(cost_m->line_numbers.front()) +
                             ": gencost must have one row per gen row");
  for (size_t k = 0; k < live_gen_rows.size(); ++k) {
    const auto& row = cost_m->rows[live_gen_rows[k]];
    int ln = cost_m->line_numbers[live_gen_rows[k]];
    if (row.size() < 4)
      throw std::runtime_error("line " + std::to_string(ln) + ": gencost row needs >= 4 columns");
    int model = static_cast<int>(row[0]);
    int ncost = static_cast<int>(row[3]);
    if (model != 2)
      throw std::runtime_error("line " + std::to_string(ln) +
                               ": only polynomial gencost (model 2) is supported");
    if (ncost < 1 || ncost > 3)
      throw std::runtime_error("line " + std::to_string(ln) +
                               ": polynomial cost degree must be <= 2");
    if (row.size() < 4 + static_cast<size_t>(ncost))
      throw std::runtime_error("line " + std::to_string(ln) + ": gencost row truncated");
    double c2 = 0, c1 = 0, c0 = 0;
    // coefficients are listed highest degree first
    if (ncost == 3) {
      c2 = row[4];
      c1 = row[5];
      c0 = row[6];
    } else if (ncost == 2) {
      c1 = row[4];
      c0 = row[5];
    } else {
      c0 = row[4];
    }
    net.generators[k].c2 = c2 * b * b;
    net.generators[k].c1 = c1 * b;
    net.generators[k].c0 = c0;
  }

  for (size_t r = 0; r < branch_m->rows.size(); ++r) {
    const auto& row = branch_m->rows[r];
    int ln = branch_m->line_numbers[r];
    if (row.size() < 11)
      throw std::runtime_error("line " + std::to_string(ln) + ": branch row needs 11 columns");
    if (row[10] == 0) continue;  // out of service
    Branch br;
    br.from_bus = static_cast<int>(row[0]);
    br.to_bus = static_cast<int>(row[1]);
    double res = row[2], rea = row[3];
    if (res == 0.0 && rea == 0.0)
      throw std::runtime_error("line " + std::to_string(ln) +
                               ": branch with r = x = 0 has undefined admittance");
    br.series_admittance = 1.0 / std::complex<double>(res, rea);
    br.shunt_susceptance = row[4];
    br.s_rating = row[5] / b;
    double ratio = row[8];
    br.tap = ratio == 0.0 ? 1.0 : ratio;
    br.shift = row[9] * kPi / 180.0;

    double angmin_deg = detail::at(row, 11, 0.0);
    double angmax_deg = detail::at(row, 12, 0.0);
    bool unconstrained = (angmin_deg == 0.0 && angmax_deg == 0.0);
    bool defaulted = false;
    if (unconstrained || angmin_deg <= -90.0) {
      br.ang_min = -kDefaultAngleBound;
      defaulted = true;
    } else {
      br.ang_min = angmin_deg * kPi / 180.0;
    }
    if (unconstrained || angmax_deg >= 90.0) {
      br.ang_max = kDefaultAngleBound;
      defaulted = true;
    } else {
      br.ang_max = angmax_deg * kPi / 180.0;
    }
    if (defaulted)
      net.parse_notes.push_back("branch " + std::to_string(br.from_bus) + "-" +
                                std::to_string(br.to_bus) +
                                ": unconstrained angle bounds replaced by +/-30 deg");
    net.branches.push_back(br);
  }

  net.rebuild_index();

  for (const auto& g : net.generators)
    if (!net.bus_index.count(g.bus))
      throw std::runtime_error("generator references undefined bus " + std::to_string(g.bus));
  for (const auto& br : net.branches) {
    if (!net.bus_index.count(br.from_bus))
      throw std::runtime_error("branch references undefined bus " + std::to_string(br.from_bus));
    if (!net.bus_index.count(br.to_bus))
      throw std::runtime_error("branch references undefined bus " + std::to_string(br.to_bus));
  }

  bool has_ref = std::any_of(net.buses.begin(), net.buses.end(),
                             [](const Bus& u) { return u.is_reference; });
  if (!has_ref && !net.generators.empty()) {
    int ref_bus = net.generators.front().bus;
    for (const auto& g : net.generators) ref_bus = std::min(ref_bus, g.bus);
    net.buses[net.index_of(ref_bus)].is_reference = true;
    net.parse_notes.push_back("no reference bus in file; bus " + std::to_string(ref_bus) +
                              " marked as reference");
  }

  return net;
}

// Checks every type invariant. Returns the list of violations; empty means
// the network is ready for model building.
inline std::vector<std::string> validate(const Network& net) {
  std::vector<std::string> v;
  auto add = [&v](std::string s) { v.push_back(std::move(s)); };

  if (net.base_mva <= 0) add("base_mva must be positive");

  std::vector<int> refs;
  std::map<int, int> seen_ids;
  for (int i = 0; i < static_cast<int>(net.buses.size()); ++i) {
    const Bus& u = net.buses[i];
    if (seen_ids.count(u.id))
      add("duplicate bus id " + std::to_string(u.id));
    seen_ids[u.id] = i;
    if (!(u.vmin > 0.0 && u.vmin <= u.vmax))
      add("bus " + std::to_string(u.id) + ": voltage bounds must satisfy 0 < vmin <= vmax");
    if (u.is_reference) refs.push_back(u.id);
  }
  if (refs.empty()) add("no reference bus");
  if (refs.size() > 1) {
    std::string s = "multiple reference buses:";
    for (int id : refs) s += " " + std::to_string(id);
    add(s);
  }

  for (size_t g = 0; g < net.generators.size(); ++g) {
    const Generator& gen = net.generators[g];
    std::string tag = "generator " + std::to_string(g);
    if (!net.bus_index.count(gen.bus)) add(tag + ": undefined bus " + std::to_string(gen.bus));
    if (gen.pmin > gen.pmax) add(tag + ": pmin > pmax");
    if (gen.qmin > gen.qmax) add(tag + ": qmin > qmax");
    if (gen.c2 < 0) add(tag + ": negative quadratic cost coefficient");
  }

  for (size_t e = 0; e < net.branches.size(); ++e) {
    const Branch& br = net.branches[e];
    std::string tag = "branch " + std::to_string(e) + " (" + std::to_string(br.from_bus) + "-" +
                      std::to_string(br.to_bus) + ")";
    if (!net.bus_index.count(br.from_bus)) add(tag + ": undefined from bus");
    if (!net.bus_index.count(br.to_bus)) add(tag + ": undefined to bus");
    if (br.from_bus == br.to_bus) add(tag + ": self loop");
    if (!(br.tap > 0)) add(tag + ": tap must be positive");
    if (!std::isfinite(br.series_admittance.real()) || !std::isfinite(br.series_admittance.imag()) ||
        std::abs(br.series_admittance) == 0.0)
      add(tag + ": series admittance must be finite and nonzero");
    if (!(br.ang_min > -kPi / 2 && br.ang_max < kPi / 2 && br.ang_min <= br.ang_max))
      add(tag + ": angle bound outside (-pi/2, pi/2) after defaulting");
    if (br.s_rating < 0) add(tag + ": negative apparent power rating");
  }

  // adjacency consistency
  if (net.adjacency.size() != net.buses.size()) {
    add("adjacency not built for every bus");
  } else {
    std::vector<int> counted(net.branches.size(), 0);
    for (size_t i = 0; i < net.adjacency.size(); ++i) {
      for (const Incidence& inc : net.adjacency[i]) {
        if (inc.branch < 0 || inc.branch >= static_cast<int>(net.branches.size())) {
          add("adjacency references branch out of range");
          continue;
        }
        const Branch& br = net.branches[inc.branch];
        int expect = inc.at_from ? br.from_bus : br.to_bus;
        if (net.buses[i].id != expect)
          add("adjacency of bus " + std::to_string(net.buses[i].id) +
              " disagrees with branch " + std::to_string(inc.branch));
        ++counted[inc.branch];
      }
    }
    for (size_t e = 0; e < counted.size(); ++e)
      if (counted[e] != 2) add("branch " + std::to_string(e) + " missing from adjacency");
  }

  return v;
}

// --- canonical JSON dump -------------------------------------------------

using json = nlohmann::ordered_json;

inline json to_json(const Network& net) {
  json j;
  j["base_mva"] = net.base_mva;
  j["buses"] = json::array();
  for (const auto& u : net.buses) {
    json b;
    b["id"] = u.id;
    b["vmin"] = u.vmin;
    b["vmax"] = u.vmax;
    b["pd"] = u.pd;
    b["qd"] = u.qd;
    b["gs"] = u.gs;
    b["bs"] = u.bs;
    b["is_reference"] = u.is_reference;
    j["buses"].push_back(std::move(b));
  }
  j["generators"] = json::array();
  for (const auto& g : net.generators) {
    json e;
    e["bus"] = g.bus;
    e["pmin"] = g.pmin;
    e["pmax"] = g.pmax;
    e["qmin"] = g.qmin;
    e["qmax"] = g.qmax;
    e["c2"] = g.c2;
    e["c1"] = g.c1;
    e["c0"] = g.c0;
    j["generators"].push_back(std::move(e));
  }
  j["branches"] = json::array();
  for (const auto& br : net.branches) {
    json e;
    e["from_bus"] = br.from_bus;
    e["to_bus"] = br.to_bus;
    e["y_re"] = br.series_admittance.real();
    e["y_im"] = br.series_admittance.imag();
    e["b_sh"] = br.shunt_susceptance;
    e["tap"] = br.tap;
    e["shift"] = br.shift;
    e["s_rating"] = br.s_rating;
    e["ang_min"] = br.ang_min;
    e["ang_max"] = br.ang_max;
    j["branches"].push_back(std::move(e));
  }
  return j;
}

inline Network from_json(const json& j) {
  Network net;
  net.base_mva = j.at("base_mva").get<double>();
  for (const auto& b : j.at("buses")) {
    Bus u;
    u.id = b.at("id").get<int>();
    u.vmin = b.at("vmin").get<double>();
    u.vmax = b.at("vmax").get<double>();
    u.pd = b.at("pd").get<double>();
    u.qd = b.at("qd").get<double>();
    u.gs = b.value("gs", 0.0);
    u.bs = b.value("bs", 0.0);
    u.is_reference = b.at("is_reference").get<bool>();
    net.buses.push_back(u);
  }
  for (const auto& e : j.at("generators")) {
    Generator g;
    g.bus = e.at("bus").get<int>();
    g.pmin = e.at("pmin").get<double>();
    g.pmax = e.at("pmax").get<double>();
    g.qmin = e.at("qmin").get<double>();
    g.qmax = e.at("qmax").get<double>();
    g.c2 = e.at("c2").get<double>();
    g.c1 = e.at("c1").get<double>();
    g.c0 = e.at("c0").get<double>();
    net.generators.push_back(g);
  }
  for (const auto& e : j.at("branches")) {
    Branch br;
    br.from_bus = e.at("from_bus").get<int>();
    br.to_bus = e.at("to_bus").get<int>();
    br.series_admittance = {e.at("y_re").get<double>(), e.at("y_im").get<double>()};
    br.shunt_susceptance = e.at("b_sh").get<double>();
    br.tap = e.at("tap").get<double>();
    br.shift = e.at("shift").get<double>();
    br.s_rating = e.at("s_rating").get<double>();
    br.ang_min = e.at("ang_min").get<double>();
    br.ang_max = e.at("ang_max").get<double>();
    net.branches.push_back(br);
  }
  net.rebuild_index();
  return net;
}

inline std::string dump_json(const Network& net) { return to_json(net).dump(2) + "\n"; }

inline Network load_json(const std::string& text) { return from_json(json::parse(text)); }

}  // namespace opfbound::netdata
