#include "nc/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "nc/parallel.hpp"

namespace nc {

using json = nlohmann::ordered_json;

// ----------------------------------------------------------- topology files

namespace {

int line_of(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(byte), '\n'));
}

const json& field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) throw ParseError(where + ": expected an object", 0);
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(where + ": missing field '" + key + "'", 0);
  return *it;
}

double number(const json& v, const std::string& where) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string() && (v.get<std::string>() == "inf" || v.get<std::string>() == "+inf")) return kInf;
  throw ParseError(where + ": expected a number", 0);
}

std::string text_of(const json& v, const std::string& where) {
  if (!v.is_string()) throw ParseError(where + ": expected a string", 0);
  return v.get<std::string>();
}

Shaper shaper_of(const json& v, const std::string& where) {
  if (v.is_null()) return Shaper::none();
  const double Rp = number(field(v, "Rp", where), where + ".Rp");
  if (std::isinf(Rp)) return Shaper::none();
  return {number(field(v, "L", where), where + ".L"), Rp};
}

json rate_json(double x) { return std::isinf(x) ? json("inf") : json(x); }

}  // namespace

Topology parse_topology(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const int line = line_of(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ParseError("line " + std::to_string(line) + ": " + e.what(), line);
  }
  if (!doc.is_object()) throw ParseError("topology: expected a JSON object", 1);
  Topology t;
  const auto& servers = field(doc, "servers", "topology");
  if (!servers.is_array()) throw ParseError("topology.servers: expected an array", 0);
  for (std::size_t i = 0; i < servers.size(); ++i) {
    const std::string w = "servers[" + std::to_string(i) + "]";
    const auto& s = servers[i];
    Server srv;
    srv.id = text_of(field(s, "id", w), w + ".id");
    srv.service = {number(field(s, "rate", w), w + ".rate"), number(field(s, "latency", w), w + ".latency")};
    if (s.contains("out_shapers")) {
      const auto& os = s["out_shapers"];
      if (!os.is_array()) throw ParseError(w + ".out_shapers: expected an array", 0);
      for (std::size_t k = 0; k < os.size(); ++k) {
        const std::string wk = w + ".out_shapers[" + std::to_string(k) + "]";
        srv.out_shapers[text_of(field(os[k], "to", wk), wk + ".to")] = shaper_of(os[k], wk);
      }
    }
    t.servers.push_back(std::move(srv));
  }
  const auto& flows = field(doc, "flows", "topology");
  if (!flows.is_array()) throw ParseError("topology.flows: expected an array", 0);
  for (std::size_t i = 0; i < flows.size(); ++i) {
    const std::string w = "flows[" + std::to_string(i) + "]";
    const auto& f = flows[i];
    Flow fl;
    fl.id = text_of(field(f, "id", w), w + ".id");
    const auto& path = field(f, "path", w);
    if (!path.is_array()) throw ParseError(w + ".path: expected an array", 0);
    for (std::size_t k = 0; k < path.size(); ++k)
      fl.path.push_back(text_of(path[k], w + ".path[" + std::to_string(k) + "]"));
    fl.arrival = {number(field(f, "b", w), w + ".b"), number(field(f, "r", w), w + ".r")};
    if (f.contains("ingress")) fl.ingress = shaper_of(f["ingress"], w + ".ingress");
    t.flows.push_back(std::move(fl));
  }
  if (doc.contains("links")) {
    const auto& links = doc["links"];
    if (!links.is_array()) throw ParseError("topology.links: expected an array", 0);
    for (std::size_t i = 0; i < links.size(); ++i) {
      const std::string w = "links[" + std::to_string(i) + "]";
      t.links.push_back({text_of(field(links[i], "from", w), w + ".from"),
                         text_of(field(links[i], "to", w), w + ".to")});
    }
  } else {
    std::set<std::pair<std::string, std::string>> seen;
    auto add = [&](const std::string& a, const std::string& b) {
      if (seen.insert({a, b}).second) t.links.push_back({a, b});
    };
    for (const auto& f : t.flows)
      for (std::size_t k = 1; k < f.path.size(); ++k) add(f.path[k - 1], f.path[k]);
    for (const auto& s : t.servers)
      for (const auto& [to, sh] : s.out_shapers) add(s.id, to);
  }
  return t;
}

std::string serialize_topology(const Topology& t) {
  json doc;
  doc["servers"] = json::array();
  for (const auto& s : t.servers) {
    json js;
    js["id"] = s.id;
    js["rate"] = s.service.R;
    js["latency"] = s.service.T;
    js["out_shapers"] = json::array();
    for (const auto& [to, sh] : s.out_shapers) {
      if (!sh.active()) continue;
      js["out_shapers"].push_back(json{{"to", to}, {"L", sh.L}, {"Rp", rate_json(sh.Rp)}});
    }
    doc["servers"].push_back(std::move(js));
  }
  doc["links"] = json::array();
  for (const auto& l : t.links) doc["links"].push_back(json{{"from", l.from}, {"to", l.to}});
  doc["flows"] = json::array();
  for (const auto& f : t.flows) {
    json jf;
    jf["id"] = f.id;
    jf["path"] = f.path;
    jf["b"] = f.arrival.b;
    jf["r"] = f.arrival.r;
    if (f.ingress.active()) jf["ingress"] = json{{"L", f.ingress.L}, {"Rp", rate_json(f.ingress.Rp)}};
    doc["flows"].push_back(std::move(jf));
  }
  return doc.dump(2) + "\n";
}

Topology load_topology(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_topology(ss.str());
}

void save_topology(const Topology& t, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << serialize_topology(t);
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

// ------------------------------------------------------------------ running

MethodOutcome run_method(const Topology& net, const std::string& foi, Method m, const RunOptions& opt) {
  MethodOutcome out;
  out.method = m;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    if (m == Method::ludbpp || m == Method::ludbff) {
      AnalysisOptions ao;
      ao.workers = opt.workers;
      ao.prune_tol = opt.tol;
      if (opt.timeout_seconds > 0.0)
        ao.deadline = t0 + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                               std::chrono::duration<double>(opt.timeout_seconds));
      const auto r = m == Method::ludbpp ? feedforward_analyze(net, foi, opt.objective, ao)
                                         : ludb_ff_analyze(net, foi, opt.objective, ao);
      out.bound = r.bound;
      out.theta = r.theta_point;
      out.branch_count = r.branch_count;
      out.lp_count = r.lp_count;
      out.notes = r.notes;
    } else if (opt.objective != Objective::delay) {
      out.failed = true;
      out.bound = std::nan("");
      out.notes.push_back(std::string(to_string(m)) + " computes delay bounds only");
    } else {
      out.bound = (m == Method::sfa_fifo ? sfa_fifo_delay(net, foi) : tfa_pp_delay(net, foi)).bound;
    }
  } catch (const AnalysisTimeout&) {
    out.timed_out = true;
    out.bound = std::nan("");
    out.notes.push_back("skipped: exceeded the time limit of " + format_number(opt.timeout_seconds) + " s");
  } catch (const std::exception& e) {
    out.failed = true;
    out.bound = std::nan("");
    out.notes.push_back(std::string("error: ") + e.what());
  }
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
  struct Cell {
    Family family;
    int N;
    double u, ratio;
  };
  std::vector<Cell> cells;
  for (auto f : spec.families)
    for (int N : spec.Ns)
      for (double u : spec.us)
        for (double ratio : spec.ratios) cells.push_back({f, N, u, ratio});

  std::vector<Method> run = spec.methods;
  const bool ref_requested = std::find(run.begin(), run.end(), spec.reference) != run.end();
  if (!ref_requested) run.push_back(spec.reference);

  std::vector<std::vector<SweepRow>> per_cell(cells.size());
  parallel_for(cells.size(), spec.workers, [&](std::size_t i) {
    const auto& c = cells[i];
    RunOptions ro;
    ro.objective = spec.objective;
    ro.workers = 1;
    ro.timeout_seconds = spec.cell_timeout;
    ro.tol = spec.tol;
    std::vector<SweepRow> rows;
    Topology net;
    std::string gen_error;
    try {
      net = generate(c.family, c.N, c.u, c.ratio, spec.side_depth);
    } catch (const std::exception& e) {
      gen_error = e.what();
    }
    double ref = std::nan("");
    for (std::size_t k = 0; k < run.size(); ++k) {
      SweepRow row{c.family, c.N, c.u, c.ratio, {}, 0.0, k < spec.methods.size()};
      if (gen_error.empty()) {
        row.outcome = run_method(net, "foi", run[k], ro);
      } else {
        row.outcome.method = run[k];
        row.outcome.failed = true;
        row.outcome.bound = std::nan("");
        row.outcome.notes.push_back("error: " + gen_error);
      }
      if (run[k] == spec.reference) ref = row.outcome.bound;
      rows.push_back(std::move(row));
    }
    for (auto& r : rows) {
      const double b = r.outcome.bound;
      r.rel_to_ref = (std::isfinite(b) && std::isfinite(ref) && ref != 0.0) ? (b - ref) / ref : std::nan("");
    }
    per_cell[i] = std::move(rows);
  });
  std::vector<SweepRow> out;
  for (auto& v : per_cell)
    for (auto& r : v) out.push_back(std::move(r));
  return out;
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  // Rounded to 1e-9; negative zero is printed as zero.
  const double r = std::round(x * 1e9) / 1e9;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9f", r == 0.0 ? 0.0 : r);
  return buf;
}

namespace {

std::string short_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

std::string joined(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : "; ") + x;
  return s;
}

}  // namespace

void write_csv(const std::vector<SweepRow>& rows, const SweepSpec& spec, std::ostream& os) {
  os << "# " << kCsvVersion << "; objective=" << to_string(spec.objective)
     << "; reference=" << to_string(spec.reference) << "\n";
  os << "family,N,u,ratio,method,bound,rel_to_ref,note\n";
  for (const auto& r : rows) {
    if (!r.emitted) continue;
    os << to_string(r.family) << "," << r.N << "," << short_number(r.u) << "," << short_number(r.ratio) << ","
       << to_string(r.outcome.method) << "," << format_number(r.outcome.bound) << ","
       << format_number(r.rel_to_ref) << "," << csv_field(joined(r.outcome.notes)) << "\n";
  }
}

void write_timing_csv(const std::vector<SweepRow>& rows, std::ostream& os) {
  os << "family,N,u,ratio,method,wall_s\n";
  for (const auto& r : rows) {
    if (!r.emitted) continue;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", r.outcome.wall_seconds);
    os << to_string(r.family) << "," << r.N << "," << short_number(r.u) << "," << short_number(r.ratio) << ","
       << to_string(r.outcome.method) << "," << buf << "\n";
  }
}

std::vector<int> parse_int_list(const std::string& s) {
  auto to_int = [&](const std::string& x) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(x, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != x.size()) throw std::invalid_argument("bad integer '" + x + "' in '" + s + "'");
    return v;
  };
  std::vector<int> out;
  const auto dots = s.find("..");
  if (dots != std::string::npos) {
    const int a = to_int(s.substr(0, dots)), b = to_int(s.substr(dots + 2));
    if (a > b) throw std::invalid_argument("empty range '" + s + "'");
    for (int i = a; i <= b; ++i) out.push_back(i);
    return out;
  }
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) out.push_back(to_int(item));
  if (out.empty()) throw std::invalid_argument("empty list");
  return out;
}

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    double scale = 1.0;
    if (!item.empty() && item.back() == '%') item.pop_back(), scale = 0.01;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw std::invalid_argument("bad number '" + item + "' in '" + s + "'");
    out.push_back(v * scale);
  }
  if (out.empty()) throw std::invalid_argument("empty list");
  return out;
}

// ---------------------------------------------------------------------- CLI

namespace {

constexpr int kOk = 0, kUsage = 1, kValidation = 2, kAnalysis = 3;

template <class T, class F>
std::vector<T> split_map(const std::string& s, F f) {
  std::vector<T> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(f(item));
  return out;
}

json outcome_json(const MethodOutcome& o) {
  json j;
  j["method"] = to_string(o.method);
  j["bound"] = format_number(o.bound);
  json th = json::array();
  for (double x : o.theta) th.push_back(format_number(x));
  j["theta"] = th;
  j["branch_count"] = o.branch_count;
  j["lp_count"] = o.lp_count;
  j["wall_s"] = o.wall_seconds;
  j["notes"] = o.notes;
  return j;
}

bool report_validation(const Topology& net) {
  const auto rep = validate(net);
  for (const auto& w : rep.warnings) std::cerr << "warning: " << w << "\n";
  for (const auto& v : rep.violations) std::cerr << "violation: " << v << "\n";
  return rep.ok();
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Delay and backlog bounds for shaped feedforward FIFO networks"};
  app.require_subcommand(1);

  int workers = 1;
  if (const char* w = std::getenv("NC_WORKERS")) {
    try {
      workers = std::max(1, std::stoi(w));
    } catch (const std::exception&) {
      std::cerr << "ignoring invalid NC_WORKERS='" << w << "'\n";
    }
  }
  std::string input, family = "one_hop", ns = "2", us = "0.5", ratios = "1", foi = "foi";
  std::string methods = "ludbpp,ludbff,sfa_fifo,tfa_pp", objective = "delay", out, reference = "ludbff";
  double tol = 1e-9, cell_timeout = 600.0;
  int depth = 1;

  auto* analyze = app.add_subcommand("analyze", "Bound one flow of a topology file or generated network");
  analyze->add_option("--input", input, "Topology JSON file");
  analyze->add_option("--family", family, "one_hop, sinktree or tree (when no --input)");
  analyze->add_option("--n", ns, "Number of main servers");
  analyze->add_option("--u", us, "Utilization in (0,1], or a percentage like 75%");
  analyze->add_option("--ratio", ratios, "Shaper rate over service rate");
  analyze->add_option("--depth", depth, "Side-branch depth of tree networks");
  analyze->add_option("--foi", foi, "Flow of interest");
  analyze->add_option("--methods", methods, "Comma-separated: ludbpp,ludbff,sfa_fifo,tfa_pp");
  analyze->add_option("--objective", objective, "delay or backlog");
  analyze->add_option("--workers", workers, "Worker threads (default NC_WORKERS or 1)");
  analyze->add_option("--out", out, "Write the JSON report here instead of stdout");
  analyze->add_option("--tol", tol, "Branch-and-bound pruning tolerance");
  analyze->add_option("--cell-timeout", cell_timeout, "Time limit per method in seconds, 0 for none");

  auto* gen = app.add_subcommand("generate", "Write a generated topology file");
  gen->add_option("--family", family, "one_hop, sinktree or tree")->required();
  gen->add_option("--n", ns, "Number of main servers")->required();
  gen->add_option("--u", us, "Utilization")->required();
  gen->add_option("--ratio", ratios, "Shaper rate over service rate")->required();
  gen->add_option("--depth", depth, "Side-branch depth of tree networks");
  gen->add_option("--out", out, "Output path (stdout when omitted)");

  auto* cmp = app.add_subcommand("compare", "Sweep generated networks and emit a CSV");
  cmp->add_option("--family", family, "Comma-separated families");
  cmp->add_option("--n", ns, "Range like 2..5 or list like 2,3");
  cmp->add_option("--u", us, "Comma-separated utilizations");
  cmp->add_option("--ratio", ratios, "Comma-separated shaper ratios");
  cmp->add_option("--depth", depth, "Side-branch depth of tree networks");
  cmp->add_option("--methods", methods, "Comma-separated methods");
  cmp->add_option("--reference", reference, "Reference method of the relative column");
  cmp->add_option("--objective", objective, "delay or backlog");
  cmp->add_option("--workers", workers, "Worker threads (default NC_WORKERS or 1)");
  cmp->add_option("--out", out, "CSV path (stdout when omitted); timings go to <out>.timing.csv");
  cmp->add_option("--tol", tol, "Branch-and-bound pruning tolerance");
  cmp->add_option("--cell-timeout", cell_timeout, "Time limit per cell and method in seconds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  std::vector<Method> mlist;
  Objective obj{};
  try {
    mlist = split_map<Method>(methods, method_from_string);
    obj = objective_from_string(objective);
    if (workers < 1) throw std::invalid_argument("--workers must be at least 1");
    if (mlist.empty()) throw std::invalid_argument("--methods is empty");
  } catch (const std::exception& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  }

  if (*gen) {
    try {
      const auto t = generate(family_from_string(family), parse_int_list(ns).at(0),
                              parse_double_list(us).at(0), parse_double_list(ratios).at(0), depth);
      if (out.empty()) {
        std::cout << serialize_topology(t);
      } else {
        save_topology(t, out);
      }
    } catch (const std::invalid_argument& e) {
      std::cerr << "invalid parameters: " << e.what() << "\n";
      return kValidation;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kAnalysis;
    }
    return kOk;
  }

  if (*analyze) {
    Topology net;
    try {
      net = input.empty() ? generate(family_from_string(family), parse_int_list(ns).at(0),
                                     parse_double_list(us).at(0), parse_double_list(ratios).at(0), depth)
                          : load_topology(input);
    } catch (const ParseError& e) {
      std::cerr << (input.empty() ? "" : input + ": ") << "parse error: " << e.what() << "\n";
      return kValidation;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kValidation;
    }
    if (!report_validation(net)) return kValidation;
    if (!net.has_flow(foi)) {
      std::cerr << "unknown flow of interest '" << foi << "'\n";
      return kValidation;
    }
    RunOptions ro;
    ro.objective = obj;
    ro.workers = workers;
    ro.timeout_seconds = cell_timeout;
    ro.tol = tol;
    json rep;
    rep["foi"] = foi;
    rep["objective"] = to_string(obj);
    rep["results"] = json::array();
    bool failed = false;
    for (auto m : mlist) {
      const auto o = run_method(net, foi, m, ro);
      failed = failed || o.failed || o.timed_out;
      rep["results"].push_back(outcome_json(o));
    }
    const std::string text = rep.dump(2) + "\n";
    if (out.empty()) {
      std::cout << text;
    } else {
      std::ofstream f(out);
      f << text;
      if (!f) {
        std::cerr << "cannot write '" << out << "'\n";
        return kAnalysis;
      }
    }
    return failed ? kAnalysis : kOk;
  }

  // compare
  SweepSpec spec;
  try {
    spec.families = split_map<Family>(family, family_from_string);
    spec.Ns = parse_int_list(ns);
    spec.us = parse_double_list(us);
    spec.ratios = parse_double_list(ratios);
    spec.reference = method_from_string(reference);
  } catch (const std::exception& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  }
  spec.methods = mlist;
  spec.objective = obj;
  spec.workers = workers;
  spec.cell_timeout = cell_timeout;
  spec.tol = tol;
  spec.side_depth = depth;
  const auto rows = run_sweep(spec);
  if (out.empty()) {
    write_csv(rows, spec, std::cout);
  } else {
    std::ofstream f(out);
    write_csv(rows, spec, f);
    std::ofstream ft(out + ".timing.csv");
    write_timing_csv(rows, ft);
    if (!f || !ft) {
      std::cerr << "cannot write '" << out << "'\n";
      return kAnalysis;
    }
  }
  for (const auto& r : rows)
    if (r.emitted && r.outcome.failed) return kAnalysis;
  return kOk;
}

}  // namespace nc
