#include "nc/baselines.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <stdexcept>

namespace nc {

const char* to_string(Method m) {
  switch (m) {
    case Method::ludbpp: return "ludbpp";
    case Method::ludbff: return "ludbff";
    case Method::sfa_fifo: return "sfa_fifo";
    case Method::tfa_pp: return "tfa_pp";
  }
  return "?";
}

Method method_from_string(const std::string& s) {
  if (s == "ludbpp") return Method::ludbpp;
  if (s == "ludbff") return Method::ludbff;
  if (s == "sfa_fifo") return Method::sfa_fifo;
  if (s == "tfa_pp") return Method::tfa_pp;
  throw std::invalid_argument("unknown method '" + s + "' (expected ludbpp, ludbff, sfa_fifo or tfa_pp)");
}

// ------------------------------------------------------------------ SFA-FIFO

BaselineResult sfa_fifo_delay(const Topology& net, const std::string& foi_id) {
  const Flow& foi = net.flow(foi_id);
  // Arrival token bucket of every flow at every server it crosses.
  std::map<std::pair<std::string, std::string>, TokenBucket> at;
  std::map<std::string, Mslc> foi_left;
  for (const auto& f : net.flows) at[{f.id, f.path.front()}] = f.arrival;

  for (const auto& sid : net.topological_order()) {
    const Server& s = net.server(sid);
    std::vector<const Flow*> here;
    for (const auto& f : net.flows)
      if (std::find(f.path.begin(), f.path.end(), sid) != f.path.end()) here.push_back(&f);
    const Mslc beta = mslc_from_rate_latency(s.service);
    for (const Flow* f : here) {
      TokenBucket cross{0.0, 0.0};
      for (const Flow* g : here)
        if (g != f) cross.b += at.at({g->id, sid}).b, cross.r += at.at({g->id, sid}).r;
      if (cross.r > s.service.R - at.at({f->id, sid}).r + kTol)
        throw PreconditionError("sfa_fifo: server '" + sid + "' is overloaded");
      const double theta = s.service.T + cross.b / s.service.R;
      const Mslc left = simplify(leftover_numeric(beta, ShapedArrival::unshaped(cross), theta));
      const auto it = std::find(f->path.begin(), f->path.end(), sid);
      if (std::next(it) != f->path.end()) at[{f->id, *std::next(it)}] = vdev_and_output(at.at({f->id, sid}), left).output;
      if (f->id == foi_id) foi_left[sid] = left;
    }
  }

  BaselineResult res;
  res.method = Method::sfa_fifo;
  std::optional<Mslc> total;
  for (const auto& sid : foi.path) {
    const Mslc& l = foi_left.at(sid);
    res.per_server.push_back({sid, l.D});
    total = total ? mslc_convolve(*total, l) : l;
  }
  res.bound = hdev_shaped(ShapedArrival::unshaped(foi.arrival), *total);
  return res;
}

// -------------------------------------------------------------- ConcaveCurve

ConcaveCurve ConcaveCurve::from(std::vector<std::pair<double, double>> lines) {
  ConcaveCurve c;
  if (lines.empty()) return c;
  // Start from the smallest value at 0+, then follow the earliest crossing
  // by a line of smaller slope.
  auto first = std::min_element(lines.begin(), lines.end(), [](auto x, auto y) {
    return x.first != y.first ? x.first < y.first : x.second < y.second;
  });
  std::pair<double, double> cur = *first;
  double t = 0.0;
  c.lines.push_back(cur);
  for (;;) {
    double best_t = kInf;
    std::pair<double, double> next{};
    for (const auto& l : lines) {
      if (!(l.second < cur.second)) continue;
      const double x = std::max(t, (l.first - cur.first) / (cur.second - l.second));
      if (x < best_t - 1e-12 || (x <= best_t + 1e-12 && l.second < next.second)) {
        best_t = x;
        next = l;
      }
    }
    if (!std::isfinite(best_t)) break;
    cur = next;
    t = best_t;
    c.lines.push_back(cur);
  }
  return c;
}

double ConcaveCurve::eval(double t) const {
  if (t <= 0.0) return 0.0;
  double v = kInf;
  for (const auto& [a, s] : lines) v = std::min(v, a + s * t);
  return v;
}

double ConcaveCurve::rate() const { return lines.empty() ? 0.0 : lines.back().second; }

std::vector<double> ConcaveCurve::breakpoints() const {
  std::vector<double> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto [a0, s0] = lines[i - 1];
    const auto [a1, s1] = lines[i];
    out.push_back(std::max(0.0, (a1 - a0) / (s0 - s1)));
  }
  return out;
}

ConcaveCurve operator+(const ConcaveCurve& a, const ConcaveCurve& b) {
  if (a.lines.empty()) return b;
  if (b.lines.empty()) return a;
  std::vector<std::pair<double, double>> ls;
  for (const auto& x : a.lines)
    for (const auto& y : b.lines) ls.push_back({x.first + y.first, x.second + y.second});
  return ConcaveCurve::from(std::move(ls));
}

ConcaveCurve min(const ConcaveCurve& a, const ConcaveCurve& b) {
  auto ls = a.lines;
  ls.insert(ls.end(), b.lines.begin(), b.lines.end());
  return ConcaveCurve::from(std::move(ls));
}

ConcaveCurve shift_left(const ConcaveCurve& a, double d) {
  auto ls = a.lines;
  for (auto& [c, s] : ls) c += s * d;
  return ConcaveCurve::from(std::move(ls));
}

double hdev_rate_latency(const ConcaveCurve& a, const RateLatency& rl) {
  if (a.lines.empty()) return rl.T;
  if (a.rate() > rl.R + kTol) return kInf;
  double sup = a.lines.front().first / rl.R;
  for (double t : a.breakpoints()) sup = std::max(sup, a.eval(t) / rl.R - t);
  if (a.rate() >= rl.R - kTol) sup = std::max(sup, a.lines.back().first / rl.R);
  return rl.T + std::max(sup, 0.0);
}

// -------------------------------------------------------------------- TFA++

namespace {

ConcaveCurve line_curve(double a, double s) { return ConcaveCurve::from({{a, s}}); }

ConcaveCurve shaped(const ConcaveCurve& c, const Shaper& sh) {
  return sh.active() ? min(c, line_curve(sh.L, sh.Rp)) : c;
}

}  // namespace

BaselineResult tfa_pp_delay(const Topology& net, const std::string& foi_id) {
  const Flow& foi = net.flow(foi_id);
  std::map<std::pair<std::string, std::string>, ConcaveCurve> at;
  for (const auto& f : net.flows)
    at[{f.id, f.path.front()}] = shaped(line_curve(f.arrival.b, f.arrival.r), f.ingress);
  std::map<std::string, double> delay;

  for (const auto& sid : net.topological_order()) {
    const Server& s = net.server(sid);
    // Inbound groups keyed by link; every ingress flow forms its own group.
    std::vector<std::string> keys;
    std::map<std::string, std::pair<ConcaveCurve, Shaper>> groups;
    std::vector<const Flow*> here;
    for (const auto& f : net.flows) {
      const auto it = std::find(f.path.begin(), f.path.end(), sid);
      if (it == f.path.end()) continue;
      here.push_back(&f);
      std::string key;
      Shaper sh;
      if (it == f.path.begin()) {
        key = "ingress:" + f.id;
        sh = f.ingress;
      } else {
        key = *std::prev(it) + "->" + sid;
        sh = net.link_shaper(*std::prev(it), sid);
      }
      if (!groups.count(key)) keys.push_back(key), groups[key] = {ConcaveCurve{}, sh};
      groups[key].first = groups[key].first + at.at({f.id, sid});
    }
    ConcaveCurve total;
    for (const auto& k : keys) total = total + shaped(groups[k].first, groups[k].second);
    const double d = hdev_rate_latency(total, s.service);
    if (!std::isfinite(d)) throw PreconditionError("tfa_pp: server '" + sid + "' is overloaded");
    delay[sid] = d;
    for (const Flow* f : here) {
      const auto it = std::find(f->path.begin(), f->path.end(), sid);
      if (std::next(it) == f->path.end()) continue;
      const auto& nx = *std::next(it);
      at[{f->id, nx}] = shaped(shift_left(at.at({f->id, sid}), d), net.link_shaper(sid, nx));
    }
  }

  BaselineResult res;
  res.method = Method::tfa_pp;
  res.bound = 0.0;
  for (const auto& sid : foi.path) {
    res.per_server.push_back({sid, delay.at(sid)});
    res.bound += delay.at(sid);
  }
  return res;
}

}  // namespace nc
