#include "rdsopt/bench.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>

namespace rdsopt {

namespace {

using ProblemKey = std::tuple<std::string, Index, std::uint64_t>;

ProblemKey key_of(const ResultRow& r) { return {r.problem, r.n_p, r.seed}; }

void check_tau(double tau) {
  if (!(tau > 0.0 && tau < 1.0))
    throw Error(ErrorCode::InvalidConfig, "tau must lie in (0,1), got " + format_double(tau));
}

/// Rows at `tau`, grouped: problem -> solver -> t (min over duplicates).
struct Grouped {
  std::map<ProblemKey, std::map<std::string, std::optional<long>>> t;
  std::set<std::string> solvers;
};

Grouped group(const ResultTable& table, double tau) {
  Grouped g;
  for (const auto& r : table.rows) {
    if (r.tau != tau) continue;
    g.solvers.insert(r.solver);
    auto& slot = g.t[key_of(r)][r.solver];
    if (r.t_ps && (!slot || *r.t_ps < *slot)) slot = r.t_ps;
  }
  if (g.t.empty())
    throw Error(ErrorCode::EmptyInput, "no result rows at tau=" + format_double(tau));
  return g;
}

/// Step curve: value(a) = #{thresholds <= a} / total.
std::vector<std::pair<double, double>> step_points(std::vector<double> thresholds,
                                                   const std::vector<double>& abscissae,
                                                   std::size_t total) {
  std::sort(thresholds.begin(), thresholds.end());
  std::vector<std::pair<double, double>> pts;
  pts.reserve(abscissae.size());
  for (double a : abscissae) {
    const auto count = std::upper_bound(thresholds.begin(), thresholds.end(), a) - thresholds.begin();
    pts.emplace_back(a, static_cast<double>(count) / static_cast<double>(total));
  }
  return pts;
}

std::vector<double> sorted_unique(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

template <typename T>
T parse_number(const std::string& s, const char* field) {
  T v{};
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end)
    throw Error(ErrorCode::Io, std::string("bad ") + field + " value '" + s + "'");
  return v;
}

}  // namespace

const char* to_string(ProfileKind kind) {
  return kind == ProfileKind::Performance ? "performance" : "data";
}

double ProfileCurve::value_at(double a) const {
  double v = 0.0;
  for (const auto& [x, y] : points) {
    if (x > a) break;
    v = y;
  }
  return v;
}

bool converged(double f_k, double f0, double f_L, double tau) {
  check_tau(tau);
  if (f_L > f0)
    throw Error(ErrorCode::InvalidBaseline, "f_L=" + format_double(f_L) +
                                                " exceeds f0=" + format_double(f0));
  return f_k <= f_L + tau * (f0 - f_L);
}

std::optional<long> evals_to_converge(const std::vector<TraceEntry>& history, double f0,
                                      double f_L, double tau) {
  for (const auto& e : history)
    if (converged(e.best_f, f0, f_L, tau)) return e.eval_index;
  return std::nullopt;
}

ResultTable build_result_table(const std::vector<RunRecord>& runs,
                               const std::vector<double>& taus) {
  std::map<ProblemKey, double> f_low;
  for (const auto& r : runs) {
    const double fb = r.history.empty() ? r.f0 : std::min(r.f0, r.history.back().best_f);
    ProblemKey k{r.problem, r.n_p, r.seed};
    auto it = f_low.find(k);
    if (it == f_low.end() || fb < it->second) f_low[k] = fb;
  }
  ResultTable table;
  for (double tau : taus) {
    check_tau(tau);
    for (const auto& r : runs) {
      ResultRow row;
      row.problem = r.problem;
      row.n_p = r.n_p;
      row.seed = r.seed;
      row.solver = r.solver;
      row.tau = tau;
      row.f0 = r.f0;
      row.f_best = r.history.empty() ? r.f0 : std::min(r.f0, r.history.back().best_f);
      row.evals_used = r.evals_used;
      const double fl = f_low.at({r.problem, r.n_p, r.seed});
      row.t_ps = evals_to_converge(r.history, r.f0, fl, tau);
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

/// Exact test k * den >= num for k >= 0 and positive integers num, den.
bool covers(double k, long num, long den) {
  int e = 0;
  const double frac = std::frexp(k, &e);
  const auto m = static_cast<__int128>(std::ldexp(frac, 53));
  e -= 53;
  const __int128 lhs = m * den;
  if (e >= 0) return e >= 64 || (lhs << e) >= num;
  if (-e >= 120) return false;
  return lhs >= (static_cast<__int128>(num) << -e);
}

/// Smallest double k with k * den >= num in exact arithmetic.
double ceil_ratio(long num, long den) {
  double k = static_cast<double>(num) / static_cast<double>(den);
  while (!covers(k, num, den)) k = std::nextafter(k, std::numeric_limits<double>::infinity());
  while (k > 0.0) {
    const double lower = std::nextafter(k, 0.0);
    if (!covers(lower, num, den)) break;
    k = lower;
  }
  return k;
}

std::vector<ProfileCurve> performance_profile(const ResultTable& table, double tau) {
  const Grouped g = group(table, tau);
  std::map<std::string, std::vector<double>> ratios;
  std::vector<double> abscissae{1.0};
  for (const auto& [key, per_solver] : g.t) {
    std::optional<long> best;
    for (const auto& [s, t] : per_solver)
      if (t && (!best || *t < *best)) best = t;
    if (!best) continue;
    for (const auto& [s, t] : per_solver) {
      if (!t) continue;
      const double r = ceil_ratio(*t, *best);
      ratios[s].push_back(r);
      abscissae.push_back(r);
    }
  }
  abscissae = sorted_unique(std::move(abscissae));
  std::vector<ProfileCurve> out;
  for (const auto& s : g.solvers) {
    out.push_back(ProfileCurve{s, ProfileKind::Performance, tau,
                               step_points(ratios[s], abscissae, g.t.size())});
  }
  return out;
}

double data_threshold(long t, Index n_p) { return ceil_ratio(t, n_p + 1); }

std::vector<ProfileCurve> data_profile(const ResultTable& table, double tau, double kappa_max) {
  if (!(kappa_max > 0.0)) throw Error(ErrorCode::InvalidConfig, "kappa_max must be > 0");
  const Grouped g = group(table, tau);
  std::map<std::string, std::vector<double>> thresholds;
  std::vector<double> abscissae{0.0, kappa_max};
  for (const auto& [key, per_solver] : g.t) {
    const Index n_p = std::get<1>(key);
    for (const auto& [s, t] : per_solver) {
      if (!t) continue;
      const double k = data_threshold(*t, n_p);
      thresholds[s].push_back(k);
      if (k <= kappa_max) abscissae.push_back(k);
    }
  }
  abscissae = sorted_unique(std::move(abscissae));
  std::vector<ProfileCurve> out;
  for (const auto& s : g.solvers) {
    out.push_back(ProfileCurve{s, ProfileKind::Data, tau,
                               step_points(thresholds[s], abscissae, g.t.size())});
  }
  return out;
}

SizeBucket parse_bucket(const std::string& s) {
  if (s.empty() || s == "all") return SizeBucket::All;
  if (s == "small") return SizeBucket::Small;
  if (s == "medium") return SizeBucket::Medium;
  if (s == "large") return SizeBucket::Large;
  throw Error(ErrorCode::InvalidConfig, "unknown size bucket '" + s + "'");
}

bool in_bucket(Index n_p, SizeBucket bucket) {
  switch (bucket) {
    case SizeBucket::All: return true;
    case SizeBucket::Small: return n_p >= 2 && n_p <= 15;
    case SizeBucket::Medium: return n_p >= 16 && n_p <= 50;
    case SizeBucket::Large: return n_p >= 51 && n_p <= 200;
  }
  return false;
}

ResultTable filter_bucket(const ResultTable& table, SizeBucket bucket) {
  ResultTable out;
  for (const auto& r : table.rows)
    if (in_bucket(r.n_p, bucket)) out.rows.push_back(r);
  if (out.rows.empty()) throw Error(ErrorCode::EmptyInput, "no rows left after size filter");
  return out;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void write_result_table(std::ostream& os, const ResultTable& table) {
  os << kResultHeader << '\n';
  for (const auto& r : table.rows) {
    os << r.problem << ',' << r.n_p << ',' << r.seed << ',' << r.solver << ','
       << format_double(r.tau) << ',';
    if (r.t_ps) os << *r.t_ps;
    os << ',' << format_double(r.f0) << ',' << format_double(r.f_best) << ',' << r.evals_used
       << '\n';
  }
}

ResultTable read_result_table(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorCode::EmptyInput, "empty result table");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kResultHeader) throw Error(ErrorCode::Io, "unexpected result table header: " + line);
  ResultTable t;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv(line);
    if (f.size() != 9) throw Error(ErrorCode::Io, "expected 9 fields: " + line);
    ResultRow r;
    r.problem = f[0];
    r.n_p = parse_number<Index>(f[1], "n_p");
    r.seed = parse_number<std::uint64_t>(f[2], "seed");
    r.solver = f[3];
    r.tau = parse_number<double>(f[4], "tau");
    if (!f[5].empty()) r.t_ps = parse_number<long>(f[5], "t_ps");
    r.f0 = parse_number<double>(f[6], "f0");
    r.f_best = parse_number<double>(f[7], "f_best");
    r.evals_used = parse_number<long>(f[8], "evals_used");
    t.rows.push_back(std::move(r));
  }
  return t;
}

void write_profiles(std::ostream& os, const std::vector<ProfileCurve>& curves) {
  os << kProfileHeader << '\n';
  for (const auto& c : curves)
    for (const auto& [x, y] : c.points)
      os << c.solver << ',' << to_string(c.kind) << ',' << format_double(c.tau) << ','
         << format_double(x) << ',' << format_double(y) << '\n';
}

void write_trace(std::ostream& os, const std::vector<TraceEntry>& history) {
  os << kTraceHeader << '\n';
  for (const auto& e : history) os << e.eval_index << ',' << format_double(e.best_f) << '\n';
}

std::string render_profiles_svg(const std::vector<ProfileCurve>& curves,
                                const std::string& title) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                 "#9467bd", "#8c564b", "#17becf"};
  const double w = 640, h = 420, left = 60, right = 170, top = 40, bottom = 50;
  const double pw = w - left - right, ph = h - top - bottom;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  for (const auto& c : curves)
    for (const auto& p : c.points) {
      xmin = std::min(xmin, p.first);
      xmax = std::max(xmax, p.first);
    }
  if (!(xmax > xmin)) {
    xmin = 0.0;
    xmax = std::max(1.0, xmax);
  }
  auto sx = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  auto sy = [&](double y) { return top + (1.0 - y) * ph; };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << left << "\" y=\"24\" font-size=\"14\">" << title << "</text>\n";
  s << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double y = i / 4.0;
    s << "<text x=\"" << left - 8 << "\" y=\"" << sy(y) + 4 << "\" text-anchor=\"end\">"
      << format_double(y) << "</text>\n";
    const double x = xmin + (xmax - xmin) * i / 4.0;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    s << "<text x=\"" << sx(x) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">"
      << buf << "</text>\n";
  }
  for (std::size_t ci = 0; ci < curves.size(); ++ci) {
    const auto& c = curves[ci];
    const char* color = colors[ci % (sizeof colors / sizeof *colors)];
    s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    double prev = 0.0;
    bool first = true;
    for (const auto& [x, y] : c.points) {
      if (!first) s << sx(x) << ',' << sy(prev) << ' ';
      s << sx(x) << ',' << sy(y) << ' ';
      prev = y;
      first = false;
    }
    s << "\"/>\n";
    const double ly = top + 16 + 18.0 * static_cast<double>(ci);
    s << "<line x1=\"" << w - right + 12 << "\" y1=\"" << ly << "\" x2=\"" << w - right + 36
      << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    s << "<text x=\"" << w - right + 42 << "\" y=\"" << ly + 4 << "\">" << c.solver << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace rdsopt
