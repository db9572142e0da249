#include "mscap/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <variant>

#include "mscap/error.hpp"

namespace mscap {

namespace {

struct Entry {
  std::string value;
  int line = 0;
  int key_col = 0;
  int value_col = 0;
  bool used = false;
};

struct Section {
  std::string name;
  int line = 0;
  std::map<std::string, Entry> entries;
};

[[noreturn]] void parse_fail(int line, int col, const std::string& what) {
  throw Error(ErrorCode::kParseError, "line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + what);
}

[[noreturn]] void constraint_fail(const std::string& what) { throw Error(ErrorCode::kConstraintError, what); }

std::string trim(std::string_view s, int* lead = nullptr) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  if (lead) *lead = static_cast<int>(a);
  return std::string(s.substr(a, b - a));
}

std::vector<Section> split_sections(std::string_view text) {
  std::vector<Section> out;
  int line = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view raw = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line;
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    int lead = 0;
    const std::string body = trim(raw, &lead);
    if (body.empty()) {
      if (eol == text.size()) break;
      continue;
    }
    if (body.front() == '[') {
      if (body.back() != ']') parse_fail(line, lead + 1, "section header needs a closing ']'");
      Section s;
      s.name = trim(std::string_view(body).substr(1, body.size() - 2));
      s.line = line;
      static const char* known[] = {"domain", "compact", "weight", "solver", "output"};
      bool ok = false;
      for (const char* k : known) ok = ok || s.name == k;
      if (!ok) parse_fail(line, lead + 2, "unknown section '" + s.name + "'");
      out.push_back(std::move(s));
    } else {
      const auto eq = raw.find('=');
      if (eq == std::string_view::npos) parse_fail(line, lead + 1, "expected 'key = value'");
      if (out.empty()) parse_fail(line, lead + 1, "entry outside of any section");
      const std::string key = trim(raw.substr(0, eq));
      if (key.empty()) parse_fail(line, lead + 1, "missing key before '='");
      int vlead = 0;
      const std::string value = trim(raw.substr(eq + 1), &vlead);
      if (value.empty()) parse_fail(line, static_cast<int>(eq) + 2, "missing value for '" + key + "'");
      Entry e{value, line, lead + 1, static_cast<int>(eq) + 2 + vlead, false};
      if (!out.back().entries.emplace(key, e).second)
        parse_fail(line, lead + 1, "duplicate key '" + key + "' in [" + out.back().name + "]");
    }
    if (eol == text.size()) break;
  }
  return out;
}

class Reader {
 public:
  explicit Reader(Section& s) : s_(s) {}

  bool has(const std::string& key) const { return s_.entries.count(key) > 0; }

  const Entry& raw(const std::string& key) {
    auto it = s_.entries.find(key);
    if (it == s_.entries.end())
      constraint_fail("[" + s_.name + "] at line " + std::to_string(s_.line) + " needs '" + key + "'");
    it->second.used = true;
    return it->second;
  }

  double number(const std::string& key) { return number_at(raw(key), raw(key).value, 0); }
  double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

  long integer(const std::string& key, long fallback) {
    if (!has(key)) return fallback;
    const Entry& e = raw(key);
    const double v = number(key);
    if (v != std::floor(v) || std::abs(v) > 1e15) parse_fail(e.line, e.value_col, "'" + key + "' must be an integer");
    return static_cast<long>(v);
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const Entry& e = raw(key);
    if (e.value == "true" || e.value == "on" || e.value == "yes" || e.value == "1") return true;
    if (e.value == "false" || e.value == "off" || e.value == "no" || e.value == "0") return false;
    parse_fail(e.line, e.value_col, "'" + key + "' must be true or false");
  }

  std::string word(const std::string& key, const std::string& fallback) {
    return has(key) ? raw(key).value : fallback;
  }

  std::vector<double> list(const std::string& key) {
    const Entry& e = raw(key);
    std::vector<double> out;
    int depth = 0;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= e.value.size(); ++i) {
      const char ch = i < e.value.size() ? e.value[i] : ',';
      if (ch == '(') ++depth;
      if (ch == ')') --depth;
      if (ch == ',' && depth == 0) {
        out.push_back(number_at(e, e.value.substr(start, i - start), static_cast<int>(start)));
        start = i + 1;
      }
    }
    return out;
  }

  Point point(const std::string& key, int dim) {
    const std::vector<double> v = list(key);
    if (static_cast<int>(v.size()) != dim) {
      const Entry& e = raw(key);
      parse_fail(e.line, e.value_col,
                 "'" + key + "' needs " + std::to_string(dim) + " coordinates, got " + std::to_string(v.size()));
    }
    Point p{};
    for (int a = 0; a < dim; ++a) p[a] = v[a];
    return p;
  }

  void finish() const {
    for (const auto& [k, e] : s_.entries)
      if (!e.used) parse_fail(e.line, e.key_col, "unknown key '" + k + "' in [" + s_.name + "]");
  }

 private:
  double number_at(const Entry& e, const std::string& text, int offset) {
    int lead = 0;
    const std::string t = trim(text, &lead);
    const int col = e.value_col - 1 + offset + lead;
    if (t.empty()) parse_fail(e.line, col + 1, "empty number");
    const Expression x = Expression::parse(t, e.line, col);
    double v = 0.0;
    if (!x.is_constant()) parse_fail(e.line, col + 1, "expected a constant, not an expression of the coordinates");
    try {
      v = x.evaluate(Point{});
    } catch (const Error& err) {
      parse_fail(e.line, col + 1, err.what());
    }
    return v;
  }

  Section& s_;
};

Shape read_shape(Reader& r, int dim) {
  const std::string kind = r.word("shape", "ball");
  if (kind == "ball") return Shape::ball(r.point("center", dim), r.number("radius"));
  if (kind == "point") return Shape::point(r.point("center", dim));
  if (kind == "box") return Shape::box(r.point("lo", dim), r.point("hi", dim));
  if (kind == "annulus") return Shape::annulus(r.point("center", dim), r.number("inner"), r.number("outer"));
  if (kind == "polydisc") {
    const Point c = r.point("center", dim);
    const Point radii = r.point("radii", dim / 2);
    return Shape::polydisc(c, {radii[0], radii[1]});
  }
  const Entry& e = r.raw("shape");
  parse_fail(e.line, e.value_col, "unknown shape '" + kind + "' (ball, point, box, annulus, polydisc)");
}

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fmt_point(const Point& p, int dim) {
  std::string s;
  for (int a = 0; a < dim; ++a) s += (a ? ", " : "") + fmt(p[a]);
  return s;
}

void write_shape(std::ostringstream& os, const Shape& s, int dim) {
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Ball>) {
          if (v.radius == 0.0) {
            os << "shape = point\ncenter = " << fmt_point(v.center, dim) << "\n";
          } else {
            os << "shape = ball\ncenter = " << fmt_point(v.center, dim) << "\nradius = " << fmt(v.radius) << "\n";
          }
        } else if constexpr (std::is_same_v<T, Box>) {
          os << "shape = box\nlo = " << fmt_point(v.lo, dim) << "\nhi = " << fmt_point(v.hi, dim) << "\n";
        } else if constexpr (std::is_same_v<T, Annulus>) {
          os << "shape = annulus\ncenter = " << fmt_point(v.center, dim) << "\ninner = " << fmt(v.inner)
             << "\nouter = " << fmt(v.outer) << "\n";
        } else {
          os << "shape = polydisc\ncenter = " << fmt_point(v.center, dim) << "\nradii = " << fmt(v.radii[0]);
          if (dim == 4) os << ", " << fmt(v.radii[1]);
          os << "\n";
        }
      },
      s.variant());
}

}  // namespace

CapacityOptions RunConfig::capacity_options() const {
  CapacityOptions o;
  o.solver = solver;
  return o;
}

std::vector<double> RunConfig::sweep_levels(int levels) const {
  std::vector<double> hs;
  double h = solver.h;
  for (int k = 0; k < std::max(1, levels); ++k, h /= sweep_factor) hs.push_back(h);
  return hs;
}

RunConfig parse_config_text(std::string_view text, bool check_nodes) {
  std::vector<Section> sections = split_sections(text);
  RunConfig c;
  int domains = 0;
  for (auto& s : sections) {
    if (s.name == "domain") {
      if (++domains > 1) parse_fail(s.line, 1, "[domain] may appear only once");
      Reader r(s);
      const long n = r.integer("n", 0);
      const Entry& ne = r.raw("n");
      if (n < 1 || n > kMaxComplexDim) parse_fail(ne.line, ne.value_col, "n must be 1 or 2");
      c.spec.geometry.n = static_cast<int>(n);
      c.spec.geometry.domain = read_shape(r, 2 * c.spec.geometry.n);
      r.finish();
    }
  }
  if (domains == 0) constraint_fail("missing [domain] section");
  const int dim = c.spec.geometry.dim();
  bool weight = false, solver = false, output = false;
  for (auto& s : sections) {
    Reader r(s);
    auto once = [&](bool& seen) {
      if (seen) parse_fail(s.line, 1, "[" + s.name + "] may appear only once");
      seen = true;
    };
    if (s.name == "compact") {
      c.spec.geometry.compact.push_back(read_shape(r, dim));
    } else if (s.name == "weight") {
      once(weight);
      c.spec.m = static_cast<int>(r.integer("m", 1));
      if (r.has("psi")) {
        const Entry& e = r.raw("psi");
        c.spec.psi = Expression::parse(e.value, e.line, e.value_col - 1);
      }
      c.spec.delta = r.number("delta", 0.0);
    } else if (s.name == "solver") {
      once(solver);
      SolverOptions& o = c.solver;
      o.h = r.number("h", o.h);
      o.epsilon = r.number("epsilon", o.epsilon);
      o.max_sweeps = r.integer("max_sweeps", o.max_sweeps);
      o.relaxation = r.number("relaxation", o.relaxation);
      o.stencil_radius = static_cast<int>(r.integer("stencil_radius", o.stencil_radius));
      o.fit_compact = r.boolean("fit_compact", o.fit_compact);
      o.allow_degenerate = r.boolean("allow_degenerate", o.allow_degenerate);
      if (r.has("fit_domain")) {
        const Entry& e = r.raw("fit_domain");
        if (e.value == "auto") o.fit_domain = -1;
        else if (e.value == "on" || e.value == "true") o.fit_domain = 1;
        else if (e.value == "off" || e.value == "false") o.fit_domain = 0;
        else parse_fail(e.line, e.value_col, "fit_domain must be auto, on or off");
      }
      c.sweep = static_cast<int>(r.integer("sweep", c.sweep));
      c.sweep_factor = static_cast<int>(r.integer("sweep_factor", c.sweep_factor));
      c.method = r.word("method", c.method);
      if (c.method != "measure" && c.method != "oracle" && c.method != "outer") {
        const Entry& e = r.raw("method");
        parse_fail(e.line, e.value_col, "method must be measure, oracle or outer");
      }
      if (r.has("outer_factors")) c.outer_factors = r.list("outer_factors");
    } else if (s.name == "output") {
      once(output);
      c.out_dir = r.word("dir", c.out_dir);
      c.prefix = r.word("prefix", c.prefix);
      c.write_density = r.boolean("density", c.write_density);
      c.write_csv = r.boolean("csv", c.write_csv);
    } else {
      continue;
    }
    r.finish();
  }

  const SolverOptions& o = c.solver;
  if (!(o.h > 0.0)) constraint_fail("h must be positive");
  if (!(o.epsilon > 0.0)) constraint_fail("epsilon must be positive");
  if (o.max_sweeps < 0) constraint_fail("max_sweeps must be >= 0");
  if (!(o.relaxation == 0.0 || (o.relaxation > 0.0 && o.relaxation < 2.0)))
    constraint_fail("relaxation must be 0 (automatic) or lie in (0, 2)");
  if (o.stencil_radius < 0 || o.stencil_radius > 3) constraint_fail("stencil_radius must be 0..3");
  if (c.sweep < 0) constraint_fail("sweep must be >= 0");
  if (c.sweep_factor < 2) constraint_fail("sweep_factor must be >= 2");
  if (c.outer_factors.empty()) constraint_fail("outer_factors must not be empty");
  for (double f : c.outer_factors)
    if (!(f > 0.0)) constraint_fail("outer_factors must be positive");
  c.spec.validate();
  for (const auto& k : c.spec.geometry.compact) {
    try {
      k.validate(dim);
    } catch (const Error& e) {
      constraint_fail(std::string("[compact] ") + e.what());
    }
  }
  try {
    c.spec.geometry.domain.validate(dim);
  } catch (const Error& e) {
    constraint_fail(std::string("[domain] ") + e.what());
  }

  if (check_nodes) {
    try {
      Condenser probe(c.spec, o.condenser_options());
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kInfeasible) constraint_fail(std::string("violates delta > sup_K psi: ") + e.what());
      throw;
    }
  }
  return c;
}

RunConfig parse_config(const std::string& path, bool check_nodes) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), check_nodes);
}

std::string to_text(const RunConfig& c) {
  const int dim = c.spec.geometry.dim();
  std::ostringstream os;
  os << "[domain]\nn = " << c.spec.geometry.n << "\n";
  write_shape(os, c.spec.geometry.domain, dim);
  for (const auto& k : c.spec.geometry.compact) {
    os << "\n[compact]\n";
    write_shape(os, k, dim);
  }
  os << "\n[weight]\nm = " << c.spec.m << "\npsi = " << c.spec.psi.print() << "\ndelta = " << fmt(c.spec.delta)
     << "\n";
  const SolverOptions& o = c.solver;
  os << "\n[solver]\nh = " << fmt(o.h) << "\nepsilon = " << fmt(o.epsilon) << "\nmax_sweeps = " << o.max_sweeps
     << "\nrelaxation = " << fmt(o.relaxation) << "\nstencil_radius = " << o.stencil_radius
     << "\nfit_compact = " << (o.fit_compact ? "true" : "false")
     << "\nfit_domain = " << (o.fit_domain < 0 ? "auto" : o.fit_domain ? "on" : "off")
     << "\nallow_degenerate = " << (o.allow_degenerate ? "true" : "false") << "\nsweep = " << c.sweep
     << "\nsweep_factor = " << c.sweep_factor << "\nmethod = " << c.method << "\nouter_factors = ";
  for (std::size_t i = 0; i < c.outer_factors.size(); ++i) os << (i ? ", " : "") << fmt(c.outer_factors[i]);
  os << "\n\n[output]\ndir = " << c.out_dir << "\nprefix = " << c.prefix
     << "\ndensity = " << (c.write_density ? "true" : "false") << "\ncsv = " << (c.write_csv ? "true" : "false")
     << "\n";
  return os.str();
}

}  // namespace mscap
