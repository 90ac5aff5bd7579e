#include "eldtn/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

namespace eldtn {

namespace {

class ExpressionParser {
 public:
  explicit ExpressionParser(std::string_view s) : s_(s) {}

  double parse() {
    const double v = sum();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return v;
  }

 private:
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("cannot evaluate '" + std::string(s_) + "': " + what);
  }

  double sum() {
    double v = product();
    for (;;) {
      if (accept('+')) v += product();
      else if (accept('-')) v -= product();
      else return v;
    }
  }
  double product() {
    double v = unary();
    for (;;) {
      if (accept('*')) {
        v *= unary();
      } else if (accept('/')) {
        const double d = unary();
        if (d == 0.0) fail("division by zero");
        v /= d;
      } else {
        return v;
      }
    }
  }
  double unary() {
    if (accept('-')) return -unary();
    if (accept('+')) return unary();
    return primary();
  }
  double primary() {
    skip();
    if (accept('(')) {
      const double v = sum();
      if (!accept(')')) fail("missing ')'");
      return v;
    }
    if (s_.substr(pos_, 2) == "pi") {
      pos_ += 2;
      return std::numbers::pi;
    }
    const std::string rest(s_.substr(pos_));
    char* end = nullptr;
    const double v = std::strtod(rest.c_str(), &end);
    if (end == rest.c_str()) fail(pos_ < s_.size() ? "expected a number" : "unexpected end");
    pos_ += static_cast<std::size_t>(end - rest.c_str());
    return v;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

std::vector<std::string> split(const std::string& s, const std::string& separators) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (separators.find(c) != std::string::npos) {
      if (!trim(cur).empty()) out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty()) out.push_back(trim(cur));
  return out;
}

double number(const std::string& key, const std::string& value) {
  try {
    return evaluate_expression(value);
  } catch (const ConfigError& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

long long integer(const std::string& key, const std::string& value) {
  const double v = number(key, value);
  if (!std::isfinite(v) || v != std::floor(v) || std::abs(v) > 1e15) throw ConfigError(key + " must be an integer");
  return static_cast<long long>(v);
}

bool boolean(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw ConfigError(key + " must be true or false");
}

const std::set<std::string> kKeys = {
    "geometry", "lambda", "mu", "omega", "theta1", "theta2", "Lambda1", "Lambda2", "h", "hhat", "N",
    "eps", "tau", "eps_N_target", "max_dofs", "max_iters", "bisections", "divisions", "bumps", "heightmap", "base",
    "outdir", "threads", "export_vtk", "direct_limit", "dense_threshold"};

}  // namespace

double evaluate_expression(std::string_view expr) { return ExpressionParser(expr).parse(); }

SurfaceProfile load_heightmap(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open heightmap file " + path.string());
  int nx = 0, ny = 0;
  if (!(in >> nx >> ny) || nx < 1 || ny < 1) throw ConfigError("heightmap " + path.string() + ": bad grid size");
  std::vector<double> heights(static_cast<std::size_t>(nx) * ny);
  for (double& z : heights)
    if (!(in >> z)) throw ConfigError("heightmap " + path.string() + ": expected " + std::to_string(nx * ny) + " heights");
  return SurfaceProfile::heightmap(nx, ny, std::move(heights));
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  std::map<std::string, std::string> kv;
  std::istringstream lines(text);
  std::string line;
  int lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (!kKeys.count(key)) throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    if (value.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty value for '" + key + "'");
    if (kv.count(key)) throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    kv[key] = value;
  }
  auto get = [&](const std::string& key, double fallback) { return kv.count(key) ? number(key, kv[key]) : fallback; };

  RunConfig rc;
  rc.text = text;
  AdaptConfig& c = rc.adapt;
  const double pi = std::numbers::pi;
  try {
    c.medium = make_medium(get("lambda", 1.0), get("mu", 1.0), get("omega", 2 * pi));
    c.incidence = make_incidence(c.medium, get("theta1", pi / 6), get("theta2", pi / 6));
  } catch (const InvalidParameter& e) {
    throw ConfigError(std::string("invalid medium or incidence: ") + e.what());
  }
  c.Lambda1 = get("Lambda1", 1.0);
  c.Lambda2 = get("Lambda2", 1.0);
  if (!(c.Lambda1 > 0) || !(c.Lambda2 > 0)) throw ConfigError("Lambda1 and Lambda2 must be positive");

  rc.geometry = kv.count("geometry") ? kv["geometry"] : "flat";
  const double base = get("base", 0.0);
  if (rc.geometry == "flat") {
    c.profile = SurfaceProfile::flat(base);
  } else if (rc.geometry == "bumps") {
    std::vector<Bump> boxes;
    if (kv.count("bumps")) {
      for (const std::string& entry : split(kv["bumps"], ";")) {
        const std::vector<std::string> f = split(entry, ",");
        if (f.size() != 5) throw ConfigError("bumps: each entry needs x1lo,x1hi,x2lo,x2hi,height");
        boxes.push_back({number("bumps", f[0]), number("bumps", f[1]), number("bumps", f[2]), number("bumps", f[3]),
                         number("bumps", f[4])});
      }
    } else {
      boxes = {{0.125, 0.375, 0.125, 0.375, 0.2}, {0.625, 0.875, 0.625, 0.875, 0.2}};
    }
    try {
      c.profile = SurfaceProfile::bumps(base, std::move(boxes));
    } catch (const InvalidParameter& e) {
      throw ConfigError(std::string("bumps: ") + e.what());
    }
  } else if (rc.geometry == "heightmap") {
    if (!kv.count("heightmap")) throw ConfigError("geometry = heightmap needs a heightmap file");
    std::filesystem::path p = kv["heightmap"];
    if (p.is_relative()) p = base_dir / p;
    try {
      c.profile = load_heightmap(p);
    } catch (const InvalidParameter& e) {
      throw ConfigError(std::string("heightmap: ") + e.what());
    }
  } else {
    throw ConfigError("geometry must be flat, bumps or heightmap (got '" + rc.geometry + "')");
  }
  if (rc.geometry != "bumps" && kv.count("bumps")) throw ConfigError("bumps given but geometry is not bumps");

  c.h = get("h", rc.geometry == "flat" ? 0.3 : 0.6);
  if (kv.count("hhat")) c.hhat = number("hhat", kv["hhat"]);
  if (kv.count("N")) c.N = static_cast<int>(integer("N", kv["N"]));
  c.epsilon = get("eps", 0.0);
  c.tau = get("tau", 0.5);
  c.eps_N_target = get("eps_N_target", 1e-8);
  if (kv.count("max_dofs")) c.max_dofs = integer("max_dofs", kv["max_dofs"]);
  if (kv.count("max_iters")) c.max_iters = static_cast<int>(integer("max_iters", kv["max_iters"]));
  if (kv.count("bisections")) c.bisections = static_cast<int>(integer("bisections", kv["bisections"]));
  if (kv.count("direct_limit")) c.direct_limit = static_cast<int>(integer("direct_limit", kv["direct_limit"]));
  if (kv.count("dense_threshold"))
    c.solver.dense_threshold = static_cast<int>(integer("dense_threshold", kv["dense_threshold"]));

  c.divisions = {8, 8, 3};
  if (kv.count("divisions")) {
    const std::vector<std::string> d = split(kv["divisions"], " ,");
    if (d.size() != 3) throw ConfigError("divisions needs three integers");
    c.divisions = {static_cast<int>(integer("divisions", d[0])), static_cast<int>(integer("divisions", d[1])),
                   static_cast<int>(integer("divisions", d[2]))};
    if (c.divisions.n1 < 1 || c.divisions.n2 < 1 || c.divisions.n3 < 1)
      throw ConfigError("divisions must be positive");
  }
  if (kv.count("outdir")) {
    rc.outdir = kv["outdir"];
    if (rc.outdir.is_relative()) rc.outdir = base_dir / rc.outdir;
  } else {
    rc.outdir = base_dir / "out";
  }
  if (kv.count("threads")) rc.threads = static_cast<int>(integer("threads", kv["threads"]));
  if (rc.threads < 1) throw ConfigError("threads must be at least 1");
  if (kv.count("export_vtk")) rc.export_vtk = boolean("export_vtk", kv["export_vtk"]);

  try {
    validate(c);
  } catch (const InvalidParameter& e) {
    throw ConfigError(e.what());
  }
  return rc;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

}  // namespace eldtn
