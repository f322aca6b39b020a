#include "pdesign/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "pdesign/error.hpp"
#include "pdesign/expression.hpp"
#include "pdesign/io_util.hpp"

namespace pdesign {

std::function<double(const Point&)> LoadSpec::function() const {
  if (is_constant) return [v = value](const Point&) { return v; };
  return [e = Expression(expression)](const Point& p) { return e(p); };
}

std::string LoadSpec::to_string() const {
  return is_constant ? "const " + fmt_real(value) : "expr " + expression;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

double to_real(const std::string& key, const std::string& text) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v))
    throw InvalidInput(key + ": expected a finite number, got '" + text + "'");
  return v;
}

long long to_int(const std::string& key, const std::string& text) {
  long long v = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw InvalidInput(key + ": expected an integer, got '" + text + "'");
  return v;
}

bool to_bool(const std::string& key, const std::string& text) {
  if (text == "true") return true;
  if (text == "false") return false;
  throw InvalidInput(key + ": expected true or false, got '" + text + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& text) {
  std::vector<double> v;
  for (const auto& w : words(text)) v.push_back(to_real(key, w));
  if (v.empty()) throw InvalidInput(key + ": expected at least one number");
  return v;
}

std::string list_text(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + fmt_real(v[i]);
  return s;
}

DomainSpec::Shape parse_shape(const std::string& text) {
  const auto w = words(text);
  if (w.empty()) throw InvalidInput("domain: empty value");
  auto nums = [&](std::size_t n) {
    if (w.size() != n + 1)
      throw InvalidInput("domain: " + w[0] + " takes " + std::to_string(n) + " numbers");
    std::vector<double> v;
    for (std::size_t i = 1; i < w.size(); ++i) v.push_back(to_real("domain", w[i]));
    return v;
  };
  if (w[0] == "rectangle") {
    const auto v = nums(4);
    return Rectangle{v[0], v[1], v[2], v[3]};
  }
  if (w[0] == "disk") {
    const auto v = nums(3);
    return Disk{v[0], v[1], v[2]};
  }
  if (w[0] == "polygon") {
    if (w.size() < 7 || (w.size() - 1) % 2 != 0)
      throw InvalidInput("domain: polygon takes x y pairs for at least 3 vertices");
    Polygon poly;
    for (std::size_t i = 1; i + 1 < w.size(); i += 2)
      poly.vertices.emplace_back(to_real("domain", w[i]), to_real("domain", w[i + 1]));
    return poly;
  }
  throw InvalidInput("domain: unknown shape '" + w[0] + "' (rectangle, disk or polygon)");
}

std::string shape_text(const DomainSpec::Shape& shape) {
  return std::visit(
      [](const auto& s) -> std::string {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Rectangle>) {
          return "rectangle " + fmt_real(s.x0) + " " + fmt_real(s.x1) + " " + fmt_real(s.y0) + " " + fmt_real(s.y1);
        } else if constexpr (std::is_same_v<T, Disk>) {
          return "disk " + fmt_real(s.cx) + " " + fmt_real(s.cy) + " " + fmt_real(s.radius);
        } else {
          std::string t = "polygon";
          for (const auto& v : s.vertices) t += " " + fmt_real(v.x()) + " " + fmt_real(v.y());
          return t;
        }
      },
      shape);
}

LoadSpec parse_load(const std::string& text) {
  const auto sp = text.find_first_of(" \t");
  const std::string kind = text.substr(0, sp);
  const std::string rest = sp == std::string::npos ? "" : trim(text.substr(sp));
  LoadSpec l;
  if (kind == "const") {
    l.is_constant = true;
    l.value = to_real("f", rest);
  } else if (kind == "expr") {
    if (rest.empty()) throw InvalidInput("f: expr needs an expression");
    try {
      Expression check(rest);
    } catch (const InvalidInput& e) {
      throw InvalidInput(std::string("f: ") + e.what());
    }
    l.is_constant = false;
    l.expression = rest;
  } else {
    throw InvalidInput("f: expected 'const <value>' or 'expr <expression>'");
  }
  return l;
}

}  // namespace

void RunConfig::validate() const {
  model.validate();
  domain.validate();
  design.validate();
  if (!(model.kappa < domain.area()))
    throw InvalidInput("kappa: must satisfy kappa < |domain| = " + fmt_real(domain.area()));
  if (restarts < 0) throw InvalidInput("restarts: must be >= 0");
  if (levels < 1) throw InvalidInput("levels: must be >= 1");
  for (double d : deltas)
    if (!(d > 0.0)) throw InvalidInput("deltas: entries must be > 0");
  for (double e : epsilons)
    if (!(e > 0.0)) throw InvalidInput("epsilons: entries must be > 0");
  for (double d : deltas)
    for (double e : epsilons)
      if (!(e < d)) throw InvalidInput("epsilons: every epsilon must be < every delta");
  if (!(band > 0.0 && band < 0.5)) throw InvalidInput("band: must be in (0, 0.5)");
  if (!(r_exp > -0.5)) throw InvalidInput("r_exp: must be > -0.5");
  if (threads < 1) throw InvalidInput("threads: must be >= 1");
  if (out.empty()) throw InvalidInput("out: must not be empty");
}

std::string RunConfig::to_text() const {
  const SolveConfig& s = design.solve;
  std::ostringstream o;
  auto kv = [&](const char* k, const std::string& v) { o << k << " = " << v << '\n'; };
  kv("alpha", fmt_real(model.alpha));
  kv("beta", fmt_real(model.beta));
  kv("p", fmt_real(model.p));
  kv("kappa", fmt_real(model.kappa));
  kv("domain", shape_text(domain.shape));
  kv("h", fmt_real(domain.target_h));
  kv("f", load.to_string());
  kv("newton_tol", fmt_real(s.newton_tol));
  kv("max_iter", std::to_string(s.max_iter));
  kv("armijo_c", fmt_real(s.armijo_c));
  kv("hessian_floor", fmt_real(s.hessian_floor));
  kv("eps_schedule", list_text(s.eps_schedule));
  kv("stage_tol", fmt_real(s.stage_tol));
  kv("vol_tol", fmt_real(design.vol_tol));
  kv("max_bisection", std::to_string(design.max_bisection));
  kv("grad_zero_tol", fmt_real(design.grad_zero_tol));
  kv("restarts", std::to_string(restarts));
  kv("levels", std::to_string(levels));
  kv("deltas", list_text(deltas));
  kv("epsilons", list_text(epsilons));
  kv("band", fmt_real(band));
  kv("r_exp", fmt_real(r_exp));
  kv("out", out);
  kv("seed", std::to_string(seed));
  kv("threads", std::to_string(threads));
  kv("restart_fluxes", restart_fluxes ? "true" : "false");
  kv("iteration_log", iteration_log ? "true" : "false");
  return o.str();
}

RunConfig parse_config(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  int lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InvalidInput("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (key.empty()) throw InvalidInput("line " + std::to_string(lineno) + ": empty key");
    if (value.empty()) throw InvalidInput(key + ": empty value");
    if (!kv.emplace(key, value).second) throw InvalidInput(key + ": given more than once");
  }

  RunConfig c;
  using Setter = std::function<void(const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"alpha", [&](const std::string& v) { c.model.alpha = to_real("alpha", v); }},
      {"beta", [&](const std::string& v) { c.model.beta = to_real("beta", v); }},
      {"p", [&](const std::string& v) { c.model.p = to_real("p", v); }},
      {"kappa", [&](const std::string& v) { c.model.kappa = to_real("kappa", v); }},
      {"domain", [&](const std::string& v) { c.domain.shape = parse_shape(v); }},
      {"h", [&](const std::string& v) { c.domain.target_h = to_real("h", v); }},
      {"f", [&](const std::string& v) { c.load = parse_load(v); }},
      {"newton_tol", [&](const std::string& v) { c.design.solve.newton_tol = to_real("newton_tol", v); }},
      {"max_iter", [&](const std::string& v) { c.design.solve.max_iter = static_cast<int>(to_int("max_iter", v)); }},
      {"armijo_c", [&](const std::string& v) { c.design.solve.armijo_c = to_real("armijo_c", v); }},
      {"hessian_floor", [&](const std::string& v) { c.design.solve.hessian_floor = to_real("hessian_floor", v); }},
      {"eps_schedule", [&](const std::string& v) { c.design.solve.eps_schedule = to_list("eps_schedule", v); }},
      {"stage_tol", [&](const std::string& v) { c.design.solve.stage_tol = to_real("stage_tol", v); }},
      {"vol_tol", [&](const std::string& v) { c.design.vol_tol = to_real("vol_tol", v); }},
      {"max_bisection", [&](const std::string& v) { c.design.max_bisection = static_cast<int>(to_int("max_bisection", v)); }},
      {"grad_zero_tol", [&](const std::string& v) { c.design.grad_zero_tol = to_real("grad_zero_tol", v); }},
      {"restarts", [&](const std::string& v) { c.restarts = static_cast<int>(to_int("restarts", v)); }},
      {"levels", [&](const std::string& v) { c.levels = static_cast<int>(to_int("levels", v)); }},
      {"deltas", [&](const std::string& v) { c.deltas = to_list("deltas", v); }},
      {"epsilons", [&](const std::string& v) { c.epsilons = to_list("epsilons", v); }},
      {"band", [&](const std::string& v) { c.band = to_real("band", v); }},
      {"r_exp", [&](const std::string& v) { c.r_exp = to_real("r_exp", v); }},
      {"out", [&](const std::string& v) { c.out = v; }},
      {"seed", [&](const std::string& v) {
         const long long s = to_int("seed", v);
         if (s < 0) throw InvalidInput("seed: must be >= 0");
         c.seed = static_cast<std::uint64_t>(s);
       }},
      {"threads", [&](const std::string& v) { c.threads = static_cast<int>(to_int("threads", v)); }},
      {"restart_fluxes", [&](const std::string& v) { c.restart_fluxes = to_bool("restart_fluxes", v); }},
      {"iteration_log", [&](const std::string& v) { c.iteration_log = to_bool("iteration_log", v); }},
  };
  for (const auto& [key, value] : kv) {
    auto it = setters.find(key);
    if (it == setters.end()) throw InvalidInput(key + ": unknown key");
    it->second(value);
  }
  for (const char* req : {"alpha", "beta", "p", "kappa", "domain", "h", "f"})
    if (!kv.count(req)) throw InvalidInput(std::string(req) + ": required key missing");
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InvalidInput("config: cannot open '" + path + "'");
  std::ostringstream s;
  s << f.rdbuf();
  return parse_config(s.str());
}

}  // namespace pdesign
