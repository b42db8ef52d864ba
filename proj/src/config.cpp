// SPDX-License-Identifier: Apache-2.0
#include "semilin/config.hpp"

#include <array>
#include <charconv>
#include <fmt/format.h>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "semilin/error.hpp"

namespace semilin::cli {

namespace {

using expr::Var;

constexpr std::array<std::pair<Mode, std::string_view>, 6> kModes{{
    {Mode::SolveMonotone, "solve-monotone"},
    {Mode::SolveNonmonotone, "solve-nonmonotone"},
    {Mode::Eigen, "eigen"},
    {Mode::Verify, "verify"},
    {Mode::Kato, "kato"},
    {Mode::Example51, "example51"},
}};

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Context {
  const std::filesystem::path& origin;
  std::size_t line;

  [[noreturn]] void fail(const std::string& msg) const {
    throw config_error(fmt::format("{}:{}: {}", origin.string(), line, msg));
  }
};

double parse_real(const Context& ctx, std::string_view key, std::string_view v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end || !std::isfinite(out)) {
    ctx.fail(fmt::format("'{}' expects a finite number, got '{}'", key, v));
  }
  return out;
}

double parse_positive(const Context& ctx, std::string_view key, std::string_view v) {
  const double x = parse_real(ctx, key, v);
  if (!(x > 0.0)) ctx.fail(fmt::format("'{}' must be positive, got {}", key, x));
  return x;
}

std::size_t parse_count(const Context& ctx, std::string_view key, std::string_view v) {
  std::size_t out = 0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end || out == 0) {
    ctx.fail(fmt::format("'{}' expects a positive integer, got '{}'", key, v));
  }
  return out;
}

expr::Expr parse_expr(const Context& ctx, std::string_view key, std::string_view v) {
  auto result = expr::parse(v);
  if (auto* err = std::get_if<expr::ParseError>(&result)) {
    ctx.fail(fmt::format("cannot parse '{}': {}", key, expr::format_parse_error(v, *err)));
  }
  return std::get<expr::Expr>(std::move(result));
}

bool parse_bool(const Context& ctx, std::string_view key, std::string_view v) {
  if (v == "true" || v == "on" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "off" || v == "no" || v == "0") return false;
  ctx.fail(fmt::format("'{}' expects true or false, got '{}'", key, v));
}

using Setter = std::function<void(RunConfig&, const Context&, std::string_view key, std::string_view value)>;
using Section = std::map<std::string, Setter, std::less<>>;

Setter expr_into(expr::Expr RunConfig::*field) {
  return [field](RunConfig& c, const Context& ctx, std::string_view k, std::string_view v) {
    c.*field = parse_expr(ctx, k, v);
  };
}

Setter pair_expr(PairSource RunConfig::*pair, int which) {
  return [pair, which](RunConfig& c, const Context& ctx, std::string_view k, std::string_view v) {
    (which == 0 ? (c.*pair).first : (c.*pair).second) = parse_expr(ctx, k, v);
  };
}

Setter pair_file(PairSource RunConfig::*pair) {
  return [pair](RunConfig& c, const Context&, std::string_view, std::string_view v) {
    std::filesystem::path p{std::string(v)};
    if (p.is_relative()) p = c.origin.parent_path() / p;
    (c.*pair).file = p;
  };
}

const std::map<std::string, Section, std::less<>>& schema() {
  static const std::map<std::string, Section, std::less<>> sections{
      {"domain",
       {
           {"type",
            [](RunConfig& c, const Context& ctx, std::string_view k, std::string_view v) {
              if (v == "interval") {
                c.domain = DomainKind::Interval;
              } else if (v == "square") {
                c.domain = DomainKind::Square;
              } else {
                ctx.fail(fmt::format("'{}' must be interval or square, got '{}'", k, v));
              }
            }},
           {"n", [](RunConfig& c, const Context& ctx, std::string_view k,
                    std::string_view v) { c.n = parse_count(ctx, k, v); }},
       }},
      {"equations",
       {
           {"lambda", [](RunConfig& c, const Context& ctx, std::string_view k,
                         std::string_view v) { c.lambda = parse_real(ctx, k, v); }},
           {"c1", expr_into(&RunConfig::c1)},
           {"c2", expr_into(&RunConfig::c2)},
           {"f1", expr_into(&RunConfig::f1)},
           {"f2", expr_into(&RunConfig::f2)},
           {"g1", expr_into(&RunConfig::g1)},
           {"g2", expr_into(&RunConfig::g2)},
       }},
      {"run",
       {
           {"mode",
            [](RunConfig& c, const Context& ctx, std::string_view k, std::string_view v) {
              c.mode = mode_from_name(v);
              if (!c.mode) ctx.fail(fmt::format("'{}' names an unknown mode '{}'", k, v));
            }},
           {"tol", [](RunConfig& c, const Context& ctx, std::string_view k,
                      std::string_view v) { c.tol = parse_positive(ctx, k, v); }},
           {"tau", [](RunConfig& c, const Context& ctx, std::string_view k,
                      std::string_view v) { c.tau = parse_positive(ctx, k, v); }},
           {"max_iter", [](RunConfig& c, const Context& ctx, std::string_view k,
                           std::string_view v) { c.max_iter = parse_count(ctx, k, v); }},
           {"max_chain", [](RunConfig& c, const Context& ctx, std::string_view k,
                            std::string_view v) { c.max_chain = parse_count(ctx, k, v); }},
           {"interval",
            [](RunConfig& c, const Context& ctx, std::string_view k, std::string_view v) {
              if (v == "auto") {
                c.interval = IntervalSource::Auto;
              } else if (v == "explicit") {
                c.interval = IntervalSource::Explicit;
              } else {
                ctx.fail(fmt::format("'{}' must be auto or explicit, got '{}'", k, v));
              }
            }},
           {"sub1", pair_expr(&RunConfig::sub, 0)},
           {"sub2", pair_expr(&RunConfig::sub, 1)},
           {"super1", pair_expr(&RunConfig::super, 0)},
           {"super2", pair_expr(&RunConfig::super, 1)},
           {"sub_file", pair_file(&RunConfig::sub)},
           {"super_file", pair_file(&RunConfig::super)},
           {"a1", pair_expr(&RunConfig::kato_a, 0)},
           {"a2", pair_expr(&RunConfig::kato_a, 1)},
           {"b1", pair_expr(&RunConfig::kato_b, 0)},
           {"b2", pair_expr(&RunConfig::kato_b, 1)},
           {"a_file", pair_file(&RunConfig::kato_a)},
           {"b_file", pair_file(&RunConfig::kato_b)},
           {"lattice",
            [](RunConfig& c, const Context& ctx, std::string_view k, std::string_view v) {
              if (v == "max") {
                c.lattice_max = true;
              } else if (v == "min") {
                c.lattice_max = false;
              } else {
                ctx.fail(fmt::format("'{}' must be max or min, got '{}'", k, v));
              }
            }},
           {"epsilon", [](RunConfig& c, const Context& ctx, std::string_view k,
                          std::string_view v) { c.epsilon = parse_positive(ctx, k, v); }},
           {"m_tilde", [](RunConfig& c, const Context& ctx, std::string_view k,
                          std::string_view v) { c.m_tilde = parse_positive(ctx, k, v); }},
           {"bound_f1", [](RunConfig& c, const Context& ctx, std::string_view k,
                           std::string_view v) { c.bound_f[0] = parse_expr(ctx, k, v); }},
           {"bound_f2", [](RunConfig& c, const Context& ctx, std::string_view k,
                           std::string_view v) { c.bound_f[1] = parse_expr(ctx, k, v); }},
           {"bound_g1", [](RunConfig& c, const Context& ctx, std::string_view k,
                           std::string_view v) { c.bound_g[0] = parse_expr(ctx, k, v); }},
           {"bound_g2", [](RunConfig& c, const Context& ctx, std::string_view k,
                           std::string_view v) { c.bound_g[1] = parse_expr(ctx, k, v); }},
           {"out", [](RunConfig& c, const Context&, std::string_view,
                      std::string_view v) { c.out_dir = std::filesystem::path(std::string(v)); }},
           {"deterministic", [](RunConfig& c, const Context& ctx, std::string_view k,
                                std::string_view v) { c.deterministic = parse_bool(ctx, k, v); }},
       }},
  };
  return sections;
}

void require_only(const expr::Expr& e, std::string_view key, std::initializer_list<Var> allowed, std::string_view why) {
  for (Var v : {Var::X, Var::Y, Var::U1, Var::U2, Var::S, Var::Lambda}) {
    if (!e.uses(v)) continue;
    if (std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
      throw config_error(fmt::format("'{}' may not use '{}' ({})", key, expr::var_name(v), why));
    }
  }
}

void require_pair(const PairSource& p, std::string_view a, std::string_view b, std::string_view file_key,
                  std::string_view mode) {
  if (p.file) {
    if (p.first || p.second) {
      throw config_error(fmt::format("give either {} or {}/{}, not both", file_key, a, b));
    }
    return;
  }
  if (!p.first || !p.second) {
    throw config_error(fmt::format("mode {} needs '{}' and '{}' (or '{}')", mode, a, b, file_key));
  }
  require_only(*p.first, a, {Var::X, Var::Y, Var::Lambda}, "pair components are functions of position");
  require_only(*p.second, b, {Var::X, Var::Y, Var::Lambda}, "pair components are functions of position");
}

}  // namespace

std::string_view mode_name(Mode m) {
  for (const auto& [mode, name] : kModes) {
    if (mode == m) return name;
  }
  return "unknown";
}

std::optional<Mode> mode_from_name(std::string_view name) {
  for (const auto& [mode, n] : kModes) {
    if (n == name) return mode;
  }
  return std::nullopt;
}

IntervalSource RunConfig::interval_source() const {
  if (interval) return *interval;
  return mode == Mode::Example51 ? IntervalSource::Auto : IntervalSource::Explicit;
}

fem::MeshPtr RunConfig::make_mesh() const {
  return domain == DomainKind::Interval ? fem::unit_interval_mesh(n) : fem::unit_square_mesh(n);
}

RunConfig parse_config(std::string_view text, const std::filesystem::path& origin) {
  RunConfig cfg;
  cfg.origin = origin;
  cfg.c1 = expr::Expr::number(1.0);
  cfg.c2 = expr::Expr::number(1.0);

  const auto& sections = schema();
  const Section* current = nullptr;
  std::string current_name;
  std::set<std::string, std::less<>> seen;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const Context ctx{origin, line_no};

    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    const auto line = trim(raw);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') ctx.fail(fmt::format("malformed section header '{}'", line));
      const auto name = trim(line.substr(1, line.size() - 2));
      const auto it = sections.find(name);
      if (it == sections.end()) ctx.fail(fmt::format("unknown section [{}]", name));
      current = &it->second;
      current_name = std::string(name);
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) ctx.fail(fmt::format("expected 'key = value', got '{}'", line));
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (current == nullptr) ctx.fail(fmt::format("key '{}' appears before any section", key));
    const auto setter = current->find(key);
    if (setter == current->end()) ctx.fail(fmt::format("unknown key '{}' in [{}]", key, current_name));
    if (value.empty()) ctx.fail(fmt::format("key '{}' has no value", key));
    if (!seen.insert(current_name + "." + std::string(key)).second) {
      ctx.fail(fmt::format("key '{}' given twice in [{}]", key, current_name));
    }
    setter->second(cfg, ctx, key, value);
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error(fmt::format("cannot read config file '{}'", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

void validate(const RunConfig& cfg) {
  if (!cfg.mode) throw config_error("no mode given (set [run] mode or use a subcommand)");
  const Mode mode = *cfg.mode;
  const auto mname = mode_name(mode);

  for (const auto& [key, e] : {std::pair{"c1", &cfg.c1}, std::pair{"c2", &cfg.c2}}) {
    require_only(*e, key, {Var::X, Var::Y, Var::Lambda}, "coefficients depend on position only");
  }
  if (cfg.domain == DomainKind::Interval) {
    for (const auto* e : {&cfg.c1, &cfg.c2, &cfg.f1, &cfg.f2, &cfg.g1, &cfg.g2}) {
      if (e->uses(Var::Y)) throw config_error("'y' used on the interval domain");
    }
  }
  if (mode == Mode::Eigen) return;

  const std::array<std::pair<const char*, const expr::Expr*>, 4> rhs{
      {{"f1", &cfg.f1}, {"f2", &cfg.f2}, {"g1", &cfg.g1}, {"g2", &cfg.g2}}};
  const bool auto_interval = cfg.interval_source() == IntervalSource::Auto;
  if (auto_interval && mode != Mode::Example51 && mode != Mode::SolveMonotone && mode != Mode::SolveNonmonotone &&
      mode != Mode::Verify) {
    throw config_error(fmt::format("interval = auto is not available in mode {}", mname));
  }
  for (const auto& [key, e] : rhs) {
    if (auto_interval) {
      require_only(*e, key, {Var::S, Var::Lambda},
                   "the automatic construction needs the cross-coupled form, a function of s");
    } else {
      require_only(*e, key, {Var::X, Var::Y, Var::U1, Var::U2, Var::Lambda}, "s is only used with interval = auto");
    }
  }

  if (!auto_interval && (mode == Mode::SolveMonotone || mode == Mode::SolveNonmonotone || mode == Mode::Verify)) {
    require_pair(cfg.sub, "sub1", "sub2", "sub_file", mname);
    require_pair(cfg.super, "super1", "super2", "super_file", mname);
  }
  if (mode == Mode::Kato) {
    require_pair(cfg.kato_a, "a1", "a2", "a_file", mname);
    require_pair(cfg.kato_b, "b1", "b2", "b_file", mname);
  }
  if ((cfg.epsilon || cfg.m_tilde) && !auto_interval) {
    throw config_error("epsilon and m_tilde only apply to interval = auto");
  }
  for (std::size_t i = 0; i < 2; ++i) {
    for (const auto* b : {&cfg.bound_f[i], &cfg.bound_g[i]}) {
      if (*b) require_only(**b, "bound", {Var::X, Var::Y, Var::Lambda}, "bounds are functions of position");
    }
  }
}

}  // namespace semilin::cli
