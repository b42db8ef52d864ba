// SPDX-License-Identifier: Apache-2.0
#include "semilin/run.hpp"

#include <chrono>
#include <fmt/format.h>
#include <fstream>
#include <optional>

#include "semilin/example51.hpp"
#include "semilin/monotone.hpp"
#include "semilin/nonmonotone.hpp"
#include "semilin/order.hpp"
#include "semilin/output.hpp"

namespace semilin::cli {

namespace {

using fem::FunctionPair;
using order::OrderedInterval;
using order::ProblemSpec;

std::string_view kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::Config: return "config-error";
    case ErrorKind::Construction: return "construction-error";
    case ErrorKind::NonConvergence: return "non-convergence";
    case ErrorKind::InvariantViolation: return "invariant-violation";
  }
  return "error";
}

/// State shared by the mode handlers. Fields and trace rows accumulate and
/// are flushed by execute() even when a handler throws.
class Runner {
 public:
  Runner(const RunConfig& cfg, RunSummary& summary) : cfg_(cfg), s_(summary), mesh_(cfg.make_mesh()) {}

  void run() {
    switch (*cfg_.mode) {
      case Mode::SolveMonotone: return solve_monotone();
      case Mode::SolveNonmonotone: return solve_nonmonotone();
      case Mode::Eigen: return eigen();
      case Mode::Verify: return verify();
      case Mode::Kato: return kato();
      case Mode::Example51: return solve_monotone();
    }
  }

  void flush() {
    const auto& dir = cfg_.out_dir;
    if (!rows_.empty()) {
      write_trace(dir / "trace.csv", rows_);
      s_.files.push_back(dir / "trace.csv");
    }
    if (!fields_.empty()) s_.files.push_back(write_fields(dir, fields_));
  }

 private:
  void put(std::string key, double v) { s_.values.emplace_back(std::move(key), v); }
  void put_flag(std::string key, bool v) { put(std::move(key), v ? 1.0 : 0.0); }
  void field(std::string name, const fem::FemFunction& f) { fields_.emplace_back(std::move(name), f); }
  void pair_fields(const std::string& prefix, const FunctionPair& p) {
    field(prefix + "1", p.first);
    field(prefix + "2", p.second);
  }

  expr::Bindings params() const {
    expr::Bindings b;
    b.set(expr::Var::Lambda, cfg_.lambda);
    return b;
  }

  ProblemSpec explicit_spec() const {
    return order::make_problem(mesh_, cfg_.c1, cfg_.c2, cfg_.f1, cfg_.f2, cfg_.g1, cfg_.g2, cfg_.lambda);
  }

  FunctionPair load_pair(const PairSource& p) const {
    if (p.file) return read_pair_csv(*p.file, mesh_);
    return {fem::FemFunction::interpolate(mesh_, *p.first, params()),
            fem::FemFunction::interpolate(mesh_, *p.second, params())};
  }

  /// The problem and its ordered interval, by construction or from the
  /// configured pairs.
  std::pair<ProblemSpec, OrderedInterval> problem_and_interval() {
    if (cfg_.interval_source() == IntervalSource::Auto) {
      auto ex = example51::make_config(mesh_, cfg_.lambda, {cfg_.f1, cfg_.f2}, {cfg_.g1, cfg_.g2}, {cfg_.c1, cfg_.c2});
      ex.epsilon = cfg_.epsilon;
      ex.m_tilde = cfg_.m_tilde;
      ex.concurrent = !cfg_.deterministic;
      auto c = example51::build_construct(ex);
      record_construct(c);
      return {std::move(c.spec), std::move(c.interval)};
    }
    ProblemSpec spec = explicit_spec();
    auto J = order::make_interval(spec, load_pair(cfg_.sub), load_pair(cfg_.super), cfg_.tau);
    put("sub_tolerance", J.sub_tolerance);
    put("super_tolerance", J.sup_tolerance);
    return {std::move(spec), std::move(J)};
  }

  void record_construct(const example51::Construct51& c) {
    for (std::size_t i = 0; i < 2; ++i) {
      const auto k = std::to_string(i + 1);
      put("mu" + k, c.eigen[i].mu);
      put("eigen_iterations" + k, static_cast<double>(c.eigen[i].report.iterations));
      put("aux_sup_norm" + k, c.aux[i].sup_norm);
    }
    put("a", c.a);
    put("b", c.b);
    put("C1", c.C1);
    put("C2", c.C2);
    put("lambda", cfg_.lambda);
    put("lambda_threshold", c.threshold);
    put("delta", c.delta);
    put("epsilon", c.epsilon);
    put("m_tilde_lower_bound", c.m_tilde_lower);
    put("m_tilde", c.m_tilde);
    put("sub_tolerance", c.interval.sub_tolerance);
    put("super_tolerance", c.interval.sup_tolerance);
    field("phi1", c.eigen[0].phi);
    field("phi2", c.eigen[1].phi);
    field("phistar1", c.aux[0].normalized);
    field("phistar2", c.aux[1].normalized);
  }

  void quasimonotone_warnings(const ProblemSpec& spec, const OrderedInterval& J) {
    const std::array<std::pair<double, double>, 2> box{std::pair{J.sub.first.min(), J.sup.first.max()},
                                                       std::pair{J.sub.second.min(), J.sup.second.max()}};
    for (auto& w : order::check_quasimonotone(spec, box)) s_.warnings.push_back(std::move(w));
  }

  /// Both residual certificates at the h-scaled tolerance.
  void certify(const ProblemSpec& spec, const FunctionPair& u, const std::string& name) {
    const double tau = order::h_scaled_tolerance(spec, u);
    const auto sub = order::verify_sub(spec, u, tau);
    const auto sup = order::verify_super(spec, u, tau);
    put(name + "_certificate_tolerance", tau);
    put(name + "_sub_violation", sub.worst_violation);
    put(name + "_super_violation", sup.worst_violation);
    if (!sub.pass || !sup.pass) {
      throw invariant_error(fmt::format("{} limit fails the solution certificate (violations {:.3e}, {:.3e} > {:.3e})",
                                        name, sub.worst_violation, sup.worst_violation, tau));
    }
  }

  void record_run(const std::string& name, const monotone::IterationTrace& t, double k_used) {
    put(name + "_iterations", static_cast<double>(t.iterations));
    put(name + "_k_used", k_used);
    put_flag(name + "_converged", t.converged);
    put_flag(name + "_retried", t.retried_with_doubled_shifts);
    put(name + "_res1", t.residuals.back()[0]);
    put(name + "_res2", t.residuals.back()[1]);
    double wrong = 0.0, outside = 0.0;
    for (double v : t.monotonicity_violations) wrong = std::max(wrong, v);
    for (double v : t.interval_violations) outside = std::max(outside, v);
    put(name + "_max_wrong_way", wrong);
    put(name + "_max_interval_violation", outside);
    put(name + "_energy_bound", t.energy_bound);
  }

  void solve_monotone() {
    auto [spec, J] = problem_and_interval();
    pair_fields("sub", J.sub);
    pair_fields("super", J.sup);
    quasimonotone_warnings(spec, J);

    const auto shifts = monotone::estimate_shifts(spec, J);
    put("k_hat1", shifts.k_hat[0]);
    put("k_hat2", shifts.k_hat[1]);
    put("k_bar1", shifts.k_bar[0]);
    put("k_bar2", shifts.k_bar[1]);
    put("k", shifts.k);

    monotone::IterationOptions opts;
    opts.tol = cfg_.tol;
    opts.max_iter = cfg_.max_iter;
    opts.concurrent_equations = !cfg_.deterministic;
    auto lo = monotone::iterate_min(spec, shifts, J, opts);
    auto hi = monotone::iterate_max(spec, shifts, J, opts);
    rows_ = trace_rows("min", lo.trace);
    auto hi_rows = trace_rows("max", hi.trace);
    rows_.insert(rows_.end(), hi_rows.begin(), hi_rows.end());
    pair_fields("min_u", lo.limit);
    pair_fields("max_u", hi.limit);
    record_run("min", lo.trace, lo.shifts.k);
    record_run("max", hi.trace, hi.shifts.k);
    const double gap = order::order_violation(lo.limit, hi.limit);
    put("min_minus_max", gap);

    if (!lo.trace.converged || !hi.trace.converged) {
      throw convergence_error(fmt::format("monotone iteration did not converge in {} iterations (min: {}, max: {})",
                                          cfg_.max_iter, lo.trace.converged ? "yes" : "no",
                                          hi.trace.converged ? "yes" : "no"));
    }
    if (gap > 1e-8) throw invariant_error(fmt::format("minimal solution exceeds maximal by {:.3e}", gap));
    certify(spec, lo.limit, "min");
    certify(spec, hi.limit, "max");
    if (*cfg_.mode == Mode::Example51) {
      const double m = std::min(lo.limit.first.min(), lo.limit.second.min());
      put("min_positive_floor", m);
      if (!(m > 0.0)) throw invariant_error(fmt::format("minimal solution is not positive (min {})", m));
    }
  }

  void solve_nonmonotone() {
    auto [spec, J] = problem_and_interval();
    pair_fields("sub", J.sub);
    pair_fields("super", J.sup);

    nonmonotone::ChainOptions opts;
    opts.tol = cfg_.tol;
    opts.max_chain = cfg_.max_chain;
    opts.concurrent = !cfg_.deterministic;
    for (std::size_t i = 0; i < 2; ++i) {
      opts.interior_bounds[i] = cfg_.bound_f[i];
      opts.boundary_bounds[i] = cfg_.bound_g[i];
    }
    auto res = nonmonotone::run_chain(spec, J, opts);
    for (auto& w : res.warnings) s_.warnings.push_back(std::move(w));
    rows_ = trace_rows(res.trace);
    pair_fields("chain_u", res.limit);

    const auto& t = res.trace;
    put("chain_steps", static_cast<double>(t.steps));
    put_flag("chain_converged", t.converged);
    put("chain_res1", t.residuals.back()[0]);
    put("chain_res2", t.residuals.back()[1]);
    std::size_t scalar = 0;
    for (auto v : t.scalar_iterations) scalar += v;
    put("scalar_iterations", static_cast<double>(scalar));
    double wrong = 0.0, above = 0.0;
    for (double v : t.monotonicity_violations) wrong = std::max(wrong, v);
    for (double v : t.upper_violations) above = std::max(above, v);
    put("chain_max_wrong_way", wrong);
    put("chain_max_above_super", above);

    if (!t.converged) {
      throw convergence_error(fmt::format("subsolution chain did not converge in {} steps", cfg_.max_chain));
    }
    certify(spec, res.limit, "chain");
  }

  void eigen() {
    const auto forms = fem::assemble(mesh_, cfg_.c1, cfg_.c2, params());
    for (std::size_t i = 0; i < 2; ++i) {
      const auto k = std::to_string(i + 1);
      const auto e = elliptic::steklov_first_eigenpair(forms, i);
      const auto a = elliptic::auxiliary_unit_solution(forms, i);
      put("mu" + k, e.mu);
      put("eigen_iterations" + k, static_cast<double>(e.report.iterations));
      put("eigen_residual" + k, e.report.final_relative_residual);
      put("aux_sup_norm" + k, a.sup_norm);
      put("phistar_min" + k, a.normalized.min());
      field("phi" + k, e.phi);
      field("aux" + k, a.phi);
      field("phistar" + k, a.normalized);
    }
  }

  void verify() {
    std::optional<ProblemSpec> spec;
    std::optional<FunctionPair> sub, sup;
    if (cfg_.interval_source() == IntervalSource::Auto) {
      auto [sp, J] = problem_and_interval();
      spec.emplace(std::move(sp));
      sub.emplace(std::move(J.sub));
      sup.emplace(std::move(J.sup));
    } else {
      spec.emplace(explicit_spec());
      sub.emplace(load_pair(cfg_.sub));
      sup.emplace(load_pair(cfg_.super));
    }
    pair_fields("sub", *sub);
    pair_fields("super", *sup);
    const double tau_sub = cfg_.tau.value_or(order::h_scaled_tolerance(*spec, *sub));
    const double tau_sup = cfg_.tau.value_or(order::h_scaled_tolerance(*spec, *sup));
    const auto rs = order::verify_sub(*spec, *sub, tau_sub);
    const auto rp = order::verify_super(*spec, *sup, tau_sup);
    const double gap = order::order_violation(*sub, *sup);
    put("sub_tolerance", tau_sub);
    put("sub_violation", rs.worst_violation);
    put_flag("sub_pass", rs.pass);
    put("super_tolerance", tau_sup);
    put("super_violation", rp.worst_violation);
    put_flag("super_pass", rp.pass);
    put("order_gap", gap);
    put_flag("ordered", gap <= 0.0);
    if (!rs.pass || !rp.pass || gap > 0.0) {
      throw construction_error(fmt::format(
          "pair does not form an ordered interval: sub {} ({:.3e} vs {:.3e}), super {} ({:.3e} vs {:.3e}), order gap "
          "{:.3e}",
          rs.pass ? "ok" : "fails", rs.worst_violation, tau_sub, rp.pass ? "ok" : "fails", rp.worst_violation, tau_sup,
          gap));
    }
  }

  void kato() {
    const ProblemSpec spec = explicit_spec();
    const auto a = load_pair(cfg_.kato_a);
    const auto b = load_pair(cfg_.kato_b);
    pair_fields("a", a);
    pair_fields("b", b);
    const bool mx = cfg_.lattice_max;
    const double tau = cfg_.tau.value_or(std::max(order::h_scaled_tolerance(spec, a), order::h_scaled_tolerance(spec, b)));
    put("tolerance", tau);
    for (const auto& [name, p] : {std::pair{"a", &a}, std::pair{"b", &b}}) {
      const auto rep = mx ? order::verify_sub(spec, *p, tau) : order::verify_super(spec, *p, tau);
      put(std::string(name) + "_violation", rep.worst_violation);
      if (!rep.pass) {
        throw construction_error(fmt::format("pair {} is not a {} (violation {:.3e} > {:.3e})", name,
                                             mx ? "subsolution" : "supersolution", rep.worst_violation, tau));
      }
    }
    const auto mode = mx ? order::LatticeMode::Max : order::LatticeMode::Min;
    const auto load = order::composite_load(spec, a, b, mode);
    pair_fields(mx ? "lattice_max" : "lattice_min", load.gamma);
    const auto rep = order::kato_check(spec, a, b, tau, mode);
    for (const auto& w : rep.warnings) s_.warnings.push_back(w);
    put("lattice_violation", rep.worst_violation);
    put_flag("lattice_pass", rep.pass);
    if (!rep.pass) {
      throw invariant_error(fmt::format("lattice {} fails the composite-load check (violation {:.3e} > {:.3e})",
                                        mx ? "max" : "min", rep.worst_violation, tau));
    }
  }

  const RunConfig& cfg_;
  RunSummary& s_;
  fem::MeshPtr mesh_;
  std::vector<TraceRow> rows_;
  std::vector<NamedField> fields_;
};

}  // namespace

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return 2;
    case ErrorKind::Construction: return 3;
    case ErrorKind::NonConvergence: return 4;
    case ErrorKind::InvariantViolation: return 5;
    case ErrorKind::InvalidArgument: return 1;
  }
  return 1;
}

double RunSummary::value(std::string_view key) const {
  for (const auto& [k, v] : values) {
    if (k == key) return v;
  }
  throw invalid_argument(fmt::format("run summary has no value '{}'", key));
}

RunSummary execute(const RunConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  RunSummary s;
  if (cfg.mode) s.mode = *cfg.mode;

  auto fail = [&](int code, std::string_view status, std::string message) {
    s.exit_code = code;
    s.status = std::string(status);
    s.message = std::move(message);
  };

  std::optional<Runner> runner;
  try {
    validate(cfg);
    std::filesystem::create_directories(cfg.out_dir);
    runner.emplace(cfg, s);
    runner->run();
  } catch (const Error& e) {
    fail(exit_code_for(e.kind()), kind_name(e.kind()), e.what());
  } catch (const std::exception& e) {
    fail(1, "internal-error", e.what());
  }

  try {
    if (runner) runner->flush();
    if (std::filesystem::is_directory(cfg.out_dir)) {
      write_constants(cfg.out_dir / "constants.csv", s.values);
      s.files.push_back(cfg.out_dir / "constants.csv");
      s.wall_clock = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      s.files.push_back(cfg.out_dir / "summary.txt");
      write_summary(cfg.out_dir / "summary.txt", s);
    }
  } catch (const std::exception& e) {
    if (s.exit_code == 0) fail(1, "internal-error", fmt::format("writing outputs failed: {}", e.what()));
  }
  s.wall_clock = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return s;
}

void write_summary(const std::filesystem::path& path, const RunSummary& s) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw invalid_argument(fmt::format("cannot write '{}'", path.string()));
  out << "[run]\n";
  out << "mode = " << mode_name(s.mode) << "\n";
  out << "status = " << s.status << "\n";
  out << "exit_code = " << s.exit_code << "\n";
  if (!s.message.empty()) out << "message = " << s.message << "\n";
  out << "wall_clock_seconds = " << format_number(s.wall_clock) << "\n";
  out << "\n[values]\n";
  for (const auto& [k, v] : s.values) out << k << " = " << format_number(v) << "\n";
  if (!s.warnings.empty()) {
    out << "\n[warnings]\n";
    for (const auto& w : s.warnings) out << "warning = " << w << "\n";
  }
  out << "\n[files]\n";
  for (const auto& f : s.files) out << "file = " << f.filename().string() << "\n";
}

}  // namespace semilin::cli
