// SPDX-License-Identifier: Apache-2.0
#include "semilin/output.hpp"

#include <algorithm>
#include <charconv>
#include <fmt/format.h>
#include <fstream>
#include <optional>

#include "semilin/error.hpp"

namespace semilin::cli {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw invalid_argument(fmt::format("cannot write '{}'", path.string()));
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw invalid_argument(fmt::format("write to '{}' failed", path.string()));
}

TraceRow extents(TraceRow row, const fem::FunctionPair& u) {
  row.min1 = u.first.min();
  row.max1 = u.first.max();
  row.min2 = u.second.min();
  row.max2 = u.second.max();
  return row;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto c = line.find(',', pos);
    out.push_back(line.substr(pos, c == std::string_view::npos ? std::string_view::npos : c - pos));
    if (c == std::string_view::npos) break;
    pos = c + 1;
  }
  for (auto& s : out) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  }
  return out;
}

}  // namespace

std::string format_number(double v) { return fmt::format("{}", v); }

std::vector<TraceRow> trace_rows(std::string_view sequence, const monotone::IterationTrace& trace) {
  if (trace.snapshots.size() != trace.residuals.size()) {
    throw invalid_argument("trace rows need the iterate snapshots (keep_snapshots)");
  }
  std::vector<TraceRow> rows;
  for (std::size_t n = 0; n < trace.snapshots.size(); ++n) {
    TraceRow row;
    row.sequence = std::string(sequence);
    row.n = n;
    row.res1 = trace.residuals[n][0];
    row.res2 = trace.residuals[n][1];
    if (n > 0) {
      row.inc1 = trace.increments[n - 1][0];
      row.inc2 = trace.increments[n - 1][1];
      row.wrong_way = trace.monotonicity_violations[n - 1];
    }
    rows.push_back(extents(std::move(row), trace.snapshots[n]));
  }
  return rows;
}

std::vector<TraceRow> trace_rows(const nonmonotone::ChainTrace& trace) {
  std::vector<TraceRow> rows;
  for (std::size_t n = 0; n < trace.chain.size(); ++n) {
    TraceRow row;
    row.sequence = "chain";
    row.n = n;
    row.res1 = trace.residuals[n][0];
    row.res2 = trace.residuals[n][1];
    if (n > 0) {
      row.inc1 = trace.increments[n - 1][0];
      row.inc2 = trace.increments[n - 1][1];
      row.wrong_way = trace.monotonicity_violations[n - 1];
    }
    rows.push_back(extents(std::move(row), trace.chain[n]));
  }
  return rows;
}

void write_trace(const std::filesystem::path& path, const std::vector<TraceRow>& rows) {
  auto out = open_out(path);
  out << "# schema: " << kTraceSchema << "\n";
  out << "sequence,n,inc1,inc2,res1,res2,min1,max1,min2,max2,wrong_way\n";
  for (const auto& r : rows) {
    out << fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", r.sequence, r.n, r.inc1, r.inc2, r.res1, r.res2, r.min1,
                       r.max1, r.min2, r.max2, r.wrong_way);
  }
  finish(out, path);
}

void write_fields_csv(const std::filesystem::path& path, const std::vector<NamedField>& fields) {
  if (fields.empty()) throw invalid_argument("no fields to write");
  const auto& mesh = fields.front().second.mesh();
  auto out = open_out(path);
  out << "# schema: " << kFieldsSchema << "\n";
  out << "x";
  for (const auto& [name, f] : fields) out << ',' << name;
  out << '\n';
  for (std::size_t j = 0; j < mesh.node_count(); ++j) {
    out << format_number(mesh.nodes()[j][0]);
    for (const auto& [name, f] : fields) out << ',' << format_number(f[j]);
    out << '\n';
  }
  finish(out, path);
}

void write_fields_vtk(const std::filesystem::path& path, const std::vector<NamedField>& fields) {
  if (fields.empty()) throw invalid_argument("no fields to write");
  const auto& mesh = fields.front().second.mesh();
  const std::size_t nn = mesh.node_count();
  const std::size_t ne = mesh.element_count();
  const std::size_t per = mesh.nodes_per_element();
  auto out = open_out(path);
  out << "# vtk DataFile Version 3.0\n" << kFieldsSchema << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << nn << " double\n";
  for (const auto& p : mesh.nodes()) out << format_number(p[0]) << ' ' << format_number(p[1]) << " 0\n";
  out << "CELLS " << ne << ' ' << ne * (per + 1) << '\n';
  for (std::size_t e = 0; e < ne; ++e) {
    out << per;
    for (std::size_t v : mesh.element(e)) out << ' ' << v;
    out << '\n';
  }
  out << "CELL_TYPES " << ne << '\n';
  const int cell_type = mesh.dimension() == 2 ? 5 : 3;  // VTK_TRIANGLE, VTK_LINE
  for (std::size_t e = 0; e < ne; ++e) out << cell_type << '\n';
  out << "POINT_DATA " << nn << '\n';
  for (const auto& [name, f] : fields) {
    out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (std::size_t j = 0; j < nn; ++j) out << format_number(f[j]) << '\n';
  }
  finish(out, path);
}

std::filesystem::path write_fields(const std::filesystem::path& dir, const std::vector<NamedField>& fields) {
  if (fields.empty()) throw invalid_argument("no fields to write");
  if (fields.front().second.mesh().dimension() == 1) {
    auto p = dir / "fields.csv";
    write_fields_csv(p, fields);
    return p;
  }
  auto p = dir / "fields.vtk";
  write_fields_vtk(p, fields);
  return p;
}

void write_constants(const std::filesystem::path& path, const std::vector<std::pair<std::string, double>>& constants) {
  auto out = open_out(path);
  out << "# schema: " << kConstantsSchema << "\n";
  out << "key,value\n";
  for (const auto& [k, v] : constants) out << k << ',' << format_number(v) << '\n';
  finish(out, path);
}

fem::FunctionPair read_pair_csv(const std::filesystem::path& path, const fem::MeshPtr& mesh) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error(fmt::format("cannot read pair file '{}'", path.string()));
  std::string line;
  std::size_t line_no = 0;
  std::optional<std::size_t> c1, c2;
  std::size_t columns = 0;
  linalg::Vector u1, u2;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto cells = split(line);
    if (!c1) {
      for (std::size_t k = 0; k < cells.size(); ++k) {
        if (cells[k] == "u1") c1 = k;
        if (cells[k] == "u2") c2 = k;
      }
      if (!c1 || !c2) throw config_error(fmt::format("{}:{}: header needs u1 and u2 columns", path.string(), line_no));
      columns = cells.size();
      continue;
    }
    if (cells.size() != columns) {
      throw config_error(fmt::format("{}:{}: expected {} columns, found {}", path.string(), line_no, columns,
                                     cells.size()));
    }
    for (auto [k, dst] : {std::pair{*c1, &u1}, std::pair{*c2, &u2}}) {
      double v = 0.0;
      const auto s = cells[k];
      const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw config_error(fmt::format("{}:{}: '{}' is not a number", path.string(), line_no, s));
      }
      dst->push_back(v);
    }
  }
  if (u1.size() != mesh->node_count()) {
    throw config_error(fmt::format("'{}' has {} rows but the mesh has {} nodes", path.string(), u1.size(),
                                   mesh->node_count()));
  }
  return {fem::FemFunction(mesh, std::move(u1)), fem::FemFunction(mesh, std::move(u2))};
}

}  // namespace semilin::cli
