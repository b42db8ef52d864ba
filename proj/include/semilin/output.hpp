// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "semilin/fem.hpp"
#include "semilin/monotone.hpp"
#include "semilin/nonmonotone.hpp"

namespace semilin::cli {

/// Schema tags written on the first line of each CSV file, as
/// "# schema: <tag>". Readers should reject tags they do not know.
inline constexpr std::string_view kTraceSchema = "semilin-trace/1";
inline constexpr std::string_view kFieldsSchema = "semilin-fields/1";
inline constexpr std::string_view kConstantsSchema = "semilin-constants/1";

/// Shortest text that reads back to the same double.
std::string format_number(double v);

/// One iterate of one sequence. inc* and wrong_way are 0 for n = 0.
struct TraceRow {
  std::string sequence;  // "min", "max" or "chain"
  std::size_t n = 0;
  double inc1 = 0, inc2 = 0;
  double res1 = 0, res2 = 0;
  double min1 = 0, max1 = 0, min2 = 0, max2 = 0;
  double wrong_way = 0;
};

std::vector<TraceRow> trace_rows(std::string_view sequence, const monotone::IterationTrace& trace);
std::vector<TraceRow> trace_rows(const nonmonotone::ChainTrace& trace);

/// sequence,n,inc1,inc2,res1,res2,min1,max1,min2,max2,wrong_way
void write_trace(const std::filesystem::path& path, const std::vector<TraceRow>& rows);

using NamedField = std::pair<std::string, fem::FemFunction>;

/// 1D: CSV with columns x, <names...>, one row per node in node order.
void write_fields_csv(const std::filesystem::path& path, const std::vector<NamedField>& fields);
/// 2D: legacy ASCII VTK unstructured grid with one point scalar per field.
void write_fields_vtk(const std::filesystem::path& path, const std::vector<NamedField>& fields);

/// Picks fields.csv (1D) or fields.vtk (2D) inside `dir`; returns the path.
std::filesystem::path write_fields(const std::filesystem::path& dir, const std::vector<NamedField>& fields);

/// key,value rows.
void write_constants(const std::filesystem::path& path, const std::vector<std::pair<std::string, double>>& constants);

/// Reads the u1, u2 columns of a CSV file (first line may be a schema
/// comment) as a pair on `mesh`; rows are nodes in node order.
fem::FunctionPair read_pair_csv(const std::filesystem::path& path, const fem::MeshPtr& mesh);

}  // namespace semilin::cli
