#pragma once

// File output: CSV reports with byte-stable bodies (fixed %.12g formatting,
// no timestamps), Matrix Market exports, and mesh/solution dumps. Anything
// time- or machine-dependent goes into the .meta.txt companions only.

#include "lodcut/solver.hpp"

#include <string>
#include <vector>

namespace lodcut {

// Shortest round-trip style formatting used by every CSV body.
std::string fmt_g(double v);

void write_text_file(const std::string& path, const std::string& content);

// Rows are pre-formatted cells; the writer only adds commas and newlines.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

// Coordinate format, 1-based; symmetric matrices store the lower triangle.
void write_matrix_market(const std::string& path, const SpMat& a, bool symmetric);

// Mesh and zone dump: one CSV for coarse cells (class, zone flag) and one
// for the fine triangles of the zone.
void export_hierarchy(const std::string& dir, const MeshHierarchy& hier);

// Solution dump over both parts of the composite field.
void export_solution(const std::string& dir, const MeshHierarchy& hier, const Field& u);

}  // namespace lodcut
