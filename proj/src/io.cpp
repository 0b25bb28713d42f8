#include "lodcut/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

namespace lodcut {

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw SolverFailure("cannot open " + path + " for writing");
  out << content;
  if (!out) throw SolverFailure("failed writing " + path);
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::string body;
  for (size_t i = 0; i < header.size(); ++i) {
    if (i) body += ',';
    body += header[i];
  }
  body += '\n';
  for (const auto& row : rows) {
    if (row.size() != header.size()) throw DimensionMismatch("csv row width mismatch");
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) body += ',';
      body += row[i];
    }
    body += '\n';
  }
  write_text_file(path, body);
}

void write_matrix_market(const std::string& path, const SpMat& a, bool symmetric) {
  std::string body = "%%MatrixMarket matrix coordinate real ";
  body += symmetric ? "symmetric" : "general";
  body += '\n';
  std::vector<std::string> lines;
  long long nnz = 0;
  char buf[96];
  for (Eigen::Index j = 0; j < a.outerSize(); ++j)
    for (SpMat::InnerIterator it(a, j); it; ++it) {
      if (symmetric && it.row() < it.col()) continue;
      std::snprintf(buf, sizeof(buf), "%lld %lld %.17g\n",
                    static_cast<long long>(it.row() + 1), static_cast<long long>(it.col() + 1),
                    it.value());
      lines.push_back(buf);
      ++nnz;
    }
  std::snprintf(buf, sizeof(buf), "%lld %lld %lld\n", static_cast<long long>(a.rows()),
                static_cast<long long>(a.cols()), nnz);
  body += buf;
  for (const std::string& l : lines) body += l;
  write_text_file(path, body);
}

void export_hierarchy(const std::string& dir, const MeshHierarchy& hier) {
  std::vector<std::vector<std::string>> cells;
  for (int t = 0; t < hier.n_coarse_tris(); ++t) {
    const auto c = hier.coarse_tri_corners(t);
    const char* cls = hier.coarse_class[static_cast<size_t>(t)] == CellClass::Interior ? "interior"
                      : hier.coarse_class[static_cast<size_t>(t)] == CellClass::Cut    ? "cut"
                                                                                       : "outside";
    cells.push_back({std::to_string(t), cls,
                     std::to_string(static_cast<int>(hier.coarse_zone[static_cast<size_t>(t)])),
                     fmt_g(c[0].x), fmt_g(c[0].y), fmt_g(c[1].x), fmt_g(c[1].y), fmt_g(c[2].x),
                     fmt_g(c[2].y)});
  }
  write_csv(dir + "/coarse_cells.csv",
            {"tri", "class", "zone", "x0", "y0", "x1", "y1", "x2", "y2"}, cells);

  std::vector<std::vector<std::string>> fine;
  for (int t : hier.zone_fine_tris) {
    const auto c = hier.fine_tri_corners(t);
    fine.push_back({std::to_string(t), fmt_g(c[0].x), fmt_g(c[0].y), fmt_g(c[1].x), fmt_g(c[1].y),
                    fmt_g(c[2].x), fmt_g(c[2].y)});
  }
  write_csv(dir + "/zone_fine_tris.csv", {"tri", "x0", "y0", "x1", "y1", "x2", "y2"}, fine);
}

void export_solution(const std::string& dir, const MeshHierarchy& hier, const Field& u) {
  std::vector<std::vector<std::string>> coarse;
  for (int i = 0; i < hier.n_coarse_nodes(); ++i) {
    const Vec2 p = hier.coarse_grid_pos(hier.coarse_node_grid[static_cast<size_t>(i)]);
    coarse.push_back({fmt_g(p.x), fmt_g(p.y), fmt_g(u.c(i))});
  }
  write_csv(dir + "/solution_coarse.csv", {"x", "y", "value"}, coarse);

  std::vector<std::vector<std::string>> fine;
  for (int i = 0; i < hier.n_fine_nodes(); ++i) {
    const Vec2 p = hier.fine_grid_pos(hier.fine_node_grid[static_cast<size_t>(i)]);
    fine.push_back({fmt_g(p.x), fmt_g(p.y), fmt_g(u.w(i))});
  }
  write_csv(dir + "/solution_fine.csv", {"x", "y", "value"}, fine);
}

}  // namespace lodcut
