// Areal spatial basis: eigendecomposition of the symmetric adjacency matrix,
// keeping eigenvectors with positive eigenvalues in descending order.
#ifndef SVYCAT_SPATIAL_HPP
#define SVYCAT_SPATIAL_HPP

#include <Eigen/Dense>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace svycat {

struct AdjacencyGraph {
  int n_areas = 0;
  std::vector<std::pair<int, int>> edges;  // unordered pairs, 1-based
};

struct BasisMatrix {
  Eigen::MatrixXd values;      // n_areas x m
  Eigen::VectorXd eigenvalues; // descending, all positive
  int m() const { return static_cast<int>(values.cols()); }
};

/// Eigenvectors of the adjacency matrix with eigenvalue above 1e-10,
/// descending, sign-fixed so each column's first nonzero entry is positive.
inline BasisMatrix moran_basis(const AdjacencyGraph& graph, int max_columns = -1) {
  if (graph.n_areas < 1) throw std::invalid_argument("moran_basis: need at least one area");
  const int n = graph.n_areas;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  std::set<std::pair<int, int>> seen;
  for (const auto& [u, v] : graph.edges) {
    if (u < 1 || u > n || v < 1 || v > n)
      throw std::invalid_argument("moran_basis: edge index out of 1..n_areas");
    if (u == v) throw std::invalid_argument("moran_basis: self-loop on area " + std::to_string(u));
    const auto key = std::minmax(u, v);
    if (!seen.insert(key).second)
      throw std::invalid_argument("moran_basis: duplicate edge " + std::to_string(u) + "-" +
                                  std::to_string(v));
    a(u - 1, v - 1) = 1.0;
    a(v - 1, u - 1) = 1.0;
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  if (es.info() != Eigen::Success) throw std::runtime_error("moran_basis: eigensolver failed");

  std::vector<int> keep;
  for (int i = n - 1; i >= 0; --i) {  // ascending in the solver, so walk backwards
    if (es.eigenvalues()[i] > 1e-10) keep.push_back(i);
  }
  int m = static_cast<int>(keep.size());
  if (max_columns >= 0 && max_columns < m) m = max_columns;

  BasisMatrix b;
  b.values.resize(n, m);
  b.eigenvalues.resize(m);
  for (int j = 0; j < m; ++j) {
    Eigen::VectorXd col = es.eigenvectors().col(keep[j]);
    const double scale = col.cwiseAbs().maxCoeff();
    for (int i = 0; i < n; ++i) {
      if (std::fabs(col[i]) > 1e-9 * scale) {
        if (col[i] < 0.0) col = -col;
        break;
      }
    }
    b.values.col(j) = col;
    b.eigenvalues[j] = es.eigenvalues()[keep[j]];
  }
  return b;
}

/// Read an edge list ("a b" per line, 1-based; '#' comments allowed). The area
/// count is the maximum index seen unless a positive hint is given.
inline AdjacencyGraph read_edge_list(const std::string& path, int n_areas_hint = 0) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_edge_list: cannot open " + path);
  AdjacencyGraph g;
  std::string line;
  long rowno = 0;
  while (std::getline(in, line)) {
    ++rowno;
    const auto h = line.find('#');
    if (h != std::string::npos) line = line.substr(0, h);
    std::stringstream ss(line);
    int a, b;
    if (!(ss >> a)) continue;  // blank or comment-only line
    if (!(ss >> b))
      throw std::runtime_error("read_edge_list: malformed line " + std::to_string(rowno) + " in " +
                               path);
    if (a < 1 || b < 1)
      throw std::runtime_error("read_edge_list: indices must be >= 1 at line " +
                               std::to_string(rowno));
    g.edges.emplace_back(a, b);
    g.n_areas = std::max({g.n_areas, a, b});
  }
  if (n_areas_hint > 0) {
    if (n_areas_hint < g.n_areas)
      throw std::runtime_error("read_edge_list: edge index exceeds the given area count");
    g.n_areas = n_areas_hint;
  }
  return g;
}

}  // namespace svycat

#endif
