#ifndef SVYCAT_CSVIO_HPP
#define SVYCAT_CSVIO_HPP

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "svycat/config.hpp"
#include "svycat/estimate.hpp"
#include "svycat/simulate.hpp"
#include "svycat/spatial.hpp"
#include "svycat/vb.hpp"
#include "svycat/version.hpp"

namespace svycat {

/// Shortest round-trip decimal form, so identical values always print the
/// same bytes.
inline std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// Provenance stamp written as the first line of every output file.
struct MetaInfo {
  std::uint64_t seed = 0;
  std::string config_hash;

  std::string line() const {
    return std::string("# svycat ") + version_string() + " seed=" + std::to_string(seed) +
           " config=" + config_hash + "\n";
  }
};

/// Write via a temporary and rename, so the target is complete or absent.
inline void write_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      out.close();
      std::remove(tmp.c_str());
      throw std::runtime_error("failed writing " + tmp);
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::remove(tmp.c_str());
    throw std::runtime_error("cannot rename " + tmp + " to " + path);
  }
}

inline void write_csv(const std::string& path, const MetaInfo& meta, const std::string& body) {
  write_atomic(path, meta.line() + body);
}

namespace csvio_detail {

inline void append_matrix(std::string& body, const Eigen::MatrixXd& mat) {
  for (Eigen::Index r = 0; r < mat.rows(); ++r) {
    for (Eigen::Index c = 0; c < mat.cols(); ++c) {
      if (c > 0) body += ',';
      body += format_double(mat(r, c));
    }
    body += '\n';
  }
}

inline std::string matrix_csv(const std::vector<std::string>& headers, const Eigen::MatrixXd& mat) {
  std::string body;
  for (std::size_t c = 0; c < headers.size(); ++c) {
    if (c > 0) body += ',';
    body += headers[c];
  }
  body += '\n';
  append_matrix(body, mat);
  return body;
}

inline std::string vector_csv(const std::string& header, const Eigen::VectorXd& vec) {
  std::string body = header + "\n";
  for (Eigen::Index r = 0; r < vec.size(); ++r) {
    body += format_double(vec[r]);
    body += '\n';
  }
  return body;
}

}  // namespace csvio_detail

/// One CSV per parameter block, one row per retained draw, each scalar named
/// in the header (beta_1, eta_t3_c2, ...). suffix lands before the extension,
/// so nominal sub-fits can write beta_cat2.csv and friends.
inline std::vector<std::pair<std::string, std::string>> draw_files(const PosteriorDraws& draws,
                                                                   int T,
                                                                   const std::string& suffix = "") {
  if (T < 1) throw std::invalid_argument("draw_files: T must be >= 1");
  if (draws.eta.cols() % T != 0)
    throw std::invalid_argument("draw_files: eta columns are not a multiple of T");
  std::vector<std::pair<std::string, std::string>> out;
  auto name = [&suffix](const char* stem) { return std::string(stem) + suffix + ".csv"; };

  if (draws.gamma.cols() > 0) {
    std::vector<std::string> headers;
    for (Eigen::Index j = 0; j < draws.gamma.cols(); ++j)
      headers.push_back("gamma_" + std::to_string(j + 1));
    out.emplace_back(name("gamma"), csvio_detail::matrix_csv(headers, draws.gamma));
  }
  if (draws.beta.cols() > 0) {
    std::vector<std::string> headers;
    for (Eigen::Index j = 0; j < draws.beta.cols(); ++j)
      headers.push_back("beta_" + std::to_string(j + 1));
    out.emplace_back(name("beta"), csvio_detail::matrix_csv(headers, draws.beta));
  }
  if (draws.eta.cols() > 0) {
    const Eigen::Index m = draws.eta.cols() / T;
    std::vector<std::string> headers;
    for (int t = 1; t <= T; ++t)
      for (Eigen::Index c = 1; c <= m; ++c)
        headers.push_back("eta_t" + std::to_string(t) + "_c" + std::to_string(c));
    out.emplace_back(name("eta"), csvio_detail::matrix_csv(headers, draws.eta));
  }
  if (draws.phi.size() > 0)
    out.emplace_back(name("phi"), csvio_detail::vector_csv("phi", draws.phi));
  if (draws.sigma2_eta.size() > 0)
    out.emplace_back(name("sigma2_eta"),
                     csvio_detail::vector_csv("sigma2_eta", draws.sigma2_eta));
  if (draws.sigma2_eta1.size() > 0)
    out.emplace_back(name("sigma2_eta1"),
                     csvio_detail::vector_csv("sigma2_eta1", draws.sigma2_eta1));
  return out;
}

/// Convergence path of one coordinate-ascent run.
inline std::string trajectory_csv(const CaviReport& report) {
  std::string body = "iteration,statistic,surrogate\n";
  for (std::size_t i = 0; i < report.trajectory.size(); ++i) {
    body += std::to_string(i + 1);
    body += ',';
    body += format_double(report.trajectory[i]);
    body += ',';
    body += i < report.surrogate.size() ? format_double(report.surrogate[i]) : std::string();
    body += '\n';
  }
  return body;
}

/// Cell estimates under a method tag. Cells with no respondents are dropped;
/// with_flags adds the degenerate-variance marker the direct estimator sets.
inline std::string cells_csv(const std::vector<CellEstimate>& cells, const std::string& method,
                             bool with_flags = false) {
  std::string body = "area,t,category,method,point,sd,lower,upper";
  if (with_flags) body += ",degenerate";
  body += '\n';
  for (const CellEstimate& est : cells) {
    if (est.missing) continue;
    body += std::to_string(est.area);
    body += ',';
    body += std::to_string(est.t);
    body += ',';
    body += std::to_string(est.category);
    body += ',';
    body += method;
    body += ',';
    body += format_double(est.point);
    body += ',';
    body += format_double(est.sd);
    body += ',';
    body += format_double(est.lower);
    body += ',';
    body += format_double(est.upper);
    if (with_flags) {
      body += ',';
      body += est.degenerate ? '1' : '0';
    }
    body += '\n';
  }
  return body;
}

/// Aggregate metric table, one row per estimator.
inline std::string metrics_csv(const SimResult& result) {
  std::string body = "method,mse,abs_bias,coverage,interval_score\n";
  for (const SimMetrics& m : result.per_method) {
    body += m.method;
    body += ',';
    body += format_double(m.mse);
    body += ',';
    body += format_double(m.abs_bias);
    body += ',';
    body += format_double(m.coverage);
    body += ',';
    body += format_double(m.interval_score);
    body += '\n';
  }
  return body;
}

/// Per-week MSE, one row per estimator and week.
inline std::string weekly_csv(const SimResult& result) {
  std::string body = "method,t,mse\n";
  for (const SimMetrics& m : result.per_method) {
    for (std::size_t t = 0; t < m.mse_by_week.size(); ++t) {
      body += m.method;
      body += ',';
      body += std::to_string(t + 1);
      body += ',';
      body += format_double(m.mse_by_week[t]);
      body += '\n';
    }
  }
  return body;
}

/// Per-cell model MSE next to the direct estimator's, with the ratio where
/// the direct value exists and is positive.
inline std::string ratio_csv(const SimResult& result) {
  std::map<std::pair<int, int>, double> direct;
  for (const SimMetrics& m : result.per_method) {
    if (m.method != "Direct") continue;
    for (const CellScore& c : m.cells)
      if (c.n > 0) direct[{c.area, c.t}] = c.mse;
  }
  std::string body = "method,area,t,mse,direct_mse,ratio\n";
  for (const SimMetrics& m : result.per_method) {
    if (m.method == "Direct") continue;
    for (const CellScore& c : m.cells) {
      if (c.n == 0) continue;
      body += m.method;
      body += ',';
      body += std::to_string(c.area);
      body += ',';
      body += std::to_string(c.t);
      body += ',';
      body += format_double(c.mse);
      const auto it = direct.find({c.area, c.t});
      body += ',';
      if (it != direct.end()) body += format_double(it->second);
      body += ',';
      if (it != direct.end() && it->second > 0.0) body += format_double(c.mse / it->second);
      body += '\n';
    }
  }
  return body;
}

/// Spatial basis matrix, one row per area.
inline std::string basis_csv(const BasisMatrix& basis) {
  std::string body = "area";
  for (int c = 1; c <= basis.m(); ++c) body += ",b" + std::to_string(c);
  body += '\n';
  for (Eigen::Index r = 0; r < basis.values.rows(); ++r) {
    body += std::to_string(r + 1);
    for (Eigen::Index c = 0; c < basis.values.cols(); ++c) {
      body += ',';
      body += format_double(basis.values(r, c));
    }
    body += '\n';
  }
  return body;
}

/// Parse a population frame CSV with header area,t,prev,N,x1..xq. prev = 0
/// means no previous response.
inline PopulationFrame read_frame_csv(const std::string& path, int K) {
  if (K < 2) throw std::invalid_argument("read_frame_csv: K must be >= 2");
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_frame_csv: cannot open " + path);

  auto split = [](const std::string& line) {
    std::vector<std::string> f;
    std::string cur;
    std::stringstream ss(line);
    while (std::getline(ss, cur, ',')) f.push_back(cur);
    if (!line.empty() && line.back() == ',') f.push_back("");
    return f;
  };

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("read_frame_csv: empty file " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split(line);
  if (header.size() < 4 || header[0] != "area" || header[1] != "t" || header[2] != "prev" ||
      header[3] != "N")
    throw std::runtime_error("read_frame_csv: header must start with area,t,prev,N");
  const int q = static_cast<int>(header.size()) - 4;
  for (int j = 0; j < q; ++j) {
    if (header[4 + j] != "x" + std::to_string(j + 1))
      throw std::runtime_error("read_frame_csv: covariate columns must be named x1..xq");
  }

  PopulationFrame frame;
  frame.K = K;
  long rowno = 1;
  while (std::getline(in, line)) {
    ++rowno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split(line);
    const std::string where = " at row " + std::to_string(rowno);
    if (static_cast<int>(f.size()) != 4 + q)
      throw std::runtime_error("read_frame_csv: wrong field count" + where);
    PopulationCell cell;
    try {
      cell.area = std::stoi(f[0]);
      cell.t = std::stoi(f[1]);
      cell.prev = std::stoi(f[2]);
      cell.N = std::stol(f[3]);
      cell.x.resize(q);
      for (int j = 0; j < q; ++j) cell.x[j] = std::stod(f[4 + j]);
    } catch (const std::exception&) {
      throw std::runtime_error("read_frame_csv: malformed value" + where);
    }
    if (cell.area < 1) throw std::runtime_error("read_frame_csv: area must be >= 1" + where);
    if (cell.t < 1) throw std::runtime_error("read_frame_csv: t must be >= 1" + where);
    if (cell.prev < 0 || cell.prev > K)
      throw std::runtime_error("read_frame_csv: prev out of 0..K" + where);
    if (cell.N < 0) throw std::runtime_error("read_frame_csv: N must be >= 0" + where);
    frame.cells.push_back(std::move(cell));
  }
  return frame;
}

/// Fallback frame built from the sample itself: one cell per distinct
/// (area, t, prev, x) profile with N as the rounded weight total, so
/// aggregation targets the weighted sample composition.
inline PopulationFrame frame_from_records(const std::vector<UnitRecord>& records, int K) {
  if (K < 2) throw std::invalid_argument("frame_from_records: K must be >= 2");
  std::map<std::tuple<int, int, int, std::vector<double>>, double> cells;
  for (const UnitRecord& r : records) {
    std::vector<double> x(r.x.data(), r.x.data() + r.x.size());
    cells[{r.area, r.t, r.prev, std::move(x)}] += r.w;
  }
  PopulationFrame frame;
  frame.K = K;
  for (const auto& [key, sumw] : cells) {
    PopulationCell cell;
    cell.area = std::get<0>(key);
    cell.t = std::get<1>(key);
    cell.prev = std::get<2>(key);
    const auto& x = std::get<3>(key);
    cell.N = std::max<long>(1, std::lround(sumw));
    cell.x = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
    frame.cells.push_back(std::move(cell));
  }
  return frame;
}

}  // namespace svycat

#endif
