// Microdata ingestion, weight rescaling, and construction of the stick-broken
// augmented design consumed by the samplers. A response y in 1..K becomes
// min(y, K-1) binary rows (sequential one-vs-rest breaks); each row carries a
// cutpoint indicator, negated covariate and basis entries (the linear
// predictor is u'gamma - x'beta - psi'eta), the weighted kappa, and the
// rescaled weight.
#ifndef SVYCAT_DATA_HPP
#define SVYCAT_DATA_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace svycat {

inline constexpr int kPrevNone = 0;

struct UnitRecord {
  std::string unit_id;
  int t = 1;
  int area = 1;
  int y = 1;
  double w = 1.0;
  int prev = kPrevNone;  // 0 = none, else 1..K
  Eigen::VectorXd x;
};

/// Rescale weights so they sum to the sample size: w_tilde = n w / sum(w).
inline Eigen::VectorXd rescale_weights(const Eigen::VectorXd& w) {
  if (w.size() == 0) throw std::invalid_argument("rescale_weights: empty input");
  for (Eigen::Index i = 0; i < w.size(); ++i)
    if (!(w[i] > 0.0)) throw std::invalid_argument("rescale_weights: weights must be positive");
  return w * (static_cast<double>(w.size()) / w.sum());
}

/// Per-time variant: each time group's weights rescale to that group's size.
inline Eigen::VectorXd rescale_weights(const Eigen::VectorXd& w, const std::vector<int>& t) {
  if (w.size() == 0) throw std::invalid_argument("rescale_weights: empty input");
  if (static_cast<std::size_t>(w.size()) != t.size())
    throw std::invalid_argument("rescale_weights: weight/time length mismatch");
  std::map<int, std::pair<double, long>> groups;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (!(w[i] > 0.0)) throw std::invalid_argument("rescale_weights: weights must be positive");
    auto& g = groups[t[i]];
    g.first += w[i];
    g.second += 1;
  }
  Eigen::VectorXd out(w.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    const auto& g = groups[t[i]];
    out[i] = w[i] * (static_cast<double>(g.second) / g.first);
  }
  return out;
}

struct StickRows {
  Eigen::VectorXd y_tilde;     // one-hot length K
  std::vector<int> k;          // emitted break indices, 1..min(y, K-1)
  std::vector<int> outcome;    // 1{y == k}
  std::vector<int> trials;     // always 1 for emitted rows
};

/// Sequential binary factorization of one categorical response.
inline StickRows stick_break(int y, int K) {
  if (K < 2) throw std::invalid_argument("stick_break: K must be at least 2");
  if (y < 1 || y > K) throw std::invalid_argument("stick_break: y out of 1..K");
  StickRows s;
  s.y_tilde = Eigen::VectorXd::Zero(K);
  s.y_tilde[y - 1] = 1.0;
  const int rows = std::min(y, K - 1);
  for (int k = 1; k <= rows; ++k) {
    s.k.push_back(k);
    s.outcome.push_back(y == k ? 1 : 0);
    s.trials.push_back(1);
  }
  return s;
}

/// Total cutpoint count g for K categories over T panel weeks.
inline int cutpoint_count(int K, int T) {
  return (K - 1) + (T - 1) * (K + 1) * (K - 1);
}

/// 1-based slot of the cutpoint for break k at week t given the previous
/// response tag. Layout: the t=1 block (K-1 slots), then for t = 2..T blocks
/// ordered by prev (none, then 1..K), each of K-1 slots.
inline int cutpoint_index(int t, int prev, int k, int K, int T) {
  if (K < 2 || T < 1) throw std::invalid_argument("cutpoint_index: need K >= 2, T >= 1");
  if (t < 1 || t > T) throw std::invalid_argument("cutpoint_index: t out of 1..T");
  if (k < 1 || k > K - 1) throw std::invalid_argument("cutpoint_index: k out of 1..K-1");
  if (prev < kPrevNone || prev > K) throw std::invalid_argument("cutpoint_index: bad prev tag");
  if (t == 1) {
    if (prev != kPrevNone)
      throw std::invalid_argument("cutpoint_index: t=1 cannot have a previous response");
    return k;
  }
  return (K - 1) + (t - 2) * (K + 1) * (K - 1) + prev * (K - 1) + k;
}

struct StickBrokenDesign {
  int K = 0;
  int T = 1;
  int g = 0;  // cutpoint count; 0 for the binary/nominal sub-designs
  int q = 0;
  int m = 0;
  bool weighted = true;

  std::vector<int> u_index;        // 0-based cutpoint column, -1 when g == 0
  Eigen::MatrixXd X;               // rows x q, sign convention already applied
  Eigen::MatrixXd Psi;             // rows x m, sign convention already applied
  Eigen::VectorXd kappa;
  Eigen::VectorXd trials;
  Eigen::VectorXd wt;              // rescaled weight of the row's unit-time
  Eigen::VectorXd shape;           // PG shape: wt .* trials (1 if unweighted)
  std::vector<int> row_t;          // week of each row
  std::vector<int> row_unit_time;  // distinct (unit, t) id of each row

  Eigen::Index n_rows() const { return kappa.size(); }
  int n_unit_times = 0;
};

namespace data_detail {

inline void validate_records(const std::vector<UnitRecord>& records, const Eigen::MatrixXd& basis,
                             int K, int T) {
  const Eigen::Index q = records.empty() ? 0 : records.front().x.size();
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.x.size() != q)
      throw std::invalid_argument("build_design: covariate length mismatch at record " +
                                  std::to_string(i + 1));
    if (r.area < 1 || r.area > basis.rows())
      throw std::invalid_argument("build_design: unknown area " + std::to_string(r.area) +
                                  " at record " + std::to_string(i + 1));
    if (r.y < 1 || r.y > K)
      throw std::invalid_argument("build_design: y out of range at record " +
                                  std::to_string(i + 1));
    if (r.t < 1 || r.t > T)
      throw std::invalid_argument("build_design: t out of range at record " +
                                  std::to_string(i + 1));
    if (r.prev < kPrevNone || r.prev > K)
      throw std::invalid_argument("build_design: bad prev tag at record " + std::to_string(i + 1));
    if (T == 1 && r.prev != kPrevNone)
      throw std::invalid_argument("build_design: cross-sectional records cannot carry prev");
    if (!(r.w > 0.0))
      throw std::invalid_argument("build_design: nonpositive weight at record " +
                                  std::to_string(i + 1));
  }
}

inline Eigen::VectorXd unit_time_weights(const std::vector<UnitRecord>& records, bool weighted) {
  const auto n = static_cast<Eigen::Index>(records.size());
  if (!weighted || n == 0) return Eigen::VectorXd::Ones(n);
  Eigen::VectorXd w(n);
  std::vector<int> t(records.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    w[i] = records[i].w;
    t[i] = records[i].t;
  }
  return rescale_weights(w, t);
}

}  // namespace data_detail

/// Ordinal stick-broken design over all records. T = 1 builds the
/// cross-sectional layout (g = K-1); larger T the longitudinal one.
inline StickBrokenDesign build_design(const std::vector<UnitRecord>& records,
                                      const Eigen::MatrixXd& basis, bool weighted, int K, int T) {
  if (K < 2 || T < 1) throw std::invalid_argument("build_design: need K >= 2, T >= 1");
  data_detail::validate_records(records, basis, K, T);
  const Eigen::VectorXd wts = data_detail::unit_time_weights(records, weighted);

  StickBrokenDesign d;
  d.K = K;
  d.T = T;
  d.g = cutpoint_count(K, T);
  d.q = records.empty() ? 0 : static_cast<int>(records.front().x.size());
  d.m = static_cast<int>(basis.cols());
  d.weighted = weighted;
  d.n_unit_times = static_cast<int>(records.size());

  Eigen::Index total = 0;
  for (const auto& r : records) total += std::min(r.y, K - 1);
  d.u_index.resize(total);
  d.X.resize(total, d.q);
  d.Psi.resize(total, d.m);
  d.kappa.resize(total);
  d.trials.resize(total);
  d.wt.resize(total);
  d.shape.resize(total);
  d.row_t.resize(total);
  d.row_unit_time.resize(total);

  Eigen::Index row = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const double w = wts[static_cast<Eigen::Index>(i)];
    const auto s = stick_break(r.y, K);
    for (std::size_t j = 0; j < s.k.size(); ++j) {
      d.u_index[row] = cutpoint_index(r.t, r.prev, s.k[j], K, T) - 1;
      d.X.row(row) = -r.x.transpose();
      d.Psi.row(row) = -basis.row(r.area - 1);
      const double out = static_cast<double>(s.outcome[j]);
      d.kappa[row] = weighted ? w * (out - 0.5) : out - 0.5;
      d.trials[row] = 1.0;
      d.wt[row] = w;
      d.shape[row] = weighted ? w : 1.0;
      d.row_t[row] = r.t;
      d.row_unit_time[row] = static_cast<int>(i);
      ++row;
    }
  }
  return d;
}

/// Per-category binary sub-designs for the nominal model: category k keeps the
/// rows still in play at break k (y >= k), outcome 1{y = k}, positive signs,
/// no cutpoint block.
inline std::vector<StickBrokenDesign> build_nominal_designs(const std::vector<UnitRecord>& records,
                                                            const Eigen::MatrixXd& basis,
                                                            bool weighted, int K, int T) {
  if (K < 2 || T < 1) throw std::invalid_argument("build_nominal_designs: need K >= 2, T >= 1");
  data_detail::validate_records(records, basis, K, T);
  const Eigen::VectorXd wts = data_detail::unit_time_weights(records, weighted);
  const int q = records.empty() ? 0 : static_cast<int>(records.front().x.size());

  std::vector<StickBrokenDesign> out;
  out.reserve(K - 1);
  for (int k = 1; k <= K - 1; ++k) {
    StickBrokenDesign d;
    d.K = K;
    d.T = T;
    d.g = 0;
    d.q = q;
    d.m = static_cast<int>(basis.cols());
    d.weighted = weighted;

    Eigen::Index total = 0;
    for (const auto& r : records)
      if (r.y >= k) ++total;
    d.u_index.assign(total, -1);
    d.X.resize(total, d.q);
    d.Psi.resize(total, d.m);
    d.kappa.resize(total);
    d.trials.resize(total);
    d.wt.resize(total);
    d.shape.resize(total);
    d.row_t.resize(total);
    d.row_unit_time.resize(total);

    Eigen::Index row = 0;
    int n_ut = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
      const auto& r = records[i];
      if (r.y < k) continue;
      const double w = wts[static_cast<Eigen::Index>(i)];
      const double outk = r.y == k ? 1.0 : 0.0;
      d.X.row(row) = r.x.transpose();
      d.Psi.row(row) = basis.row(r.area - 1);
      d.kappa[row] = weighted ? w * (outk - 0.5) : outk - 0.5;
      d.trials[row] = 1.0;
      d.wt[row] = w;
      d.shape[row] = weighted ? w : 1.0;
      d.row_t[row] = r.t;
      d.row_unit_time[row] = n_ut++;
      ++row;
    }
    d.n_unit_times = n_ut;
    out.push_back(std::move(d));
  }
  return out;
}

/// Copy the records of week t as a standalone cross-sectional dataset.
inline std::vector<UnitRecord> slice_week(const std::vector<UnitRecord>& records, int t) {
  std::vector<UnitRecord> out;
  for (const auto& r : records) {
    if (r.t != t) continue;
    UnitRecord c = r;
    c.t = 1;
    c.prev = kPrevNone;
    out.push_back(std::move(c));
  }
  return out;
}

/// Parse microdata CSV with header unit_id,t,area,y,w,x1..xq. The previous
/// response is derived by joining each unit's t-1 row.
inline std::vector<UnitRecord> ingest_csv(const std::string& path, int K) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("ingest_csv: cannot open " + path);

  auto split = [](const std::string& line) {
    std::vector<std::string> f;
    std::string cur;
    std::stringstream ss(line);
    while (std::getline(ss, cur, ',')) f.push_back(cur);
    if (!line.empty() && line.back() == ',') f.push_back("");
    return f;
  };

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("ingest_csv: empty file " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split(line);
  if (header.size() < 5 || header[0] != "unit_id" || header[1] != "t" || header[2] != "area" ||
      header[3] != "y" || header[4] != "w")
    throw std::runtime_error("ingest_csv: header must start with unit_id,t,area,y,w");
  const int q = static_cast<int>(header.size()) - 5;
  for (int j = 0; j < q; ++j) {
    if (header[5 + j] != "x" + std::to_string(j + 1))
      throw std::runtime_error("ingest_csv: covariate columns must be named x1..xq");
  }

  std::vector<UnitRecord> records;
  std::map<std::pair<std::string, int>, int> seen;  // (unit, t) -> y
  long rowno = 1;
  while (std::getline(in, line)) {
    ++rowno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split(line);
    const std::string where = " at row " + std::to_string(rowno);
    if (static_cast<int>(f.size()) != 5 + q)
      throw std::runtime_error("ingest_csv: wrong field count" + where);
    UnitRecord r;
    try {
      r.unit_id = f[0];
      r.t = std::stoi(f[1]);
      r.area = std::stoi(f[2]);
      r.y = std::stoi(f[3]);
      r.w = std::stod(f[4]);
      r.x.resize(q);
      for (int j = 0; j < q; ++j) r.x[j] = std::stod(f[5 + j]);
    } catch (const std::exception&) {
      throw std::runtime_error("ingest_csv: malformed value" + where);
    }
    if (r.unit_id.empty()) throw std::runtime_error("ingest_csv: empty unit_id" + where);
    if (r.t < 1) throw std::runtime_error("ingest_csv: t must be >= 1" + where);
    if (r.area < 1) throw std::runtime_error("ingest_csv: area must be >= 1" + where);
    if (r.y < 1 || r.y > K)
      throw std::runtime_error("ingest_csv: y out of 1..K" + where);
    if (!(r.w > 0.0)) throw std::runtime_error("ingest_csv: w must be positive" + where);
    if (!seen.emplace(std::make_pair(r.unit_id, r.t), r.y).second)
      throw std::runtime_error("ingest_csv: duplicate (unit_id, t)" + where);
    records.push_back(std::move(r));
  }

  // Panel validation: consecutive weeks, at most 3 per unit.
  std::unordered_map<std::string, std::vector<int>> spells;
  for (const auto& r : records) spells[r.unit_id].push_back(r.t);
  for (auto& [unit, ts] : spells) {
    std::sort(ts.begin(), ts.end());
    if (ts.size() > 3)
      throw std::runtime_error("ingest_csv: unit " + unit + " observed more than 3 weeks");
    if (ts.back() - ts.front() + 1 != static_cast<int>(ts.size()))
      throw std::runtime_error("ingest_csv: unit " + unit + " has non-consecutive weeks");
  }

  for (auto& r : records) {
    const auto it = seen.find(std::make_pair(r.unit_id, r.t - 1));
    r.prev = it == seen.end() ? kPrevNone : it->second;
  }
  return records;
}

}  // namespace svycat

#endif
