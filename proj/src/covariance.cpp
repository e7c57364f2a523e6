#include "ivsign/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "ivsign/normal_special.hpp"

namespace ivsign {

namespace {

constexpr double kRankTolFactor = 1e-10;

// Least-squares coefficients via a rank-revealing QR; throws on rank
// deficiency, reporting the non-pivot columns.
Eigen::MatrixXd solve_full_rank(const Eigen::MatrixXd& design, const Eigen::MatrixXd& rhs,
                                const char* what) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(kRankTolFactor);
  if (qr.rank() < design.cols()) {
    const auto& perm = qr.colsPermutation();
    std::string cols;
    for (Eigen::Index j = qr.rank(); j < design.cols(); ++j) {
      if (!cols.empty()) cols += ", ";
      cols += std::to_string(perm.indices()[j]);
    }
    throw ConditioningError(std::string(what) + ": rank-deficient design; dependent column(s) " +
                            cols);
  }
  return qr.solve(rhs);
}

}  // namespace

Residualized residualize(const IvDataset& dataset) {
  const Eigen::Index t = dataset.rows();
  if (dataset.x.size() != t || dataset.z.rows() != t ||
      (dataset.controls.size() > 0 && dataset.controls.rows() != t)) {
    throw std::invalid_argument("residualize: inconsistent row counts");
  }
  Residualized out{dataset.y, dataset.x, dataset.z};
  const Eigen::Index p = dataset.controls.cols();
  if (p == 0) return out;
  if (t <= p + dataset.z.cols()) {
    throw std::invalid_argument("residualize: need T > k + p");
  }

  Eigen::MatrixXd rhs(t, 2 + dataset.z.cols());
  rhs.col(0) = dataset.y;
  rhs.col(1) = dataset.x;
  rhs.rightCols(dataset.z.cols()) = dataset.z;
  const Eigen::MatrixXd coef = solve_full_rank(dataset.controls, rhs, "residualize.controls");
  const Eigen::MatrixXd res = rhs - dataset.controls * coef;
  out.y = res.col(0);
  out.x = res.col(1);
  out.z = res.rightCols(dataset.z.cols());
  return out;
}

FittedReducedForm reduced_form_fit(const Eigen::VectorXd& y_res, const Eigen::VectorXd& x_res,
                                   const Eigen::MatrixXd& z_res) {
  const Eigen::Index t = y_res.size();
  if (x_res.size() != t || z_res.rows() != t || z_res.cols() < 1) {
    throw std::invalid_argument("reduced_form_fit: inconsistent dimensions");
  }
  Eigen::MatrixXd rhs(t, 2);
  rhs.col(0) = y_res;
  rhs.col(1) = x_res;
  const Eigen::MatrixXd coef = solve_full_rank(z_res, rhs, "reduced_form_fit.z");
  FittedReducedForm fit;
  fit.xi1 = coef.col(0);
  fit.xi2 = coef.col(1);
  fit.residuals_u = y_res - z_res * fit.xi1;
  fit.residuals_v = x_res - z_res * fit.xi2;
  fit.z_gram = z_res.transpose() * z_res;
  return fit;
}

Eigen::MatrixXd robust_vcov(const Eigen::MatrixXd& z_res, const Eigen::VectorXd& residuals_u,
                            const Eigen::VectorXd& residuals_v) {
  const Eigen::Index t = z_res.rows();
  const Eigen::Index k = z_res.cols();
  if (residuals_u.size() != t || residuals_v.size() != t) {
    throw std::invalid_argument("robust_vcov: inconsistent dimensions");
  }
  // Meat blocks sum_t r_t r_t' (x) z_t z_t' for r = (u, v); computed as
  // Z' diag(w) Z with the appropriate residual products.
  Eigen::MatrixXd meat(2 * k, 2 * k);
  const Eigen::ArrayXd u = residuals_u.array();
  const Eigen::ArrayXd v = residuals_v.array();
  auto weighted_gram = [&](const Eigen::ArrayXd& w) {
    return Eigen::MatrixXd(z_res.transpose() * (z_res.array().colwise() * w).matrix());
  };
  meat.topLeftCorner(k, k) = weighted_gram(u * u);
  meat.topRightCorner(k, k) = weighted_gram(u * v);
  meat.bottomLeftCorner(k, k) = meat.topRightCorner(k, k).transpose();
  meat.bottomRightCorner(k, k) = weighted_gram(v * v);

  const Eigen::MatrixXd gram = z_res.transpose() * z_res;
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) {
    throw ConditioningError("robust_vcov: Z'Z not positive definite");
  }
  Eigen::MatrixXd bread = llt.solve(Eigen::MatrixXd::Identity(k, k));
  Eigen::MatrixXd out(2 * k, 2 * k);
  for (int bi = 0; bi < 2; ++bi) {
    for (int bj = 0; bj < 2; ++bj) {
      out.block(bi * k, bj * k, k, k) = bread * meat.block(bi * k, bj * k, k, k) * bread;
    }
  }
  out = 0.5 * (out + out.transpose()).eval();
  return out;
}

Eigen::MatrixXd clustered_vcov(const Eigen::MatrixXd& z_res, const Eigen::VectorXd& residuals_u,
                               const Eigen::VectorXd& residuals_v,
                               const std::vector<int>& cluster_ids) {
  const Eigen::Index t = z_res.rows();
  const Eigen::Index k = z_res.cols();
  if (residuals_u.size() != t || residuals_v.size() != t ||
      static_cast<Eigen::Index>(cluster_ids.size()) != t) {
    throw std::invalid_argument("clustered_vcov: inconsistent dimensions");
  }
  // Within-cluster score sums s_g = sum_{t in g} (u_t z_t', v_t z_t')'.
  std::map<int, Eigen::VectorXd> scores;
  for (Eigen::Index i = 0; i < t; ++i) {
    auto it = scores.try_emplace(cluster_ids[i], Eigen::VectorXd::Zero(2 * k)).first;
    it->second.head(k) += residuals_u[i] * z_res.row(i).transpose();
    it->second.tail(k) += residuals_v[i] * z_res.row(i).transpose();
  }
  if (static_cast<Eigen::Index>(scores.size()) < k + 1) {
    throw ConditioningError("clustered_vcov: fewer than k + 1 distinct clusters");
  }
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(2 * k, 2 * k);
  for (const auto& [id, s] : scores) {
    meat.noalias() += s * s.transpose();
  }
  const Eigen::MatrixXd gram = z_res.transpose() * z_res;
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) {
    throw ConditioningError("clustered_vcov: Z'Z not positive definite");
  }
  Eigen::MatrixXd bread = llt.solve(Eigen::MatrixXd::Identity(k, k));
  Eigen::MatrixXd out(2 * k, 2 * k);
  for (int bi = 0; bi < 2; ++bi) {
    for (int bj = 0; bj < 2; ++bj) {
      out.block(bi * k, bj * k, k, k) = bread * meat.block(bi * k, bj * k, k, k) * bread;
    }
  }
  out = 0.5 * (out + out.transpose()).eval();
  return out;
}

Eigen::VectorXd sign_calibrate(const Eigen::VectorXd& pi_hat, const Eigen::VectorXd& se) {
  if (pi_hat.size() != se.size()) {
    throw std::invalid_argument("sign_calibrate: length mismatch");
  }
  Eigen::VectorXd out(pi_hat.size());
  for (Eigen::Index i = 0; i < pi_hat.size(); ++i) {
    if (!(se[i] > 0.0)) {
      throw std::invalid_argument("sign_calibrate: standard errors must be positive");
    }
    // phi(z)/(1 - Phi(z)) = 1/mills_ratio(z) > z for every z, so the result
    // is strictly negative even for large positive pi_hat.
    out[i] = pi_hat[i] - se[i] / mills_ratio(pi_hat[i] / se[i]);
  }
  return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  for (auto& s : out) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  }
  return out;
}

double parse_value(const std::string& field, std::size_t row, const std::string& col) {
  if (field.empty() || field == "NA" || field == "nan" || field == "NaN") {
    throw CsvError("missing value in column '" + col + "' at data row " + std::to_string(row));
  }
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(field, &pos);
  } catch (const std::exception&) {
    throw CsvError("unparsable value '" + field + "' in column '" + col + "' at data row " +
                   std::to_string(row));
  }
  if (pos != field.size()) {
    throw CsvError("unparsable value '" + field + "' in column '" + col + "' at data row " +
                   std::to_string(row));
  }
  return v;
}

}  // namespace

IvDataset load_iv_csv(const std::string& path, bool add_intercept,
                      const std::string& cluster_col) {
  std::ifstream in(path);
  if (!in) {
    throw CsvError("cannot open '" + path + "'");
  }
  std::string header_line;
  if (!std::getline(in, header_line)) {
    throw CsvError("empty file '" + path + "'");
  }
  if (header_line.size() >= 3 && header_line[0] == '\xEF' && header_line[1] == '\xBB' &&
      header_line[2] == '\xBF') {
    header_line.erase(0, 3);  // UTF-8 BOM
  }
  const std::vector<std::string> header = split_csv_line(header_line);

  int y_idx = -1, x_idx = -1, cluster_idx = -1;
  std::vector<int> z_idx, w_idx;
  std::vector<std::string> z_names, w_names;
  for (std::size_t j = 0; j < header.size(); ++j) {
    const std::string& name = header[j];
    if (name == "y") {
      y_idx = static_cast<int>(j);
    } else if (name == "x") {
      x_idx = static_cast<int>(j);
    } else if (!cluster_col.empty() && name == cluster_col) {
      cluster_idx = static_cast<int>(j);
    } else if (name.rfind('z', 0) == 0 && name.size() > 1 &&
               name.find_first_not_of("0123456789", 1) == std::string::npos) {
      z_idx.push_back(static_cast<int>(j));
      z_names.push_back(name);
    } else if (name.rfind('w', 0) == 0 && name.size() > 1 &&
               name.find_first_not_of("0123456789", 1) == std::string::npos) {
      w_idx.push_back(static_cast<int>(j));
      w_names.push_back(name);
    }
  }
  if (y_idx < 0) throw CsvError("missing required column 'y'");
  if (x_idx < 0) throw CsvError("missing required column 'x'");
  if (z_idx.empty()) throw CsvError("missing required instrument columns 'z1..zk'");
  if (!cluster_col.empty() && cluster_idx < 0) {
    throw CsvError("missing cluster column '" + cluster_col + "'");
  }

  std::vector<double> ys, xs;
  std::vector<std::vector<double>> zs(z_idx.size()), ws(w_idx.size());
  std::vector<int> clusters;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw CsvError("row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                     " fields, header has " + std::to_string(header.size()));
    }
    ys.push_back(parse_value(fields[y_idx], row, "y"));
    xs.push_back(parse_value(fields[x_idx], row, "x"));
    for (std::size_t j = 0; j < z_idx.size(); ++j) {
      zs[j].push_back(parse_value(fields[z_idx[j]], row, z_names[j]));
    }
    for (std::size_t j = 0; j < w_idx.size(); ++j) {
      ws[j].push_back(parse_value(fields[w_idx[j]], row, w_names[j]));
    }
    if (cluster_idx >= 0) {
      clusters.push_back(static_cast<int>(parse_value(fields[cluster_idx], row, cluster_col)));
    }
  }
  const Eigen::Index t = static_cast<Eigen::Index>(ys.size());
  if (t == 0) throw CsvError("no data rows in '" + path + "'");

  IvDataset data;
  data.y = Eigen::Map<const Eigen::VectorXd>(ys.data(), t);
  data.x = Eigen::Map<const Eigen::VectorXd>(xs.data(), t);
  data.z.resize(t, static_cast<Eigen::Index>(zs.size()));
  for (std::size_t j = 0; j < zs.size(); ++j) {
    data.z.col(j) = Eigen::Map<const Eigen::VectorXd>(zs[j].data(), t);
  }
  const Eigen::Index p = static_cast<Eigen::Index>(ws.size()) + (add_intercept ? 1 : 0);
  data.controls.resize(t, p);
  Eigen::Index col = 0;
  if (add_intercept) data.controls.col(col++).setOnes();
  for (std::size_t j = 0; j < ws.size(); ++j) {
    data.controls.col(col++) = Eigen::Map<const Eigen::VectorXd>(ws[j].data(), t);
  }
  if (cluster_idx >= 0) data.cluster_ids = std::move(clusters);
  return data;
}

PipelineResult run_pipeline(const IvDataset& dataset) {
  const Residualized res = residualize(dataset);
  FittedReducedForm fit = reduced_form_fit(res.y, res.x, res.z);
  Eigen::MatrixXd vcov =
      dataset.cluster_ids
          ? clustered_vcov(res.z, fit.residuals_u, fit.residuals_v, *dataset.cluster_ids)
          : robust_vcov(res.z, fit.residuals_u, fit.residuals_v);

  const Eigen::Index k = fit.xi2.size();
  ReducedFormStats stats(fit.xi1, fit.xi2, vcov);
  Eigen::LLT<Eigen::MatrixXd> llt(stats.sigma22());
  if (llt.info() != Eigen::Success) {
    throw ConditioningError("run_pipeline: Sigma22 not positive definite");
  }
  const double wald = fit.xi2.dot(llt.solve(fit.xi2));
  PipelineResult out{std::move(fit), std::move(stats), wald / static_cast<double>(k)};
  return out;
}

}  // namespace ivsign
