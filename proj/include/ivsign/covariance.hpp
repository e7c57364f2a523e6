#ifndef IVSIGN_COVARIANCE_HPP
#define IVSIGN_COVARIANCE_HPP

#include <optional>
#include <string>
#include <vector>

#include "ivsign/reduced_form.hpp"

namespace ivsign {

/// Malformed input data (schema, parse, or missing-value failures).
class CsvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raw estimation input: outcome, endogenous regressor, instruments,
/// exogenous controls (including any intercept column), optional cluster ids.
struct IvDataset {
  Eigen::VectorXd y;
  Eigen::VectorXd x;
  Eigen::MatrixXd z;         // T x k
  Eigen::MatrixXd controls;  // T x p (p may be 0)
  std::optional<std::vector<int>> cluster_ids;

  Eigen::Index rows() const { return y.size(); }
  Eigen::Index n_instruments() const { return z.cols(); }
};

struct Residualized {
  Eigen::VectorXd y;
  Eigen::VectorXd x;
  Eigen::MatrixXd z;
};

/// OLS output of the reduced-form and first-stage regressions on the
/// residualized instruments.
struct FittedReducedForm {
  Eigen::VectorXd xi1;
  Eigen::VectorXd xi2;
  Eigen::VectorXd residuals_u;
  Eigen::VectorXd residuals_v;
  Eigen::MatrixXd z_gram;  // Z'Z of the residualized instruments
};

/// Projects y, x and every column of z off the span of the controls.
/// Rank-deficient controls raise an error naming the dependent columns.
Residualized residualize(const IvDataset& dataset);

FittedReducedForm reduced_form_fit(const Eigen::VectorXd& y_res, const Eigen::VectorXd& x_res,
                                   const Eigen::MatrixXd& z_res);

/// Heteroskedasticity-robust sandwich estimate of Var((xi1', xi2')'):
/// (I2 (x) (Z'Z)^-1) [sum_t of the per-observation outer blocks] (I2 (x) (Z'Z)^-1).
Eigen::MatrixXd robust_vcov(const Eigen::MatrixXd& z_res, const Eigen::VectorXd& residuals_u,
                            const Eigen::VectorXd& residuals_v);

/// CR0 cluster sandwich: within-cluster score sums replace per-observation
/// scores; no small-sample correction. With one observation per cluster this
/// equals robust_vcov exactly.
Eigen::MatrixXd clustered_vcov(const Eigen::MatrixXd& z_res, const Eigen::VectorXd& residuals_u,
                               const Eigen::VectorXd& residuals_v,
                               const std::vector<int>& cluster_ids);

/// Posterior mean of the first stage under a flat prior on the negative
/// orthant: pi_i - se_i * phi(z_i) / (1 - Phi(z_i)) with z_i = pi_i / se_i.
/// Every output entry is strictly negative.
Eigen::VectorXd sign_calibrate(const Eigen::VectorXd& pi_hat, const Eigen::VectorXd& se);

/// Reads the CSV scheme "y,x,z1..zk[,w1..wp][,cluster]"; header row required,
/// '.' decimal, no thousands separators; missing or unparsable values are
/// reported with their row number. add_intercept prepends a column of ones
/// to the controls.
IvDataset load_iv_csv(const std::string& path, bool add_intercept = true,
                      const std::string& cluster_col = "");

/// Full pipeline: residualize, fit, and estimate Sigma (clustered when the
/// dataset carries cluster ids, robust otherwise).
struct PipelineResult {
  FittedReducedForm fit;
  ReducedFormStats stats;
  double first_stage_f = 0.0;  // Wald statistic xi2' Sigma22^-1 xi2 / k
};
PipelineResult run_pipeline(const IvDataset& dataset);

}  // namespace ivsign

#endif  // IVSIGN_COVARIANCE_HPP
