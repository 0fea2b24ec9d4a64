#include "hqrc/metrics.hpp"

#include <cmath>
#include <sstream>

#include "hqrc/errors.hpp"
#include "json.hpp"

namespace hqrc::metrics {

using Eigen::Index;

double rmse(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth, std::span<const Index> rows,
            kernels::Exec exec) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols()) throw DomainError("rmse shapes differ");
  if (pred.size() == 0) throw DomainError("rmse over an empty selection");
  for (Index r : rows)
    if (r < 0 || r >= pred.rows()) throw DomainError("rmse row index out of range");
  const double n_rows = rows.empty() ? static_cast<double>(pred.rows()) : static_cast<double>(rows.size());
  const double ss = kernels::sum_squared_diff(pred, truth, rows, exec);
  return std::sqrt(ss / (n_rows * static_cast<double>(pred.cols())));
}

double rmnse(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols()) throw DomainError("rmnse shapes differ");
  if (pred.size() == 0) throw DomainError("rmnse over an empty window");
  const Index t = truth.rows();
  double acc = 0.0;
  for (Index m = 0; m < truth.cols(); ++m) {
    const double mu = truth.col(m).mean();
    const double var = (truth.col(m).array() - mu).square().sum() / static_cast<double>(t);
    if (!(var > 0.0)) throw DomainError("rmnse: truth dimension " + std::to_string(m) + " has zero variance");
    acc += (pred.col(m) - truth.col(m)).squaredNorm() / var;
  }
  return std::sqrt(acc / static_cast<double>(truth.size()));
}

double reconstruction_floor(const pod::PodBasis& basis, const Eigen::MatrixXd& truth, std::span<const Index> rows,
                            kernels::Exec exec) {
  const Eigen::MatrixXd coeffs = pod::project_all(basis, truth, exec);
  return rmse(pod::reconstruct_all(basis, coeffs, exec), truth, rows, exec);
}

EnsembleStats ensemble_average(const std::vector<Eigen::MatrixXd>& members) {
  if (members.empty()) throw DomainError("ensemble of zero members");
  const Index r = members.front().rows(), c = members.front().cols();
  EnsembleStats out{Eigen::MatrixXd::Zero(r, c), Eigen::MatrixXd::Zero(r, c)};
  for (const auto& m : members) {
    if (m.rows() != r || m.cols() != c) throw DomainError("ensemble members have different shapes");
    out.mean += m;
  }
  const double n = static_cast<double>(members.size());
  out.mean /= n;
  for (const auto& m : members) out.std.array() += (m - out.mean).array().square();
  out.std = (out.std / n).cwiseSqrt();
  return out;
}

const std::vector<std::string>& MetricReport::csv_columns() {
  static const std::vector<std::string> cols{"rmse_grid", "rmse_region", "rmnse_modal", "recon_floor", "horizon"};
  return cols;
}

std::string MetricReport::csv_row() const {
  std::ostringstream os;
  os.precision(17);
  os << rmse_grid << ',' << rmse_region << ',' << rmnse_modal << ',' << recon_floor << ',' << horizon;
  return os.str();
}

std::string MetricReport::to_json() const {
  nlohmann::json j{{"rmse_grid", rmse_grid},
                   {"rmse_region", rmse_region},
                   {"rmnse_modal", rmnse_modal},
                   {"recon_floor", recon_floor},
                   {"horizon", horizon}};
  return j.dump(2);
}

}  // namespace hqrc::metrics
