#pragma once

#include "epifeed/common.hpp"
#include "epifeed/logistic.hpp"

#include "json.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace epifeed {

/// Labeled trajectory features. Identical feature vectors are merged into one
/// weighted row (count, positives); the loss is unchanged by the merge.
class LabeledSet {
 public:
  struct Row {
    Vec phi;
    double count = 0.0;
    double positives = 0.0;
  };

  void add(const Vec& phi, int y);
  const std::vector<Row>& rows() const { return rows_; }
  std::int64_t size() const { return size_; }
  int dim() const { return rows_.empty() ? 0 : static_cast<int>(rows_.front().phi.size()); }

 private:
  std::vector<Row> rows_;
  std::unordered_map<std::string, std::size_t> index_;
  std::int64_t size_ = 0;
};

/// L(w) = sum_q [log(1+e^{z_q}) - y_q z_q] + ||w||^2 / 2, z_q = w^T phi_q.
double glm_loss(const LabeledSet& data, const Vec& w);
Vec glm_gradient(const LabeledSet& data, const Vec& w);

struct FitOptions {
  double tol = 1e-10;
  int max_iter = 100;
};

/// Newton's method with Armijo backtracking (c = 1e-4, halving). `dim` is
/// only consulted when the data set is empty. Throws ConvergenceError if the
/// gradient norm is still above tol after max_iter iterations.
Vec fit_w(const LabeledSet& data, int dim, const FitOptions& opts = {},
          const Vec* warm_start = nullptr);

/// Sigma_t = kappa I + sum phi phi^T together with its inverse. The inverse is
/// maintained by Sherman-Morrison and rebuilt from a Cholesky factorization
/// every kRefactorEvery updates.
class DesignMatrix {
 public:
  static constexpr int kRefactorEvery = 512;

  DesignMatrix(int dim, double kappa);

  void update(const Vec& phi);
  const Mat& matrix() const { return sigma_; }
  const Mat& inverse() const { return inverse_; }
  std::int64_t count() const { return count_; }
  double kappa() const { return kappa_; }
  int dim() const { return static_cast<int>(sigma_.rows()); }

  /// ||x||^2_{Sigma^{-1}}
  double inv_norm_sq(const Vec& x) const { return x.dot(inverse_ * x); }
  double inv_norm(const Vec& x) const { return std::sqrt(std::max(0.0, inv_norm_sq(x))); }

  nlohmann::json to_json() const;

 private:
  Mat sigma_;
  Mat inverse_;
  double kappa_;
  std::int64_t count_ = 0;
};

struct ConfidenceParams {
  int d = 1;
  std::int64_t N = 1;
  double delta = 0.05;
  double B = 1.0;
};

struct ConfidenceRadius {
  double rho = 0.0;
  double beta = 0.0;
};

/// rho_t = d log(4 + 4t/d) + 2 log(N/delta) + 1/2,
/// beta_t = (1 + B + rho_t (sqrt(1+B) + rho_t))^{3/2}.
ConfidenceRadius rho_beta(const ConfidenceParams& cp, std::int64_t t);

/// sqrt(kappa) beta ||phi||_{Sigma^{-1}}
double bonus_traj(const DesignMatrix& dm, double beta, double kappa, const Vec& phi);
/// sqrt(kappa) beta sum_h ||phi_h||_{Sigma^{-1}}
double bonus_sd(const DesignMatrix& dm, double beta, double kappa,
                std::span<const Vec> step_features);

/// min{mu(w^T phi) + bonus, 1}
double bar_mu(const Vec& w_hat, const Vec& phi, double bonus);
/// bar_mu + sum_{h<H} xi(s_h, a_h)
inline double tilde_mu(double bar, double xi_sum) { return bar + xi_sum; }

/// |mu(w*^T phi) - mu(w_hat^T phi)| <= sqrt(kappa) beta ||phi||_{Sigma^{-1}}
/// for every listed feature vector.
bool check_confidence_event(const Vec& w_star, const Vec& w_hat, const DesignMatrix& dm,
                            double beta, double kappa, std::span<const Vec> features);

nlohmann::json estimator_snapshot(std::int64_t t, const Vec& w_hat, const DesignMatrix& dm);

}  // namespace epifeed
