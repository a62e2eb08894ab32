#ifndef AAUPOWER_DISTILL_HPP
#define AAUPOWER_DISTILL_HPP

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "aaupower/estimator.hpp"
#include "aaupower/features.hpp"
#include "aaupower/power_model.hpp"
#include "aaupower/telemetry.hpp"

namespace aaupower {

struct GridRow {
  HourlyRecord record;  // telemetry template; measured_power unused
  AAUState state;       // the single instantaneous state the template describes
};

// Operating points for one AAU type: load levels x carrier subsets x
// {PA on at full/half/quarter MCPAs, symbol shutdown}, plus all-carriers-off
// and deep dormancy rows.
struct FitGrid {
  int type_id = 0;
  std::vector<GridRow> rows;

  std::size_t size() const { return rows.size(); }
  std::vector<AAUState> states() const;
  std::vector<HourlyRecord> records() const;
};

// Channel shutdown levels in the grid, as fractions of MCPAs switched off.
inline const std::vector<double> kGridChannelLevels = {0.0, 0.5, 0.75};

// Types with more carriers than this share one load level across carriers
// instead of taking the per-carrier product.
inline constexpr int kGridProductCarrierLimit = 3;

FitGrid build_grid(const AAUCatalogEntry& type, int load_levels);

Eigen::MatrixXd grid_features(const FitGrid& grid, const Normalizer& normalizer,
                              const FeatureSchema& schema = {});

// The model is linear in beta = (p0, p_bb, d_tran[0..T), d_pa, 1/eta) for a
// fixed state. One row per state.
Eigen::MatrixXd design_matrix(const AnalyticalParams& topology, std::span<const AAUState> states);
std::vector<std::string> linear_parameter_names(const AnalyticalParams& topology);
Eigen::VectorXd to_linear(const AnalyticalParams& params);
AnalyticalParams from_linear(const AnalyticalParams& topology, const Eigen::VectorXd& beta);

// Throws SingularSystem naming the parameters that can only be identified
// jointly when the design matrix is rank deficient.
void check_identifiability(const AnalyticalParams& topology, std::span<const AAUState> states);

struct FitOptions {
  double tol = 1e-10;  // relative residual-norm improvement that ends the fit
  int max_iter = 100;
  double lambda0 = 1e-3;
  double lambda_factor = 10.0;
};

struct FitResult {
  AnalyticalParams params;
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<std::string> parameter_names;  // p0, p_bb, d_tran[t]..., d_pa, eta
  std::vector<double> std_errors;
  std::vector<double> residual_history;  // after each accepted step, starting at init
};

// Mode-isolating starting point: dormancy rows give p0, all-off rows p_bb,
// symbol rows d_tran, channel levels d_pa; eta starts at 0.3.
AnalyticalParams initial_guess(const AnalyticalParams& topology, std::span<const AAUState> states,
                               std::span<const double> targets);

// Damped Gauss-Newton (Levenberg-Marquardt) on sum (target - P(state))^2 in
// the 1/eta parameterization, with projection onto p >= 0 and eta <= 1.
FitResult fit_params(std::span<const double> targets, std::span<const AAUState> states,
                     const AnalyticalParams& init, const FitOptions& options = {});

// Direct solve of the linear normal equations; the oracle for fit_params.
AnalyticalParams closed_form_check(std::span<const AAUState> states, std::span<const double> targets,
                                   const AnalyticalParams& topology);

struct DistillResult {
  FitGrid grid;
  std::vector<double> targets;  // estimator mean per grid row
  FitResult fit;
};

// Query the estimator on the type's grid and fit the analytical model to it.
DistillResult distill(const AAUCatalogEntry& type, const MLPWeights& weights,
                      const Normalizer& normalizer, int load_levels,
                      const FitOptions& options = {}, const FeatureSchema& schema = {});

void to_json(nlohmann::json& j, const FitResult& r);
void from_json(const nlohmann::json& j, FitResult& r);

}  // namespace aaupower

#endif  // AAUPOWER_DISTILL_HPP
