#include "aaupower/distill.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "aaupower/error.hpp"

namespace aaupower {

// ---------------------------------------------------------------------------
// Grid

std::vector<AAUState> FitGrid::states() const {
  std::vector<AAUState> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.state);
  return out;
}

std::vector<HourlyRecord> FitGrid::records() const {
  std::vector<HourlyRecord> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.record);
  return out;
}

FitGrid build_grid(const AAUCatalogEntry& type, int load_levels) {
  if (type.max_carriers < 1 || type.carriers.empty()) {
    throw InvalidInput("type " + std::to_string(type.type_id) + " has no carriers");
  }
  if (load_levels < 3) throw InvalidInput("load_levels must be >= 3");
  type.validate();

  const std::size_t n = type.carriers.size();
  std::vector<double> levels(load_levels);
  for (int i = 0; i < load_levels; ++i) levels[i] = static_cast<double>(i) / (load_levels - 1);

  // Load combinations: per-carrier product for small types, shared otherwise.
  std::vector<std::vector<double>> combos;
  if (n <= static_cast<std::size_t>(kGridProductCarrierLimit)) {
    std::vector<std::size_t> digit(n, 0);
    while (true) {
      std::vector<double> combo(n);
      for (std::size_t c = 0; c < n; ++c) combo[c] = levels[digit[c]];
      combos.push_back(std::move(combo));
      std::size_t c = 0;
      while (c < n && ++digit[c] == levels.size()) digit[c++] = 0;
      if (c == n) break;
    }
  } else {
    for (double l : levels) combos.emplace_back(n, l);
  }

  FitGrid grid;
  grid.type_id = type.type_id;
  auto add = [&](const std::vector<double>& loads, unsigned active_mask, double channel,
                 double symbol, double dormancy) {
    HourlyRecord r;
    r.type_id = type.type_id;
    r.dormancy_fraction = dormancy;
    r.symbol_fraction = symbol;
    r.channel_fraction = channel;
    // A carrier that never transmits during the hour serves no traffic.
    const bool silent = dormancy > 0.0 || symbol >= 1.0;
    for (std::size_t c = 0; c < n; ++c) {
      const bool on = (active_mask >> c) & 1U;
      const double load = (on && !silent) ? loads[c] : 0.0;
      r.carriers.push_back({type.carriers[c], load, (on || dormancy > 0.0) ? 0.0 : 1.0});
    }
    const auto activity = activity_from_record(r, type);
    if (activity.segments.size() != 1) throw std::logic_error("grid row spans several states");
    grid.rows.push_back({std::move(r), activity.segments.front().state});
  };

  const unsigned all = (1U << n) - 1U;
  for (const auto& loads : combos) {
    add(loads, 0U, 0.0, 0.0, 1.0);  // deep dormancy
    add(loads, 0U, 0.0, 0.0, 0.0);  // every carrier shut down
    for (unsigned mask = 1; mask <= all; ++mask) {
      for (double channel : kGridChannelLevels) add(loads, mask, channel, 0.0, 0.0);
      add(loads, mask, 0.0, 1.0, 0.0);  // symbol shutdown
    }
  }
  return grid;
}

Eigen::MatrixXd grid_features(const FitGrid& grid, const Normalizer& normalizer,
                              const FeatureSchema& schema) {
  const auto records = grid.records();
  return encode_all(records, normalizer, schema);
}

// ---------------------------------------------------------------------------
// Linear parameterization

std::vector<std::string> linear_parameter_names(const AnalyticalParams& topology) {
  std::vector<std::string> names = {"p0", "p_bb"};
  for (std::size_t t = 0; t < topology.num_transceivers(); ++t) {
    names.push_back("d_tran[" + std::to_string(t) + "]");
  }
  names.push_back("d_pa");
  names.push_back("1/eta");
  return names;
}

Eigen::MatrixXd design_matrix(const AnalyticalParams& topology, std::span<const AAUState> states) {
  const Eigen::Index num_tx = static_cast<Eigen::Index>(topology.num_transceivers());
  const Eigen::Index cols = 4 + num_tx;
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(states.size()), cols);
  for (std::size_t i = 0; i < states.size(); ++i) {
    const AAUState& s = states[i];
    if (s.carriers.size() != topology.num_carriers()) {
      throw InvalidInput("state carrier count differs from the model topology");
    }
    const auto row = static_cast<Eigen::Index>(i);
    j(row, 0) = 1.0;
    if (s.dormant) continue;
    j(row, 1) = 1.0;
    if (!s.any_carrier_active()) continue;
    std::vector<bool> on(num_tx, false);
    for (std::size_t c = 0; c < s.carriers.size(); ++c) {
      if (s.carriers[c].active) on[topology.carrier_map[c]] = true;
    }
    for (Eigen::Index t = 0; t < num_tx; ++t) {
      if (on[t]) j(row, 2 + t) = topology.m_available[t];
    }
    if (!s.symbol_shutdown) {
      double tx = 0.0;
      for (const auto& c : s.carriers) tx += transmit_power(c);
      j(row, 2 + num_tx) = s.m_active;
      j(row, 3 + num_tx) = tx;
    }
  }
  return j;
}

Eigen::VectorXd to_linear(const AnalyticalParams& p) {
  const Eigen::Index num_tx = static_cast<Eigen::Index>(p.num_transceivers());
  Eigen::VectorXd beta(4 + num_tx);
  beta[0] = p.p0;
  beta[1] = p.p_bb;
  for (Eigen::Index t = 0; t < num_tx; ++t) beta[2 + t] = p.d_tran[t];
  beta[2 + num_tx] = p.d_pa;
  beta[3 + num_tx] = 1.0 / p.eta;
  return beta;
}

AnalyticalParams from_linear(const AnalyticalParams& topology, const Eigen::VectorXd& beta) {
  const Eigen::Index num_tx = static_cast<Eigen::Index>(topology.num_transceivers());
  if (beta.size() != 4 + num_tx) throw InvalidInput("parameter vector has the wrong length");
  AnalyticalParams p = topology;
  p.p0 = beta[0];
  p.p_bb = beta[1];
  for (Eigen::Index t = 0; t < num_tx; ++t) p.d_tran[t] = beta[2 + t];
  p.d_pa = beta[2 + num_tx];
  p.eta = 1.0 / beta[3 + num_tx];
  return p;
}

namespace {

void check_design(const Eigen::MatrixXd& j, const std::vector<std::string>& names) {
  if (j.rows() < j.cols()) {
    throw SingularSystem("grid has fewer rows (" + std::to_string(j.rows()) + ") than parameters (" +
                         std::to_string(j.cols()) + ")");
  }
  // Column scaling keeps per-chain powers (x64) comparable to the unit columns.
  Eigen::VectorXd scale = j.colwise().norm().transpose();
  for (Eigen::Index c = 0; c < scale.size(); ++c) {
    if (scale[c] == 0.0) {
      throw SingularSystem("parameter " + names[c] + " does not affect any grid row");
    }
  }
  const Eigen::MatrixXd scaled = j * scale.cwiseInverse().asDiagonal();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(scaled, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double cutoff = 1e-10 * sv[0];
  const Eigen::Index last = sv.size() - 1;
  if (sv[last] > cutoff) return;

  const Eigen::VectorXd null = svd.matrixV().col(last);
  std::string joint;
  for (Eigen::Index c = 0; c < null.size(); ++c) {
    if (std::abs(null[c]) > 1e-6) joint += (joint.empty() ? "" : ", ") + names[c];
  }
  throw SingularSystem("rank-deficient design: parameters (" + joint +
                       ") are only jointly identifiable on this grid");
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

void check_identifiability(const AnalyticalParams& topology, std::span<const AAUState> states) {
  check_design(design_matrix(topology, states), linear_parameter_names(topology));
}

// ---------------------------------------------------------------------------
// Fitting

AnalyticalParams initial_guess(const AnalyticalParams& topology, std::span<const AAUState> states,
                               std::span<const double> targets) {
  if (states.size() != targets.size()) throw InvalidInput("states and targets differ in length");
  std::vector<double> dormant, off, symbol_per_chain;
  std::vector<std::pair<double, double>> chain_power;  // (m_active, target) at zero transmit

  for (std::size_t i = 0; i < states.size(); ++i) {
    const AAUState& s = states[i];
    const bool all_on = std::all_of(s.carriers.begin(), s.carriers.end(),
                                    [](const CarrierState& c) { return c.active; });
    if (s.dormant) {
      dormant.push_back(targets[i]);
    } else if (!s.any_carrier_active()) {
      off.push_back(targets[i]);
    } else if (all_on && s.symbol_shutdown) {
      symbol_per_chain.push_back(targets[i]);
    } else if (all_on) {
      double tx = 0.0;
      for (const auto& c : s.carriers) tx += transmit_power(c);
      if (tx == 0.0) chain_power.emplace_back(s.m_active, targets[i]);
    }
  }

  AnalyticalParams p = topology;
  p.p0 = mean_of(dormant);
  p.p_bb = off.empty() ? 0.0 : mean_of(off) - p.p0;
  const double chains = std::accumulate(topology.m_available.begin(), topology.m_available.end(), 0.0);
  const double per_chain =
      symbol_per_chain.empty() ? 0.0 : (mean_of(symbol_per_chain) - p.p0 - p.p_bb) / chains;
  std::fill(p.d_tran.begin(), p.d_tran.end(), per_chain);

  p.d_pa = 0.0;
  if (chain_power.size() >= 2) {
    double mx = 0.0, my = 0.0;
    for (const auto& [m, y] : chain_power) {
      mx += m;
      my += y;
    }
    mx /= chain_power.size();
    my /= chain_power.size();
    double sxy = 0.0, sxx = 0.0;
    for (const auto& [m, y] : chain_power) {
      sxy += (m - mx) * (y - my);
      sxx += (m - mx) * (m - mx);
    }
    if (sxx > 0.0) p.d_pa = sxy / sxx;
  }
  p.eta = 0.3;

  p.p0 = std::max(p.p0, 0.0);
  p.p_bb = std::max(p.p_bb, 0.0);
  for (auto& d : p.d_tran) d = std::max(d, 0.0);
  p.d_pa = std::max(p.d_pa, 0.0);
  return p;
}

FitResult fit_params(std::span<const double> targets, std::span<const AAUState> states,
                     const AnalyticalParams& init, const FitOptions& options) {
  if (targets.size() != states.size()) throw InvalidInput("targets and states differ in length");
  if (!(init.eta > 0.0 && init.eta <= 1.0)) throw InvalidInput("initial eta must lie in (0, 1]");
  if (options.max_iter < 1 || !(options.tol > 0.0)) throw InvalidInput("invalid fit options");

  const auto names = linear_parameter_names(init);
  const Eigen::MatrixXd j = design_matrix(init, states);
  check_design(j, names);

  const Eigen::Index k = j.cols();
  const Eigen::Map<const Eigen::VectorXd> y(targets.data(), static_cast<Eigen::Index>(targets.size()));
  // Bounds: every power >= 0, and 1/eta >= 1 so that eta <= 1.
  Eigen::VectorXd lower = Eigen::VectorXd::Zero(k);
  lower[k - 1] = 1.0;

  const Eigen::MatrixXd normal = j.transpose() * j;
  const double floor = 1e-13 * std::max(1.0, y.norm());

  Eigen::VectorXd beta = to_linear(init).cwiseMax(lower);
  Eigen::VectorXd residual = y - j * beta;
  double norm = residual.norm();

  FitResult result;
  result.parameter_names = names;
  result.parameter_names.back() = "eta";
  result.residual_history.push_back(norm);

  double lambda = options.lambda0;
  bool converged = norm <= floor;
  int iter = 0;
  std::vector<bool> is_free(k, true);
  while (!converged && iter < options.max_iter) {
    ++iter;
    // Bounded step: parameters pinned at a bound whose gradient points
    // outward stay fixed; a step that crosses a bound is projected and the
    // remaining free parameters are re-solved.
    Eigen::VectorXd work = beta;
    Eigen::VectorXd g = j.transpose() * (y - j * work);
    for (Eigen::Index i = 0; i < k; ++i) is_free[i] = !(work[i] <= lower[i] && g[i] <= 0.0);

    Eigen::VectorXd candidate = work;
    while (true) {
      std::vector<Eigen::Index> free;
      for (Eigen::Index i = 0; i < k; ++i) {
        if (is_free[i]) free.push_back(i);
      }
      candidate = work;
      if (free.empty()) break;
      Eigen::MatrixXd a = normal(free, free);
      a.diagonal() += lambda * a.diagonal();
      const Eigen::VectorXd step = a.ldlt().solve(Eigen::VectorXd(g(free)));
      for (std::size_t f = 0; f < free.size(); ++f) candidate[free[f]] += step[f];

      bool crossed = false;
      for (Eigen::Index i : free) {
        if (candidate[i] < lower[i]) {
          work[i] = lower[i];
          is_free[i] = false;
          crossed = true;
        }
      }
      if (!crossed) break;
      g = j.transpose() * (y - j * work);
    }

    const Eigen::VectorXd cand_residual = y - j * candidate;
    const double cand_norm = cand_residual.norm();
    if (cand_norm < norm) {
      const double improvement = (norm - cand_norm) / norm;
      beta = candidate;
      residual = cand_residual;
      norm = cand_norm;
      result.residual_history.push_back(norm);
      lambda = std::max(lambda / options.lambda_factor, 1e-15);
      converged = improvement < options.tol || norm <= floor;
    } else {
      lambda *= options.lambda_factor;
      const double moved = (candidate - beta).norm();
      converged = moved <= 1e-15 * (1.0 + beta.norm()) || lambda > 1e15;
    }
  }
  if (!converged) {
    throw ConvergenceError("fit did not converge within " + std::to_string(options.max_iter) +
                           " iterations (residual norm " + std::to_string(norm) + ")");
  }

  result.params = from_linear(init, beta);
  result.residual_norm = norm;
  result.iterations = iter;
  result.converged = true;

  // Standard errors from the Gauss-Newton covariance of the free parameters.
  result.std_errors.assign(k, 0.0);
  const Eigen::Index dof = j.rows() - k;
  if (dof > 0) {
    std::vector<Eigen::Index> free;
    for (Eigen::Index i = 0; i < k; ++i) {
      if (beta[i] > lower[i]) free.push_back(i);
    }
    if (!free.empty()) {
      const double sigma2 = norm * norm / static_cast<double>(dof);
      const Eigen::MatrixXd sub = normal(free, free);
      const Eigen::MatrixXd cov =
          sigma2 * sub.ldlt().solve(Eigen::MatrixXd::Identity(sub.rows(), sub.cols()));
      for (std::size_t f = 0; f < free.size(); ++f) {
        result.std_errors[free[f]] = std::sqrt(std::max(cov(f, f), 0.0));
      }
    }
    const double theta = beta[k - 1];
    result.std_errors[k - 1] /= theta * theta;  // delta method for eta = 1/theta
  }
  return result;
}

AnalyticalParams closed_form_check(std::span<const AAUState> states, std::span<const double> targets,
                                   const AnalyticalParams& topology) {
  if (states.size() != targets.size()) throw InvalidInput("states and targets differ in length");
  const Eigen::MatrixXd j = design_matrix(topology, states);
  check_design(j, linear_parameter_names(topology));
  const Eigen::Map<const Eigen::VectorXd> y(targets.data(), static_cast<Eigen::Index>(targets.size()));
  const Eigen::MatrixXd normal = j.transpose() * j;
  const Eigen::VectorXd beta = normal.ldlt().solve(j.transpose() * y);
  if (!(beta[beta.size() - 1] > 0.0)) {
    throw SingularSystem("1/eta solved to " + std::to_string(beta[beta.size() - 1]) +
                         ": eta is unconstrained");
  }
  return from_linear(topology, beta);
}

DistillResult distill(const AAUCatalogEntry& type, const MLPWeights& weights,
                      const Normalizer& normalizer, int load_levels, const FitOptions& options,
                      const FeatureSchema& schema) {
  DistillResult out;
  out.grid = build_grid(type, load_levels);
  const auto predictions = predict(weights, grid_features(out.grid, normalizer, schema));
  out.targets = means(predictions);
  const auto states = out.grid.states();
  check_identifiability(type.params, states);
  const auto init = initial_guess(type.params, states, out.targets);
  out.fit = fit_params(out.targets, states, init, options);
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

void to_json(nlohmann::json& j, const FitResult& r) {
  nlohmann::json errors = nlohmann::json::object();
  for (std::size_t i = 0; i < r.parameter_names.size() && i < r.std_errors.size(); ++i) {
    errors[r.parameter_names[i]] = r.std_errors[i];
  }
  j = nlohmann::json{{"params", r.params},
                     {"residual_norm", r.residual_norm},
                     {"iterations", r.iterations},
                     {"converged", r.converged},
                     {"parameter_names", r.parameter_names},
                     {"std_errors", errors},
                     {"residual_history", r.residual_history}};
}

void from_json(const nlohmann::json& j, FitResult& r) {
  j.at("params").get_to(r.params);
  j.at("residual_norm").get_to(r.residual_norm);
  j.at("iterations").get_to(r.iterations);
  j.at("converged").get_to(r.converged);
  j.at("parameter_names").get_to(r.parameter_names);
  r.std_errors.clear();
  for (const auto& name : r.parameter_names) r.std_errors.push_back(j.at("std_errors").at(name).get<double>());
  j.at("residual_history").get_to(r.residual_history);
}

}  // namespace aaupower
