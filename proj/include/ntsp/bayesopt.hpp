/*******************************************************************************
 * Copyright (c) 2026 The ntsp contributors.                                   *
 * All rights reserved.                                                        *
 *                                                                             *
 * This source code and the accompanying materials are made available under    *
 * the terms of the Apache License 2.0 which accompanies this distribution.    *
 ******************************************************************************/
#pragma once

// Gaussian-process Bayesian optimisation on a box. Maximises the objective.
//
// The GP standardises the observed values internally (zero mean, unit
// variance prior in standardised units); every public quantity (posterior
// mean and standard deviation, acquisition constants kappa and xi) is in the
// raw units of the objective.

#include "ntsp/error.hpp"
#include "ntsp/random.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace ntsp {

struct Bounds {
  std::vector<double> lo, hi;

  static Bounds uniform(std::size_t dim, double lo, double hi) {
    return Bounds{std::vector<double>(dim, lo), std::vector<double>(dim, hi)};
  }
  std::size_t dim() const { return lo.size(); }
  bool contains(const std::vector<double> &x, double tol = 0) const {
    if (x.size() != dim()) return false;
    for (std::size_t j = 0; j < dim(); ++j)
      if (!(x[j] >= lo[j] - tol && x[j] <= hi[j] + tol)) return false;
    return true;
  }
  void clamp(std::vector<double> &x) const {
    for (std::size_t j = 0; j < dim(); ++j) x[j] = std::clamp(x[j], lo[j], hi[j]);
  }
  void validate() const {
    if (lo.size() != hi.size() || lo.empty()) throw Error(ErrorKind::length_mismatch, "bad bounds");
    for (std::size_t j = 0; j < dim(); ++j)
      if (!(lo[j] < hi[j])) throw Error(ErrorKind::invalid_value, "bounds need lo < hi");
  }
};

inline constexpr double duplicate_distance = 1e-10;

/// Observed points and values. Points closer than 1e-10 to an earlier point
/// are merged into it and their values averaged.
class ObservationSet {
public:
  explicit ObservationSet(Bounds bounds) : bounds_(std::move(bounds)) { bounds_.validate(); }

  void add(const std::vector<double> &x, double y) {
    if (!bounds_.contains(x, 1e-12)) throw Error(ErrorKind::invalid_value, "observation outside bounds");
    if (!std::isfinite(y)) throw Error(ErrorKind::invalid_value, "observation value must be finite");
    for (std::size_t i = 0; i < points_.size(); ++i) {
      double d2 = 0;
      for (std::size_t j = 0; j < x.size(); ++j) d2 += (x[j] - points_[i][j]) * (x[j] - points_[i][j]);
      if (std::sqrt(d2) < duplicate_distance) {
        ++multiplicity_[i];
        values_[i] += (y - values_[i]) / static_cast<double>(multiplicity_[i]);
        return;
      }
    }
    points_.push_back(x);
    values_.push_back(y);
    multiplicity_.push_back(1);
  }

  std::size_t size() const { return points_.size(); }
  std::size_t dim() const { return bounds_.dim(); }
  const Bounds &bounds() const { return bounds_; }
  const std::vector<std::vector<double>> &points() const { return points_; }
  const std::vector<double> &values() const { return values_; }

  double best_value() const {
    if (values_.empty()) throw Error(ErrorKind::invalid_value, "no observations");
    return *std::max_element(values_.begin(), values_.end());
  }

private:
  Bounds bounds_;
  std::vector<std::vector<double>> points_;
  std::vector<double> values_;
  std::vector<std::size_t> multiplicity_;
};

enum class KernelKind { squared_exponential, matern52 };

/// Isotropic stationary kernel hyperparameters, in standardised output units.
struct GpHyperparameters {
  KernelKind kernel = KernelKind::squared_exponential;
  double length_scale = 1.0;
  double signal_variance = 1.0;
  double noise_variance = 1e-6;
};

inline constexpr double noise_variance_floor = 1e-6;

struct Posterior {
  double mean = 0;
  double variance = 0;
  double stddev() const { return std::sqrt(std::max(0.0, variance)); }
};

class GpModel {
public:
  GpModel() = default;

  /// Condition on every observation with fixed hyperparameters.
  static GpModel fit(const ObservationSet &obs, GpHyperparameters hyper) {
    if (obs.size() == 0) throw Error(ErrorKind::invalid_value, "GP fit needs at least one observation");
    GpModel m;
    m.bounds_ = obs.bounds();
    m.hyper_ = hyper;
    m.hyper_.noise_variance = std::max(hyper.noise_variance, noise_variance_floor);
    const auto n = obs.size(), d = obs.dim();
    m.x_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) m.x_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = obs.points()[i][j];
    const auto &v = obs.values();
    double mean = 0;
    for (double y : v) mean += y;
    mean /= static_cast<double>(n);
    double var = 0;
    for (double y : v) var += (y - mean) * (y - mean);
    var = n > 1 ? var / static_cast<double>(n - 1) : 0.0;
    m.y_mean_ = mean;
    m.y_scale_ = var > 1e-24 ? std::sqrt(var) : 1.0;
    m.y_.resize(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) m.y_(static_cast<Eigen::Index>(i)) = (v[i] - mean) / m.y_scale_;
    m.factorize();
    return m;
  }

  /// Log marginal likelihood of the standardised values.
  double log_marginal_likelihood() const {
    const double n = static_cast<double>(y_.size());
    double logdet = 0;
    const Eigen::MatrixXd l = llt_.matrixL();
    for (Eigen::Index i = 0; i < l.rows(); ++i) logdet += std::log(l(i, i));
    return -0.5 * y_.dot(alpha_) - logdet - 0.5 * n * std::log(2 * std::numbers::pi);
  }

  /// Coordinate-wise golden-section ascent of the marginal likelihood in
  /// log-hyperparameter space.
  static GpModel fit_optimized(const ObservationSet &obs, GpHyperparameters start, int sweeps = 2) {
    const double d = static_cast<double>(obs.dim());
    double span = 0;
    for (std::size_t j = 0; j < obs.dim(); ++j) span += std::pow(obs.bounds().hi[j] - obs.bounds().lo[j], 2);
    span = std::sqrt(span);
    const double lo[3] = {std::log(1e-2 * span / std::sqrt(d)), std::log(1e-2), std::log(noise_variance_floor)};
    const double hi[3] = {std::log(2.0 * span), std::log(1e2), std::log(1.0)};
    double p[3] = {std::log(start.length_scale), std::log(start.signal_variance),
                   std::log(std::max(start.noise_variance, noise_variance_floor))};
    for (int k = 0; k < 3; ++k) p[k] = std::clamp(p[k], lo[k], hi[k]);
    auto make = [&](const double *q) {
      return GpHyperparameters{start.kernel, std::exp(q[0]), std::exp(q[1]), std::exp(q[2])};
    };
    auto score = [&](const double *q) {
      try {
        return fit(obs, make(q)).log_marginal_likelihood();
      } catch (const Error &) {
        return -std::numeric_limits<double>::infinity();
      }
    };
    const double g = (std::sqrt(5.0) - 1) / 2;
    for (int s = 0; s < sweeps; ++s)
      for (int k = 0; k < 3; ++k) {
        double a = lo[k], b = hi[k];
        double q[3] = {p[0], p[1], p[2]};
        auto eval = [&](double t) {
          q[k] = t;
          return score(q);
        };
        double c = b - g * (b - a), e = a + g * (b - a);
        double fc = eval(c), fe = eval(e);
        for (int it = 0; it < 18; ++it) {
          if (fc >= fe) {
            b = e;
            e = c;
            fe = fc;
            c = b - g * (b - a);
            fc = eval(c);
          } else {
            a = c;
            c = e;
            fc = fe;
            e = a + g * (b - a);
            fe = eval(e);
          }
        }
        const double cand = fc >= fe ? c : e;
        const double f_cand = std::max(fc, fe);
        if (f_cand > eval(p[k])) p[k] = cand;
      }
    return fit(obs, make(p));
  }

  Posterior posterior(const std::vector<double> &x) const {
    check_point(x);
    return posterior_unchecked(x, nullptr, nullptr);
  }

  /// Posterior with gradients of mean and variance (raw units).
  Posterior posterior_with_gradient(const std::vector<double> &x, std::vector<double> &dmean,
                                    std::vector<double> &dvar) const {
    check_point(x);
    return posterior_unchecked(x, &dmean, &dvar);
  }

  const GpHyperparameters &hyperparameters() const { return hyper_; }
  const Bounds &bounds() const { return bounds_; }
  std::size_t size() const { return static_cast<std::size_t>(y_.size()); }
  std::size_t dim() const { return static_cast<std::size_t>(x_.cols()); }

private:
  void check_point(const std::vector<double> &x) const {
    if (x.size() != dim()) throw Error(ErrorKind::length_mismatch, "posterior point has wrong dimension");
    if (!bounds_.contains(x, 1e-12)) throw Error(ErrorKind::invalid_value, "posterior point outside bounds");
  }

  double kernel_sq(double d2) const { return kernel_and_slope(d2).first; }

  /// k(r) and g(r) with dk/dx = g(r) * (x - x_i).
  std::pair<double, double> kernel_and_slope(double d2) const {
    const double l = hyper_.length_scale, sv = hyper_.signal_variance;
    if (hyper_.kernel == KernelKind::squared_exponential) {
      const double k = sv * std::exp(-0.5 * d2 / (l * l));
      return {k, -k / (l * l)};
    }
    const double a = std::sqrt(5.0 * d2) / l, e = std::exp(-a);
    return {sv * (1 + a + a * a / 3) * e, -sv * (5.0 / (3 * l * l)) * (1 + a) * e};
  }

  void factorize() {
    const auto n = x_.rows();
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j <= i; ++j) {
        const double v = kernel_sq((x_.row(i) - x_.row(j)).squaredNorm());
        k(i, j) = v;
        k(j, i) = v;
      }
    double jitter = hyper_.noise_variance;
    for (int attempt = 0; attempt < 8; ++attempt) {
      Eigen::MatrixXd kk = k;
      kk.diagonal().array() += jitter;
      llt_.compute(kk);
      if (llt_.info() == Eigen::Success) {
        alpha_ = llt_.solve(y_);
        return;
      }
      jitter *= 10;
    }
    throw Error(ErrorKind::degenerate, "kernel matrix factorisation failed");
  }

  Posterior posterior_unchecked(const std::vector<double> &x, std::vector<double> *dmean,
                                std::vector<double> *dvar) const {
    const auto n = x_.rows(), d = x_.cols();
    const Eigen::Map<const Eigen::RowVectorXd> xs(x.data(), d);
    Eigen::VectorXd ks(n);
    Eigen::VectorXd slope(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto [k, g] = kernel_and_slope((x_.row(i) - xs).squaredNorm());
      ks(i) = k;
      slope(i) = g;
    }
    const double mean_std = ks.dot(alpha_);
    const Eigen::VectorXd v = llt_.matrixL().solve(ks);
    const double var_std = std::max(0.0, hyper_.signal_variance - v.squaredNorm());
    Posterior p{y_mean_ + y_scale_ * mean_std, y_scale_ * y_scale_ * var_std};
    if (dmean && dvar) {
      const Eigen::VectorXd w = llt_.matrixU().solve(v); // K^{-1} k_*
      dmean->assign(static_cast<std::size_t>(d), 0.0);
      dvar->assign(static_cast<std::size_t>(d), 0.0);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double cm = slope(i) * alpha_(i);
        const double cv = slope(i) * w(i);
        for (Eigen::Index j = 0; j < d; ++j) {
          const double diff = xs(j) - x_(i, j);
          (*dmean)[static_cast<std::size_t>(j)] += cm * diff;
          (*dvar)[static_cast<std::size_t>(j)] += cv * diff;
        }
      }
      for (Eigen::Index j = 0; j < d; ++j) {
        (*dmean)[static_cast<std::size_t>(j)] *= y_scale_;
        (*dvar)[static_cast<std::size_t>(j)] *= -2.0 * y_scale_ * y_scale_;
      }
    }
    return p;
  }

  Bounds bounds_;
  GpHyperparameters hyper_;
  Eigen::MatrixXd x_;
  Eigen::VectorXd y_, alpha_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double y_mean_ = 0, y_scale_ = 1;
};

enum class AcquisitionKind { ucb, ei };

inline std::string to_string(AcquisitionKind k) { return k == AcquisitionKind::ucb ? "ucb" : "ei"; }

inline AcquisitionKind parse_acquisition_kind(const std::string &s) {
  if (s == "ucb") return AcquisitionKind::ucb;
  if (s == "ei") return AcquisitionKind::ei;
  throw Error(ErrorKind::invalid_value, "unknown acquisition '" + s + "'");
}

struct AcquisitionConfig {
  AcquisitionKind kind = AcquisitionKind::ucb;
  double kappa = 2.576;
  double xi = 0.0;

  void validate() const {
    if (!(kappa >= 0) || !(xi >= 0)) throw Error(ErrorKind::invalid_value, "kappa and xi must be >= 0");
  }
};

namespace detail {

inline double std_normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2 * std::numbers::pi); }
inline double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// Acquisition value and its partial derivatives in mean and std.
struct AcqValue {
  double value, d_mean, d_std;
};

inline AcqValue acquisition_terms(AcquisitionKind kind, double mean, double std, double best,
                                  const AcquisitionConfig &cfg) {
  if (kind == AcquisitionKind::ucb) return {mean + cfg.kappa * std, 1.0, cfg.kappa};
  const double a = mean - best - cfg.xi;
  if (std <= 1e-12) return {std::max(a, 0.0), a > 0 ? 1.0 : 0.0, 0.0};
  const double z = a / std;
  return {a * std_normal_cdf(z) + std * std_normal_pdf(z), std_normal_cdf(z), std_normal_pdf(z)};
}

} // namespace detail

/// ucb: mean + kappa * std. ei: expected improvement over best + xi.
inline double acquisition(AcquisitionKind kind, double mean, double std, double best, const AcquisitionConfig &cfg) {
  if (!(std >= 0)) throw Error(ErrorKind::invalid_value, "posterior std must be >= 0");
  return detail::acquisition_terms(kind, mean, std, best, cfg).value;
}

struct SuggestOptions {
  std::size_t random_starts = 64;
  std::size_t max_steps = 40;
  std::vector<std::vector<double>> extra_starts;
};

namespace detail {

/// log(z * Phi(z) + phi(z)) and its z-derivative Phi(z) / h(z); an
/// asymptotic series below z = -8 avoids cancellation and underflow.
inline std::pair<double, double> log_ei_kernel(double z) {
  if (z > -8) {
    const double cdf = std_normal_cdf(z), h = z * cdf + std_normal_pdf(z);
    return {std::log(h), cdf / h};
  }
  const double r = 1 / (z * z);
  const double h_series = 1 - 3 * r + 15 * r * r - 105 * r * r * r;
  const double cdf_series = 1 - r + 3 * r * r - 15 * r * r * r;
  const double log_pdf = -0.5 * z * z - 0.5 * std::log(2 * std::numbers::pi);
  return {log_pdf + std::log(r) + std::log(h_series), -z * cdf_series / h_series};
}

/// Search objective and its gradient: the acquisition itself for UCB, log EI
/// for EI so that starts far from any improvement still see a slope.
inline double acq_with_gradient(const GpModel &model, const AcquisitionConfig &acq, double best,
                                const std::vector<double> &x, std::vector<double> &grad) {
  std::vector<double> dm, dv;
  const auto post = model.posterior_with_gradient(x, dm, dv);
  const double s = post.stddev();
  grad.resize(x.size());
  if (acq.kind == AcquisitionKind::ei && s > 1e-12) {
    const double z = (post.mean - best - acq.xi) / s;
    const auto [log_h, dlog_h] = log_ei_kernel(z);
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double ds = dv[j] / (2 * s);
      grad[j] = ds / s + dlog_h * (dm[j] - z * ds) / s;
    }
    return std::log(s) + log_h;
  }
  const auto t = acquisition_terms(acq.kind, post.mean, s, best, acq);
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double ds = s > 1e-12 ? dv[j] / (2 * s) : 0.0;
    grad[j] = t.d_mean * dm[j] + t.d_std * ds;
  }
  if (acq.kind == AcquisitionKind::ei) return t.value > 0 ? std::log(t.value) : -std::numeric_limits<double>::infinity();
  return t.value;
}

/// Projected gradient ascent with an adaptive step.
inline double refine(const GpModel &model, const AcquisitionConfig &acq, double best, std::vector<double> &x,
                     std::size_t max_steps) {
  const auto &b = model.bounds();
  std::vector<double> g, g_try, x_try(x.size());
  double f = acq_with_gradient(model, acq, best, x, g);
  double step = 0.1;
  for (std::size_t j = 0; j < b.dim(); ++j) step = std::max(step, 0.05 * (b.hi[j] - b.lo[j]));
  for (std::size_t it = 0; it < max_steps && step > 1e-6; ++it) {
    double norm = 0;
    for (double v : g) norm += v * v;
    norm = std::sqrt(norm);
    if (!(norm > 1e-14)) break;
    for (std::size_t j = 0; j < x.size(); ++j) x_try[j] = x[j] + step * g[j] / norm;
    b.clamp(x_try);
    const double f_try = acq_with_gradient(model, acq, best, x_try, g_try);
    if (f_try > f) {
      x.swap(x_try);
      g.swap(g_try);
      f = f_try;
      step *= 1.5;
    } else {
      step *= 0.4;
    }
  }
  return f;
}

} // namespace detail

/// Maximise the acquisition over the model's bounds from seeded random starts
/// plus any extra starts, each refined by projected gradient ascent.
inline std::vector<double> suggest(const GpModel &model, const AcquisitionConfig &acq, double best_so_far,
                                   std::uint64_t seed, const SuggestOptions &opt = {}) {
  acq.validate();
  const auto &b = model.bounds();
  Rng rng(seed);
  std::vector<std::vector<double>> starts = opt.extra_starts;
  for (std::size_t s = 0; s < opt.random_starts; ++s) {
    std::vector<double> x(b.dim());
    for (std::size_t j = 0; j < b.dim(); ++j) x[j] = rng.uniform(b.lo[j], b.hi[j]);
    starts.push_back(std::move(x));
  }
  if (starts.empty()) throw Error(ErrorKind::invalid_value, "suggest needs at least one start");
  std::vector<double> best_x;
  double best_f = -std::numeric_limits<double>::infinity();
  for (auto &x : starts) {
    b.clamp(x);
    const double f = detail::refine(model, acq, best_so_far, x, opt.max_steps);
    if (best_x.empty() || f > best_f) {
      best_f = f;
      best_x = x;
    }
  }
  return best_x;
}

/// Monotone transform applied to observed values before they reach the GP.
/// symlog: sign(y) * log(1 + |y|); compresses heavy penalty tails.
enum class OutputWarp { none, symlog };

inline double warp_value(OutputWarp w, double y) {
  if (w == OutputWarp::none) return y;
  return y >= 0 ? std::log1p(y) : -std::log1p(-y);
}

struct BayesOptConfig {
  AcquisitionConfig acquisition;
  OutputWarp warp = OutputWarp::symlog;
  std::size_t initial_points = 5;
  std::size_t refit_every = 10;
  std::size_t random_starts = 64;
  std::size_t top_observed_starts = 4;
  KernelKind kernel = KernelKind::squared_exponential;
  std::uint64_t seed = 0;
};

/// Suggest/observe loop: seeded uniform points first, then GP-guided
/// suggestions. Hyperparameters are re-optimised when the observation count
/// first reaches initial_points and then every refit_every observations.
///
/// The GP models warped values. EI targets the raw level best + xi, carried
/// into the warped space; UCB is evaluated on the warped posterior.
class BayesianOptimizer {
public:
  BayesianOptimizer(Bounds bounds, BayesOptConfig cfg) : cfg_(cfg), obs_(std::move(bounds)) {
    cfg_.acquisition.validate();
    const double span = std::sqrt(static_cast<double>(obs_.dim())) * (obs_.bounds().hi[0] - obs_.bounds().lo[0]);
    hyper_.length_scale = 0.25 * span;
    hyper_.kernel = cfg_.kernel;
  }

  std::vector<double> next() {
    const auto k = suggestions_++;
    const auto &b = obs_.bounds();
    if (obs_.size() < cfg_.initial_points || !model_) {
      Rng rng(derive_seed(cfg_.seed, k));
      std::vector<double> x(b.dim());
      for (std::size_t j = 0; j < b.dim(); ++j) x[j] = rng.uniform(b.lo[j], b.hi[j]);
      return x;
    }
    SuggestOptions opt;
    opt.random_starts = cfg_.random_starts;
    std::vector<std::size_t> idx(obs_.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    const auto top = std::min(cfg_.top_observed_starts, idx.size());
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(top), idx.end(),
                      [&](std::size_t a, std::size_t c) {
                        if (obs_.values()[a] != obs_.values()[c]) return obs_.values()[a] > obs_.values()[c];
                        return a < c;
                      });
    for (std::size_t i = 0; i < top; ++i) opt.extra_starts.push_back(obs_.points()[idx[i]]);
    auto acq = cfg_.acquisition;
    double best = obs_.best_value();
    if (acq.kind == AcquisitionKind::ei && cfg_.warp != OutputWarp::none) {
      best = warp_value(cfg_.warp, raw_best_ + acq.xi);
      acq.xi = 0;
    }
    return suggest(*model_, acq, best, derive_seed(cfg_.seed, k), opt);
  }

  void observe(std::vector<double> x, double y) {
    obs_.bounds().clamp(x);
    obs_.add(x, warp_value(cfg_.warp, y));
    raw_best_ = std::max(raw_best_, y);
    const auto n = obs_.size();
    if (n < cfg_.initial_points) return;
    if (!model_ || n >= last_refit_ + cfg_.refit_every) {
      model_ = GpModel::fit_optimized(obs_, hyper_);
      hyper_ = model_->hyperparameters();
      last_refit_ = n;
    } else {
      model_ = GpModel::fit(obs_, hyper_);
    }
  }

  /// Points with warped values.
  const ObservationSet &observations() const { return obs_; }
  double best_observed() const { return raw_best_; }
  const std::optional<GpModel> &model() const { return model_; }
  const BayesOptConfig &config() const { return cfg_; }

private:
  BayesOptConfig cfg_;
  ObservationSet obs_;
  GpHyperparameters hyper_;
  std::optional<GpModel> model_;
  std::size_t suggestions_ = 0;
  std::size_t last_refit_ = 0;
  double raw_best_ = -std::numeric_limits<double>::infinity();
};

} // namespace ntsp
