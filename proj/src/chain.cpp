#include "offac/chain.hpp"

#include <algorithm>
#include <cmath>

#include "offac/actor_critic.hpp"
#include "offac/graph.hpp"

namespace offac {

Explorability check_explorability(const Mdp& mdp) {
  Eigen::MatrixXd reach = Eigen::MatrixXd::Zero(mdp.n, mdp.n);
  for (int s = 0; s < mdp.n; ++s)
    for (int a = 0; a < mdp.m; ++a) reach.row(s) += mdp.p.row(s * mdp.m + a);
  Explorability out;
  out.component = strong_components(reach, &out.components);
  out.explorable = out.components == 1;
  return out;
}

Mdp lazy_transform(const Mdp& mdp, double lambda) {
  if (!(lambda >= 0.0 && lambda < 1.0))
    throw Error(ErrorKind::InvalidLambda, "lambda=" + std::to_string(lambda) + " outside [0,1)");
  Mdp out = mdp;
  out.p *= (1.0 - lambda);
  for (int s = 0; s < mdp.n; ++s)
    for (int a = 0; a < mdp.m; ++a) out.p(s * mdp.m + a, s) += lambda;
  return out;
}

TvCurve::TvCurve(const Eigen::MatrixXd& kernel, const Eigen::VectorXd& mu)
    : kernel_(kernel), mu_(mu), power_(Eigen::MatrixXd::Identity(kernel.rows(), kernel.cols())) {}

void TvCurve::extend() {
  double worst = 0.0;
  for (int s = 0; s < power_.rows(); ++s)
    worst = std::max(worst, 0.5 * (power_.row(s).transpose() - mu_).cwiseAbs().sum());
  d_.push_back(std::min(worst, 1.0));
  power_ = power_ * kernel_;
}

double TvCurve::at(int k) {
  while (static_cast<int>(d_.size()) <= k) extend();
  return d_[k];
}

int TvCurve::mixing_time(double precision) {
  if (!(precision > 0.0)) throw Error(ErrorKind::InvalidArgument, "precision must be positive");
  const double thr = std::min(precision, 2.0) / 2.0;
  const double horizon = std::ceil(10.0 * kernel_.rows() / std::min(precision, 2.0));
  int k = 0;
  while (at(k) > thr) {
    if (static_cast<int>(d_.size()) == k + 1) {
      // power_ now holds P^{k+1}; an unchanged power means the curve is flat forever
      Eigen::MatrixXd prev = power_;
      at(k + 1);
      if ((power_ - prev).cwiseAbs().maxCoeff() == 0.0 && d_[k + 1] > thr)
        throw Error(ErrorKind::NoMixing, "TV distance stalls at " + std::to_string(d_[k + 1]));
    }
    ++k;
    if (k > horizon)
      throw Error(ErrorKind::NoMixing, "TV distance still " + std::to_string(d_[k - 1]) + " after " +
                                           std::to_string(k) + " steps");
  }
  return k + 1;
}

double fit_sigma(const std::vector<double>& tv) {
  std::vector<std::pair<double, double>> pts;
  for (std::size_t k = tv.size() / 2; k < tv.size(); ++k)
    if (tv[k] > 1e-13) pts.emplace_back(static_cast<double>(k), std::log(tv[k]));
  if (pts.size() < 2) {
    // exact mixing: fall back to the decay over the whole positive part
    pts.clear();
    for (std::size_t k = 0; k < tv.size(); ++k)
      if (tv[k] > 1e-13) pts.emplace_back(static_cast<double>(k), std::log(tv[k]));
    if (pts.size() < 2) return 0.0;
  }
  double mx = 0.0, my = 0.0;
  for (auto [x, y] : pts) {
    mx += x;
    my += y;
  }
  mx /= pts.size();
  my /= pts.size();
  double sxy = 0.0, sxx = 0.0;
  for (auto [x, y] : pts) {
    sxy += (x - mx) * (y - my);
    sxx += (x - mx) * (x - mx);
  }
  return std::clamp(std::exp(sxy / sxx), 0.0, 1.0);
}

MixingResult mixing_time(const Eigen::MatrixXd& kernel, const Eigen::VectorXd& mu, double precision) {
  if (!(precision > 0.0 && precision <= 2.0))
    throw Error(ErrorKind::InvalidArgument, "precision must lie in (0,2]");
  int comps = 0;
  strong_components(kernel, &comps);
  if (comps == 1 && chain_period(kernel) > 1) throw Error(ErrorKind::NoMixing, "periodic chain");
  TvCurve curve(kernel, mu);
  MixingResult out;
  out.z = curve.mixing_time(precision);
  int len = out.z;
  while (len < 2000 && curve.at(len) > 1e-10) ++len;
  curve.at(len);
  out.profile.tv_by_step.assign(curve.values().begin(), curve.values().begin() + len + 1);
  out.profile.sigma_estimate = fit_sigma(out.profile.tv_by_step);
  return out;
}

int threshold_K(const Schedule& schedule, TvCurve& curve) {
  for (int t = 0;; ++t) {
    double omega = stepsize_at(schedule, t).omega;
    if (t >= curve.mixing_time(std::min(omega, 2.0))) return t;
  }
}

int threshold_K(const Schedule& schedule, const Eigen::MatrixXd& kernel, const Eigen::VectorXd& mu) {
  int comps = 0;
  strong_components(kernel, &comps);
  if (comps == 1 && chain_period(kernel) > 1) throw Error(ErrorKind::NoMixing, "periodic chain");
  TvCurve curve(kernel, mu);
  return threshold_K(schedule, curve);
}

}  // namespace offac
