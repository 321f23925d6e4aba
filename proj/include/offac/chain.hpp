#pragma once

#include <vector>

#include "offac/mdp.hpp"

namespace offac {

struct Schedule;

struct Explorability {
  bool explorable = false;
  std::vector<int> component;  // component label per state
  int components = 0;
};

// Edge s -> s' when some action moves s to s' with positive probability.
Explorability check_explorability(const Mdp& mdp);

Mdp lazy_transform(const Mdp& mdp, double lambda);

struct MixingProfile {
  std::vector<double> tv_by_step;  // d_k = max_s TV(P^k(s,.), mu), k = 0..
  double sigma_estimate = 0.0;
};

struct MixingResult {
  int z = 1;
  MixingProfile profile;
};

// Exact TV curve of a fixed chain, extended on demand.
class TvCurve {
 public:
  TvCurve(const Eigen::MatrixXd& kernel, const Eigen::VectorXd& mu);

  // d_k
  double at(int k);
  // min{k >= 1 : d_{k-1} <= precision/2}
  int mixing_time(double precision);
  const std::vector<double>& values() const { return d_; }

 private:
  void extend();

  Eigen::MatrixXd kernel_;
  Eigen::VectorXd mu_;
  Eigen::MatrixXd power_;
  std::vector<double> d_;
};

MixingResult mixing_time(const Eigen::MatrixXd& kernel, const Eigen::VectorXd& mu, double precision);

double fit_sigma(const std::vector<double>& tv);

int threshold_K(const Schedule& schedule, const Eigen::MatrixXd& kernel, const Eigen::VectorXd& mu);
int threshold_K(const Schedule& schedule, TvCurve& curve);

}  // namespace offac
