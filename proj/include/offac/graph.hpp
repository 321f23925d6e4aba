#pragma once

#include <vector>

#include <Eigen/Dense>

namespace offac {

// Strongly connected components of the digraph with an edge i -> j whenever
// weights(i, j) > 0. Returns one component label per vertex.
std::vector<int> strong_components(const Eigen::MatrixXd& weights, int* count);

// Period of an irreducible chain (1 means aperiodic).
int chain_period(const Eigen::MatrixXd& kernel);

}  // namespace offac
