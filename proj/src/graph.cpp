#include "offac/graph.hpp"

#include <numeric>
#include <queue>

#include <boost/graph/adjacency_list.hpp>
#include <boost/graph/strong_components.hpp>

namespace offac {

std::vector<int> strong_components(const Eigen::MatrixXd& weights, int* count) {
  using Graph = boost::adjacency_list<boost::vecS, boost::vecS, boost::directedS>;
  const int n = static_cast<int>(weights.rows());
  Graph g(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (weights(i, j) > 0.0) boost::add_edge(i, j, g);
  std::vector<int> label(n);
  int c = boost::strong_components(g, boost::make_iterator_property_map(label.begin(), boost::get(boost::vertex_index, g)));
  if (count) *count = c;
  return label;
}

int chain_period(const Eigen::MatrixXd& kernel) {
  const int n = static_cast<int>(kernel.rows());
  std::vector<int> level(n, -1);
  std::queue<int> frontier;
  level[0] = 0;
  frontier.push(0);
  while (!frontier.empty()) {
    int u = frontier.front();
    frontier.pop();
    for (int v = 0; v < n; ++v)
      if (kernel(u, v) > 0.0 && level[v] < 0) {
        level[v] = level[u] + 1;
        frontier.push(v);
      }
  }
  int period = 0;
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v)
      if (kernel(u, v) > 0.0 && level[u] >= 0 && level[v] >= 0)
        period = std::gcd(period, std::abs(level[u] + 1 - level[v]));
  return period == 0 ? 1 : period;
}

}  // namespace offac
