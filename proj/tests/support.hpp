#pragma once

#include <functional>
#include <random>
#include <vector>

#include "ann/autodiff/gradcheck.hpp"
#include "ann/autodiff/graph.hpp"
#include "ann/autodiff/ops.hpp"

namespace ann::test {

inline ad::Tensor random_tensor(const ad::Shape& shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0,
                                bool requires_grad = true) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(ad::element_count(shape));
  for (double& x : v) x = dist(rng);
  return ad::Tensor(shape, std::move(v), requires_grad);
}

using Builder = std::function<ad::Tensor(ad::Graph&)>;

// Runs `build` once with a recording graph, reduces its output with a fixed
// random projection, backpropagates and compares against central differences.
inline ad::GradCheckReport check_gradients(const Builder& build, std::vector<ad::Tensor> leaves, std::mt19937_64& rng,
                                           const ad::GradCheckOptions& options = {}) {
  ad::Tensor projection;
  {
    ad::Graph probe(ad::Graph::Mode::inference);
    projection = random_tensor(build(probe).shape(), rng, -1.0, 1.0, false);
  }
  const auto objective = [&](ad::Graph& g) { return ad::sum(g, ad::mul_elem(g, build(g), projection)); };
  for (auto& t : leaves) t.zero_grad();
  {
    ad::Graph g;
    g.backward(objective(g));
  }
  const auto loss = [&] {
    ad::Graph g(ad::Graph::Mode::inference);
    return objective(g).item();
  };
  return ad::finite_difference_check(loss, leaves, options);
}

}  // namespace ann::test
