#include "ann/train/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "ann/autodiff/ops.hpp"
#include "ann/errors.hpp"

namespace ann::train {

ModelGradCheckResult model_gradcheck(const layers::ModelSpec& spec, const ModelGradCheckOptions& options) {
  layers::validate(spec);
  if (options.batch == 0) throw ConfigError("gradcheck batch must be positive");
  const auto length = static_cast<std::size_t>(std::lround(options.seconds * spec.sample_rate));
  if (length == 0) throw ConfigError("gradcheck input is empty; increase seconds");

  layers::Model model = layers::Model::create(spec, options.seed);
  std::mt19937_64 rng(options.seed ^ 0x5DEECE66DULL);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> input(options.batch * length);
  for (double& v : input) v = unit(rng);
  const ad::Tensor x(ad::Shape{options.batch, length}, std::move(input));

  std::vector<double> weights(options.batch * spec.n_classes);
  for (double& v : weights) v = 2.0 * unit(rng) - 1.0;
  const ad::Tensor projection(ad::Shape{options.batch, spec.n_classes}, std::move(weights));
  // A cross-entropy near log(C) would bury small gradients in the rounding of
  // its own value; a signed projection keeps the objective near zero.
  const auto objective = [&](ad::Graph& g) { return ad::sum(g, ad::mul_elem(g, model.forward(g, x), projection)); };

  std::vector<std::string> names;
  std::vector<ad::Tensor> params;
  for (const auto& p : model.parameters()) {
    if (p.role == layers::ParamRole::state) continue;
    names.push_back(p.name);
    params.push_back(p.tensor);
  }

  model.zero_grad();
  {
    ad::Graph g;
    g.backward(objective(g));
  }
  if (options.perturb_grad) {
    auto grad = params.front().grad();
    grad[0] += 1e-3 * (1.0 + std::abs(grad[0]));
  }

  const auto loss_fn = [&] {
    ad::Graph g(ad::Graph::Mode::inference);
    return objective(g).values()[0];
  };
  ModelGradCheckResult result;
  for (std::size_t i = 0; i < params.size(); ++i) {
    // The step follows the parameter's magnitude: transmissions in [0, 1] use
    // eps as given, band edges in Hz a proportionally larger one.
    double magnitude = 1.0;
    for (double v : params[i].values()) magnitude = std::max(magnitude, std::abs(v));
    ad::GradCheckOptions fd = options.fd;
    fd.eps *= magnitude;
    const auto report = ad::finite_difference_check(loss_fn, std::span<ad::Tensor>(&params[i], 1), fd);
    result.checked += report.checked;
    result.skipped += report.skipped;
    if (report.max_rel_error > result.max_rel_error || result.worst.empty()) {
      result.max_rel_error = std::max(result.max_rel_error, report.max_rel_error);
      result.worst = names[i] + "[" + std::to_string(report.worst_index) + "]";
    }
    result.params.push_back({names[i], params[i].size(), report.max_rel_error});
  }
  return result;
}

}  // namespace ann::train
