#pragma once

#include <nlohmann/json.hpp>

#include "ann/cli/checkpoint.hpp"

namespace ann::cli {

struct BlueprintOptions {
  // Export unconstrained models verbatim, flagged as non-physical.
  bool force = false;
};

// -10 * log10(w): intensity transmission to attenuation in dB. Infinite for w = 0.
double attenuation_db(double w);

/// JSON with `meta`, `filters`, `layers` and `connections`. One connection per
/// weight element. Throws ContractError for unconstrained models without
/// force, IntegrityError when a constrained weight lies outside [0, 1].
nlohmann::json export_blueprint(const Checkpoint& checkpoint, const BlueprintOptions& options = {});

}  // namespace ann::cli
