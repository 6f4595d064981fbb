#include "uavd/loss.hpp"

namespace uavd {

std::string_view to_string(DistillMode mode) {
  switch (mode) {
    case DistillMode::kBlackbox: return "blackbox";
    case DistillMode::kWhitebox: return "whitebox";
    case DistillMode::kHybrid: return "hybrid";
  }
  return "?";
}

std::optional<DistillMode> distill_mode_from_string(std::string_view s) {
  if (s == "blackbox") return DistillMode::kBlackbox;
  if (s == "whitebox") return DistillMode::kWhitebox;
  if (s == "hybrid") return DistillMode::kHybrid;
  return std::nullopt;
}

void DistillConfig::validate() const {
  if (!(temperature > 0.0)) throw ConfigError("temperature must be > 0");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  if (!(beta >= 0.0)) throw ConfigError("beta must be >= 0");
  if (steps < 1) throw ConfigError("steps must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(lr > 0.0)) throw ConfigError("learning rate must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("adam betas must lie in [0, 1)");
  if (warmup_steps < 0) throw ConfigError("warmup_steps must be >= 0");
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
  if (!(min_lr_ratio > 0.0 && min_lr_ratio <= 1.0)) throw ConfigError("min_lr_ratio must lie in (0, 1]");
}

}  // namespace uavd
