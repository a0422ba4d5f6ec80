#include "ogpsa/presets.hpp"

#include <numbers>

namespace ogpsa::presets {

using models::LossTag;
using subspace::RefreshPeriod;
using tasks::FamilyKind;

tasks::FamilySpec family_spec(FamilyKind kind, std::uint64_t seed) {
  tasks::FamilySpec s;
  s.kind = kind;
  s.seed = seed;
  switch (kind) {
    case FamilyKind::quadratic_pair:
      s.dim = 10;
      s.alpha = std::numbers::pi / 4;
      s.pretrain_steps = 0;
      break;
    case FamilyKind::regression_mlp:
      s.dim = 16;
      s.hidden = 16;
      s.alpha = std::numbers::pi / 3;
      s.noise_sigma = 0.1;
      s.pretrain_steps = 600;
      s.pretrain_eta = 0.2;
      break;
    case FamilyKind::policy_sft_dpo:
      s.dim = 16;
      s.vocab = 8;
      s.noise_sigma = 0.1;
      s.pretrain_steps = 600;
      s.pretrain_eta = 0.5;
      break;
  }
  return s;
}

optimizer::TrainConfig train_config(FamilyKind kind, optimizer::Method method, std::uint64_t seed) {
  optimizer::TrainConfig c;
  c.method = method;
  c.seed = seed;
  switch (kind) {
    case FamilyKind::quadratic_pair:
      c.eta = 0.05;
      c.refresh = RefreshPeriod(5);
      c.safety_batch = 0;
      c.stages = {{"safety", LossTag::squared_error, 100, std::nullopt}};
      break;
    case FamilyKind::regression_mlp:
      c.eta = 0.02;
      c.refresh = RefreshPeriod(5);
      c.safety_batch = 0;
      c.stages = {{"safety", LossTag::squared_error, 1000, std::nullopt}};
      break;
    case FamilyKind::policy_sft_dpo:
      c.eta = 0.2;
      c.refresh = RefreshPeriod(5);
      c.safety_batch = 32;
      c.stages = {{"sft", LossTag::nll_sft, 200, RefreshPeriod(30)},
                  {"dpo", LossTag::dpo_pairwise, 200, RefreshPeriod(5)}};
      break;
  }
  return c;
}

}  // namespace ogpsa::presets
