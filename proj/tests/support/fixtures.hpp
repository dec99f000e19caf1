#pragma once

// Shared expensive fixtures for the unit tests. The cheap scenario keeps
// adaptive runs fast (short control filter and paths); it is not meant to
// have good low-band selectivity.

#include "sfanc/anc.hpp"
#include "sfanc/filter_bank.hpp"

namespace fixtures {

inline const sfanc::AncScenario& cheap_scenario() {
  static const sfanc::AncScenario sc = [] {
    sfanc::AncScenario s;
    s.primary_path = sfanc::design_bandpass(20.0, 7980.0, 127, sfanc::kPipelineRate);
    s.secondary_path = sfanc::design_bandpass(20.0, 7980.0, 63, sfanc::kPipelineRate);
    s.secondary_path_estimate = s.secondary_path;
    s.step_size = 1e-4;
    s.control_length = 128;
    return s;
  }();
  return sc;
}

inline const sfanc::FilterBank& cheap_bank() {
  static const sfanc::FilterBank bank =
      sfanc::pretrain_bank(sfanc::default_partition(), cheap_scenario(), 4242);
  return bank;
}

// Full default-scenario bank (a few seconds to build; shared across tests).
inline const sfanc::FilterBank& full_bank() {
  static const sfanc::FilterBank bank =
      sfanc::pretrain_bank(sfanc::default_partition(), sfanc::default_scenario(), 4242);
  return bank;
}

}  // namespace fixtures
