#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mstem/data.hpp"

namespace mstem {

enum class SynthKind { Fast, Slow, Mixed };

SynthKind parse_synth_kind(const std::string& name);

// Seeded event stream with diurnal and weekly sinusoidal intensity; enough
// structure for a model to beat the persistence baselines on.
struct SynthConfig {
  Index stations = 4;
  Index days = 90;
  std::uint64_t seed = 42;
  SynthKind kind = SynthKind::Fast;
  Scalar sessions_per_day = 10.0;                // mean sessions per station per day
  std::int64_t start_epoch_s = 1672531200;       // 2023-01-01T00:00:00Z
};

std::vector<ChargingEvent> generate_events(const SynthConfig& config);

}  // namespace mstem
