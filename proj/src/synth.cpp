#include "mstem/synth.hpp"

#include <cmath>
#include <cstdio>
#include <random>

namespace mstem {

namespace {

constexpr Scalar kPi = 3.14159265358979323846;

// Diurnal acceptance profile peaking mid-afternoon, per-station phase shift.
Scalar diurnal_weight(Scalar hour_of_day, Scalar phase_h) {
  return 1.0 + 0.8 * std::sin(2.0 * kPi * (hour_of_day - 15.0 - phase_h) / 24.0);
}

Scalar weekly_weight(Index day_index) {
  return 1.0 + 0.3 * std::sin(2.0 * kPi * static_cast<Scalar>(day_index % 7) / 7.0);
}

}  // namespace

SynthKind parse_synth_kind(const std::string& name) {
  if (name == "fast") return SynthKind::Fast;
  if (name == "slow") return SynthKind::Slow;
  if (name == "mixed") return SynthKind::Mixed;
  throw UsageError("unknown synth kind '" + name + "' (expected fast, slow or mixed)");
}

std::vector<ChargingEvent> generate_events(const SynthConfig& config) {
  if (config.stations < 1 || config.days < 1) {
    throw ParameterError("generate_events: stations and days must be positive");
  }
  std::vector<ChargingEvent> events;
  std::mt19937_64 gen(mix_seed(config.seed, 0x5eed));

  for (Index s = 0; s < config.stations; ++s) {
    char id[8];
    std::snprintf(id, sizeof(id), "S%02d", static_cast<int>(s + 1));
    const bool fast = config.kind == SynthKind::Fast ||
                      (config.kind == SynthKind::Mixed && s % 2 == 0);
    const Scalar rated_kw = fast ? 22.0 : 7.0;
    const Scalar phase_h = 1.5 * static_cast<Scalar>(s);

    for (Index d = 0; d < config.days; ++d) {
      const Scalar expected =
          config.sessions_per_day * weekly_weight(d) * (0.75 + 0.5 * uniform01(gen));
      const Index sessions = static_cast<Index>(std::llround(expected));
      for (Index k = 0; k < sessions; ++k) {
        // Rejection-sample the start hour against the diurnal profile.
        Scalar start_h = 0.0;
        for (;;) {
          start_h = 24.0 * uniform01(gen);
          if (uniform01(gen) * 1.8 <= diurnal_weight(start_h, phase_h)) break;
        }
        const Scalar duration_h =
            fast ? 0.5 + 2.5 * uniform01(gen) : 1.0 + 7.0 * uniform01(gen);
        const Scalar utilization = 0.6 + 0.35 * uniform01(gen);

        ChargingEvent ev;
        ev.station_id = id;
        ev.connector_kw = rated_kw;
        ev.start_epoch_s = config.start_epoch_s + d * 86400 +
                           static_cast<std::int64_t>(std::floor(start_h * 3600.0));
        ev.end_epoch_s = ev.start_epoch_s +
                         static_cast<std::int64_t>(std::floor(duration_h * 3600.0));
        ev.energy_kwh = rated_kw * duration_h * utilization;
        events.push_back(std::move(ev));
      }
    }
  }
  return events;
}

}  // namespace mstem
