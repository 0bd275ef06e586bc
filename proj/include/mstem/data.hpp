#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mstem/common.hpp"

namespace mstem {

// One charging session as ingested from the event file.
struct ChargingEvent {
  std::string station_id;
  Scalar connector_kw = 0.0;  // rated power of the equipment
  std::int64_t start_epoch_s = 0;
  std::int64_t end_epoch_s = 0;
  Scalar energy_kwh = 0.0;
};

// Fast equipment is rated >= 15 kW (splits the ~22 kW class from the
// ~7 kW-and-below class).
enum class KindFilter { Fast, Slow, All };

constexpr Scalar kFastPowerThresholdKw = 15.0;

KindFilter parse_kind_filter(const std::string& name);
std::string kind_filter_name(KindFilter kind);

struct RejectedRow {
  std::size_t line_number = 0;
  std::string reason;
};

struct IngestResult {
  std::vector<ChargingEvent> events;
  std::vector<RejectedRow> rejects;
  std::size_t data_rows = 0;  // rows after the header
};

// Reads the delimited event file (header row, columns station_id,
// connector_kw, start_time, end_time, energy_kwh). Malformed rows are
// collected with a reason; more than 50% rejects is a hard DataError.
IngestResult ingest_events(std::istream& in, KindFilter filter);
IngestResult ingest_events_file(const std::string& path, KindFilter filter);

void write_events_csv(std::ostream& out, const std::vector<ChargingEvent>& events);

// Hourly per-station load matrix. Row i is the hour start_epoch_s + i*3600;
// missing hours are explicit zeros.
struct LoadSeries {
  std::vector<std::string> stations;
  std::int64_t start_epoch_s = 0;
  Matrix values;  // T x N, kW

  Index hours() const { return values.rows(); }
  Index station_count() const { return values.cols(); }
};

// Spreads each event's energy uniformly over its duration and accumulates
// per hour bucket; an hour's kWh over 1 h is its average kW. Zero-duration
// events put all energy into the start hour.
LoadSeries resample_hourly(const std::vector<ChargingEvent>& events,
                           const std::vector<std::string>& stations);

// Chronological contiguous split at floor(0.7 T) and floor(0.8 T). min_rows
// guards each segment (pass tau + alpha); 0 skips the check.
std::array<LoadSeries, 3> split_series(const LoadSeries& series, Scalar train_fraction = 0.7,
                                       Scalar val_fraction = 0.1, Index min_rows = 0);

// One supervised pair: rows [origin, origin+tau) in, [origin+tau,
// origin+tau+alpha) out.
struct WindowSample {
  Matrix input;   // tau x N
  Matrix target;  // alpha x N
  Index origin = 0;
};

// All T - tau - alpha + 1 stride-1 windows; empty (not an error) if the
// segment is too short.
std::vector<WindowSample> make_windows(const LoadSeries& series, Index tau, Index alpha);

// Per-station standardization fit on the training segment only.
class Scaler {
 public:
  Scaler() = default;

  static Scaler fit(const LoadSeries& train);

  Matrix apply(const Matrix& x) const;
  Matrix invert(const Matrix& x) const;

  bool fitted() const { return fitted_; }
  const Vector& mean() const { return mean_; }
  const Vector& std_dev() const { return std_; }

  static Scaler from_moments(Vector mean, Vector std_dev);

 private:
  Vector mean_;
  Vector std_;  // floored at 1e-8 before any division
  bool fitted_ = false;
};

// Series cache: header "timestamp,<station>...", values in kW with 6
// decimals. Byte-stable for identical input.
void write_series_csv(std::ostream& out, const LoadSeries& series);
void write_series_csv_file(const std::string& path, const LoadSeries& series);
LoadSeries read_series_csv(std::istream& in);
LoadSeries read_series_csv_file(const std::string& path);

}  // namespace mstem
