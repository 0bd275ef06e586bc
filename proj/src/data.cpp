#include "mstem/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace mstem {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string trim(std::string s) {
  const auto issp = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && issp(s.front())) s.erase(s.begin());
  while (!s.empty() && issp(s.back())) s.pop_back();
  return s;
}

Scalar parse_number(const std::string& text, const char* what) {
  std::size_t pos = 0;
  Scalar value = 0.0;
  try {
    value = std::stod(text, &pos);
  } catch (const std::exception&) {
    throw DataError(std::string("unparseable ") + what + ": '" + text + "'");
  }
  if (pos != text.size()) {
    throw DataError(std::string("unparseable ") + what + ": '" + text + "'");
  }
  return value;
}

}  // namespace

KindFilter parse_kind_filter(const std::string& name) {
  if (name == "fast") return KindFilter::Fast;
  if (name == "slow") return KindFilter::Slow;
  if (name == "all") return KindFilter::All;
  throw UsageError("unknown kind filter '" + name + "' (expected fast, slow or all)");
}

std::string kind_filter_name(KindFilter kind) {
  switch (kind) {
    case KindFilter::Fast:
      return "fast";
    case KindFilter::Slow:
      return "slow";
    case KindFilter::All:
      return "all";
  }
  return "all";
}

IngestResult ingest_events(std::istream& in, KindFilter filter) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("event file is empty");
  {
    std::vector<std::string> header = split_csv_line(trim(line));
    const std::vector<std::string> expected = {"station_id", "connector_kw", "start_time",
                                               "end_time", "energy_kwh"};
    if (header.size() != expected.size()) {
      throw DataError("event file header has " + std::to_string(header.size()) +
                      " columns, expected 5 (station_id,connector_kw,start_time,end_time,energy_kwh)");
    }
    for (std::size_t i = 0; i < expected.size(); ++i) {
      if (trim(header[i]) != expected[i]) {
        throw DataError("event file column " + std::to_string(i + 1) + " is '" + trim(header[i]) +
                        "', expected '" + expected[i] + "'");
      }
    }
  }

  IngestResult result;
  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    const std::string trimmed = trim(line);
    if (trimmed.empty()) continue;
    ++result.data_rows;
    try {
      std::vector<std::string> fields = split_csv_line(trimmed);
      if (fields.size() != 5) {
        throw DataError("expected 5 fields, got " + std::to_string(fields.size()));
      }
      ChargingEvent ev;
      ev.station_id = trim(fields[0]);
      if (ev.station_id.empty()) throw DataError("empty station_id");
      ev.connector_kw = parse_number(trim(fields[1]), "connector_kw");
      ev.start_epoch_s = parse_iso8601_utc(fields[2]);
      ev.end_epoch_s = parse_iso8601_utc(fields[3]);
      ev.energy_kwh = parse_number(trim(fields[4]), "energy_kwh");
      if (ev.end_epoch_s < ev.start_epoch_s) throw DataError("negative duration");
      if (ev.energy_kwh < 0.0) throw DataError("negative energy");

      const bool is_fast = ev.connector_kw >= kFastPowerThresholdKw;
      const bool keep = filter == KindFilter::All || (filter == KindFilter::Fast && is_fast) ||
                        (filter == KindFilter::Slow && !is_fast);
      if (keep) result.events.push_back(std::move(ev));
    } catch (const DataError& e) {
      result.rejects.push_back({line_number, e.what()});
    }
  }

  if (result.data_rows > 0 && result.rejects.size() * 2 > result.data_rows) {
    throw DataError("ingestion rejected " + std::to_string(result.rejects.size()) + " of " +
                    std::to_string(result.data_rows) + " rows (> 50%)");
  }
  return result;
}

IngestResult ingest_events_file(const std::string& path, KindFilter filter) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open event file '" + path + "'");
  return ingest_events(in, filter);
}

void write_events_csv(std::ostream& out, const std::vector<ChargingEvent>& events) {
  out << "station_id,connector_kw,start_time,end_time,energy_kwh\n";
  char buf[64];
  for (const ChargingEvent& ev : events) {
    std::snprintf(buf, sizeof(buf), "%.3f", ev.connector_kw);
    out << ev.station_id << ',' << buf << ',' << format_iso8601_utc(ev.start_epoch_s) << ','
        << format_iso8601_utc(ev.end_epoch_s) << ',';
    std::snprintf(buf, sizeof(buf), "%.6f", ev.energy_kwh);
    out << buf << '\n';
  }
}

LoadSeries resample_hourly(const std::vector<ChargingEvent>& events,
                           const std::vector<std::string>& stations) {
  if (events.empty()) throw DataError("resample_hourly: no events");
  std::unordered_map<std::string, Index> station_index;
  for (std::size_t i = 0; i < stations.size(); ++i) {
    station_index[stations[i]] = static_cast<Index>(i);
  }

  // hour bucket -> station -> kWh in that hour
  std::map<std::int64_t, std::map<Index, Scalar>> buckets;
  std::int64_t first_hour = 0, last_hour = 0;
  bool any = false;

  const auto touch = [&](std::int64_t hour, Index st, Scalar kwh) {
    buckets[hour][st] += kwh;
    if (!any) {
      first_hour = last_hour = hour;
      any = true;
    } else {
      first_hour = std::min(first_hour, hour);
      last_hour = std::max(last_hour, hour);
    }
  };

  for (const ChargingEvent& ev : events) {
    const auto it = station_index.find(ev.station_id);
    if (it == station_index.end()) {
      throw DataError("resample_hourly: event references unknown station '" + ev.station_id + "'");
    }
    const Index st = it->second;
    const std::int64_t duration_s = ev.end_epoch_s - ev.start_epoch_s;
    const std::int64_t start_hour = ev.start_epoch_s / kSecondsPerHour -
                                    (ev.start_epoch_s % kSecondsPerHour < 0 ? 1 : 0);
    if (duration_s == 0) {
      touch(start_hour, st, ev.energy_kwh);
      continue;
    }
    const Scalar power_kw = ev.energy_kwh / (static_cast<Scalar>(duration_s) / 3600.0);
    std::int64_t cursor = ev.start_epoch_s;
    std::int64_t hour = start_hour;
    while (cursor < ev.end_epoch_s) {
      const std::int64_t hour_end = (hour + 1) * kSecondsPerHour;
      const std::int64_t slice_end = std::min(hour_end, ev.end_epoch_s);
      const Scalar overlap_h = static_cast<Scalar>(slice_end - cursor) / 3600.0;
      touch(hour, st, power_kw * overlap_h);
      cursor = slice_end;
      ++hour;
    }
  }

  LoadSeries series;
  series.stations = stations;
  series.start_epoch_s = first_hour * kSecondsPerHour;
  const Index hours = static_cast<Index>(last_hour - first_hour + 1);
  series.values = Matrix::Zero(hours, static_cast<Index>(stations.size()));
  for (const auto& [hour, per_station] : buckets) {
    const Index row = static_cast<Index>(hour - first_hour);
    for (const auto& [st, kwh] : per_station) {
      series.values(row, st) += kwh;  // kWh over one hour == average kW
    }
  }
  return series;
}

std::array<LoadSeries, 3> split_series(const LoadSeries& series, Scalar train_fraction,
                                       Scalar val_fraction, Index min_rows) {
  const Index total = series.hours();
  const Index t1 = static_cast<Index>(std::floor(train_fraction * static_cast<Scalar>(total)));
  const Index t2 =
      static_cast<Index>(std::floor((train_fraction + val_fraction) * static_cast<Scalar>(total)));
  if (!(0 < t1 && t1 < t2 && t2 < total)) {
    throw ParameterError("split_series: fractions produce an empty segment for T=" +
                         std::to_string(total));
  }
  const auto segment = [&](Index begin, Index rows) {
    LoadSeries part;
    part.stations = series.stations;
    part.start_epoch_s = series.start_epoch_s + begin * kSecondsPerHour;
    part.values = series.values.middleRows(begin, rows);
    return part;
  };
  std::array<LoadSeries, 3> parts = {segment(0, t1), segment(t1, t2 - t1),
                                     segment(t2, total - t2)};
  if (min_rows > 0) {
    const char* names[3] = {"train", "validation", "test"};
    for (int i = 0; i < 3; ++i) {
      if (parts[static_cast<std::size_t>(i)].hours() < min_rows) {
        throw ParameterError(std::string("split_series: ") + names[i] + " segment has " +
                             std::to_string(parts[static_cast<std::size_t>(i)].hours()) +
                             " rows, needs at least " + std::to_string(min_rows));
      }
    }
  }
  return parts;
}

std::vector<WindowSample> make_windows(const LoadSeries& series, Index tau, Index alpha) {
  if (tau < 1 || alpha < 1) throw ParameterError("make_windows: tau and alpha must be positive");
  std::vector<WindowSample> windows;
  const Index total = series.hours();
  if (total < tau + alpha) return windows;
  windows.reserve(static_cast<std::size_t>(total - tau - alpha + 1));
  for (Index t = 0; t + tau + alpha <= total; ++t) {
    WindowSample w;
    w.input = series.values.middleRows(t, tau);
    w.target = series.values.middleRows(t + tau, alpha);
    w.origin = t;
    windows.push_back(std::move(w));
  }
  return windows;
}

Scaler Scaler::fit(const LoadSeries& train) {
  if (train.hours() < 1) throw ContractError("Scaler::fit: empty training segment");
  Scaler s;
  const Index n = train.station_count();
  s.mean_ = train.values.colwise().mean();
  s.std_ = Vector(n);
  for (Index j = 0; j < n; ++j) {
    const Scalar var = (train.values.col(j).array() - s.mean_(j)).square().mean();
    s.std_(j) = std::max(std::sqrt(var), 1e-8);
  }
  s.fitted_ = true;
  return s;
}

Scaler Scaler::from_moments(Vector mean, Vector std_dev) {
  Scaler s;
  s.mean_ = std::move(mean);
  s.std_ = std_dev.cwiseMax(1e-8);
  s.fitted_ = true;
  return s;
}

Matrix Scaler::apply(const Matrix& x) const {
  if (!fitted_) throw ContractError("Scaler::apply before fit");
  if (x.cols() != mean_.size()) {
    throw DimensionError("Scaler::apply: got " + std::to_string(x.cols()) + " stations, fit on " +
                         std::to_string(mean_.size()));
  }
  return (x.rowwise() - mean_.transpose()).array().rowwise() / std_.transpose().array();
}

Matrix Scaler::invert(const Matrix& x) const {
  if (!fitted_) throw ContractError("Scaler::invert before fit");
  if (x.cols() != mean_.size()) {
    throw DimensionError("Scaler::invert: got " + std::to_string(x.cols()) + " stations, fit on " +
                         std::to_string(mean_.size()));
  }
  return (x.array().rowwise() * std_.transpose().array()).matrix().rowwise() + mean_.transpose();
}

void write_series_csv(std::ostream& out, const LoadSeries& series) {
  out << "timestamp";
  for (const std::string& s : series.stations) out << ',' << s;
  out << '\n';
  char buf[32];
  for (Index i = 0; i < series.hours(); ++i) {
    out << format_iso8601_utc(series.start_epoch_s + i * kSecondsPerHour);
    for (Index j = 0; j < series.station_count(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.6f", series.values(i, j));
      out << ',' << buf;
    }
    out << '\n';
  }
}

void write_series_csv_file(const std::string& path, const LoadSeries& series) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write series cache '" + path + "'");
  write_series_csv(out, series);
}

LoadSeries read_series_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("series cache is empty");
  std::vector<std::string> header = split_csv_line(trim(line));
  if (header.size() < 2 || trim(header[0]) != "timestamp") {
    throw DataError("series cache header must start with 'timestamp' and one station column");
  }
  LoadSeries series;
  for (std::size_t i = 1; i < header.size(); ++i) series.stations.push_back(trim(header[i]));
  const Index n = static_cast<Index>(series.stations.size());

  std::vector<std::int64_t> stamps;
  std::vector<Scalar> flat;
  while (std::getline(in, line)) {
    const std::string trimmed = trim(line);
    if (trimmed.empty()) continue;
    std::vector<std::string> fields = split_csv_line(trimmed);
    if (static_cast<Index>(fields.size()) != n + 1) {
      throw DataError("series cache row " + std::to_string(stamps.size() + 2) + " has " +
                      std::to_string(fields.size()) + " fields, expected " + std::to_string(n + 1));
    }
    stamps.push_back(parse_iso8601_utc(fields[0]));
    for (Index j = 0; j < n; ++j) {
      flat.push_back(parse_number(trim(fields[static_cast<std::size_t>(j + 1)]), "load value"));
    }
  }
  if (stamps.empty()) throw DataError("series cache has no data rows");
  for (std::size_t i = 1; i < stamps.size(); ++i) {
    if (stamps[i] - stamps[i - 1] != kSecondsPerHour) {
      throw DataError("series cache rows are not consecutive hours at row " + std::to_string(i + 2));
    }
  }
  series.start_epoch_s = stamps.front();
  const Index rows = static_cast<Index>(stamps.size());
  series.values = Matrix(rows, n);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < n; ++j) {
      series.values(i, j) = flat[static_cast<std::size_t>(i * n + j)];
    }
  }
  return series;
}

LoadSeries read_series_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open series cache '" + path + "'");
  return read_series_csv(in);
}

}  // namespace mstem
