#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "windsr/field.hpp"
#include "windsr/grids.hpp"

namespace windsr {

struct StationObservation {
    std::string station_id;
    double lat = 0.0;
    double lon = 0.0;
    UtcTime timestamp = 0;
    double pressure_hpa = 0.0;
    double wind_ms = 0.0;
};

struct ParseReport {
    std::vector<StationObservation> records;
    std::vector<std::string> rejected; // one line per malformed row
};

// Reads the station CSV (header: station_id,lat,lon,timestamp_iso,
// pressure_hpa,wind_ms). Malformed rows are collected, valid rows kept;
// zero valid rows is an error.
ParseReport parse_observations(const std::string& path);
ParseReport parse_observations_text(const std::string& csv_text, const std::string& origin);

// Keeps the highest-pressure level of each sounding (station + launch
// timestamp); ties go to the first occurrence.
std::vector<StationObservation> select_surface(const std::vector<StationObservation>& obs);

// Keeps observations within `slot_minutes` before the 00 and 12 UTC marks
// (default: the preceding full hour, [23:00,00:00) and [11:00,12:00)).
std::vector<StationObservation> filter_slots(const std::vector<StationObservation>& obs,
                                             int slot_minutes = 60);

// Collapses each station/slot group to one record: mean wind, timestamp
// rounded up to the terminating hour mark (already-rounded stamps stay put).
std::vector<StationObservation> collapse_hour(const std::vector<StationObservation>& obs);

UtcTime slot_mark(UtcTime t); // the 00/12 UTC mark terminating t's slot

// Gridded product joined against the observations. `denorm` rescales the
// stored values back to m/s (1.0 for stores already in m/s).
struct Product {
    std::string name;
    const FieldSeries* series = nullptr;
    double denorm = 1.0;
    ExtractMethod method = ExtractMethod::nearest;
};

struct ValidationRecord {
    std::string station_id;
    UtcTime timestamp = 0;
    double observed_ms = 0.0;
    std::vector<double> product_ms; // aligned with ValidationSet::product_names
};

struct ValidationSet {
    std::vector<std::string> product_names;
    std::vector<ValidationRecord> records;
    std::int64_t dropped = 0; // observations missing in some product or outside its extent
};

// Joins collapsed observations with every product at the shared (lat, lon,
// timestamp); observations with any missing product frame are dropped and
// counted.
ValidationSet build_validation_set(const std::vector<StationObservation>& obs,
                                   const std::vector<Product>& products);

struct ScoreRow {
    std::string model;
    double mae = 0.0;
    double mse = 0.0;
};

// Per-product MAE (m/s) and MSE over all records.
std::vector<ScoreRow> score(const ValidationSet& set);

std::string score_table_csv(const std::vector<ScoreRow>& rows);

} // namespace windsr
