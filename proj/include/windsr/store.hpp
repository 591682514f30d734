#pragma once

#include <cstdint>
#include <cstdio>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "windsr/field.hpp"

namespace windsr {

// Metadata sidecar of a `.f32grid` file. The binary holds raw 32-bit
// little-endian floats, row-major [time][row][col]; the sidecar lives next
// to it as `<name>.json`.
struct StoreMeta {
    int rows = 0;
    int cols = 0;
    std::int64_t times = 0;
    GeoBox geobox;
    UtcTime t0 = 0;
    int step_hours = 3;
    Units units = Units::meters_per_second;
    std::optional<double> norm_max; // training-split maximum, if fitted

    Grid2D grid() const { return Grid2D(rows, cols, geobox); }
    UtcTime time_of(std::int64_t k) const { return t0 + k * static_cast<std::int64_t>(step_hours) * 3600; }
};

// Read-only, memory-mapped view of a stored series. Frames are decoded on
// demand; the whole dataset is never materialized.
class DatasetStore {
public:
    // `path` names the binary, with or without the .f32grid extension.
    explicit DatasetStore(const std::string& path);
    ~DatasetStore();

    DatasetStore(const DatasetStore&) = delete;
    DatasetStore& operator=(const DatasetStore&) = delete;

    const StoreMeta& meta() const { return meta_; }
    const std::string& path() const { return path_; }

    // Raw pointer to frame k (rows*cols floats), valid while the store lives.
    const float* frame_data(std::int64_t k) const;
    Field read_field(std::int64_t k) const;
    FieldSeries read_series() const; // loads everything; test/fixture use

    // Rewrites the sidecar with a fitted normalization maximum.
    void set_norm_max(double value);

private:
    std::string path_;
    StoreMeta meta_;
    int fd_ = -1;
    const float* data_ = nullptr;
    size_t bytes_ = 0;
};

// Writes a series (and sidecar) to `path`; returns the sidecar-consistent
// meta. Overwrites existing files.
StoreMeta write_store(const std::string& path, const FieldSeries& series,
                      std::optional<double> norm_max = std::nullopt);

// Incremental writer for streaming pipelines (sampling emits frame by frame).
class StoreWriter {
public:
    StoreWriter(const std::string& path, const StoreMeta& meta);
    ~StoreWriter();
    void append(const float* frame, size_t count);
    void finish(); // pads meta.times check, flushes sidecar

private:
    std::string path_;
    StoreMeta meta_;
    std::int64_t written_ = 0;
    std::unique_ptr<std::FILE, int (*)(std::FILE*)> file_;
};

std::string sidecar_path(const std::string& store_path);
std::string store_meta_to_json(const StoreMeta& meta);

} // namespace windsr
