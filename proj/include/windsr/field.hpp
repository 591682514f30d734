#pragma once

#include <cstdint>
#include <vector>

#include "windsr/geo.hpp"
#include "windsr/timeutil.hpp"

namespace windsr {

enum class Units { meters_per_second, normalized };

inline const char* units_name(Units u) {
    return u == Units::meters_per_second ? "m/s" : "normalized";
}

// One 2-D scalar field on a regular lat/lon grid. Values are stored in
// 32-bit floats, row-major, row 0 north.
struct Field {
    Grid2D grid;
    Units units = Units::meters_per_second;
    std::vector<float> values; // rows * cols

    Field() = default;
    Field(const Grid2D& g, Units u, float fill = 0.0f)
        : grid(g), units(u), values(static_cast<size_t>(g.cell_count()), fill) {}

    float& at(int r, int c) { return values[static_cast<size_t>(r) * grid.cols + c]; }
    float at(int r, int c) const { return values[static_cast<size_t>(r) * grid.cols + c]; }
};

// A time series of fields sharing one grid and one units tag. `step_hours`
// is uniform; frame k is at t0 + k * step_hours.
struct FieldSeries {
    UtcTime t0{};
    int step_hours = 3;
    Grid2D grid;
    Units units = Units::meters_per_second;
    std::vector<std::vector<float>> frames;

    size_t size() const { return frames.size(); }
    UtcTime time_of(size_t k) const { return t0 + static_cast<std::int64_t>(k) * step_hours * 3600; }

    Field field_at(size_t k) const {
        Field f(grid, units);
        f.values = frames[k];
        return f;
    }

    // Index of the frame at time t, or -1 if t is not on the series' axis.
    std::int64_t index_of(UtcTime t) const {
        std::int64_t span = t - t0;
        std::int64_t step = static_cast<std::int64_t>(step_hours) * 3600;
        if (span < 0 || span % step != 0) return -1;
        std::int64_t k = span / step;
        return k < static_cast<std::int64_t>(frames.size()) ? k : -1;
    }
};

} // namespace windsr
