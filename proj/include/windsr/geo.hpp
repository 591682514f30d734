#pragma once

#include <cmath>
#include <string>

#include "windsr/error.hpp"

namespace windsr {

// Geographic bounding box in degrees. North/south are latitudes, east/west
// longitudes; the study area is regional, so no wrap-around handling.
struct GeoBox {
    double north = 0.0;
    double south = 0.0;
    double east = 0.0;
    double west = 0.0;

    void validate() const {
        if (!(std::isfinite(north) && std::isfinite(south) && std::isfinite(east) && std::isfinite(west)))
            raise(errc::invalid_argument, "geobox coordinates must be finite");
        if (!(north > south)) raise(errc::invalid_argument, "geobox requires north > south");
        if (!(east > west)) raise(errc::invalid_argument, "geobox requires east > west");
    }

    bool contains(double lat, double lon) const {
        return lat >= south && lat <= north && lon >= west && lon <= east;
    }

    bool operator==(const GeoBox& o) const {
        return north == o.north && south == o.south && east == o.east && west == o.west;
    }
};

// Regular lat/lon grid. Row 0 is the northernmost row; cell centers sit
// exactly on the geobox edges, so spacing = extent / (count - 1).
struct Grid2D {
    int rows = 0;
    int cols = 0;
    GeoBox box;

    Grid2D() = default;
    Grid2D(int r, int c, const GeoBox& b) : rows(r), cols(c), box(b) {
        box.validate();
        if (rows < 2 || cols < 2) raise(errc::invalid_argument, "grid needs at least 2 rows and 2 cols");
    }

    double lat_spacing() const { return (box.north - box.south) / (rows - 1); }
    double lon_spacing() const { return (box.east - box.west) / (cols - 1); }
    double lat_of_row(int i) const { return box.north - i * lat_spacing(); }
    double lon_of_col(int j) const { return box.west + j * lon_spacing(); }
    long long cell_count() const { return static_cast<long long>(rows) * cols; }

    bool operator==(const Grid2D& o) const { return rows == o.rows && cols == o.cols && box == o.box; }
};

} // namespace windsr
