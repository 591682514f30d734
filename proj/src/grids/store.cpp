#include "windsr/store.hpp"

#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cstdio>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "windsr/error.hpp"

namespace windsr {

using nlohmann::json;

namespace {

std::string strip_extension(const std::string& path) {
    const std::string ext = ".f32grid";
    if (path.size() > ext.size() && path.compare(path.size() - ext.size(), ext.size(), ext) == 0)
        return path.substr(0, path.size() - ext.size());
    return path;
}

StoreMeta meta_from_json(const json& j, const std::string& origin) {
    StoreMeta m;
    try {
        m.rows = j.at("rows").get<int>();
        m.cols = j.at("cols").get<int>();
        m.times = j.at("times").get<std::int64_t>();
        const auto& gb = j.at("geobox");
        m.geobox = GeoBox{gb.at("north").get<double>(), gb.at("south").get<double>(),
                          gb.at("east").get<double>(), gb.at("west").get<double>()};
        m.t0 = parse_iso8601(j.at("t0").get<std::string>());
        m.step_hours = j.at("step_hours").get<int>();
        std::string units = j.at("units").get<std::string>();
        if (units == "m/s")
            m.units = Units::meters_per_second;
        else if (units == "normalized")
            m.units = Units::normalized;
        else
            raise(errc::data, "unknown units '" + units + "' in " + origin);
        if (j.contains("norm_max") && !j.at("norm_max").is_null())
            m.norm_max = j.at("norm_max").get<double>();
    } catch (const json::exception& e) {
        raise(errc::data, "bad sidecar " + origin + ": " + e.what());
    }
    m.geobox.validate();
    if (m.rows < 2 || m.cols < 2 || m.times < 1)
        raise(errc::data, "sidecar " + origin + " has degenerate dimensions");
    if (m.step_hours != 1 && m.step_hours != 3)
        raise(errc::data, "sidecar " + origin + " step_hours must be 1 or 3");
    return m;
}

} // namespace

std::string sidecar_path(const std::string& store_path) { return strip_extension(store_path) + ".json"; }

std::string store_meta_to_json(const StoreMeta& meta) {
    json j;
    j["rows"] = meta.rows;
    j["cols"] = meta.cols;
    j["times"] = meta.times;
    j["geobox"] = {{"north", meta.geobox.north},
                   {"south", meta.geobox.south},
                   {"east", meta.geobox.east},
                   {"west", meta.geobox.west}};
    j["t0"] = format_iso8601(meta.t0);
    j["step_hours"] = meta.step_hours;
    j["units"] = units_name(meta.units);
    if (meta.norm_max)
        j["norm_max"] = *meta.norm_max;
    else
        j["norm_max"] = nullptr;
    return j.dump(2) + "\n";
}

DatasetStore::DatasetStore(const std::string& path) : path_(strip_extension(path) + ".f32grid") {
    std::ifstream side(sidecar_path(path_));
    if (!side) raise(errc::io, "cannot read sidecar " + sidecar_path(path_));
    json j;
    try {
        side >> j;
    } catch (const json::exception& e) {
        raise(errc::io, "cannot parse sidecar " + sidecar_path(path_) + ": " + e.what());
    }
    meta_ = meta_from_json(j, sidecar_path(path_));

    fd_ = ::open(path_.c_str(), O_RDONLY);
    if (fd_ < 0) raise(errc::io, "cannot open " + path_);
    struct stat st {};
    if (::fstat(fd_, &st) != 0) {
        ::close(fd_);
        raise(errc::io, "cannot stat " + path_);
    }
    bytes_ = static_cast<size_t>(st.st_size);
    size_t expected = static_cast<size_t>(meta_.times) * meta_.rows * meta_.cols * sizeof(float);
    if (bytes_ != expected) {
        ::close(fd_);
        raise(errc::data, path_ + ": binary length does not match sidecar (" +
                              std::to_string(bytes_) + " vs " + std::to_string(expected) + " bytes)");
    }
    void* p = ::mmap(nullptr, bytes_, PROT_READ, MAP_PRIVATE, fd_, 0);
    if (p == MAP_FAILED) {
        ::close(fd_);
        raise(errc::io, "cannot mmap " + path_);
    }
    data_ = static_cast<const float*>(p);
}

DatasetStore::~DatasetStore() {
    if (data_) ::munmap(const_cast<float*>(data_), bytes_);
    if (fd_ >= 0) ::close(fd_);
}

const float* DatasetStore::frame_data(std::int64_t k) const {
    if (k < 0 || k >= meta_.times) raise(errc::invalid_argument, "frame index out of range");
    return data_ + static_cast<size_t>(k) * meta_.rows * meta_.cols;
}

Field DatasetStore::read_field(std::int64_t k) const {
    Field f(meta_.grid(), meta_.units);
    const float* src = frame_data(k);
    std::memcpy(f.values.data(), src, f.values.size() * sizeof(float));
    return f;
}

FieldSeries DatasetStore::read_series() const {
    FieldSeries s;
    s.t0 = meta_.t0;
    s.step_hours = meta_.step_hours;
    s.grid = meta_.grid();
    s.units = meta_.units;
    s.frames.resize(static_cast<size_t>(meta_.times));
    for (std::int64_t k = 0; k < meta_.times; ++k) {
        const float* src = frame_data(k);
        s.frames[k].assign(src, src + static_cast<size_t>(meta_.rows) * meta_.cols);
    }
    return s;
}

void DatasetStore::set_norm_max(double value) {
    if (!(value > 0.0)) raise(errc::invalid_argument, "norm_max must be positive");
    meta_.norm_max = value;
    std::ofstream side(sidecar_path(path_), std::ios::trunc);
    if (!side) raise(errc::io, "cannot rewrite sidecar " + sidecar_path(path_));
    side << store_meta_to_json(meta_);
}

StoreMeta write_store(const std::string& path, const FieldSeries& series, std::optional<double> norm_max) {
    if (series.frames.empty()) raise(errc::empty, "refusing to write an empty series");
    StoreMeta meta;
    meta.rows = series.grid.rows;
    meta.cols = series.grid.cols;
    meta.times = static_cast<std::int64_t>(series.frames.size());
    meta.geobox = series.grid.box;
    meta.t0 = series.t0;
    meta.step_hours = series.step_hours;
    meta.units = series.units;
    meta.norm_max = norm_max;
    StoreWriter writer(path, meta);
    for (const auto& frame : series.frames) writer.append(frame.data(), frame.size());
    writer.finish();
    return meta;
}

StoreWriter::StoreWriter(const std::string& path, const StoreMeta& meta)
    : path_(strip_extension(path) + ".f32grid"), meta_(meta), file_(nullptr, &std::fclose) {
    std::FILE* f = std::fopen(path_.c_str(), "wb");
    if (!f) raise(errc::io, "cannot write " + path_);
    file_.reset(f);
}

StoreWriter::~StoreWriter() = default;

void StoreWriter::append(const float* frame, size_t count) {
    size_t expected = static_cast<size_t>(meta_.rows) * meta_.cols;
    if (count != expected) raise(errc::shape, "frame size does not match store shape");
    if (std::fwrite(frame, sizeof(float), count, file_.get()) != count)
        raise(errc::io, "short write to " + path_);
    ++written_;
}

void StoreWriter::finish() {
    if (written_ != meta_.times)
        raise(errc::data, "wrote " + std::to_string(written_) + " frames, sidecar declares " +
                              std::to_string(meta_.times));
    if (std::fflush(file_.get()) != 0) raise(errc::io, "flush failed for " + path_);
    file_.reset();
    std::ofstream side(sidecar_path(path_), std::ios::trunc);
    if (!side) raise(errc::io, "cannot write sidecar " + sidecar_path(path_));
    side << store_meta_to_json(meta_);
}

} // namespace windsr
