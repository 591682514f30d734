#include "windsr/validation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace windsr {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    fields.push_back(cur);
    return fields;
}

bool parse_double(const std::string& s, double& out) {
    try {
        size_t pos = 0;
        out = std::stod(s, &pos);
        return pos == s.size() && std::isfinite(out);
    } catch (...) {
        return false;
    }
}

} // namespace

ParseReport parse_observations_text(const std::string& csv_text, const std::string& origin) {
    ParseReport report;
    std::istringstream in(csv_text);
    std::string line;
    int line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto fields = split_csv_line(line);
        if (!header_seen) {
            header_seen = true;
            if (fields.size() >= 1 && fields[0] == "station_id") continue; // header row
        }
        auto reject = [&](const std::string& why) {
            report.rejected.push_back(origin + ":" + std::to_string(line_no) + ": " + why);
        };
        if (fields.size() != 6) {
            reject("expected 6 fields, got " + std::to_string(fields.size()));
            continue;
        }
        StationObservation obs;
        obs.station_id = fields[0];
        if (obs.station_id.empty()) {
            reject("empty station_id");
            continue;
        }
        if (!parse_double(fields[1], obs.lat) || obs.lat < -90.0 || obs.lat > 90.0) {
            reject("bad latitude '" + fields[1] + "'");
            continue;
        }
        if (!parse_double(fields[2], obs.lon) || obs.lon < -180.0 || obs.lon > 360.0) {
            reject("bad longitude '" + fields[2] + "'");
            continue;
        }
        try {
            obs.timestamp = parse_iso8601(fields[3]);
        } catch (const Error&) {
            reject("bad timestamp '" + fields[3] + "'");
            continue;
        }
        if (!parse_double(fields[4], obs.pressure_hpa) || !(obs.pressure_hpa > 0.0)) {
            reject("pressure must be positive, got '" + fields[4] + "'");
            continue;
        }
        if (!parse_double(fields[5], obs.wind_ms) || obs.wind_ms < 0.0) {
            reject("wind must be >= 0, got '" + fields[5] + "'");
            continue;
        }
        report.records.push_back(std::move(obs));
    }
    if (report.records.empty()) raise(errc::empty, origin + ": no valid observation rows");
    return report;
}

ParseReport parse_observations(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(errc::io, "cannot read station file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_observations_text(buf.str(), path);
}

std::vector<StationObservation> select_surface(const std::vector<StationObservation>& obs) {
    // A sounding is one station's launch at one timestamp reporting several
    // pressure levels; the highest pressure approximates the surface.
    std::map<std::pair<std::string, UtcTime>, size_t> best;
    std::vector<StationObservation> out;
    for (const auto& o : obs) {
        auto key = std::make_pair(o.station_id, o.timestamp);
        auto it = best.find(key);
        if (it == best.end()) {
            best.emplace(key, out.size());
            out.push_back(o);
        } else if (o.pressure_hpa > out[it->second].pressure_hpa) {
            out[it->second] = o;
        }
    }
    return out;
}

UtcTime slot_mark(UtcTime t) {
    // Next 00 or 12 UTC mark; timestamps already on a mark terminate their
    // own slot (rounding is idempotent).
    const std::int64_t half_day = 43200;
    std::int64_t rem = ((t % half_day) + half_day) % half_day;
    return rem == 0 ? t : t + (half_day - rem);
}

std::vector<StationObservation> filter_slots(const std::vector<StationObservation>& obs,
                                             int slot_minutes) {
    if (slot_minutes < 1 || slot_minutes > 720)
        raise(errc::invalid_argument, "slot width must be in [1, 720] minutes");
    std::vector<StationObservation> out;
    for (const auto& o : obs) {
        std::int64_t to_mark = slot_mark(o.timestamp) - o.timestamp;
        if (to_mark > 0 && to_mark <= static_cast<std::int64_t>(slot_minutes) * 60)
            out.push_back(o);
    }
    return out;
}

std::vector<StationObservation> collapse_hour(const std::vector<StationObservation>& obs) {
    struct Slot {
        StationObservation first;
        double wind_sum = 0.0;
        int count = 0;
    };
    std::map<std::pair<std::string, UtcTime>, Slot> slots;
    std::vector<std::pair<std::string, UtcTime>> order;
    for (const auto& o : obs) {
        auto key = std::make_pair(o.station_id, slot_mark(o.timestamp));
        auto it = slots.find(key);
        if (it == slots.end()) {
            Slot s;
            s.first = o;
            s.wind_sum = o.wind_ms;
            s.count = 1;
            slots.emplace(key, s);
            order.push_back(key);
        } else {
            it->second.wind_sum += o.wind_ms;
            it->second.count += 1;
        }
    }
    std::vector<StationObservation> out;
    out.reserve(order.size());
    for (const auto& key : order) {
        const Slot& s = slots.at(key);
        StationObservation o = s.first;
        o.timestamp = key.second;
        o.wind_ms = s.wind_sum / s.count;
        out.push_back(std::move(o));
    }
    return out;
}

ValidationSet build_validation_set(const std::vector<StationObservation>& obs,
                                   const std::vector<Product>& products) {
    if (products.empty()) raise(errc::invalid_argument, "need at least one product");
    ValidationSet set;
    for (const auto& p : products) set.product_names.push_back(p.name);

    std::int64_t matched_times = 0;
    for (const auto& o : obs) {
        ValidationRecord rec;
        rec.station_id = o.station_id;
        rec.timestamp = o.timestamp;
        rec.observed_ms = o.wind_ms;
        bool ok = true;
        for (const auto& p : products) {
            std::int64_t k = p.series->index_of(o.timestamp);
            if (k < 0) {
                ok = false;
                break;
            }
            if (!p.series->grid.box.contains(o.lat, o.lon)) {
                ok = false;
                break;
            }
            Field f = p.series->field_at(static_cast<size_t>(k));
            rec.product_ms.push_back(extract_gridpoint(f, o.lat, o.lon, p.method) * p.denorm);
        }
        if (ok) {
            set.records.push_back(std::move(rec));
            ++matched_times;
        } else {
            ++set.dropped;
        }
    }
    if (set.records.empty()) raise(errc::alignment, "no observation matches any shared product timestamp");
    (void)matched_times;
    return set;
}

std::vector<ScoreRow> score(const ValidationSet& set) {
    if (set.records.empty()) raise(errc::invalid_argument, "cannot score an empty record set");
    std::vector<ScoreRow> rows;
    for (size_t p = 0; p < set.product_names.size(); ++p) {
        double abs_acc = 0.0, sq_acc = 0.0;
        for (const auto& rec : set.records) {
            double d = rec.product_ms[p] - rec.observed_ms;
            abs_acc += std::abs(d);
            sq_acc += d * d;
        }
        ScoreRow row;
        row.model = set.product_names[p];
        row.mae = abs_acc / static_cast<double>(set.records.size());
        row.mse = sq_acc / static_cast<double>(set.records.size());
        rows.push_back(row);
    }
    return rows;
}

std::string score_table_csv(const std::vector<ScoreRow>& rows) {
    std::string out = "Model,MAE,MSE\n";
    char buf[128];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%s,%.2f,%.2f\n", r.model.c_str(), r.mae, r.mse);
        out += buf;
    }
    return out;
}

} // namespace windsr
