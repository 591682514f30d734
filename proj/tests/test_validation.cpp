#include <doctest.h>

#include <cmath>

#include "windsr/rng.hpp"
#include "windsr/validation.hpp"

using namespace windsr;

namespace {

const GeoBox kBox{47.75, 35.0, 18.75, 6.0};

StationObservation obs(const std::string& id, const std::string& iso, double pressure, double wind,
                       double lat = 41.0, double lon = 12.0) {
    StationObservation o;
    o.station_id = id;
    o.lat = lat;
    o.lon = lon;
    o.timestamp = parse_iso8601(iso);
    o.pressure_hpa = pressure;
    o.wind_ms = wind;
    return o;
}

FieldSeries constant_series(UtcTime t0, int frames, float value, int rows = 4, int cols = 4) {
    FieldSeries s;
    s.t0 = t0;
    s.step_hours = 3;
    s.grid = Grid2D(rows, cols, kBox);
    s.units = Units::meters_per_second;
    s.frames.assign(frames, std::vector<float>(static_cast<size_t>(rows) * cols, value));
    return s;
}

} // namespace

TEST_CASE("csv parsing keeps valid rows and reports malformed ones") {
    std::string csv =
        "station_id,lat,lon,timestamp_iso,pressure_hpa,wind_ms\n"
        "ITM00016245,41.65,12.43,2009-01-05T11:32:00Z,1008,6.1\n"
        "ITM00016245,41.65,12.43,2009-01-05T11:32:00Z,925,9.4\n"
        "ITM00016320,40.65,17.95,2009-01-05T23:10:00Z,1012,4.2\n";
    ParseReport r = parse_observations_text(csv, "fixture");
    CHECK(r.records.size() == 3);
    CHECK(r.rejected.empty());
    CHECK(r.records[0].station_id == "ITM00016245");
    CHECK(r.records[0].wind_ms == doctest::Approx(6.1));

    std::string bad =
        "station_id,lat,lon,timestamp_iso,pressure_hpa,wind_ms\n"
        "A,41.0,12.0,2009-01-05T11:32:00Z,-5,6.1\n"   // negative pressure
        "B,41.0,12.0,not-a-time,1000,4.0\n"           // bad timestamp
        "C,41.0,12.0,2009-01-05T11:00:00Z,1000,3.0\n"
        "D,200.0,12.0,2009-01-05T11:00:00Z,1000,3.0\n" // bad latitude
        "E,41.0\n";                                    // short row
    ParseReport r2 = parse_observations_text(bad, "fixture");
    CHECK(r2.records.size() == 1);
    CHECK(r2.rejected.size() == 4);

    // 10-row mixed fixture: 8 valid + 2 malformed
    std::string mixed = "station_id,lat,lon,timestamp_iso,pressure_hpa,wind_ms\n";
    for (int i = 0; i < 8; ++i)
        mixed += "S" + std::to_string(i) + ",41.0,12.0,2009-01-05T11:0" + std::to_string(i) +
                 ":00Z,1000,5.0\n";
    mixed += "S8,41.0,12.0,2009-01-05T11:08:00Z,0,5.0\n";  // zero pressure
    mixed += "S9,41.0,12.0,2009-01-05T11:09:00Z,1000,-1\n"; // negative wind
    ParseReport r3 = parse_observations_text(mixed, "fixture");
    CHECK(r3.records.size() == 8);
    CHECK(r3.rejected.size() == 2);

    CHECK_THROWS_AS(parse_observations_text("station_id,lat\n", "empty"), Error);
    CHECK_THROWS_AS(parse_observations("/nonexistent/stations.csv"), Error);
}

TEST_CASE("surface selection keeps the highest pressure per sounding") {
    std::vector<StationObservation> soundings = {
        obs("A", "2009-01-05T11:30:00Z", 850, 12.0),
        obs("A", "2009-01-05T11:30:00Z", 925, 9.0),
        obs("A", "2009-01-05T11:30:00Z", 1000, 6.0),
        obs("B", "2009-01-05T11:30:00Z", 980, 5.0), // single level sounding
    };
    auto surface = select_surface(soundings);
    REQUIRE(surface.size() == 2);
    CHECK(surface[0].pressure_hpa == 1000);
    CHECK(surface[0].wind_ms == doctest::Approx(6.0));
    CHECK(surface[1].station_id == "B");

    // ties break to the first occurrence
    std::vector<StationObservation> tie = {
        obs("C", "2009-01-05T11:30:00Z", 1000, 1.0),
        obs("C", "2009-01-05T11:30:00Z", 1000, 2.0),
    };
    auto kept = select_surface(tie);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].wind_ms == doctest::Approx(1.0));

    // brute-force per-group max oracle on a 5-sounding fixture
    std::vector<StationObservation> many;
    Rng rng(3);
    for (int s = 0; s < 5; ++s)
        for (int level = 0; level < 4; ++level)
            many.push_back(obs("S" + std::to_string(s), "2009-01-05T11:30:00Z",
                               900.0 + rng.uniform(0.0, 120.0), rng.uniform(0.0, 15.0)));
    auto got = select_surface(many);
    REQUIRE(got.size() == 5);
    for (int s = 0; s < 5; ++s) {
        double best_p = -1.0;
        double best_w = -1.0;
        for (const auto& o : many)
            if (o.station_id == "S" + std::to_string(s) && o.pressure_hpa > best_p) {
                best_p = o.pressure_hpa;
                best_w = o.wind_ms;
            }
        CHECK(got[s].pressure_hpa == doctest::Approx(best_p));
        CHECK(got[s].wind_ms == doctest::Approx(best_w));
    }
}

TEST_CASE("slot filter keeps the hour before 00 and 12 UTC, exhaustively") {
    CHECK(filter_slots({obs("A", "2009-01-05T11:30:00Z", 1000, 5.0)}).size() == 1);
    CHECK(filter_slots({obs("A", "2009-01-05T06:00:00Z", 1000, 5.0)}).empty());

    // 24-hourly sweep: exactly the 23:xx and 11:xx rows survive
    std::vector<StationObservation> sweep;
    for (int h = 0; h < 24; ++h) {
        char iso[40];
        std::snprintf(iso, sizeof(iso), "2009-01-05T%02d:00:00Z", h);
        sweep.push_back(obs("A", iso, 1000, 5.0));
    }
    auto kept = filter_slots(sweep);
    REQUIRE(kept.size() == 2);
    CHECK(hour_of_day(kept[0].timestamp) == 11);
    CHECK(hour_of_day(kept[1].timestamp) == 23);

    // minute-level sweep around the marks
    CHECK(filter_slots({obs("A", "2009-01-05T23:59:00Z", 1000, 5.0)}).size() == 1);
    CHECK(filter_slots({obs("A", "2009-01-06T00:00:00Z", 1000, 5.0)}).empty());
    CHECK(filter_slots({obs("A", "2009-01-05T12:00:00Z", 1000, 5.0)}).empty());

    // configurable width for sensitivity studies
    CHECK(filter_slots({obs("A", "2009-01-05T10:30:00Z", 1000, 5.0)}, 120).size() == 1);
}

TEST_CASE("pipeline order invariance: surface and slot filters commute") {
    std::vector<StationObservation> fixture;
    Rng rng(9);
    const char* times[] = {"2009-01-05T11:20:00Z", "2009-01-05T11:40:00Z", "2009-01-05T23:30:00Z",
                           "2009-01-05T06:00:00Z", "2009-01-05T13:10:00Z"};
    for (int s = 0; s < 3; ++s)
        for (const char* t : times)
            for (int level = 0; level < 3; ++level)
                fixture.push_back(obs("S" + std::to_string(s), t, 850.0 + 50.0 * level,
                                      rng.uniform(0.0, 12.0)));
    auto a = filter_slots(select_surface(fixture));
    auto b = select_surface(filter_slots(fixture));
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].station_id == b[i].station_id);
        CHECK(a[i].timestamp == b[i].timestamp);
        CHECK(a[i].wind_ms == doctest::Approx(b[i].wind_ms));
    }
}

TEST_CASE("hour collapse averages wind and rounds to the terminating mark") {
    // single record keeps its wind, rounded to 12:00
    auto one = collapse_hour({obs("A", "2009-01-05T11:47:00Z", 1000, 6.0)});
    REQUIRE(one.size() == 1);
    CHECK(one[0].wind_ms == doctest::Approx(6.0));
    CHECK(format_iso8601(one[0].timestamp) == "2009-01-05T12:00:00Z");

    // two records in one slot average
    auto two = collapse_hour({obs("A", "2009-01-05T11:10:00Z", 1000, 4.0),
                              obs("A", "2009-01-05T11:50:00Z", 1000, 6.0)});
    REQUIRE(two.size() == 1);
    CHECK(two[0].wind_ms == doctest::Approx(5.0));

    // 3-record 23:xx slot rounds into the next day
    auto three = collapse_hour({obs("A", "2009-01-05T23:05:00Z", 1000, 3.0),
                                obs("A", "2009-01-05T23:25:00Z", 1000, 4.0),
                                obs("A", "2009-01-05T23:45:00Z", 1000, 8.0)});
    REQUIRE(three.size() == 1);
    CHECK(three[0].wind_ms == doctest::Approx(5.0));
    CHECK(format_iso8601(three[0].timestamp) == "2009-01-06T00:00:00Z");

    // already-rounded stamps stay put (idempotent)
    auto exact = collapse_hour({obs("A", "2009-01-06T00:00:00Z", 1000, 7.0)});
    CHECK(format_iso8601(exact[0].timestamp) == "2009-01-06T00:00:00Z");
}

TEST_CASE("validation set joins products and counts drops") {
    UtcTime t0 = parse_iso8601("2009-01-05T00:00:00Z");
    FieldSeries a = constant_series(t0, 8, 5.0f);
    FieldSeries b = constant_series(t0, 4, 7.0f); // shorter: later stamps missing

    std::vector<Product> products = {{"alpha", &a, 1.0, ExtractMethod::nearest},
                                     {"beta", &b, 1.0, ExtractMethod::nearest}};
    std::vector<StationObservation> observations = {
        obs("S1", "2009-01-05T00:00:00Z", 1000, 5.0),
        obs("S1", "2009-01-05T12:00:00Z", 1000, 6.0), // beta has no 12:00 frame
        obs("S2", "2009-01-05T03:00:00Z", 1000, 4.0),
    };
    ValidationSet set = build_validation_set(observations, products);
    CHECK(set.records.size() == 2);
    CHECK(set.dropped == 1);
    CHECK(set.product_names == std::vector<std::string>{"alpha", "beta"});
    CHECK(set.records[0].product_ms == std::vector<double>{5.0, 7.0});

    // record count conservation: used + dropped equals inputs
    CHECK(set.records.size() + set.dropped == observations.size());

    // out-of-extent stations drop as well; an all-empty join is an error
    std::vector<StationObservation> mixed = {
        obs("S1", "2009-01-05T00:00:00Z", 1000, 5.0),
        obs("S3", "2009-01-05T00:00:00Z", 1000, 5.0, 60.0, 12.0)};
    ValidationSet set2 = build_validation_set(mixed, {{"alpha", &a, 1.0, ExtractMethod::nearest}});
    CHECK(set2.records.size() == 1);
    CHECK(set2.dropped == 1);

    std::vector<StationObservation> none = {obs("S3", "2010-06-05T00:00:00Z", 1000, 5.0)};
    CHECK_THROWS_AS(build_validation_set(none, products), Error);
}

TEST_CASE("scoring: hand values, self-score zero, and MAE <= sqrt(MSE)") {
    UtcTime t0 = parse_iso8601("2009-01-05T00:00:00Z");
    FieldSeries six = constant_series(t0, 2, 6.0f);
    std::vector<Product> products = {{"model", &six, 1.0, ExtractMethod::nearest}};
    std::vector<StationObservation> one = {obs("S1", "2009-01-05T00:00:00Z", 1000, 5.0)};
    auto rows = score(build_validation_set(one, products));
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].mae == doctest::Approx(1.0));
    CHECK(rows[0].mse == doctest::Approx(1.0));

    // product equal to the observations scores exactly zero
    std::vector<StationObservation> five = {obs("S1", "2009-01-05T00:00:00Z", 1000, 6.0)};
    auto zero_rows = score(build_validation_set(five, products));
    CHECK(zero_rows[0].mae == 0.0);
    CHECK(zero_rows[0].mse == 0.0);

    // 3-station 4-timestamp fixture vs a nested-loop join oracle
    FieldSeries grid_a = constant_series(t0, 4, 5.5f);
    FieldSeries grid_b = constant_series(t0, 4, 4.5f);
    std::vector<Product> two_products = {{"A", &grid_a, 1.0, ExtractMethod::nearest},
                                         {"B", &grid_b, 1.0, ExtractMethod::nearest}};
    std::vector<StationObservation> grid_obs;
    double expect_count = 0;
    for (int s = 0; s < 3; ++s)
        for (int t = 0; t < 4; ++t) {
            char iso[40];
            std::snprintf(iso, sizeof(iso), "2009-01-05T%02d:00:00Z", 3 * t);
            grid_obs.push_back(obs("S" + std::to_string(s), iso, 1000, 4.0 + s + 0.5 * t));
            expect_count += 1;
        }
    ValidationSet set = build_validation_set(grid_obs, two_products);
    CHECK(static_cast<double>(set.records.size()) == expect_count);
    auto table = score(set);
    double mae_a = 0, mse_a = 0;
    for (const auto& o : grid_obs) {
        mae_a += std::abs(5.5 - o.wind_ms);
        mse_a += (5.5 - o.wind_ms) * (5.5 - o.wind_ms);
    }
    CHECK(table[0].mae == doctest::Approx(mae_a / grid_obs.size()).epsilon(1e-9));
    CHECK(table[0].mse == doctest::Approx(mse_a / grid_obs.size()).epsilon(1e-9));
    for (const auto& row : table) CHECK(row.mae <= std::sqrt(row.mse) + 1e-12);
}

TEST_CASE("score table renders the Model,MAE,MSE layout") {
    std::vector<ScoreRow> rows = {
        {"ERA5", 2.04, 8.45}, {"CERRA", 1.86, 7.39}, {"Ensemble Diffusion", 1.87, 7.41}};
    std::string csv = score_table_csv(rows);
    CHECK(csv == "Model,MAE,MSE\n"
                 "ERA5,2.04,8.45\n"
                 "CERRA,1.86,7.39\n"
                 "Ensemble Diffusion,1.87,7.41\n");
}
