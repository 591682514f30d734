#include "windsr/config.hpp"

#include <json.hpp>

namespace windsr {

using nlohmann::json;

void RunConfig::validate_common() const {
    if (training.epochs < 1) raise(errc::invalid_argument, "epochs must be >= 1");
    if (training.batch < 1) raise(errc::invalid_argument, "batch must be >= 1");
    if (!(training.lr_end > 0.0) || !(training.lr_end <= training.lr_start))
        raise(errc::invalid_argument, "need 0 < lr_end <= lr_start");
    if (training.weight_decay_end < 0.0 || training.weight_decay_end > training.weight_decay_start)
        raise(errc::invalid_argument, "need 0 <= weight_decay_end <= weight_decay_start");
    if (sampling.members < 1 || sampling.steps < 1)
        raise(errc::invalid_argument, "sampling members/steps must be >= 1");
    if (metrics.aggregation != "batch" && metrics.aggregation != "global")
        raise(errc::invalid_argument, "metrics.aggregation must be 'batch' or 'global'");
    if (metrics.batch_frames < 1) raise(errc::invalid_argument, "metrics.batch_frames must be >= 1");
    if (threads < 0) raise(errc::invalid_argument, "threads must be >= 0");
}

namespace {

std::vector<std::pair<std::string, std::string>> named_pairs(const json& j, const char* what) {
    std::vector<std::pair<std::string, std::string>> out;
    if (j.is_array()) {
        for (const auto& item : j)
            out.emplace_back(item.at("name").get<std::string>(), item.at("store").get<std::string>());
    } else if (j.is_object()) {
        for (auto it = j.begin(); it != j.end(); ++it)
            out.emplace_back(it.key(), it.value().get<std::string>());
    } else {
        raise(errc::invalid_argument, std::string(what) + " must be an array or object");
    }
    return out;
}

} // namespace

RunConfig run_config_from_json(const std::string& json_text) {
    RunConfig c;
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        raise(errc::invalid_argument, std::string("bad config JSON: ") + e.what());
    }
    try {
        if (j.contains("paths")) {
            const auto& p = j["paths"];
            c.paths.lr_store = p.value("lr_store", "");
            c.paths.hr_store = p.value("hr_store", "");
            c.paths.truth_store = p.value("truth_store", "");
            c.paths.checkpoint = p.value("checkpoint", "");
            c.paths.out_dir = p.value("out_dir", ".");
            if (p.contains("pred_stores")) c.paths.pred_stores = named_pairs(p["pred_stores"], "pred_stores");
            if (p.contains("member_stores"))
                c.paths.member_stores = p["member_stores"].get<std::vector<std::string>>();
        }
        if (j.contains("training")) {
            const auto& t = j["training"];
            c.training.epochs = t.value("epochs", c.training.epochs);
            c.training.batch = t.value("batch", c.training.batch);
            c.training.lr_start = t.value("lr_start", c.training.lr_start);
            c.training.lr_end = t.value("lr_end", c.training.lr_end);
            c.training.weight_decay_start = t.value("weight_decay_start", c.training.weight_decay_start);
            c.training.weight_decay_end = t.value("weight_decay_end", c.training.weight_decay_end);
            c.training.seed = t.value("seed", c.training.seed);
            c.training.kind = t.value("kind", c.training.kind);
            if (t.contains("channels")) c.training.channels = t["channels"].get<std::vector<int>>();
            c.training.blocks_per_level = t.value("blocks_per_level", c.training.blocks_per_level);
            c.training.embed_frequencies = t.value("embed_frequencies", c.training.embed_frequencies);
            c.training.schedule_steps = t.value("schedule_steps", c.training.schedule_steps);
            c.training.continuous_time = t.value("continuous_time", c.training.continuous_time);
            c.training.squared_loss = t.value("squared_loss", c.training.squared_loss);
        }
        if (j.contains("sampling")) {
            const auto& s = j["sampling"];
            c.sampling.members = s.value("members", c.sampling.members);
            c.sampling.steps = s.value("steps", c.sampling.steps);
            c.sampling.seed = s.value("seed", c.sampling.seed);
            c.sampling.keep_members = s.value("keep_members", c.sampling.keep_members);
            c.sampling.stochastic_sigma = s.value("stochastic_sigma", c.sampling.stochastic_sigma);
            c.sampling.eta = s.value("eta", c.sampling.eta);
        }
        if (j.contains("metrics")) {
            const auto& m = j["metrics"];
            c.metrics.aggregation = m.value("aggregation", c.metrics.aggregation);
            c.metrics.batch_frames = m.value("batch_frames", c.metrics.batch_frames);
            c.metrics.series = m.value("series", c.metrics.series);
            c.metrics.maps = m.value("maps", c.metrics.maps);
        }
        if (j.contains("validation")) {
            const auto& v = j["validation"];
            c.validation.station_file = v.value("station_file", "");
            c.validation.slot_minutes = v.value("slot_minutes", 60);
            c.validation.extract = v.value("extract", "nearest");
            if (v.contains("products")) c.validation.products = named_pairs(v["products"], "products");
        }
        if (j.contains("synth")) {
            c.synth = synth_config_from_json(j["synth"].dump());
        } else if (j.contains("hr_rows")) {
            // A bare synth config file is accepted as-is.
            c.synth = synth_config_from_json(json_text);
        }
        c.threads = j.value("threads", 0);
    } catch (const json::exception& e) {
        raise(errc::invalid_argument, std::string("bad config: ") + e.what());
    }
    c.validate_common();
    return c;
}

} // namespace windsr
