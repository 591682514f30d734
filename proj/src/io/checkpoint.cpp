#include "windsr/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <memory>

#include <json.hpp>

#include "windsr/diffusion.hpp"

namespace windsr {

using nlohmann::json;

namespace {
constexpr char kMagic[8] = {'W', 'S', 'R', 'C', 'K', 'P', 'T', '1'};
}

std::string CheckpointHeader::to_json() const {
    json j;
    j["model"] = json::parse(model.to_json());
    j["schedule_steps"] = schedule_steps;
    j["embedding_frequencies"] = embedding_freqs;
    j["norm_max_lr"] = norm_max_lr;
    j["norm_max_hr"] = norm_max_hr;
    j["hr_rows"] = hr_rows;
    j["hr_cols"] = hr_cols;
    j["param_count"] = param_count;
    return j.dump();
}

CheckpointHeader CheckpointHeader::from_json(const std::string& text) {
    CheckpointHeader h;
    try {
        json j = json::parse(text);
        h.model = ModelSpec::from_json(j.at("model").dump());
        h.schedule_steps = j.at("schedule_steps").get<int>();
        h.embedding_freqs = j.at("embedding_frequencies").get<std::vector<double>>();
        h.norm_max_lr = j.at("norm_max_lr").get<double>();
        h.norm_max_hr = j.at("norm_max_hr").get<double>();
        h.hr_rows = j.at("hr_rows").get<int>();
        h.hr_cols = j.at("hr_cols").get<int>();
        h.param_count = j.at("param_count").get<std::int64_t>();
    } catch (const json::exception& e) {
        raise(errc::data, std::string("bad checkpoint header: ") + e.what());
    }
    return h;
}

void save_checkpoint(const std::string& path, const CheckpointHeader& header,
                     Predictor<float>& model) {
    CheckpointHeader h = header;
    h.param_count = model.parameter_count();
    if (h.embedding_freqs.empty() && h.model.kind == PredictorKind::diffusion_unet)
        h.embedding_freqs = embedding_frequencies(h.model.embed_frequencies);
    std::string js = h.to_json();

    std::unique_ptr<std::FILE, int (*)(std::FILE*)> f(std::fopen(path.c_str(), "wb"), &std::fclose);
    if (!f) raise(errc::io, "cannot write checkpoint " + path);
    std::uint64_t len = js.size();
    if (std::fwrite(kMagic, 1, 8, f.get()) != 8 || std::fwrite(&len, 8, 1, f.get()) != 1 ||
        std::fwrite(js.data(), 1, js.size(), f.get()) != js.size())
        raise(errc::io, "short write to checkpoint " + path);
    for (auto* p : model.params())
        if (std::fwrite(p->value.data(), sizeof(float), p->size(), f.get()) != p->size())
            raise(errc::io, "short write to checkpoint " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::unique_ptr<std::FILE, int (*)(std::FILE*)> f(std::fopen(path.c_str(), "rb"), &std::fclose);
    if (!f) raise(errc::io, "cannot open checkpoint " + path);
    char magic[8];
    std::uint64_t len = 0;
    if (std::fread(magic, 1, 8, f.get()) != 8 || std::memcmp(magic, kMagic, 8) != 0)
        raise(errc::data, path + " is not a checkpoint file");
    if (std::fread(&len, 8, 1, f.get()) != 1 || len > (1u << 20))
        raise(errc::data, path + ": unreasonable header length");
    std::string js(len, '\0');
    if (std::fread(js.data(), 1, len, f.get()) != len) raise(errc::data, path + ": truncated header");

    LoadedCheckpoint out{CheckpointHeader::from_json(js), Predictor<float>()};
    out.model = Predictor<float>(out.header.model, /*init_seed=*/0);
    std::int64_t read_params = 0;
    for (auto* p : out.model.params()) {
        if (std::fread(p->value.data(), sizeof(float), p->size(), f.get()) != p->size())
            raise(errc::data, path + ": truncated weights");
        read_params += static_cast<std::int64_t>(p->size());
    }
    if (read_params != out.header.param_count)
        raise(errc::data, path + ": weight count does not match header");
    return out;
}

} // namespace windsr
