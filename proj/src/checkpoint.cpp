#include "schnet/checkpoint.hpp"

#include <cstdint>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace schnet {

namespace {
constexpr char kMagic[8] = {'S', 'C', 'H', 'N', 'E', 'T', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

void save_checkpoint(const std::string& path, const SchNetModel& model) {
    nlohmann::json header;
    header["version"] = kVersion;
    const ModelConfig& c = model.config();
    header["config"] = {{"n_features", c.n_features},
                        {"n_interactions", c.n_interactions},
                        {"rbf_min", c.rbf_min},
                        {"rbf_spacing", c.rbf_spacing},
                        {"rbf_count", c.rbf_count},
                        {"rbf_gamma", c.rbf_gamma},
                        {"max_atomic_number", c.max_atomic_number},
                        {"include_self_pairs", c.include_self_pairs}};
    header["normalizer"] = {{"mean", model.normalizer.mean},
                            {"std", model.normalizer.std_dev}};
    nlohmann::json plist = nlohmann::json::array();
    for (const auto& p : model.params())
        plist.push_back({{"name", p.name}, {"shape", p.value.shape}});
    header["params"] = plist;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint " + path);
    const std::string htext = header.dump();
    const std::uint64_t hlen = htext.size();
    out.write(kMagic, sizeof(kMagic));
    out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
    out.write(htext.data(), static_cast<std::streamsize>(hlen));
    for (const auto& p : model.params())
        out.write(reinterpret_cast<const char*>(p.value.data.data()),
                  static_cast<std::streamsize>(p.value.size() * sizeof(double)));
    if (!out) throw std::runtime_error("write failed for checkpoint " + path);
}

SchNetModel load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::string(magic, 8) != std::string(kMagic, 8))
        throw std::runtime_error(path + ": not a checkpoint file");
    std::uint64_t hlen = 0;
    in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
    std::string htext(hlen, '\0');
    in.read(htext.data(), static_cast<std::streamsize>(hlen));
    if (!in) throw std::runtime_error(path + ": truncated header");
    nlohmann::json header = nlohmann::json::parse(htext);
    if (header.at("version").get<std::uint32_t>() != kVersion)
        throw std::runtime_error(path + ": unsupported checkpoint version");

    ModelConfig c;
    const auto& jc = header.at("config");
    c.n_features = jc.at("n_features");
    c.n_interactions = jc.at("n_interactions");
    c.rbf_min = jc.at("rbf_min");
    c.rbf_spacing = jc.at("rbf_spacing");
    c.rbf_count = jc.at("rbf_count");
    c.rbf_gamma = jc.at("rbf_gamma");
    c.max_atomic_number = jc.at("max_atomic_number");
    c.include_self_pairs = jc.at("include_self_pairs");

    SchNetModel model(c, 0);
    model.normalizer.mean = header.at("normalizer").at("mean");
    model.normalizer.std_dev = header.at("normalizer").at("std");

    const auto& plist = header.at("params");
    if (plist.size() != model.params().size())
        throw std::runtime_error(path + ": parameter list mismatch");
    for (std::size_t i = 0; i < model.params().size(); ++i) {
        Param& p = model.params()[i];
        if (plist[i].at("name").get<std::string>() != p.name)
            throw std::runtime_error(path + ": unexpected parameter " +
                                     plist[i].at("name").get<std::string>());
        const auto shape = plist[i].at("shape").get<std::vector<std::size_t>>();
        if (shape != p.value.shape)
            throw std::runtime_error(path + ": shape mismatch for " + p.name);
        in.read(reinterpret_cast<char*>(p.value.data.data()),
                static_cast<std::streamsize>(p.value.size() * sizeof(double)));
    }
    if (!in) throw std::runtime_error(path + ": truncated parameter data");
    return model;
}

}  // namespace schnet
