#include "sitent/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace sitent {

namespace {

constexpr char kMagic[8] = {'S', 'I', 'T', 'E', 'N', 'T', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

using nlohmann::json;

void write_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::istream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

json config_to_json(const TrainConfig& c) {
    return json{{"hidden_units", c.hidden_units},
                {"dropout", c.dropout},
                {"clip_norm", c.clip_norm},
                {"l2_lambda", c.l2_lambda},
                {"learning_rate", c.learning_rate},
                {"batch_se", c.batch_se},
                {"max_epochs", c.max_epochs},
                {"runs", c.runs},
                {"seed", c.seed},
                {"workers", c.workers},
                {"adam_beta1", c.adam_beta1},
                {"adam_beta2", c.adam_beta2},
                {"adam_eps", c.adam_eps}};
}

TrainConfig config_from_json(const json& j) {
    TrainConfig c;
    c.hidden_units = j.at("hidden_units").get<std::size_t>();
    c.dropout = j.at("dropout").get<double>();
    c.clip_norm = j.at("clip_norm").get<double>();
    c.l2_lambda = j.at("l2_lambda").get<double>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.batch_se = j.at("batch_se").get<std::size_t>();
    c.max_epochs = j.at("max_epochs").get<std::size_t>();
    c.runs = j.at("runs").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.workers = j.at("workers").get<std::size_t>();
    c.adam_beta1 = j.at("adam_beta1").get<double>();
    c.adam_beta2 = j.at("adam_beta2").get<double>();
    c.adam_eps = j.at("adam_eps").get<double>();
    return c;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);

    auto tensors = collect_tensors(const_cast<ModelParams&>(ck.params));
    json header;
    header["variant"] = std::string(to_string(ck.params.variant));
    header["input_dim"] = ck.params.input_dim;
    header["hidden"] = ck.params.hidden;
    header["labels"] = se_label_names();
    header["config"] = config_to_json(ck.config);
    header["seed"] = ck.seed;
    header["epoch"] = ck.epoch;
    header["adam"] = ck.adam.has_value();
    json tlist = json::array();
    for (const auto& t : tensors) tlist.push_back({{"name", t.name}, {"size", t.size}});
    header["tensors"] = tlist;

    const std::string hs = header.dump();
    out.write(kMagic, sizeof(kMagic));
    write_u32(out, kVersion);
    write_u32(out, static_cast<std::uint32_t>(hs.size()));
    out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    for (const auto& t : tensors)
        out.write(reinterpret_cast<const char*>(t.data),
                  static_cast<std::streamsize>(t.size * sizeof(double)));
    if (ck.adam) {
        out.write(reinterpret_cast<const char*>(ck.adam->m.data()),
                  static_cast<std::streamsize>(ck.adam->m.size() * sizeof(double)));
        out.write(reinterpret_cast<const char*>(ck.adam->v.data()),
                  static_cast<std::streamsize>(ck.adam->v.size() * sizeof(double)));
        const std::uint64_t t = ck.adam->t;
        out.write(reinterpret_cast<const char*>(&t), sizeof(t));
    }
    if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);

    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error(path + " is not a checkpoint file");
    const std::uint32_t version = read_u32(in);
    if (version != kVersion)
        throw std::runtime_error("unsupported checkpoint version " + std::to_string(version) +
                                 " (this build reads version " + std::to_string(kVersion) + ")");

    const std::uint32_t hlen = read_u32(in);
    std::string hs(hlen, '\0');
    in.read(hs.data(), hlen);
    if (!in) throw std::runtime_error("truncated checkpoint header: " + path);
    const json header = json::parse(hs);

    auto variant = parse_variant(header.at("variant").get<std::string>());
    if (!variant) throw std::runtime_error("checkpoint has unknown variant tag");

    Checkpoint ck;
    ck.config = config_from_json(header.at("config"));
    ck.seed = header.at("seed").get<std::uint64_t>();
    ck.epoch = header.at("epoch").get<std::size_t>();

    ModelParams proto;
    proto.variant = *variant;
    proto.input_dim = header.at("input_dim").get<std::size_t>();
    proto.hidden = header.at("hidden").get<std::size_t>();
    ck.params = ModelParams::zeros_like(proto);
    ck.params.variant = *variant;

    auto tensors = collect_tensors(ck.params);
    const auto& tlist = header.at("tensors");
    if (tlist.size() != tensors.size())
        throw std::runtime_error("checkpoint tensor list does not match this variant");
    std::size_t total = 0;
    for (std::size_t i = 0; i < tensors.size(); ++i) {
        if (tlist[i].at("name").get<std::string>() != tensors[i].name ||
            tlist[i].at("size").get<std::size_t>() != tensors[i].size)
            throw std::runtime_error("checkpoint tensor " + tensors[i].name + " has unexpected shape");
        total += tensors[i].size;
    }
    for (auto& t : tensors)
        in.read(reinterpret_cast<char*>(t.data), static_cast<std::streamsize>(t.size * sizeof(double)));

    if (header.at("adam").get<bool>()) {
        AdamState st;
        st.m.resize(total);
        st.v.resize(total);
        in.read(reinterpret_cast<char*>(st.m.data()),
                static_cast<std::streamsize>(total * sizeof(double)));
        in.read(reinterpret_cast<char*>(st.v.data()),
                static_cast<std::streamsize>(total * sizeof(double)));
        std::uint64_t t = 0;
        in.read(reinterpret_cast<char*>(&t), sizeof(t));
        st.t = t;
        ck.adam = std::move(st);
    }
    if (!in) throw std::runtime_error("truncated checkpoint payload: " + path);
    return ck;
}

}  // namespace sitent
