#include "fgsan/checkpoint.hpp"

#include "binary_io.hpp"

#include <fstream>

#include <json.hpp>

namespace fgsan {

namespace {

constexpr char kMagic[8] = {'F', 'G', 'S', 'A', 'N', 'C', 'K', '\0'};

template <typename T>
T read_le(std::istream& in) {
    return detail::read_le<T, CheckpointError>(in, "corrupt checkpoint: unexpected end of data");
}

std::uint32_t as_u32(Eigen::Index v) { return static_cast<std::uint32_t>(v); }

}  // namespace

std::vector<GroupShape> parameter_shapes(const FgsanParams& params) {
    std::vector<GroupShape> shapes;
    const auto& enc = params.encoder;
    for (std::size_t l = 0; l < enc.layers.size(); ++l) {
        const std::string prefix = "encoder.layer" + std::to_string(l);
        const auto& layer = enc.layers[l];
        shapes.push_back({prefix + ".weight", as_u32(layer.weight.rows()), as_u32(layer.weight.cols())});
        shapes.push_back({prefix + ".attn", as_u32(layer.attn_vector.size()), 1});
    }
    shapes.push_back({"encoder.spatial", as_u32(enc.spatial.bias.size()), 1});
    shapes.push_back({"selector.gate_logits", as_u32(params.selector.gate_logits.size()), 1});
    const auto& mlp = params.mlp;
    shapes.push_back({"mlp.hidden_weight", as_u32(mlp.hidden_weight.rows()), as_u32(mlp.hidden_weight.cols())});
    shapes.push_back({"mlp.hidden_bias", as_u32(mlp.hidden_bias.size()), 1});
    shapes.push_back({"mlp.out_weight", as_u32(mlp.out_weight.size()), 1});
    shapes.push_back({"mlp.out_bias", 1, 1});
    return shapes;
}

std::filesystem::path manifest_path(const std::filesystem::path& path) {
    auto out = path;
    out += ".json";
    return out;
}

void save_checkpoint(const std::filesystem::path& path, const FgsanParams& params, const ModelConfig& config) {
    auto copy = params;
    const auto registry = copy.registry();
    const auto shapes = parameter_shapes(params);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw CheckpointError("cannot write checkpoint '" + path.string() + "'");
    }
    out.write(kMagic, sizeof(kMagic));
    detail::write_le<std::uint32_t>(out, kCheckpointFormatVersion);
    detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(shapes.size()));
    for (const auto& s : shapes) {
        detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.name.size()));
        out.write(s.name.data(), static_cast<std::streamsize>(s.name.size()));
        detail::write_le<std::uint32_t>(out, s.rows);
        detail::write_le<std::uint32_t>(out, s.cols);
    }
    for (const auto& group : registry) {
        for (double v : group.values) {
            detail::write_le<double>(out, v);
        }
    }
    if (!out) {
        throw CheckpointError("failed while writing '" + path.string() + "'");
    }

    nlohmann::json manifest = {{"format_version", kCheckpointFormatVersion},
                               {"model", to_json(config)},
                               {"feature_dim", params.encoder.in_dim()},
                               {"regions", params.selector.gate_logits.size()}};
    nlohmann::json groups = nlohmann::json::array();
    for (const auto& s : shapes) {
        groups.push_back({{"name", s.name}, {"rows", s.rows}, {"cols", s.cols}});
    }
    manifest["groups"] = groups;
    std::ofstream mout(manifest_path(path), std::ios::trunc);
    if (!mout) {
        throw CheckpointError("cannot write checkpoint manifest for '" + path.string() + "'");
    }
    mout << manifest.dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream min(manifest_path(path));
    if (!min) {
        throw CheckpointError("missing checkpoint manifest '" + manifest_path(path).string() + "'");
    }
    Checkpoint ck;
    try {
        const auto manifest = nlohmann::json::parse(min);
        if (manifest.at("format_version").get<std::uint32_t>() != kCheckpointFormatVersion) {
            throw CheckpointError("unsupported checkpoint manifest version");
        }
        ck.config = model_config_from_json(manifest.at("model"));
        ck.feature_dim = manifest.at("feature_dim").get<Eigen::Index>();
        ck.regions = manifest.at("regions").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError(std::string("malformed checkpoint manifest: ") + e.what());
    }

    Rng unused(0);
    ck.params = init_params(ck.config, ck.feature_dim, ck.regions, unused);
    const auto expected = parameter_shapes(ck.params);

    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw CheckpointError("cannot open checkpoint '" + path.string() + "'");
    }
    char magic[sizeof(kMagic)] = {};
    in.read(magic, sizeof(magic));
    if (!in || !std::equal(std::begin(magic), std::end(magic), std::begin(kMagic))) {
        throw CheckpointError("not a checkpoint file: '" + path.string() + "'");
    }
    if (read_le<std::uint32_t>(in) != kCheckpointFormatVersion) {
        throw CheckpointError("unsupported checkpoint version");
    }
    if (read_le<std::uint32_t>(in) != expected.size()) {
        throw CheckpointError("checkpoint group count differs from manifest");
    }
    for (const auto& want : expected) {
        const auto len = read_le<std::uint32_t>(in);
        if (len > 256) {
            throw CheckpointError("corrupt checkpoint: group name too long");
        }
        std::string name(len, '\0');
        in.read(name.data(), len);
        const auto rows = read_le<std::uint32_t>(in);
        const auto cols = read_le<std::uint32_t>(in);
        if (!in || name != want.name || rows != want.rows || cols != want.cols) {
            throw CheckpointError("checkpoint header mismatch at group '" + want.name + "'");
        }
    }
    for (auto& group : ck.params.registry()) {
        for (double& v : group.values) {
            v = read_le<double>(in);
        }
    }
    if (in.peek() != std::char_traits<char>::eof()) {
        throw CheckpointError("corrupt checkpoint: trailing bytes");
    }
    return ck;
}

}  // namespace fgsan
