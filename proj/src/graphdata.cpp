#include "fgsan/graphdata.hpp"

#include "binary_io.hpp"

#include <cmath>
#include <cstring>
#include <deque>
#include <fstream>
#include <sstream>

namespace fgsan {

namespace {

constexpr char kMagic[8] = {'F', 'G', 'S', 'A', 'N', 'D', 'S', '\0'};
constexpr double kInvariantTol = 1e-12;

template <typename T>
T read_le(std::istream& in) {
    return detail::read_le<T, DatasetError>(in, "corrupt dataset file: unexpected end of data");
}

using detail::write_le;

std::string sample_prefix(std::size_t index) { return "sample " + std::to_string(index) + ": "; }

}  // namespace

Tensor2 aggregate_dynamic(const std::vector<Tensor2>& connectivity) {
    if (connectivity.empty()) {
        throw std::invalid_argument("aggregate_dynamic: empty connectivity list");
    }
    Tensor2 mean = Tensor2::Zero(connectivity.front().rows(), connectivity.front().cols());
    for (const auto& m : connectivity) {
        if (m.rows() != mean.rows() || m.cols() != mean.cols()) {
            throw std::invalid_argument("aggregate_dynamic: inconsistent matrix shapes");
        }
        mean += m;
    }
    mean /= static_cast<double>(connectivity.size());
    return mean;
}

BoolMatrix threshold_adjacency(const Tensor2& coherence, double tau) {
    if (!(tau > 0.0 && tau < 1.0)) {
        throw std::invalid_argument("threshold_adjacency: tau must lie in (0, 1)");
    }
    if (coherence.rows() != coherence.cols()) {
        throw ShapeError("threshold_adjacency: coherence must be square");
    }
    const auto n = coherence.rows();
    BoolMatrix adj(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            adj(i, j) = (i == j) || coherence(i, j) >= tau;
        }
    }
    return adj;
}

IndexMatrix shortest_path_buckets(const BoolMatrix& adjacency, int max_bucket) {
    if (adjacency.rows() != adjacency.cols()) {
        throw ShapeError("shortest_path_buckets: adjacency must be square");
    }
    if (max_bucket < 1) {
        throw std::invalid_argument("shortest_path_buckets: max_bucket must be >= 1");
    }
    const auto n = adjacency.rows();
    IndexMatrix buckets = IndexMatrix::Constant(n, n, max_bucket);
    std::vector<int> dist(static_cast<std::size_t>(n));
    std::deque<Eigen::Index> queue;
    for (Eigen::Index src = 0; src < n; ++src) {
        std::fill(dist.begin(), dist.end(), -1);
        dist[src] = 0;
        queue.assign(1, src);
        while (!queue.empty()) {
            const auto u = queue.front();
            queue.pop_front();
            for (Eigen::Index v = 0; v < n; ++v) {
                if (adjacency(u, v) && dist[v] < 0) {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        for (Eigen::Index v = 0; v < n; ++v) {
            if (dist[v] >= 0 && dist[v] < max_bucket) {
                buckets(src, v) = dist[v];
            }
        }
    }
    return buckets;
}

StaticGraphView build_view(const DynamicBrainGraph& graph, const GraphViewOptions& options) {
    StaticGraphView view;
    view.adjacency = threshold_adjacency(aggregate_dynamic(graph.connectivity), options.tau);
    view.spd_bucket = shortest_path_buckets(view.adjacency, options.max_bucket);
    view.max_bucket = options.max_bucket;
    return view;
}

StaticGraphView permute_view(const StaticGraphView& view, const std::vector<std::size_t>& perm) {
    const auto n = static_cast<Eigen::Index>(perm.size());
    if (n != view.adjacency.rows()) {
        throw ShapeError("permute_view: permutation length differs from node count");
    }
    StaticGraphView out;
    out.max_bucket = view.max_bucket;
    out.adjacency.resize(n, n);
    out.spd_bucket.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            out.adjacency(i, j) = view.adjacency(perm[i], perm[j]);
            out.spd_bucket(i, j) = view.spd_bucket(perm[i], perm[j]);
        }
    }
    return out;
}

Tensor2 permute_rows(const Tensor2& values, const std::vector<std::size_t>& perm) {
    if (static_cast<Eigen::Index>(perm.size()) != values.rows()) {
        throw ShapeError("permute_rows: permutation length differs from row count");
    }
    Tensor2 out(values.rows(), values.cols());
    for (std::size_t i = 0; i < perm.size(); ++i) {
        out.row(static_cast<Eigen::Index>(i)) = values.row(static_cast<Eigen::Index>(perm[i]));
    }
    return out;
}

std::vector<int> Dataset::labels() const {
    std::vector<int> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        out.push_back(s.label);
    }
    return out;
}

std::filesystem::path sidecar_path(const std::filesystem::path& data_path) {
    auto p = data_path;
    p += ".json";
    return p;
}

void validate_dataset(const Dataset& dataset) {
    if (dataset.samples.empty()) {
        throw DatasetError("dataset has no samples");
    }
    const auto n = dataset.regions();
    const auto d = dataset.feature_dim();
    const auto t = dataset.timesteps();
    if (n == 0 || d == 0 || t == 0) {
        throw DatasetError("dataset dimensions must be positive");
    }
    if (!dataset.region_names.empty() && dataset.region_names.size() != n) {
        throw DatasetError("region_names length differs from N");
    }
    for (std::size_t s = 0; s < dataset.samples.size(); ++s) {
        const auto& g = dataset.samples[s];
        if (g.regions() != n || g.feature_dim() != d || g.timesteps() != t) {
            throw DatasetError(sample_prefix(s) + "shape mismatch with the first sample");
        }
        if (g.label != 0 && g.label != 1) {
            throw DatasetError(sample_prefix(s) + "label outside {0,1}");
        }
        if (!g.node_features.allFinite()) {
            throw DatasetError(sample_prefix(s) + "non-finite node features");
        }
        for (std::size_t step = 0; step < t; ++step) {
            const auto& m = g.connectivity[step];
            if (static_cast<std::size_t>(m.rows()) != n || static_cast<std::size_t>(m.cols()) != n) {
                throw DatasetError(sample_prefix(s) + "shape mismatch in connectivity");
            }
            for (std::size_t i = 0; i < n; ++i) {
                if (std::abs(m(i, i) - 1.0) > kInvariantTol) {
                    throw DatasetError(sample_prefix(s) + "connectivity diagonal is not 1");
                }
                for (std::size_t j = 0; j < n; ++j) {
                    const double v = m(i, j);
                    if (!(v >= 0.0 && v <= 1.0)) {
                        throw DatasetError(sample_prefix(s) + "connectivity entry outside [0,1]");
                    }
                    if (std::abs(v - m(j, i)) > kInvariantTol) {
                        throw DatasetError(sample_prefix(s) + "asymmetric connectivity at timestep " +
                                           std::to_string(step));
                    }
                }
            }
        }
    }
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
    validate_dataset(dataset);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DatasetError("cannot open '" + path.string() + "' for writing");
    }
    const auto n = dataset.regions();
    const auto d = dataset.feature_dim();
    const auto t = dataset.timesteps();
    out.write(kMagic, sizeof(kMagic));
    write_le<std::uint32_t>(out, kDatasetFormatVersion);
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(n));
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(t));
    write_le<std::uint64_t>(out, dataset.samples.size());
    for (const auto& g : dataset.samples) {
        write_le<std::uint8_t>(out, static_cast<std::uint8_t>(g.label));
        for (Eigen::Index k = 0; k < g.node_features.size(); ++k) {
            write_le<double>(out, g.node_features.data()[k]);
        }
        for (const auto& m : g.connectivity) {
            for (Eigen::Index k = 0; k < m.size(); ++k) {
                write_le<double>(out, m.data()[k]);
            }
        }
    }
    if (!out) {
        throw DatasetError("write failed for '" + path.string() + "'");
    }

    nlohmann::json header = {{"format_version", kDatasetFormatVersion},
                             {"N", n},
                             {"D", d},
                             {"T", t},
                             {"sample_count", dataset.samples.size()}};
    if (!dataset.region_names.empty()) {
        header["region_names"] = dataset.region_names;
    }
    for (const auto& [key, value] : dataset.extra.items()) {
        header[key] = value;
    }
    std::ofstream side(sidecar_path(path), std::ios::trunc);
    if (!side) {
        throw DatasetError("cannot open sidecar for '" + path.string() + "'");
    }
    side << header.dump(2) << '\n';
}

Dataset load_dataset(const std::filesystem::path& path) {
    std::ifstream side(sidecar_path(path));
    if (!side) {
        throw DatasetError("missing sidecar '" + sidecar_path(path).string() + "'");
    }
    nlohmann::json header;
    try {
        side >> header;
    } catch (const nlohmann::json::exception& e) {
        throw DatasetError(std::string("corrupt sidecar: ") + e.what());
    }

    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DatasetError("cannot open dataset '" + path.string() + "'");
    }
    char magic[sizeof(kMagic)];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw DatasetError("corrupt dataset file: bad magic");
    }
    const auto version = read_le<std::uint32_t>(in);
    if (version != kDatasetFormatVersion) {
        throw DatasetError("unsupported dataset format_version " + std::to_string(version));
    }
    const std::size_t n = read_le<std::uint32_t>(in);
    const std::size_t d = read_le<std::uint32_t>(in);
    const std::size_t t = read_le<std::uint32_t>(in);
    const std::size_t count = read_le<std::uint64_t>(in);

    try {
        if (header.at("format_version").get<std::uint32_t>() != version ||
            header.at("N").get<std::size_t>() != n || header.at("D").get<std::size_t>() != d ||
            header.at("T").get<std::size_t>() != t ||
            header.at("sample_count").get<std::size_t>() != count) {
            throw DatasetError("shape mismatch between sidecar header and binary file");
        }
    } catch (const nlohmann::json::exception& e) {
        throw DatasetError(std::string("corrupt sidecar: ") + e.what());
    }

    const std::uintmax_t record = 1 + 8 * (n * d + t * n * n);
    const std::uintmax_t expected = sizeof(kMagic) + 4 * 4 + 8 + record * count;
    if (std::filesystem::file_size(path) != expected) {
        throw DatasetError("corrupt dataset file: size does not match header");
    }

    Dataset dataset;
    dataset.samples.reserve(count);
    for (std::size_t s = 0; s < count; ++s) {
        DynamicBrainGraph g;
        g.label = read_le<std::uint8_t>(in);
        g.node_features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
        for (Eigen::Index k = 0; k < g.node_features.size(); ++k) {
            g.node_features.data()[k] = read_le<double>(in);
        }
        g.connectivity.resize(t);
        for (auto& m : g.connectivity) {
            m.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
            for (Eigen::Index k = 0; k < m.size(); ++k) {
                m.data()[k] = read_le<double>(in);
            }
        }
        dataset.samples.push_back(std::move(g));
    }
    if (header.contains("region_names")) {
        dataset.region_names = header["region_names"].get<std::vector<std::string>>();
    }
    for (const auto& [key, value] : header.items()) {
        if (key != "format_version" && key != "N" && key != "D" && key != "T" &&
            key != "sample_count" && key != "region_names") {
            dataset.extra[key] = value;
        }
    }
    validate_dataset(dataset);
    return dataset;
}

void export_features_csv(const Dataset& dataset, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw DatasetError("cannot open '" + path.string() + "' for writing");
    }
    out << "sample,label,region";
    for (std::size_t k = 0; k < dataset.feature_dim(); ++k) {
        out << ",f" << k;
    }
    out << '\n';
    out.precision(17);
    for (std::size_t s = 0; s < dataset.samples.size(); ++s) {
        const auto& g = dataset.samples[s];
        for (Eigen::Index i = 0; i < g.node_features.rows(); ++i) {
            out << s << ',' << g.label << ',' << i;
            for (Eigen::Index k = 0; k < g.node_features.cols(); ++k) {
                out << ',' << g.node_features(i, k);
            }
            out << '\n';
        }
    }
}

}  // namespace fgsan
