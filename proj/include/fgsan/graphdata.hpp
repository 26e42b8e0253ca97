#ifndef FGSAN_GRAPHDATA_HPP
#define FGSAN_GRAPHDATA_HPP

#include "fgsan/numcore.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace fgsan {

/// One subject: node features (N x D), T coherence matrices (N x N each) and
/// a binary label (0 = control, 1 = case).
struct DynamicBrainGraph {
    Tensor2 node_features;
    std::vector<Tensor2> connectivity;
    int label = 0;

    std::size_t regions() const { return static_cast<std::size_t>(node_features.rows()); }
    std::size_t feature_dim() const { return static_cast<std::size_t>(node_features.cols()); }
    std::size_t timesteps() const { return connectivity.size(); }
};

/// Neighborhoods (self-loops included) and clipped shortest-path buckets for
/// one graph. Shared by every encoder layer.
struct StaticGraphView {
    BoolMatrix adjacency;
    IndexMatrix spd_bucket;
    int max_bucket = 5;

    std::size_t size() const { return static_cast<std::size_t>(adjacency.rows()); }
};

struct GraphViewOptions {
    double tau = 0.4;
    int max_bucket = 5;
};

/// Elementwise mean over the T matrices. Throws std::invalid_argument on an
/// empty list or inconsistent shapes.
Tensor2 aggregate_dynamic(const std::vector<Tensor2>& connectivity);

/// adjacency[i][j] = coherence[i][j] >= tau off the diagonal; diagonal true.
/// Throws std::invalid_argument unless 0 < tau < 1.
BoolMatrix threshold_adjacency(const Tensor2& coherence, double tau);

/// Breadth-first hop counts, clipped: distances >= max_bucket and unreachable
/// pairs map to max_bucket.
IndexMatrix shortest_path_buckets(const BoolMatrix& adjacency, int max_bucket);

StaticGraphView build_view(const DynamicBrainGraph& graph, const GraphViewOptions& options);

/// Reorders nodes: result row/col i is input row/col perm[i].
StaticGraphView permute_view(const StaticGraphView& view, const std::vector<std::size_t>& perm);
Tensor2 permute_rows(const Tensor2& values, const std::vector<std::size_t>& perm);

class DatasetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kDatasetFormatVersion = 1;

/// On-disk dataset: `<path>` holds the little-endian binary records,
/// `<path>.json` the header sidecar (format_version, N, D, T, sample_count,
/// optional region_names and any generator metadata under "extra").
struct Dataset {
    std::vector<DynamicBrainGraph> samples;
    std::vector<std::string> region_names;
    nlohmann::json extra = nlohmann::json::object();

    std::size_t regions() const { return samples.empty() ? 0 : samples.front().regions(); }
    std::size_t feature_dim() const { return samples.empty() ? 0 : samples.front().feature_dim(); }
    std::size_t timesteps() const { return samples.empty() ? 0 : samples.front().timesteps(); }
    std::vector<int> labels() const;
};

std::filesystem::path sidecar_path(const std::filesystem::path& data_path);

/// Validates every DynamicBrainGraph invariant; throws DatasetError naming
/// the offending sample index.
void validate_dataset(const Dataset& dataset);

void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

/// One row per (sample, region): sample,label,region,f0..f{D-1}.
void export_features_csv(const Dataset& dataset, const std::filesystem::path& path);

}  // namespace fgsan

#endif  // FGSAN_GRAPHDATA_HPP
