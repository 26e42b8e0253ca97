#include "fgsan/graphdata.hpp"
#include "fgsan/synth.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <cstring>
#include <deque>
#include <fstream>

using namespace fgsan;
using namespace fgsan::testing;

namespace {

// Independent Floyd-Warshall hop counts, unclipped (-1 = unreachable).
std::vector<std::vector<int>> floyd_hops(const BoolMatrix& adj) {
    const auto n = static_cast<std::size_t>(adj.rows());
    const int inf = 1 << 20;
    std::vector<std::vector<int>> d(n, std::vector<int>(n, inf));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) {
                d[i][j] = 0;
            } else if (adj(i, j)) {
                d[i][j] = 1;
            }
        }
    }
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
            }
        }
    }
    for (auto& row : d) {
        for (auto& v : row) {
            if (v >= inf) {
                v = -1;
            }
        }
    }
    return d;
}

Dataset small_dataset() {
    auto c = tiny_config(3);
    c.samples_per_class = 2;
    return generate(c);
}

}  // namespace

TEST_SUITE("graphdata") {

TEST_CASE("aggregate_dynamic examples") {
    Rng rng(1);
    const Tensor2 m = random_coherence(rng, 4);
    CHECK(aggregate_dynamic({m}) == m);

    Tensor2 a = Tensor2::Identity(2, 2);
    Tensor2 b = Tensor2::Identity(2, 2);
    a(0, 1) = a(1, 0) = 0.2;
    b(0, 1) = b(1, 0) = 0.6;
    CHECK(aggregate_dynamic({a, b})(0, 1) == doctest::Approx(0.4).epsilon(1e-15));

    std::vector<Tensor2> three{random_coherence(rng, 5), random_coherence(rng, 5), random_coherence(rng, 5)};
    const Tensor2 mean = aggregate_dynamic(three);
    for (int i = 0; i < 5; ++i) {
        for (int j = 0; j < 5; ++j) {
            const double brute = (three[0](i, j) + three[1](i, j) + three[2](i, j)) / 3.0;
            CHECK(std::abs(mean(i, j) - brute) < 1e-15);
        }
    }
    CHECK_THROWS_AS(aggregate_dynamic({}), std::invalid_argument);
    CHECK_THROWS_AS(aggregate_dynamic({Tensor2::Identity(2, 2), Tensor2::Identity(3, 3)}), std::invalid_argument);
}

TEST_CASE("threshold_adjacency examples") {
    const Tensor2 eye = Tensor2::Identity(4, 4);
    for (double tau : {0.1, 0.4, 0.9}) {
        const BoolMatrix adj = threshold_adjacency(eye, tau);
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) {
                CHECK(adj(i, j) == (i == j));
            }
        }
    }
    Tensor2 c = Tensor2::Identity(3, 3);
    c(1, 2) = c(2, 1) = 0.5;
    CHECK(threshold_adjacency(c, 0.4)(1, 2));
    CHECK_FALSE(threshold_adjacency(c, 0.6)(1, 2));
    CHECK_THROWS_AS(threshold_adjacency(c, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(threshold_adjacency(c, 1.0), std::invalid_argument);

    Rng rng(2);
    const Tensor2 r = random_coherence(rng, 6);
    const BoolMatrix adj = threshold_adjacency(r, 0.4);
    for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < 6; ++j) {
            CHECK(adj(i, j) == (i == j || r(i, j) >= 0.4));
        }
    }
}

TEST_CASE("threshold_adjacency is monotone in tau") {
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const Tensor2 r = random_coherence(rng, 8);
        const double t1 = rng.uniform(0.01, 0.98);
        const double t2 = rng.uniform(t1, 0.99);
        const BoolMatrix low = threshold_adjacency(r, t1);
        const BoolMatrix high = threshold_adjacency(r, t2);
        for (int i = 0; i < 8; ++i) {
            for (int j = 0; j < 8; ++j) {
                if (high(i, j)) {
                    CHECK(low(i, j));
                }
            }
        }
    }
}

TEST_CASE("shortest_path_buckets examples") {
    BoolMatrix path = BoolMatrix::Identity(3, 3);
    path(0, 1) = path(1, 0) = path(1, 2) = path(2, 1) = true;
    const IndexMatrix d = shortest_path_buckets(path, 5);
    CHECK(d(0, 2) == 2);
    CHECK(d(2, 0) == 2);
    for (int i = 0; i < 3; ++i) {
        CHECK(d(i, i) == 0);
    }

    BoolMatrix split = BoolMatrix::Identity(4, 4);
    split(0, 1) = split(1, 0) = true;
    split(2, 3) = split(3, 2) = true;
    const IndexMatrix s = shortest_path_buckets(split, 5);
    for (int i : {0, 1}) {
        for (int j : {2, 3}) {
            CHECK(s(i, j) == 5);
            CHECK(s(j, i) == 5);
        }
    }

    BoolMatrix chain = BoolMatrix::Identity(8, 8);
    for (int i = 0; i + 1 < 8; ++i) {
        chain(i, i + 1) = chain(i + 1, i) = true;
    }
    const IndexMatrix c = shortest_path_buckets(chain, 5);
    CHECK(c(0, 4) == 4);
    CHECK(c(0, 5) == 5);
    CHECK(c(0, 7) == 5);
}

TEST_CASE("shortest_path_buckets matches an all-pairs oracle and the triangle inequality") {
    Rng rng(4);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 10;
        const BoolMatrix adj = threshold_adjacency(random_coherence(rng, n), 0.8);
        const IndexMatrix d = shortest_path_buckets(adj, 5);
        const auto oracle = floyd_hops(adj);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                const int expect = (oracle[i][j] < 0 || oracle[i][j] >= 5) ? 5 : oracle[i][j];
                CHECK(d(i, j) == expect);
                CHECK(d(i, j) == d(j, i));
                for (int k = 0; k < n; ++k) {
                    if (d(i, j) < 5 && d(j, k) < 5 && d(i, k) < 5) {
                        CHECK(d(i, k) <= d(i, j) + d(j, k));
                    }
                }
            }
        }
    }
}

TEST_CASE("permuting nodes permutes the view on both axes") {
    Rng rng(5);
    DynamicBrainGraph g;
    g.node_features = random_matrix(rng, 7, 2);
    g.connectivity = {random_coherence(rng, 7)};
    const auto view = build_view(g, {0.5, 5});
    for (int trial = 0; trial < 20; ++trial) {
        const auto perm = random_permutation(rng, 7);
        DynamicBrainGraph pg;
        pg.node_features = permute_rows(g.node_features, perm);
        Tensor2 pc(7, 7);
        for (int i = 0; i < 7; ++i) {
            for (int j = 0; j < 7; ++j) {
                pc(i, j) = g.connectivity[0](perm[i], perm[j]);
            }
        }
        pg.connectivity = {pc};
        const auto direct = build_view(pg, {0.5, 5});
        const auto permuted = permute_view(view, perm);
        CHECK(direct.adjacency == permuted.adjacency);
        CHECK(direct.spd_bucket == permuted.spd_bucket);
    }
}

TEST_CASE("dataset round trip is bitwise") {
    const auto dir = scratch_dir("graphdata_roundtrip");
    const Dataset ds = small_dataset();
    save_dataset(ds, dir / "d.bin");
    CHECK(std::filesystem::exists(sidecar_path(dir / "d.bin")));
    const Dataset back = load_dataset(dir / "d.bin");
    REQUIRE(back.samples.size() == ds.samples.size());
    CHECK(back.samples.size() == 4);
    for (std::size_t s = 0; s < ds.samples.size(); ++s) {
        const auto& a = ds.samples[s];
        const auto& b = back.samples[s];
        CHECK(a.label == b.label);
        CHECK(std::memcmp(a.node_features.data(), b.node_features.data(),
                          sizeof(double) * static_cast<std::size_t>(a.node_features.size())) == 0);
        REQUIRE(a.connectivity.size() == b.connectivity.size());
        for (std::size_t t = 0; t < a.connectivity.size(); ++t) {
            CHECK(a.connectivity[t] == b.connectivity[t]);
        }
    }
    CHECK(back.region_names == ds.region_names);
    CHECK(back.extra == ds.extra);
    CHECK(back.regions() == 6);
    CHECK(back.feature_dim() == 3);
    CHECK(back.timesteps() == 2);
}

TEST_CASE("validation names the offending sample") {
    auto check_message = [](const Dataset& ds, const std::string& fragment) {
        try {
            validate_dataset(ds);
            FAIL("expected DatasetError");
        } catch (const DatasetError& e) {
            const std::string msg = e.what();
            CHECK_MESSAGE(msg.find(fragment) != std::string::npos, msg);
        }
    };
    Dataset ds = small_dataset();
    ds.samples[2].connectivity[1](0, 3) += 0.1;
    check_message(ds, "sample 2");

    ds = small_dataset();
    ds.samples[1].label = 2;
    check_message(ds, "sample 1");

    ds = small_dataset();
    ds.samples[3].node_features = Tensor2::Zero(5, 3);
    check_message(ds, "sample 3");

    ds = small_dataset();
    ds.samples[0].connectivity[0](1, 1) = 0.5;
    check_message(ds, "sample 0");

    ds = small_dataset();
    ds.samples[2].connectivity[0](0, 1) = ds.samples[2].connectivity[0](1, 0) = 1.5;
    check_message(ds, "sample 2");
}

TEST_CASE("asymmetric matrix on disk is rejected on load") {
    const auto dir = scratch_dir("graphdata_asym");
    Dataset ds = small_dataset();
    ds.samples[3].connectivity[0](0, 1) = 0.9;
    ds.samples[3].connectivity[0](1, 0) = 0.1;
    CHECK_THROWS_AS(save_dataset(ds, dir / "bad.bin"), DatasetError);

    // Write a good file, then corrupt one connectivity entry in place.
    const Dataset good = small_dataset();
    save_dataset(good, dir / "d.bin");
    std::string bytes = read_file(dir / "d.bin");
    const std::size_t header = 8 + 4 * 4 + 8;
    const std::size_t record = 1 + 6 * 3 * 8 + 2 * 6 * 6 * 8;
    const std::size_t offset = header + 3 * record + 1 + 6 * 3 * 8 + 1 * 8;  // sample 3, t=0, (0,1)
    const double asym = 0.123;
    std::memcpy(bytes.data() + offset, &asym, sizeof(double));
    std::ofstream(dir / "d.bin", std::ios::binary | std::ios::trunc) << bytes;
    try {
        load_dataset(dir / "d.bin");
        FAIL("expected DatasetError");
    } catch (const DatasetError& e) {
        CHECK(std::string(e.what()).find("sample 3") != std::string::npos);
    }
}

TEST_CASE("corrupt and mismatched files give distinct errors") {
    const auto dir = scratch_dir("graphdata_corrupt");
    const Dataset ds = small_dataset();
    save_dataset(ds, dir / "d.bin");
    const std::string bytes = read_file(dir / "d.bin");

    std::ofstream(dir / "short.bin", std::ios::binary) << bytes.substr(0, bytes.size() - 5);
    std::filesystem::copy_file(sidecar_path(dir / "d.bin"), sidecar_path(dir / "short.bin"));
    CHECK_THROWS_AS(load_dataset(dir / "short.bin"), DatasetError);

    std::string bad_magic = bytes;
    bad_magic[0] = 'X';
    std::ofstream(dir / "magic.bin", std::ios::binary) << bad_magic;
    std::filesystem::copy_file(sidecar_path(dir / "d.bin"), sidecar_path(dir / "magic.bin"));
    CHECK_THROWS_AS(load_dataset(dir / "magic.bin"), DatasetError);

    std::string bad_label = bytes;
    bad_label[8 + 4 * 4 + 8] = 7;
    std::ofstream(dir / "label.bin", std::ios::binary) << bad_label;
    std::filesystem::copy_file(sidecar_path(dir / "d.bin"), sidecar_path(dir / "label.bin"));
    try {
        load_dataset(dir / "label.bin");
        FAIL("expected DatasetError");
    } catch (const DatasetError& e) {
        CHECK(std::string(e.what()).find("sample 0") != std::string::npos);
    }

    CHECK_THROWS_AS(load_dataset(dir / "missing.bin"), DatasetError);
}

TEST_CASE("feature CSV export has one row per sample and region") {
    const auto dir = scratch_dir("graphdata_csv");
    const Dataset ds = small_dataset();
    export_features_csv(ds, dir / "f.csv");
    std::ifstream in(dir / "f.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "sample,label,region,f0,f1,f2");
    int rows = 0;
    for (std::string line; std::getline(in, line);) {
        ++rows;
    }
    CHECK(rows == 4 * 6);
}

}  // TEST_SUITE
