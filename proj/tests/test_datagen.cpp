// Synthetic dataset generator: PRNG reference vectors, distribution sanity,
// per-series normalization, and seed determinism.

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "coconut/datagen.hpp"
#include "coconut/raw_dataset.hpp"

namespace fs = std::filesystem;
using namespace coconut;

namespace {

fs::path scratch_dir(const std::string& name) {
    fs::path p = fs::temp_directory_path() / "coconut-test-datagen" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

TEST(SplitMix, MatchesPublishedReferenceOutputs) {
    // Reference streams for the standard splitmix64 constants.
    {
        SplitMix64 rng(0);
        EXPECT_EQ(rng.next(), 0xe220a8397b1dcdafull);
        EXPECT_EQ(rng.next(), 0x6e789e6aa1b965f4ull);
        EXPECT_EQ(rng.next(), 0x06c45d188009454full);
    }
    {
        SplitMix64 rng(1);
        EXPECT_EQ(rng.next(), 0x910a2dec89025cc1ull);
        EXPECT_EQ(rng.next(), 0xbeeb8da1658eec67ull);
        EXPECT_EQ(rng.next(), 0xf893a2eefb32555eull);
    }
    {
        SplitMix64 rng(42);
        EXPECT_EQ(rng.next(), 0xbdd732262feb6e95ull);
        EXPECT_EQ(rng.next(), 0x28efe333b266f103ull);
        EXPECT_EQ(rng.next(), 0x47526757130f9f52ull);
    }
}

TEST(SplitMix, UnitDrawsSitStrictlyInsideTheInterval) {
    SplitMix64 rng(42);
    // pinned first draw: (0xbdd732262feb6e95 >> 11 + 0.5) * 2^-53
    EXPECT_DOUBLE_EQ(rng.next_u01(), 0.7415648787718234);
    for (int i = 0; i < 100000; ++i) {
        double u = rng.next_u01();
        ASSERT_GT(u, 0.0);
        ASSERT_LT(u, 1.0);
    }
}

TEST(SplitMix, GaussianDrawsHaveStandardMoments) {
    SplitMix64 rng(7);
    const int n = 200000;
    double sum = 0, sum_sq = 0;
    for (int i = 0; i < n; ++i) {
        double g = rng.next_gaussian();
        sum += g;
        sum_sq += g * g;
    }
    double mean = sum / n;
    double var = sum_sq / n - mean * mean;
    EXPECT_NEAR(mean, 0.0, 0.01);
    EXPECT_NEAR(var, 1.0, 0.02);
}

TEST(RandomWalk, SeriesComeOutZNormalized) {
    SplitMix64 rng(3);
    for (int k = 0; k < 20; ++k) {
        DataSeries s = random_walk_series(rng, 256);
        ASSERT_EQ(s.values.size(), 256u);
        double sum = 0, sum_sq = 0;
        for (double v : s.values) {
            sum += v;
            sum_sq += v * v;
        }
        double mean = sum / 256;
        double stddev = std::sqrt(sum_sq / 256 - mean * mean);
        EXPECT_NEAR(mean, 0.0, 1e-12);
        EXPECT_NEAR(stddev, 1.0, 1e-12);
    }
}

TEST(RandomWalk, ConsecutiveStepsAreGaussianIncrements) {
    // Before normalization, x_i - x_{i-1} is a unit gaussian. Normalization
    // is affine, so the correlation between adjacent points stays high —
    // a quick smell test that this is a walk, not white noise.
    SplitMix64 rng(5);
    DataSeries s = random_walk_series(rng, 1024);
    double corr = 0;
    for (std::size_t i = 1; i < s.values.size(); ++i) corr += s.values[i - 1] * s.values[i];
    corr /= double(s.values.size() - 1);
    EXPECT_GT(corr, 0.5); // unit-variance series; walks hug their last value
}

TEST(Generator, FilesAreSeedDeterministicAndSeedSensitive) {
    fs::path dir = scratch_dir("det");
    generate_random_walks(dir / "a.bin", 500, 128, 99);
    generate_random_walks(dir / "b.bin", 500, 128, 99);
    generate_random_walks(dir / "c.bin", 500, 128, 100);

    auto slurp = [](const fs::path& p) {
        std::ifstream f(p, std::ios::binary);
        return std::vector<char>((std::istreambuf_iterator<char>(f)), {});
    };
    EXPECT_EQ(slurp(dir / "a.bin"), slurp(dir / "b.bin"));
    EXPECT_NE(slurp(dir / "a.bin"), slurp(dir / "c.bin"));
    EXPECT_EQ(fs::file_size(dir / "a.bin"), 500u * 128 * 4);
    EXPECT_EQ(raw_series_count(dir / "a.bin", 128), 500u);
}

TEST(Generator, StoredSeriesAreTheFloat32Normalizations) {
    fs::path dir = scratch_dir("stored");
    generate_random_walks(dir / "a.bin", 50, 64, 13);
    RawDataset raw(dir / "a.bin", 64);
    SplitMix64 rng(13);
    for (int i = 0; i < 50; ++i) {
        DataSeries expect = random_walk_series(rng, 64);
        DataSeries got = raw.read_series(i);
        for (int j = 0; j < 64; ++j)
            ASSERT_EQ(static_cast<float>(expect.values[j]), static_cast<float>(got.values[j]))
                << "series " << i << " point " << j;
    }
}

} // namespace
