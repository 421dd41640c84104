#pragma once

#include "zz/cloud.hpp"
#include "zz/rng.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace zz {

enum class NoiseModel {
    PerCoordinate,  // N(0, sigma^2) on re and im separately
    Complex,        // total standard deviation sigma
};

struct DataGenConfig {
    std::size_t m = 100;
    double outlier_ratio = 0.0;
    double sigma = 0.03;
    std::size_t train = 2000;
    std::size_t val = 500;
    std::size_t test = 300;
    std::uint64_t seed = 0;
    bool clamp = true;
    NoiseModel noise = NoiseModel::PerCoordinate;

    void validate() const;
};

enum class Split { Train, Val, Test };

const char* split_name(Split s);
Split parse_split(const std::string& s);

struct ToyExample {
    CloudPair pair;
    Rotation theta;
    std::vector<bool> inlier;
    std::uint64_t seed = 0;
    Split split = Split::Train;
    std::size_t index = 0;
};

struct Dataset {
    std::vector<ToyExample> train;
    std::vector<ToyExample> val;
    std::vector<ToyExample> test;

    const std::vector<ToyExample>& split(Split s) const;
    std::vector<ToyExample>& split(Split s);
};

/// Orthogonal projection of p onto the segment [a, b] (the line through a
/// and b when `clamp` is false). Throws if |a - b| < 1e-12.
Complex project_to_segment(Complex p, Complex a, Complex b, bool clamp = true);

/// One triangle-correspondence example drawn from `rng`:
///  1. three corners uniform on the unit disk;
///  2. m points uniform on the disk, each projected onto a side chosen uniformly;
///  3. theta uniform on the circle, X = theta Z, Gaussian noise on both clouds;
///  4. each pair replaced by two uniform disk points with probability r.
ToyExample generate_example(const DataGenConfig& cfg, Rng& rng);

/// Seed of example `index` in `split`; every example has its own stream.
std::uint64_t example_seed(std::uint64_t seed, Split split, std::size_t index);
ToyExample generate_indexed(const DataGenConfig& cfg, Split split, std::size_t index);
Dataset generate_dataset(const DataGenConfig& cfg, std::size_t threads = 1);

/// {"split","index","seed","theta":[re,im],"z":[[re,im]...],"x":[...],"inlier":[...]}
std::string to_json_line(const ToyExample& e);
ToyExample from_json_line(const std::string& line);

void write_examples(const std::string& path, const std::vector<ToyExample>& examples);
std::vector<ToyExample> read_examples(const std::string& path);

}  // namespace zz
