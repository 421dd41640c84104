#include "zz/toydata.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <thread>

namespace zz {

void DataGenConfig::validate() const
{
    if (m < 3)
        throw std::invalid_argument("m must be >= 3");
    if (!(outlier_ratio >= 0.0 && outlier_ratio <= 1.0))
        throw std::invalid_argument("outlier ratio must lie in [0, 1]");
    if (!(sigma >= 0.0) || !std::isfinite(sigma))
        throw std::invalid_argument("sigma must be finite and >= 0");
}

const char* split_name(Split s)
{
    switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
    }
    return "?";
}

Split parse_split(const std::string& s)
{
    if (s == "train")
        return Split::Train;
    if (s == "val")
        return Split::Val;
    if (s == "test")
        return Split::Test;
    throw std::invalid_argument("unknown split '" + s + "'");
}

const std::vector<ToyExample>& Dataset::split(Split s) const
{
    return s == Split::Train ? train : s == Split::Val ? val : test;
}

std::vector<ToyExample>& Dataset::split(Split s) { return s == Split::Train ? train : s == Split::Val ? val : test; }

Complex project_to_segment(Complex p, Complex a, Complex b, bool clamp)
{
    const Complex d = b - a;
    const double len2 = std::norm(d);
    if (len2 < 1e-24)
        throw std::invalid_argument("project_to_segment: degenerate segment");
    double s = (std::conj(d) * (p - a)).real() / len2;
    if (clamp)
        s = std::clamp(s, 0.0, 1.0);
    return a + s * d;
}

ToyExample generate_example(const DataGenConfig& cfg, Rng& rng)
{
    cfg.validate();
    std::array<Complex, 3> corner;
    do {
        for (auto& c : corner)
            c = rng.unit_disk();
    } while (std::abs(corner[0] - corner[1]) < 1e-9 || std::abs(corner[1] - corner[2]) < 1e-9 ||
             std::abs(corner[2] - corner[0]) < 1e-9);

    std::vector<Complex> z(cfg.m), x(cfg.m);
    for (auto& p : z) {
        const Complex q = rng.unit_disk();
        const auto side = static_cast<std::size_t>(rng.below(3));
        p = project_to_segment(q, corner[side], corner[(side + 1) % 3], cfg.clamp);
    }

    const Rotation theta = Rotation::from_angle(2.0 * std::numbers::pi * rng.uniform());
    for (std::size_t i = 0; i < cfg.m; ++i)
        x[i] = theta.value() * z[i];

    const double s = cfg.noise == NoiseModel::PerCoordinate ? cfg.sigma : cfg.sigma / std::numbers::sqrt2;
    if (cfg.sigma > 0.0)
        for (auto* cloud : {&z, &x})
            for (auto& p : *cloud) {
                const double re = rng.normal();
                const double im = rng.normal();
                p += Complex(s * re, s * im);
            }

    std::vector<bool> inlier(cfg.m, true);
    for (std::size_t i = 0; i < cfg.m; ++i)
        if (rng.uniform() < cfg.outlier_ratio) {
            z[i] = rng.unit_disk();
            x[i] = rng.unit_disk();
            inlier[i] = false;
        }

    ToyExample e;
    e.pair = CloudPair(PointCloud(std::move(z)), PointCloud(std::move(x)));
    e.theta = theta;
    e.inlier = std::move(inlier);
    e.seed = rng.seed();
    return e;
}

std::uint64_t example_seed(std::uint64_t seed, Split split, std::size_t index)
{
    return Rng::mix(Rng::mix(seed ^ (static_cast<std::uint64_t>(split) + 1) * 0x9E3779B97F4A7C15ull) ^ index);
}

ToyExample generate_indexed(const DataGenConfig& cfg, Split split, std::size_t index)
{
    Rng rng(example_seed(cfg.seed, split, index));
    ToyExample e = generate_example(cfg, rng);
    e.split = split;
    e.index = index;
    return e;
}

Dataset generate_dataset(const DataGenConfig& cfg, std::size_t threads)
{
    cfg.validate();
    Dataset d;
    const std::pair<Split, std::size_t> plan[] = {{Split::Train, cfg.train}, {Split::Val, cfg.val},
                                                  {Split::Test, cfg.test}};
    for (const auto& [split, count] : plan) {
        auto& out = d.split(split);
        out.resize(count);
        const std::size_t workers = std::max<std::size_t>(1, std::min(threads, count));
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&, w, split = split, count = count] {
                for (std::size_t k = w; k < count; k += workers)
                    out[k] = generate_indexed(cfg, split, k);
            });
        for (auto& th : pool)
            th.join();
    }
    return d;
}

namespace {

nlohmann::json pair_json(Complex c) { return nlohmann::json::array({c.real(), c.imag()}); }

Complex json_pair(const nlohmann::json& j)
{
    if (!j.is_array() || j.size() != 2)
        throw std::invalid_argument("expected [re, im]");
    return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

std::string to_json_line(const ToyExample& e)
{
    nlohmann::json z = nlohmann::json::array(), x = nlohmann::json::array();
    for (auto p : e.pair.z.points())
        z.push_back(pair_json(p));
    for (auto p : e.pair.x.points())
        x.push_back(pair_json(p));
    nlohmann::json j = {
        {"split", split_name(e.split)},
        {"index", e.index},
        {"seed", e.seed},
        {"theta", pair_json(e.theta.value())},
        {"z", z},
        {"x", x},
        {"inlier", e.inlier},
    };
    return j.dump();
}

ToyExample from_json_line(const std::string& line)
{
    const auto j = nlohmann::json::parse(line);
    ToyExample e;
    e.split = parse_split(j.at("split").get<std::string>());
    e.index = j.at("index").get<std::size_t>();
    e.seed = j.at("seed").get<std::uint64_t>();
    e.theta = Rotation(json_pair(j.at("theta")));
    std::vector<Complex> z, x;
    for (const auto& p : j.at("z"))
        z.push_back(json_pair(p));
    for (const auto& p : j.at("x"))
        x.push_back(json_pair(p));
    e.pair = CloudPair(PointCloud(std::move(z)), PointCloud(std::move(x)));
    e.inlier = j.at("inlier").get<std::vector<bool>>();
    if (e.inlier.size() != e.pair.z.size())
        throw std::invalid_argument("inlier mask length differs from cloud length");
    return e;
}

void write_examples(const std::string& path, const std::vector<ToyExample>& examples)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot write '" + path + "'");
    for (const auto& e : examples)
        out << to_json_line(e) << '\n';
    if (!out)
        throw std::runtime_error("write to '" + path + "' failed");
}

std::vector<ToyExample> read_examples(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot read '" + path + "'");
    std::vector<ToyExample> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty())
            continue;
        try {
            out.push_back(from_json_line(line));
        } catch (const std::exception& ex) {
            throw std::runtime_error(path + ":" + std::to_string(n) + ": " + ex.what());
        }
    }
    return out;
}

}  // namespace zz
