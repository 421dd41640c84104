#include "support.hpp"

#include "cli.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace zz;
using zz::test::slurp;
using zz::test::TempDir;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args)
{
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::size_t line_count(const fs::path& p)
{
    const std::string s = slurp(p);
    return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

}  // namespace

TEST_CASE("usage errors")
{
    TempDir dir;
    CHECK(run({}).code != 0);
    CHECK(run({"bogus"}).code != 0);
    const auto r = run({"generate", "--outlier-ratio", "1.5", "--out", dir.str("d")});
    CHECK(r.code != 0);
    CHECK_FALSE(fs::exists(dir.path() / "d" / "train.jsonl"));
    CHECK(run({"generate", "--m", "2", "--out", dir.str("d")}).code != 0);
    CHECK(run({"generate"}).code != 0);
    CHECK(run({"train", "--data", dir.str("nothing"), "--out", dir.str("r")}).code != 0);
    CHECK(run({"eval", "--checkpoint", dir.str("none.zzn"), "--data", dir.str("nothing")}).code != 0);
    CHECK(run({"--help"}).code == 0);
}

TEST_CASE("generate with default counts")
{
    TempDir dir;
    const auto r = run({"generate", "--m", "3", "--out", dir.str("d")});
    REQUIRE(r.code == 0);
    const fs::path d = dir.path() / "d";
    CHECK(line_count(d / "train.jsonl") == 2000);
    CHECK(line_count(d / "val.jsonl") == 500);
    CHECK(line_count(d / "test.jsonl") == 300);
    const json man = json::parse(slurp(d / "manifest.json"));
    CHECK(man["command"] == "generate");
    CHECK(man.contains("version"));
    CHECK(man.contains("started"));
    CHECK(man.contains("finished"));
}

TEST_CASE("generate is reproducible and honors flags")
{
    TempDir dir;
    const std::vector<std::string> base = {"generate", "--m", "6", "--outlier-ratio", "0.4", "--counts", "4,2,3"};
    auto a = base, b = base, c = base;
    a.insert(a.end(), {"--seed", "5", "--out", dir.str("a")});
    b.insert(b.end(), {"--seed", "5", "--out", dir.str("b"), "--threads", "2"});
    c.insert(c.end(), {"--seed", "6", "--out", dir.str("c")});
    REQUIRE(run(a).code == 0);
    REQUIRE(run(b).code == 0);
    REQUIRE(run(c).code == 0);
    for (const char* f : {"train.jsonl", "val.jsonl", "test.jsonl"}) {
        CHECK(slurp(dir.path() / "a" / f) == slurp(dir.path() / "b" / f));
        CHECK(slurp(dir.path() / "a" / f) != slurp(dir.path() / "c" / f));
    }
    CHECK(line_count(dir.path() / "a" / "test.jsonl") == 3);
}

TEST_CASE("train, resume and eval")
{
    TempDir dir;
    REQUIRE(run({"generate", "--m", "4", "--sigma", "0", "--counts", "6,3,4", "--seed", "1", "--out", dir.str("d")})
                .code == 0);
    std::ofstream(dir.path() / "model.txt") << "zznet-model 1\npooling mean\nleaky_slope 0.01\neta_init 0.1\n"
                                               "shared_pair_weights 1\n"
                                               "unit weight=ns+ two_cloud=1 early=2 late=2,1 vector=nc+ channels=1 "
                                               "normalize=1\n";
    const std::vector<std::string> common = {"--data", dir.str("d"), "--model-config", dir.str("model.txt"),
                                             "--batch-size", "2", "--seed", "3"};
    auto full = common;
    full.insert(full.begin(), "train");
    full.insert(full.end(), {"--out", dir.str("full"), "--epochs", "3"});
    const auto r = run(full);
    REQUIRE(r.code == 0);
    CHECK(line_count(dir.path() / "full" / "metrics.jsonl") == 3);
    const json res = json::parse(r.out);
    CHECK(res["epochs_run"] == 3);
    const json first = json::parse(slurp(dir.path() / "full" / "metrics.jsonl").substr(0, slurp(dir.path() / "full" / "metrics.jsonl").find('\n')));
    CHECK(first["epoch"] == 0);
    CHECK(first["lr"] == 5e-3);
    CHECK(first["val"].contains("acc_1deg"));

    auto part = common;
    part.insert(part.begin(), "train");
    part.insert(part.end(), {"--out", dir.str("part"), "--epochs", "2"});
    REQUIRE(run(part).code == 0);
    auto resume = common;
    resume.insert(resume.begin(), "train");
    resume.insert(resume.end(), {"--out", dir.str("part"), "--epochs", "3", "--resume",
                                 dir.str("part/checkpoint.zzn")});
    REQUIRE(run(resume).code == 0);
    CHECK(slurp(dir.path() / "part" / "checkpoint.zzn") == slurp(dir.path() / "full" / "checkpoint.zzn"));
    CHECK(line_count(dir.path() / "part" / "metrics.jsonl") == 3);

    const auto e = run({"eval", "--checkpoint", dir.str("full/checkpoint.zzn"), "--data", dir.str("d"), "--out",
                        dir.str("ev")});
    REQUIRE(e.code == 0);
    const json rep = json::parse(e.out);
    CHECK(rep["count"] == 4);
    for (const char* key : {"acc_1deg", "acc_5deg", "acc_10deg", "mean_error"})
        CHECK(rep.contains(key));
    CHECK(line_count(dir.path() / "ev" / "predictions.jsonl") == 4);
    CHECK(fs::exists(dir.path() / "ev" / "manifest.json"));
    CHECK(fs::exists(dir.path() / "ev" / "eval.json"));
}

TEST_CASE("train rejects a bad schedule")
{
    TempDir dir;
    REQUIRE(run({"generate", "--m", "3", "--counts", "2,0,0", "--out", dir.str("d")}).code == 0);
    CHECK(run({"train", "--data", dir.str("d"), "--out", dir.str("r"), "--schedule", "70-0.5"}).code == 2);
}

TEST_CASE("check command")
{
    TempDir dir;
    const auto ok = run({"check", "--suite", "theorem", "--out", dir.str("c")});
    CHECK(ok.code == 0);
    std::istringstream lines(ok.out);
    std::string line;
    std::size_t n = 0;
    while (std::getline(lines, line)) {
        const json j = json::parse(line);
        CHECK(j["passed"] == true);
        ++n;
    }
    CHECK(n > 0);
    CHECK(fs::exists(dir.path() / "c" / "manifest.json"));

    const auto bad = run({"check", "--suite", "bases", "--inject-broken"});
    CHECK(bad.code == 1);
    CHECK(bad.err.find("T e1") != std::string::npos);
    CHECK(run({"check", "--suite", "nope"}).code != 0);
}

TEST_CASE("config file with flag overrides")
{
    TempDir dir;
    std::ofstream(dir.path() / "g.toml") << "[generate]\nm = 5\ncounts = [3, 1, 2]\nseed = 4\n";
    REQUIRE(run({"--config", dir.str("g.toml"), "generate", "--out", dir.str("a")}).code == 0);
    CHECK(line_count(dir.path() / "a" / "train.jsonl") == 3);
    CHECK(json::parse(slurp(dir.path() / "a" / "test.jsonl").substr(0, slurp(dir.path() / "a" / "test.jsonl").find('\n')))["z"].size() == 5);
    REQUIRE(run({"--config", dir.str("g.toml"), "generate", "--out", dir.str("b"), "--counts", "1,1,1"}).code == 0);
    CHECK(line_count(dir.path() / "b" / "train.jsonl") == 1);
    CHECK(run({"--config", dir.str("missing.toml"), "generate", "--out", dir.str("c")}).code != 0);
}
