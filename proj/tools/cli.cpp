#include "cli.hpp"

#include "zz/checkpoint.hpp"
#include "zz/kernels.hpp"
#include "zz/toydata.hpp"
#include "zz/training.hpp"
#include "zz/verify.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#ifndef ZZNET_VERSION
#define ZZNET_VERSION "unknown"
#endif

namespace zz::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string utc_now()
{
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

void write_atomic(const fs::path& path, const std::string& text)
{
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f)
            throw std::runtime_error("cannot write " + tmp.string());
        f << text;
        if (!f.flush())
            throw std::runtime_error("cannot write " + tmp.string());
    }
    fs::rename(tmp, path);
}

struct Manifest {
    json doc;

    Manifest(const std::string& command, const std::vector<std::string>& args)
    {
        doc = {{"command", command}, {"args", args}, {"version", ZZNET_VERSION}, {"started", utc_now()}};
    }
    void write(const fs::path& dir)
    {
        doc["finished"] = utc_now();
        write_atomic(dir / "manifest.json", doc.dump(2) + "\n");
    }
};

void ensure_dir(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw std::runtime_error("cannot create output directory " + dir.string());
}

const char* noise_name(NoiseModel n) { return n == NoiseModel::Complex ? "complex" : "per-coordinate"; }

json train_config_json(const TrainConfig& c)
{
    json sched = json::array();
    for (const auto& [at, mult] : c.schedule)
        sched.push_back({at, mult});
    return {{"lr", c.lr},       {"schedule", sched},         {"epochs", c.epochs},    {"batch_size", c.batch_size},
            {"beta1", c.beta1}, {"beta2", c.beta2},          {"eps", c.eps},          {"seed", c.seed},
            {"threads", c.threads}, {"early_stop", c.early_stop}, {"patience", c.patience}};
}

// ---------------------------------------------------------------------------

struct GenerateOpts {
    DataGenConfig cfg;
    std::vector<std::size_t> counts{2000, 500, 300};
    std::string noise = "per-coordinate";
    bool no_clamp = false;
    std::size_t threads = 1;
    std::string out;
};

int cmd_generate(const GenerateOpts& o, const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    DataGenConfig cfg = o.cfg;
    cfg.train = o.counts.at(0);
    cfg.val = o.counts.at(1);
    cfg.test = o.counts.at(2);
    cfg.clamp = !o.no_clamp;
    cfg.noise = o.noise == "complex" ? NoiseModel::Complex : NoiseModel::PerCoordinate;
    cfg.validate();

    Manifest man("generate", args);
    const fs::path dir(o.out);
    ensure_dir(dir);
    const Dataset ds = generate_dataset(cfg, o.threads);
    json files = json::object();
    for (const Split s : {Split::Train, Split::Val, Split::Test}) {
        const fs::path p = dir / (std::string(split_name(s)) + ".jsonl");
        write_examples(p.string(), ds.split(s));
        files[split_name(s)] = p.string();
    }
    man.doc["config"] = {{"m", cfg.m},       {"outlier_ratio", cfg.outlier_ratio},
                         {"sigma", cfg.sigma}, {"counts", {cfg.train, cfg.val, cfg.test}},
                         {"seed", cfg.seed}, {"clamp", cfg.clamp},
                         {"noise", noise_name(cfg.noise)}};
    man.doc["seed"] = cfg.seed;
    man.doc["outputs"] = files;
    man.write(dir);

    out << json{{"train", cfg.train}, {"val", cfg.val}, {"test", cfg.test}, {"files", files}}.dump() << '\n';
    err << "generated " << cfg.train + cfg.val + cfg.test << " examples (m=" << cfg.m << ", r=" << cfg.outlier_ratio
        << ", sigma=" << cfg.sigma << ") in " << dir.string() << '\n';
    return 0;
}

// ---------------------------------------------------------------------------

struct TrainOpts {
    std::string model = "deep";
    std::string model_config;
    std::string data;
    std::string out;
    std::string resume;
    TrainConfig cfg;
};

std::vector<ToyExample> load_split(const fs::path& dir, Split s, bool required)
{
    const fs::path p = dir / (std::string(split_name(s)) + ".jsonl");
    if (!fs::exists(p)) {
        if (required)
            throw std::runtime_error("missing dataset file " + p.string());
        return {};
    }
    return read_examples(p.string());
}

int cmd_train(const TrainOpts& o, const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    o.cfg.validate();
    const fs::path data(o.data), dir(o.out);
    const auto train_set = load_split(data, Split::Train, true);
    const auto val_set = load_split(data, Split::Val, false);
    ensure_dir(dir);

    Manifest man("train", args);
    TrainState state;
    Model model = [&] {
        if (!o.resume.empty()) {
            LoadedCheckpoint ck = load_checkpoint(o.resume);
            if (ck.state)
                state = *ck.state;
            return std::move(ck.model);
        }
        ModelConfig mc = o.model == "broad" ? make_broad_model() : make_deep_model();
        if (!o.model_config.empty()) {
            std::ifstream f(o.model_config);
            if (!f)
                throw std::runtime_error("cannot read " + o.model_config);
            std::stringstream text;
            text << f.rdbuf();
            mc = ModelConfig::parse(text.str());
        }
        Model m(mc);
        m.initialize(o.cfg.seed);
        return m;
    }();

    const fs::path metrics_path = dir / "metrics.jsonl";
    const fs::path ckpt_path = dir / "checkpoint.zzn";
    std::ofstream metrics(metrics_path, o.resume.empty() ? std::ios::trunc : std::ios::app);
    if (!metrics)
        throw std::runtime_error("cannot write " + metrics_path.string());

    err << "training " << (o.resume.empty() ? o.model : "resumed model") << " with " << model.parameter_count()
        << " parameters on " << train_set.size() << " examples from epoch " << state.next_epoch << '\n';

    int last_epoch = state.next_epoch - 1;
    try {
        state = train(model, train_set, val_set, o.cfg,
                      [&](const EpochMetrics& em, const Model& mdl, const TrainState& st) {
                          metrics << em.to_json() << '\n';
                          metrics.flush();
                          save_checkpoint(mdl, ckpt_path.string(), &st);
                          last_epoch = em.epoch;
                          err << "epoch " << em.epoch + 1 << "/" << o.cfg.epochs << " lr " << em.lr << " train loss "
                              << em.train_loss;
                          if (em.val.count)
                              err << " val acc@1/5/10 " << em.val.acc1 << "/" << em.val.acc5 << "/" << em.val.acc10
                                  << " mean err " << em.val.mean_error;
                          err << " (" << std::fixed << std::setprecision(1) << em.seconds << "s)"
                              << std::defaultfloat << std::setprecision(6) << '\n';
                      },
                      state);
    } catch (const NonFiniteError& e) {
        err << "error: " << e.what() << '\n';
        out << json{{"error", "non-finite"}, {"epoch", e.epoch}, {"batch", e.batch}, {"param_norm", e.param_norm}}.dump()
            << '\n';
        return 3;
    }
    // Early stopping restores the best parameters; persist those.
    save_checkpoint(model, ckpt_path.string(), &state);

    json result = {{"epochs_run", last_epoch + 1}, {"checkpoint", ckpt_path.string()},
                   {"parameters", model.parameter_count()}};
    if (!val_set.empty())
        result["val"] = json::parse(evaluate(model, val_set, o.cfg.threads).to_json());

    man.doc["config"] = {{"model", o.model},
                         {"model_config", model.config().to_text()},
                         {"train", train_config_json(o.cfg)},
                         {"data", o.data},
                         {"resume", o.resume}};
    man.doc["seed"] = o.cfg.seed;
    man.doc["outputs"] = {{"metrics", metrics_path.string()}, {"checkpoint", ckpt_path.string()}};
    man.doc["result"] = result;
    man.write(dir);
    out << result.dump() << '\n';
    return 0;
}

// ---------------------------------------------------------------------------

struct EvalOpts {
    std::string checkpoint;
    std::string data;
    std::string split = "test";
    std::string out;
    std::size_t threads = 1;
};

int cmd_eval(const EvalOpts& o, const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    Manifest man("eval", args);
    const LoadedCheckpoint ck = load_checkpoint(o.checkpoint);
    const Split split = parse_split(o.split);
    const auto examples = load_split(fs::path(o.data), split, true);
    const EvalReport r = evaluate(ck.model, examples, o.threads);
    const std::string report = r.to_json();
    out << report << '\n';
    err << o.split << ": " << r.count << " examples, acc@1 " << r.acc1 << ", acc@5 " << r.acc5 << ", acc@10 " << r.acc10
        << ", mean error " << r.mean_error << '\n';
    if (!o.out.empty()) {
        const fs::path dir(o.out);
        ensure_dir(dir);
        write_atomic(dir / "eval.json", report + "\n");
        std::ostringstream preds;
        for (const auto& ex : examples) {
            const Complex p = predict(ck.model, ex.pair);
            preds << json{{"index", ex.index},
                          {"theta", {ex.theta.value().real(), ex.theta.value().imag()}},
                          {"pred", {p.real(), p.imag()}},
                          {"error", angular_error(p, ex.theta)}}
                         .dump()
                  << '\n';
        }
        write_atomic(dir / "predictions.jsonl", preds.str());
        man.doc["config"] = {{"checkpoint", o.checkpoint}, {"data", o.data}, {"split", o.split}};
        man.doc["outputs"] = {{"report", (dir / "eval.json").string()},
                              {"predictions", (dir / "predictions.jsonl").string()}};
        man.doc["result"] = json::parse(report);
        man.write(dir);
    }
    return 0;
}

// ---------------------------------------------------------------------------

struct CheckOpts {
    std::string suite = "all";
    bool inject_broken = false;
    std::uint64_t seed = 7;
    std::string out;
};

int cmd_check(const CheckOpts& o, const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    Manifest man("check", args);
    VerifyOptions vo;
    vo.seed = o.seed;
    vo.inject_broken_basis = o.inject_broken;
    const auto started = std::chrono::steady_clock::now();
    const auto results = run_suite(o.suite, vo);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    std::size_t failed = 0;
    json lines = json::array();
    for (const auto& r : results) {
        out << r.to_json() << '\n';
        lines.push_back(json::parse(r.to_json()));
        if (!r.passed) {
            ++failed;
            err << "FAIL " << r.suite << ": " << r.name << " (value " << r.value << ", bound " << r.tolerance << ")";
            if (!r.detail.empty())
                err << " " << r.detail;
            err << '\n';
        }
    }
    err << results.size() - failed << "/" << results.size() << " checks passed in " << std::fixed
        << std::setprecision(1) << seconds << "s (kernels: " << kernels::name(kernels::active_isa()) << ")\n"
        << std::defaultfloat;
    if (!o.out.empty()) {
        const fs::path dir(o.out);
        ensure_dir(dir);
        man.doc["config"] = {{"suite", o.suite}, {"inject_broken", o.inject_broken}};
        man.doc["seed"] = o.seed;
        man.doc["result"] = {{"passed", results.size() - failed}, {"failed", failed}, {"checks", lines}};
        man.write(dir);
    }
    return failed ? 1 : 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Rotation-equivariant, permutation-invariant networks for 2D point clouds"};
    app.name("zznet");
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "TOML file with one section per command; flags override it");

    GenerateOpts gen;
    auto* g = app.add_subcommand("generate", "Write a synthetic triangle dataset");
    g->add_option("--m", gen.cfg.m, "Points per cloud")->check(CLI::Range(std::size_t{3}, std::size_t{1} << 20))
        ->capture_default_str();
    g->add_option("--outlier-ratio", gen.cfg.outlier_ratio, "Probability that a pair is replaced by noise")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    g->add_option("--sigma", gen.cfg.sigma, "Noise standard deviation")->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    g->add_option("--counts", gen.counts, "Train, validation and test sizes")->expected(3)->delimiter(',')
        ->capture_default_str();
    g->add_option("--seed", gen.cfg.seed, "Dataset seed")->capture_default_str();
    g->add_option("--noise", gen.noise, "Noise model")
        ->check(CLI::IsMember({"per-coordinate", "complex"}))
        ->capture_default_str();
    g->add_flag("--no-clamp", gen.no_clamp, "Project onto full lines instead of segments");
    g->add_option("--threads", gen.threads, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    g->add_option("--out", gen.out, "Output directory")->required();

    TrainOpts tr;
    std::vector<std::string> schedule_text;
    auto* t = app.add_subcommand("train", "Train a model on a generated dataset");
    t->add_option("--model", tr.model, "Architecture")->check(CLI::IsMember({"broad", "deep"}))->capture_default_str();
    t->add_option("--model-config", tr.model_config, "Model description file (overrides --model)");
    t->add_option("--data", tr.data, "Dataset directory")->required();
    t->add_option("--out", tr.out, "Run directory")->required();
    t->add_option("--epochs", tr.cfg.epochs, "Total epochs")->check(CLI::PositiveNumber)->capture_default_str();
    t->add_option("--lr", tr.cfg.lr, "Initial learning rate")->check(CLI::PositiveNumber)->capture_default_str();
    t->add_option("--schedule", schedule_text, "epoch:multiplier steps, e.g. 70:0.5,150:0.5")->delimiter(',');
    t->add_option("--batch-size", tr.cfg.batch_size, "Examples per step")->check(CLI::PositiveNumber)
        ->capture_default_str();
    t->add_option("--seed", tr.cfg.seed, "Initialization and shuffling seed")->capture_default_str();
    t->add_option("--threads", tr.cfg.threads, "Worker threads (1 is bit-reproducible)")->check(CLI::PositiveNumber)
        ->capture_default_str();
    t->add_flag("--early-stop", tr.cfg.early_stop, "Stop when validation loss stalls and keep the best parameters");
    t->add_option("--patience", tr.cfg.patience, "Early-stop patience in epochs")->capture_default_str();
    t->add_option("--resume", tr.resume, "Checkpoint to continue from");

    EvalOpts ev;
    auto* e = app.add_subcommand("eval", "Evaluate a checkpoint");
    e->add_option("--checkpoint", ev.checkpoint, "Checkpoint file")->required();
    e->add_option("--data", ev.data, "Dataset directory")->required();
    e->add_option("--split", ev.split, "Split to evaluate")->check(CLI::IsMember({"train", "val", "test"}))
        ->capture_default_str();
    e->add_option("--threads", ev.threads, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    e->add_option("--out", ev.out, "Directory for the report, per-example predictions and manifest");

    CheckOpts ch;
    auto* c = app.add_subcommand("check", "Run the verification suites");
    std::vector<std::string> suites = suite_names();
    suites.push_back("all");
    c->add_option("--suite", ch.suite, "Suite to run")->check(CLI::IsMember(suites))->capture_default_str();
    c->add_flag("--inject-broken", ch.inject_broken, "Add a deliberately broken basis map");
    c->add_option("--seed", ch.seed, "Seed for random inputs")->capture_default_str();
    c->add_option("--out", ch.out, "Directory for the manifest");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& pe) {
        return app.exit(pe, out, err);
    }

    std::vector<std::string> full{"zznet"};
    full.insert(full.end(), args.begin(), args.end());
    try {
        if (*g)
            return cmd_generate(gen, full, out, err);
        if (*t) {
            if (!schedule_text.empty()) {
                tr.cfg.schedule.clear();
                for (const auto& s : schedule_text) {
                    const auto colon = s.find(':');
                    if (colon == std::string::npos)
                        throw std::invalid_argument("schedule entries look like epoch:multiplier");
                    tr.cfg.schedule.emplace_back(std::stoi(s.substr(0, colon)), std::stod(s.substr(colon + 1)));
                }
            }
            return cmd_train(tr, full, out, err);
        }
        if (*e)
            return cmd_eval(ev, full, out, err);
        if (*c)
            return cmd_check(ch, full, out, err);
    } catch (const std::invalid_argument& ex) {
        err << "error: " << ex.what() << '\n';
        return 2;
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << '\n';
        return 1;
    }
    return 2;
}

}  // namespace zz::cli
