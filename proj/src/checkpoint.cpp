#include "zz/checkpoint.hpp"

#include "zz/bases.hpp"

#include <openssl/sha.h>

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <vector>

namespace zz {

std::array<std::uint8_t, 32> catalog_hash()
{
    const std::string sig = catalog_signature();
    std::array<std::uint8_t, 32> out{};
    SHA256(reinterpret_cast<const unsigned char*>(sig.data()), sig.size(), out.data());
    return out;
}

namespace {

constexpr char kMagic[5] = {'Z', 'Z', 'N', 'E', 'T'};

class Writer {
public:
    void bytes(const void* p, std::size_t n)
    {
        const auto* b = static_cast<const std::uint8_t*>(p);
        buf.insert(buf.end(), b, b + n);
    }
    void u64(std::uint64_t v)
    {
        for (int k = 0; k < 8; ++k)
            buf.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
    }
    void u32(std::uint32_t v)
    {
        for (int k = 0; k < 4; ++k)
            buf.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

    std::vector<std::uint8_t> buf;
};

class Reader {
public:
    explicit Reader(std::vector<std::uint8_t> data) : buf(std::move(data)) { }

    const std::uint8_t* take(std::size_t n)
    {
        if (buf.size() - pos < n)
            throw CheckpointError("checkpoint truncated");
        const std::uint8_t* p = buf.data() + pos;
        pos += n;
        return p;
    }
    std::uint64_t u64()
    {
        const auto* p = take(8);
        std::uint64_t v = 0;
        for (int k = 0; k < 8; ++k)
            v |= static_cast<std::uint64_t>(p[k]) << (8 * k);
        return v;
    }
    std::uint32_t u32()
    {
        const auto* p = take(4);
        std::uint32_t v = 0;
        for (int k = 0; k < 4; ++k)
            v |= static_cast<std::uint32_t>(p[k]) << (8 * k);
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    bool done() const { return pos == buf.size(); }

private:
    std::vector<std::uint8_t> buf;
    std::size_t pos = 0;
};

}  // namespace

void save_checkpoint(const Model& model, const std::string& path, const TrainState* state)
{
    if (path.empty())
        throw CheckpointError("checkpoint path is empty");
    Writer w;
    w.bytes(kMagic, sizeof kMagic);
    w.u32(kCheckpointVersion);
    const std::string text = model.config().to_text();
    w.u64(text.size());
    w.bytes(text.data(), text.size());
    const auto hash = catalog_hash();
    w.bytes(hash.data(), hash.size());
    const auto values = model.params().values();
    w.u64(values.size());
    for (double v : values)
        w.f64(v);
    w.buf.push_back(state ? 1 : 0);
    if (state) {
        const bool moments = state->adam.m.size() == values.size() && state->adam.v.size() == values.size();
        w.u64(static_cast<std::uint64_t>(static_cast<std::int64_t>(state->next_epoch)));
        w.u64(moments ? state->adam.step : 0);
        for (std::size_t k = 0; k < values.size(); ++k)
            w.f64(moments ? state->adam.m[k] : 0.0);
        for (std::size_t k = 0; k < values.size(); ++k)
            w.f64(moments ? state->adam.v[k] : 0.0);
    }

    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw CheckpointError("cannot write '" + tmp + "'");
        out.write(reinterpret_cast<const char*>(w.buf.data()), static_cast<std::streamsize>(w.buf.size()));
        if (!out)
            throw CheckpointError("write to '" + tmp + "' failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec)
        throw CheckpointError("cannot move checkpoint into '" + path + "': " + ec.message());
}

LoadedCheckpoint load_checkpoint(const std::string& path)
{
    if (path.empty())
        throw CheckpointError("checkpoint path is empty");
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw CheckpointError("cannot read '" + path + "'");
    Reader r(std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {}));

    if (std::memcmp(r.take(sizeof kMagic), kMagic, sizeof kMagic) != 0)
        throw CheckpointError("not a checkpoint (bad magic)");
    const std::uint32_t version = r.u32();
    if (version != kCheckpointVersion)
        throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
    const std::uint64_t text_size = r.u64();
    const auto* text = r.take(text_size);
    const std::string config_text(reinterpret_cast<const char*>(text), text_size);
    const auto hash = catalog_hash();
    if (std::memcmp(r.take(hash.size()), hash.data(), hash.size()) != 0)
        throw CheckpointError("catalog hash mismatch: checkpoint was written with a different basis layout");

    ModelConfig cfg;
    try {
        cfg = ModelConfig::parse(config_text);
    } catch (const std::exception& e) {
        throw CheckpointError(std::string("bad model config: ") + e.what());
    }
    LoadedCheckpoint out{Model(cfg), std::nullopt};
    const std::uint64_t n = r.u64();
    if (n != out.model.parameter_count())
        throw CheckpointError("parameter count " + std::to_string(n) + " does not match the config (" +
                              std::to_string(out.model.parameter_count()) + ")");
    auto values = out.model.params().values();
    for (auto& v : values)
        v = r.f64();
    const std::uint8_t has_state = *r.take(1);
    if (has_state) {
        TrainState st;
        st.next_epoch = static_cast<int>(static_cast<std::int64_t>(r.u64()));
        st.adam.step = r.u64();
        st.adam.m.resize(n);
        st.adam.v.resize(n);
        for (auto& v : st.adam.m)
            v = r.f64();
        for (auto& v : st.adam.v)
            v = r.f64();
        if (st.adam.step == 0) {
            st.adam.m.clear();
            st.adam.v.clear();
        }
        out.state = std::move(st);
    }
    if (!r.done())
        throw CheckpointError("trailing bytes after checkpoint payload");
    return out;
}

}  // namespace zz
