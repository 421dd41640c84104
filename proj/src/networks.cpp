#include "zz/networks.hpp"

#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace zz {

namespace {

std::string join(const std::vector<std::size_t>& v)
{
    std::string s;
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (k)
            s += ',';
        s += std::to_string(v[k]);
    }
    return s;
}

std::vector<std::size_t> split_sizes(const std::string& s)
{
    std::vector<std::size_t> out;
    std::istringstream is(s);
    std::string item;
    while (std::getline(is, item, ','))
        out.push_back(static_cast<std::size_t>(std::stoull(item)));
    return out;
}

const char* weight_name(WeightVariant v) { return v == WeightVariant::NS ? "ns" : "ns+"; }
const char* vector_name(VectorVariant v) { return v == VectorVariant::NC ? "nc" : "nc+"; }

}  // namespace

void ModelConfig::validate() const
{
    if (units.empty())
        throw std::invalid_argument("model needs at least one unit");
    if (!(leaky_slope >= 0.0) || !(eta_init >= 0.0))
        throw std::invalid_argument("leaky_slope and eta_init must be >= 0");
    for (std::size_t u = 0; u < units.size(); ++u) {
        const auto& c = units[u];
        const std::string at = "unit " + std::to_string(u) + ": ";
        if (c.weight.early_channels.empty() || c.weight.late_channels.empty() || c.vector.channels.empty())
            throw std::invalid_argument(at + "channel lists must be nonempty");
        for (auto list : {&c.weight.early_channels, &c.weight.late_channels, &c.vector.channels})
            for (auto n : *list)
                if (n == 0)
                    throw std::invalid_argument(at + "channel counts must be positive");
        if (c.weight.late_channels.back() != c.vector.channels.back())
            throw std::invalid_argument(at + "weight and vector units must end with the same channel count");
        if (c.weight.variant == WeightVariant::NS && c.weight.two_cloud)
            throw std::invalid_argument(at + "NS weight units take a single cloud");
    }
}

std::string ModelConfig::to_text() const
{
    std::ostringstream os;
    os << std::setprecision(17);
    os << "zznet-model 1\n";
    os << "pooling " << pooling_name(pooling) << '\n';
    os << "leaky_slope " << leaky_slope << '\n';
    os << "eta_init " << eta_init << '\n';
    os << "shared_pair_weights " << (shared_pair_weights ? 1 : 0) << '\n';
    for (const auto& u : units)
        os << "unit weight=" << weight_name(u.weight.variant) << " two_cloud=" << (u.weight.two_cloud ? 1 : 0)
           << " early=" << join(u.weight.early_channels) << " late=" << join(u.weight.late_channels)
           << " vector=" << vector_name(u.vector.variant) << " channels=" << join(u.vector.channels)
           << " normalize=" << (u.normalize_weights ? 1 : 0) << '\n';
    return os.str();
}

ModelConfig ModelConfig::parse(const std::string& text)
{
    ModelConfig cfg;
    std::istringstream is(text);
    std::string line;
    bool header = false;
    while (std::getline(is, line)) {
        if (line.empty())
            continue;
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "zznet-model") {
            int version = 0;
            ls >> version;
            if (version != 1)
                throw std::invalid_argument("unsupported model config version");
            header = true;
        } else if (key == "pooling") {
            std::string v;
            ls >> v;
            cfg.pooling = parse_pooling(v);
        } else if (key == "leaky_slope") {
            ls >> cfg.leaky_slope;
        } else if (key == "eta_init") {
            ls >> cfg.eta_init;
        } else if (key == "shared_pair_weights") {
            int v = 1;
            ls >> v;
            cfg.shared_pair_weights = v != 0;
        } else if (key == "unit") {
            ZZUnitConfig u;
            std::string kv;
            while (ls >> kv) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos)
                    throw std::invalid_argument("malformed unit field '" + kv + "'");
                const std::string k = kv.substr(0, eq), v = kv.substr(eq + 1);
                if (k == "weight") {
                    if (v != "ns" && v != "ns+")
                        throw std::invalid_argument("unknown weight unit '" + v + "'");
                    u.weight.variant = v == "ns" ? WeightVariant::NS : WeightVariant::NSPlus;
                } else if (k == "two_cloud") {
                    u.weight.two_cloud = v == "1";
                } else if (k == "early") {
                    u.weight.early_channels = split_sizes(v);
                } else if (k == "late") {
                    u.weight.late_channels = split_sizes(v);
                } else if (k == "vector") {
                    if (v != "nc" && v != "nc+")
                        throw std::invalid_argument("unknown vector unit '" + v + "'");
                    u.vector.variant = v == "nc" ? VectorVariant::NC : VectorVariant::NCPlus;
                } else if (k == "channels") {
                    u.vector.channels = split_sizes(v);
                } else if (k == "normalize") {
                    u.normalize_weights = v == "1";
                } else {
                    throw std::invalid_argument("unknown unit field '" + k + "'");
                }
            }
            cfg.units.push_back(std::move(u));
        } else {
            throw std::invalid_argument("unknown model config key '" + key + "'");
        }
        if (ls.fail() && !ls.eof())
            throw std::invalid_argument("malformed model config line '" + line + "'");
    }
    if (!header)
        throw std::invalid_argument("missing model config header");
    cfg.validate();
    return cfg;
}

ModelConfig make_broad_model()
{
    ModelConfig cfg;
    ZZUnitConfig u;
    u.weight = {WeightVariant::NSPlus, {4, 4}, {4, 16, 4, 1}, true};
    u.vector = {VectorVariant::NCPlus, {32, 1}};
    cfg.units = {u};
    return cfg;
}

ModelConfig make_deep_model()
{
    ModelConfig cfg;
    for (int k = 0; k < 3; ++k) {
        ZZUnitConfig u;
        const std::size_t out = k < 2 ? 4 : 1;
        u.weight = {WeightVariant::NSPlus, {4}, {4, 8, out}, true};
        u.vector = {VectorVariant::NCPlus, {out}};
        cfg.units.push_back(u);
    }
    return cfg;
}

ModelConfig make_nr_model(std::vector<std::size_t> early, std::vector<std::size_t> late,
                          std::vector<std::size_t> vector)
{
    ModelConfig cfg;
    ZZUnitConfig u;
    u.weight = {WeightVariant::NS, std::move(early), std::move(late), false};
    u.vector = {VectorVariant::NC, std::move(vector)};
    u.normalize_weights = false;
    cfg.units = {u};
    cfg.validate();
    return cfg;
}

ModelConfig make_nr_plus_model(std::vector<std::size_t> early, std::vector<std::size_t> late,
                               std::vector<std::size_t> vector, bool normalize)
{
    ModelConfig cfg;
    ZZUnitConfig u;
    u.weight = {WeightVariant::NSPlus, std::move(early), std::move(late), false};
    u.vector = {VectorVariant::NCPlus, std::move(vector)};
    u.normalize_weights = normalize;
    cfg.units = {u};
    cfg.validate();
    return cfg;
}

// ---------------------------------------------------------------------------

namespace {

UnitLayers register_unit(ParamStore& store, const std::string& prefix, const ZZUnitConfig& cfg,
                         std::size_t in_channels)
{
    UnitLayers u;
    const bool ns = cfg.weight.variant == WeightVariant::NS;
    std::size_t in = ns ? in_channels : (cfg.weight.two_cloud ? 2 * in_channels : in_channels);
    for (std::size_t k = 0; k < cfg.weight.early_channels.size(); ++k) {
        const LayerKind kind = ns ? (k == 0 ? LayerKind::Stab0First : LayerKind::Stab0Vector) : LayerKind::SmTensor;
        const std::size_t out = cfg.weight.early_channels[k];
        u.weight.early.push_back(register_layer(store, prefix + ".alpha.early" + std::to_string(k), kind, in, out));
        in = out;
    }
    for (std::size_t k = 0; k < cfg.weight.late_channels.size(); ++k) {
        const LayerKind kind = ns ? LayerKind::Dense : LayerKind::SmVector;
        const std::size_t out = cfg.weight.late_channels[k];
        u.weight.late.push_back(register_layer(store, prefix + ".alpha.late" + std::to_string(k), kind, in, out));
        in = out;
    }
    in = in_channels;
    const LayerKind vk = cfg.vector.variant == VectorVariant::NC ? LayerKind::ComplexPointwise : LayerKind::ComplexSm;
    for (std::size_t k = 0; k < cfg.vector.channels.size(); ++k) {
        const std::size_t out = cfg.vector.channels[k];
        const std::string name = prefix + ".psi.layer" + std::to_string(k);
        u.vector.layers.push_back(register_layer(store, name, vk, in, out));
        if (k + 1 < cfg.vector.channels.size())
            u.vector.eta_offsets.push_back(store.add(name + ".eta", ParamRole::Eta, out));
        in = out;
    }
    return u;
}

}  // namespace

Model::Model(ModelConfig config) : config_(std::move(config))
{
    config_.validate();
    std::size_t channels = 1;
    for (std::size_t u = 0; u < config_.units.size(); ++u) {
        const auto& cfg = config_.units[u];
        z_units_.push_back(register_unit(params_, "u" + std::to_string(u) + ".z", cfg, channels));
        if (!config_.shared_pair_weights)
            x_units_.push_back(register_unit(params_, "u" + std::to_string(u) + ".x", cfg, channels));
        channels = cfg.vector.channels.back();
    }
}

const UnitLayers& Model::unit(std::size_t u, bool x_side) const
{
    if (x_side && !config_.shared_pair_weights)
        return x_units_.at(u);
    return z_units_.at(u);
}

std::size_t Model::input_channels(std::size_t u) const
{
    if (u >= config_.units.size())
        throw std::out_of_range("no such unit");
    return u == 0 ? 1 : config_.units[u - 1].vector.channels.back();
}

// ---------------------------------------------------------------------------

namespace graph {

Var weight_unit_ns(Tape& t, const Model& model, const UnitLayers& u, Var cloud, const ParamBinding& p)
{
    const auto& cfg = model.config();
    Var x = op::leaky(t, op::mix(t, op::fused_first(t, cloud, cfg.pooling), u.weight.early[0], p), cfg.leaky_slope);
    for (std::size_t k = 1; k < u.weight.early.size(); ++k)
        x = op::leaky(t, op::mix(t, op::stab0_vector_basis(t, x, cfg.pooling), u.weight.early[k], p),
                      cfg.leaky_slope);
    Var v = op::point_pool(t, x, cfg.pooling);
    for (std::size_t k = 0; k < u.weight.late.size(); ++k) {
        v = op::mix(t, v, u.weight.late[k], p);
        if (k + 1 < u.weight.late.size())
            v = op::leaky(t, v, cfg.leaky_slope);
    }
    return v;
}

Var weight_unit_ns_plus(Tape& t, const Model& model, const ZZUnitConfig& cfg, const UnitLayers& u, Var cloud,
                        const Var* other, const ParamBinding& p)
{
    const auto& mc = model.config();
    if (cfg.weight.two_cloud != (other != nullptr))
        throw std::invalid_argument("weight unit: second cloud must be given iff the unit is two-cloud");
    Var g = op::gram(t, cloud);
    if (other) {
        if (t.length(*other) != t.length(cloud))
            throw std::invalid_argument("weight unit: cloud length mismatch");
        const Var parts[] = {g, op::gram(t, *other)};
        g = op::concat(t, parts);
    }
    Var x = g;
    for (const auto& layer : u.weight.early)
        x = op::leaky(t, op::sm_tensor(t, x, layer, p, mc.pooling), mc.leaky_slope);
    Var v = op::row_pool(t, x, mc.pooling);
    for (std::size_t k = 0; k < u.weight.late.size(); ++k) {
        v = op::mix(t, op::sm_vector_basis(t, v, mc.pooling), u.weight.late[k], p);
        if (k + 1 < u.weight.late.size())
            v = op::leaky(t, v, mc.leaky_slope);
    }
    if (cfg.normalize_weights)
        v = op::l2_normalize(t, v);
    return v;
}

Var vector_unit(Tape& t, const Model&, const ZZUnitConfig&, const UnitLayers& u, Var cloud, const ParamBinding& p)
{
    Var x = cloud;
    for (std::size_t k = 0; k < u.vector.layers.size(); ++k) {
        x = op::complex_mix(t, x, u.vector.layers[k], p);
        if (k < u.vector.eta_offsets.size())
            x = op::complex_relu(t, x, u.vector.eta_offsets[k], p);
    }
    return x;
}

Var nr_forward(Tape& t, const Model& model, Var cloud, const ParamBinding& p)
{
    const auto& cfg = model.config().units.at(0);
    if (cfg.weight.variant != WeightVariant::NS)
        throw std::invalid_argument("nr_forward needs an NS weight unit");
    if (t.channels(cloud) != 1 || cfg.weight.late_channels.back() != 1)
        throw std::invalid_argument("nr_forward needs single-channel clouds and outputs");
    const auto& u = model.unit(0);
    const std::size_t m = t.length(cloud);
    std::vector<Var> alphas;
    for (std::size_t i = 0; i < m; ++i)
        alphas.push_back(weight_unit_ns(t, model, u, op::permute_points(t, cloud, tau(i, m)), p));
    const Var alpha = op::stack_scalars(t, alphas);
    const Var psi = vector_unit(t, model, cfg, u, cloud, p);
    return op::point_pool(t, op::multiply(t, alpha, psi), Pooling::Sum);
}

Var nr_plus_forward(Tape& t, const Model& model, Var cloud, const ParamBinding& p)
{
    const auto& cfg = model.config().units.at(0);
    if (cfg.weight.variant != WeightVariant::NSPlus || cfg.weight.two_cloud)
        throw std::invalid_argument("nr_plus_forward needs a single-cloud NS+ weight unit");
    if (t.channels(cloud) != 1 || cfg.weight.late_channels.back() != 1)
        throw std::invalid_argument("nr_plus_forward needs single-channel clouds and outputs");
    const auto& u = model.unit(0);
    const Var alpha = weight_unit_ns_plus(t, model, cfg, u, cloud, nullptr, p);
    const Var psi = vector_unit(t, model, cfg, u, cloud, p);
    return op::point_pool(t, op::multiply(t, alpha, psi), Pooling::Sum);
}

std::pair<Var, Var> zz_unit_step(Tape& t, const Model& model, std::size_t unit, Var z, Var x, const ParamBinding& p)
{
    const auto& cfg = model.config().units.at(unit);
    if (cfg.weight.variant != WeightVariant::NSPlus || !cfg.weight.two_cloud)
        throw std::invalid_argument("ZZ-units need two-cloud NS+ weight units");
    if (t.length(z) != t.length(x) || t.channels(z) != t.channels(x))
        throw std::invalid_argument("ZZ-unit: cloud shapes differ");
    if (t.channels(z) != model.input_channels(unit))
        throw std::invalid_argument("ZZ-unit: unexpected channel count");
    const auto& uz = model.unit(unit, false);
    const auto& ux = model.unit(unit, true);
    const Var z_next = op::multiply(t, weight_unit_ns_plus(t, model, cfg, uz, z, &x, p),
                                    vector_unit(t, model, cfg, uz, z, p));
    const Var x_next = op::multiply(t, weight_unit_ns_plus(t, model, cfg, ux, x, &z, p),
                                    vector_unit(t, model, cfg, ux, x, p));
    return {z_next, x_next};
}

std::pair<Var, Var> zz_net_forward(Tape& t, const Model& model, Var z, Var x, const ParamBinding& p)
{
    for (std::size_t u = 0; u < model.config().units.size(); ++u)
        std::tie(z, x) = zz_unit_step(t, model, u, z, x, p);
    if (t.channels(z) != 1)
        throw std::invalid_argument("the last ZZ-unit must output one channel");
    return {op::point_pool(t, z, Pooling::Sum), op::point_pool(t, x, Pooling::Sum)};
}

Var rotation_head(Tape& t, const Model& model, Var z, Var x, const ParamBinding& p)
{
    const auto [fzx, fxz] = zz_net_forward(t, model, z, x, p);
    return op::rotation_head(t, fzx, fxz);
}

}  // namespace graph

// ---------------------------------------------------------------------------

MultiVector as_multivector(const PointCloud& cloud)
{
    MultiVector v(1, cloud.size());
    std::copy(cloud.points().begin(), cloud.points().end(), v.data.begin());
    return v;
}

Complex weight_unit_ns(const PointCloud& z, const Model& model)
{
    Tape t;
    const Var a = graph::weight_unit_ns(t, model, model.unit(0), t.leaf(as_multivector(z)), model.params().binding());
    return t.value(a).data.at(0);
}

MultiVector weight_unit_ns_plus(const PointCloud& z, const PointCloud* x, const Model& model, std::size_t unit)
{
    Tape t;
    const Var zv = t.leaf(as_multivector(z));
    Var xv;
    if (x)
        xv = t.leaf(as_multivector(*x));
    const auto& cfg = model.config().units.at(unit);
    return t.value(graph::weight_unit_ns_plus(t, model, cfg, model.unit(unit), zv, x ? &xv : nullptr,
                                              model.params().binding()));
}

MultiVector vector_unit(const PointCloud& z, const Model& model, std::size_t unit)
{
    Tape t;
    const auto& cfg = model.config().units.at(unit);
    return t.value(graph::vector_unit(t, model, cfg, model.unit(unit), t.leaf(as_multivector(z)),
                                      model.params().binding()));
}

Complex nr_forward(const PointCloud& z, const Model& model)
{
    Tape t;
    return t.value(graph::nr_forward(t, model, t.leaf(as_multivector(z)), model.params().binding())).data.at(0);
}

Complex nr_plus_forward(const PointCloud& z, const Model& model)
{
    Tape t;
    return t.value(graph::nr_plus_forward(t, model, t.leaf(as_multivector(z)), model.params().binding()))
        .data.at(0);
}

std::pair<MultiVector, MultiVector> zz_unit_step(const MultiVector& z, const MultiVector& x, const Model& model,
                                                 std::size_t unit)
{
    Tape t;
    const auto [zn, xn] = graph::zz_unit_step(t, model, unit, t.leaf(z), t.leaf(x), model.params().binding());
    return {t.value(zn), t.value(xn)};
}

std::pair<Complex, Complex> zz_net_forward(const CloudPair& pair, const Model& model)
{
    Tape t;
    const auto [fzx, fxz] = graph::zz_net_forward(t, model, t.leaf(as_multivector(pair.z)),
                                                  t.leaf(as_multivector(pair.x)), model.params().binding());
    return {t.value(fzx).data.at(0), t.value(fxz).data.at(0)};
}

Complex rotation_head(const CloudPair& pair, const Model& model)
{
    Tape t;
    const Var r = graph::rotation_head(t, model, t.leaf(as_multivector(pair.z)), t.leaf(as_multivector(pair.x)),
                                       model.params().binding());
    return t.value(r).data.at(0);
}

}  // namespace zz
