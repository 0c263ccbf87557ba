#include "rednet/network.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "rednet/rng.hpp"

namespace rednet {

std::string to_string(SkipStyle style) {
    switch (style) {
        case SkipStyle::none: return "none";
        case SkipStyle::mirrored: return "mirrored";
        case SkipStyle::sequential: return "sequential";
    }
    throw ConfigError("invalid skip style value");
}

SkipStyle skip_style_from_string(const std::string& name) {
    if (name == "none") return SkipStyle::none;
    if (name == "mirrored") return SkipStyle::mirrored;
    if (name == "sequential") return SkipStyle::sequential;
    throw ConfigError("unknown skip style '" + name +
                      "' (expected none, mirrored or sequential)");
}

void REDNetConfig::validate() const {
    if (conv_layers < 1) throw ConfigError("config: conv_layers must be >= 1");
    if (feature_width < 1) throw ConfigError("config: feature_width must be >= 1");
    if (kernel < 1) throw ConfigError("config: kernel must be >= 1");
    if (stride < 1) throw ConfigError("config: stride must be >= 1");
    if (padding < 0) throw ConfigError("config: padding must be >= 0");
    if (skip_step < 1) throw ConfigError("config: skip_step must be >= 1");
    if (in_channels < 1) throw ConfigError("config: in_channels must be >= 1");
}

REDNetConfig REDNetConfig::red10() {
    REDNetConfig c;
    c.conv_layers = 5;
    c.skip_style = SkipStyle::none;
    return c;
}

REDNetConfig REDNetConfig::red20() {
    REDNetConfig c;
    c.conv_layers = 10;
    c.skip_style = SkipStyle::mirrored;
    c.skip_step = 2;
    return c;
}

REDNetConfig REDNetConfig::red30() {
    REDNetConfig c;
    c.conv_layers = 15;
    c.skip_style = SkipStyle::mirrored;
    c.skip_step = 2;
    return c;
}

bool operator==(const REDNetConfig& a, const REDNetConfig& b) {
    return a.conv_layers == b.conv_layers && a.feature_width == b.feature_width &&
           a.kernel == b.kernel && a.stride == b.stride && a.padding == b.padding &&
           a.skip_style == b.skip_style && a.skip_step == b.skip_step &&
           a.global_input_skip == b.global_input_skip && a.in_channels == b.in_channels;
}

std::vector<SkipEdge> skip_edges_for(const REDNetConfig& cfg) {
    cfg.validate();
    const int L = cfg.conv_layers;
    std::vector<SkipEdge> edges;
    switch (cfg.skip_style) {
        case SkipStyle::none:
            break;
        case SkipStyle::mirrored: {
            // Stride 1 keeps all hidden sizes equal, so the symmetric pair
            // (i, 2L+1-i) lines up. With stride > 1 conv layer i's output
            // grid matches deconv layer 2L-i's output grid instead.
            //
            // Destinations stop at layer 2L-1: the final layer produces the
            // in_channels image, not a feature_width map, so it can never
            // absorb an element-wise feature-map sum. With stride 1 that
            // bounds the source at 2, which only matters for odd L.
            const int start = cfg.stride == 1 ? L : L - 1;
            const int offset = cfg.stride == 1 ? 2 * L + 1 : 2 * L;
            for (int i = start; offset - i <= 2 * L - 1 && i >= 1; i -= cfg.skip_step) {
                edges.push_back({i, offset - i});
            }
            break;
        }
        case SkipStyle::sequential: {
            // Blocks of skip_step layers tile 2..2L-1; each block's input
            // activation is added to its last layer's output.
            for (int first = 2; first + cfg.skip_step - 1 <= 2 * L - 1;
                 first += cfg.skip_step) {
                edges.push_back({first - 1, first + cfg.skip_step - 1});
            }
            break;
        }
    }
    std::sort(edges.begin(), edges.end(),
              [](const SkipEdge& a, const SkipEdge& b) { return a.dest < b.dest; });
    return edges;
}

ConvSpec layer_spec(const REDNetConfig& cfg, int layer) {
    const int L2 = cfg.total_layers();
    if (layer < 1 || layer > L2) {
        throw ConfigError("layer id " + std::to_string(layer) + " out of range 1.." +
                          std::to_string(L2));
    }
    ConvSpec s;
    s.kernel = cfg.kernel;
    s.stride = cfg.stride;
    s.padding = cfg.padding;
    s.in_channels = (layer == 1) ? cfg.in_channels : cfg.feature_width;
    s.out_channels = (layer == L2) ? cfg.in_channels : cfg.feature_width;
    return s;
}

std::vector<std::pair<int, int>> encoder_sizes(const REDNetConfig& cfg, int h, int w) {
    cfg.validate();
    std::vector<std::pair<int, int>> sizes;
    sizes.emplace_back(h, w);
    for (int layer = 1; layer <= cfg.conv_layers; ++layer) {
        h = conv_out_size(h, cfg.kernel, cfg.stride, cfg.padding);
        w = conv_out_size(w, cfg.kernel, cfg.stride, cfg.padding);
        sizes.emplace_back(h, w);
    }
    return sizes;
}

template <typename T>
std::vector<std::span<const T>> NetGrads<T>::views() const {
    std::vector<std::span<const T>> out;
    out.reserve(weights.size() * 2);
    for (std::size_t i = 0; i < weights.size(); ++i) {
        out.push_back(weights[i].values());
        out.push_back({biases[i].data(), biases[i].size()});
    }
    return out;
}

template <typename T>
Network<T> Network<T>::build(const REDNetConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Network net;
    net.cfg_ = cfg;
    net.edges_ = skip_edges_for(cfg);

    Rng rng(seed);
    const int L2 = cfg.total_layers();
    net.weights_.reserve(L2);
    net.biases_.reserve(L2);
    for (int layer = 1; layer <= L2; ++layer) {
        const ConvSpec s = layer_spec(cfg, layer);
        const bool is_conv = layer <= cfg.conv_layers;
        Tensor4<T> w = is_conv
                           ? Tensor4<T>(s.out_channels, s.in_channels, s.kernel, s.kernel)
                           : Tensor4<T>(s.in_channels, s.out_channels, s.kernel, s.kernel);
        // He initialization: keeps activation variance flat through the
        // rectified stack regardless of depth.
        const double stddev = std::sqrt(2.0 / (static_cast<double>(s.kernel) * s.kernel *
                                               s.in_channels));
        for (T& v : w.values()) v = static_cast<T>(rng.normal() * stddev);
        net.weights_.push_back(std::move(w));
        net.biases_.emplace_back(s.out_channels, T(0));
    }
    return net;
}

template <typename T>
ForwardTrace<T> Network<T>::forward_trace(const Tensor4<T>& x) const {
    if (weights_.empty()) throw ConfigError("network has no layers (default constructed)");
    if (x.c() != cfg_.in_channels) {
        throw ShapeError("network input has " + std::to_string(x.c()) +
                         " channels, config expects " + std::to_string(cfg_.in_channels));
    }
    const int L2 = cfg_.total_layers();
    ForwardTrace<T> trace;
    trace.pre_act.reserve(L2);
    trace.post_act.reserve(L2);
    for (int layer = 1; layer <= L2; ++layer) {
        const ConvSpec s = layer_spec(cfg_, layer);
        const Tensor4<T>& in = (layer == 1) ? x : trace.post_act[layer - 2];
        Tensor4<T> z = (layer <= cfg_.conv_layers)
                           ? conv2d_forward(in, weights_[layer - 1], biases_[layer - 1], s)
                           : deconv2d_forward(in, weights_[layer - 1], biases_[layer - 1], s);
        for (const SkipEdge& e : edges_) {
            if (e.dest == layer) add_inplace(z, trace.post_act[e.source - 1]);
        }
        trace.pre_act.push_back(std::move(z));
        // Every layer is rectified except the last: the output must be able
        // to carry signed corrections.
        trace.post_act.push_back(layer < L2 ? relu_forward(trace.pre_act.back())
                                            : trace.pre_act.back());
    }
    trace.output = trace.post_act.back();
    if (cfg_.global_input_skip) {
        require_same_shape(trace.output, x, "global input skip");
        add_inplace(trace.output, x);
    }
    return trace;
}

template <typename T>
Tensor4<T> Network<T>::forward(const Tensor4<T>& x) const {
    return forward_trace(x).output;
}

namespace {

template <typename T>
void accumulate(Tensor4<T>& dst, const Tensor4<T>& src) {
    if (dst.empty()) {
        dst = src;
    } else {
        add_inplace(dst, src);
    }
}

}  // namespace

template <typename T>
NetGrads<T> Network<T>::backward(const Tensor4<T>& x, const ForwardTrace<T>& trace,
                                 const Tensor4<T>& grad_output) const {
    const int L2 = cfg_.total_layers();
    if (static_cast<int>(trace.pre_act.size()) != L2) {
        throw ShapeError("backward: trace does not match network depth");
    }
    require_same_shape(grad_output, trace.output, "backward output grad");

    NetGrads<T> g;
    g.weights.resize(L2);
    g.biases.resize(L2);
    if (cfg_.global_input_skip) g.input = grad_output;

    // Accumulated dL/d(post-activation) per layer; filled in as consumers
    // (the next layer, skip edges) are processed from the top down.
    std::vector<Tensor4<T>> g_post(L2);

    for (int layer = L2; layer >= 1; --layer) {
        // The last layer has no ReLU, so its pre-activation grad is the
        // output grad itself.
        Tensor4<T> g_z = (layer == L2)
                             ? grad_output
                             : relu_backward(trace.pre_act[layer - 1], g_post[layer - 1]);
        for (const SkipEdge& e : edges_) {
            if (e.dest == layer) accumulate(g_post[e.source - 1], g_z);
        }
        const ConvSpec s = layer_spec(cfg_, layer);
        const Tensor4<T>& in = (layer == 1) ? x : trace.post_act[layer - 2];
        LayerGrads<T> lg = (layer <= cfg_.conv_layers)
                               ? conv2d_backward(in, weights_[layer - 1], s, g_z)
                               : deconv2d_backward(in, weights_[layer - 1], s, g_z);
        g.weights[layer - 1] = std::move(lg.weight);
        g.biases[layer - 1] = std::move(lg.bias);
        if (layer == 1) {
            accumulate(g.input, lg.input);
        } else {
            accumulate(g_post[layer - 2], lg.input);
        }
    }
    return g;
}

template <typename T>
std::size_t Network<T>::param_count() const {
    std::size_t total = 0;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        total += weights_[i].size() + biases_[i].size();
    }
    return total;
}

template <typename T>
std::vector<std::span<T>> Network<T>::param_views() {
    std::vector<std::span<T>> out;
    out.reserve(weights_.size() * 2);
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        out.push_back(weights_[i].values());
        out.push_back({biases_[i].data(), biases_[i].size()});
    }
    return out;
}

template <typename T>
std::vector<std::span<const T>> Network<T>::param_views() const {
    std::vector<std::span<const T>> out;
    out.reserve(weights_.size() * 2);
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        out.push_back(weights_[i].values());
        out.push_back({biases_[i].data(), biases_[i].size()});
    }
    return out;
}

std::string config_to_json(const REDNetConfig& cfg) {
    nlohmann::json j;
    j["conv_layers"] = cfg.conv_layers;
    j["feature_width"] = cfg.feature_width;
    j["global_input_skip"] = cfg.global_input_skip;
    j["in_channels"] = cfg.in_channels;
    j["kernel"] = cfg.kernel;
    j["padding"] = cfg.padding;
    j["skip_step"] = cfg.skip_step;
    j["skip_style"] = to_string(cfg.skip_style);
    j["stride"] = cfg.stride;
    // nlohmann::json keeps object keys sorted, so dump() is byte-stable.
    return j.dump();
}

REDNetConfig config_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw FormatError("config JSON must be an object");

    REDNetConfig cfg;
    for (const auto& [key, value] : j.items()) {
        try {
            if (key == "conv_layers") cfg.conv_layers = value.get<int>();
            else if (key == "feature_width") cfg.feature_width = value.get<int>();
            else if (key == "global_input_skip") cfg.global_input_skip = value.get<bool>();
            else if (key == "in_channels") cfg.in_channels = value.get<int>();
            else if (key == "kernel") cfg.kernel = value.get<int>();
            else if (key == "padding") cfg.padding = value.get<int>();
            else if (key == "skip_step") cfg.skip_step = value.get<int>();
            else if (key == "skip_style") cfg.skip_style = skip_style_from_string(value.get<std::string>());
            else if (key == "stride") cfg.stride = value.get<int>();
            else throw FormatError("unknown config key '" + key + "'");
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("config key '" + key + "' has the wrong type: " + e.what());
        } catch (const ConfigError& e) {
            throw FormatError(e.what());
        }
    }
    try {
        cfg.validate();
    } catch (const ConfigError& e) {
        throw FormatError(e.what());
    }
    return cfg;
}

namespace {

void put_u32le(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_f32le(std::string& out, float f) {
    put_u32le(out, std::bit_cast<std::uint32_t>(f));
}

struct ByteReader {
    const std::string& buf;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > buf.size()) throw FormatError("truncated checkpoint");
    }
    std::uint32_t u32le() {
        need(4);
        const auto* p = reinterpret_cast<const unsigned char*>(buf.data() + pos);
        pos += 4;
        return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
               (static_cast<std::uint32_t>(p[2]) << 16) |
               (static_cast<std::uint32_t>(p[3]) << 24);
    }
    float f32le() { return std::bit_cast<float>(u32le()); }
    std::string bytes(std::size_t n) {
        need(n);
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
};

}  // namespace

void save_checkpoint(const Network<float>& net, const std::filesystem::path& path) {
    const REDNetConfig& cfg = net.config();
    std::string blob;
    blob.append(kCheckpointMagic, 4);
    put_u32le(blob, kCheckpointVersion);
    const std::string cfg_json = config_to_json(cfg);
    put_u32le(blob, static_cast<std::uint32_t>(cfg_json.size()));
    blob += cfg_json;

    const int L2 = cfg.total_layers();
    for (int layer = 1; layer <= L2; ++layer) {
        const Tensor4<float>& w = net.weight(layer);
        if (layer <= cfg.conv_layers) {
            for (float v : w.values()) put_f32le(blob, v);
        } else {
            // Deconv weights live as (in, out, k, k); the container stores
            // every layer as (out, in, kh, kw).
            for (int o = 0; o < w.c(); ++o)
                for (int i = 0; i < w.n(); ++i)
                    for (int u = 0; u < w.h(); ++u)
                        for (int v = 0; v < w.w(); ++v) put_f32le(blob, w.at(i, o, u, v));
        }
        for (float v : net.bias(layer)) put_f32le(blob, v);
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    out.flush();
    if (!out) throw IoError("failed writing checkpoint to '" + path.string() + "'");
}

Network<float> load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    ByteReader r{buf};
    const std::string magic = r.bytes(4);
    if (std::memcmp(magic.data(), kCheckpointMagic, 4) != 0) {
        throw FormatError("not a checkpoint: bad magic");
    }
    const std::uint32_t version = r.u32le();
    if (version != kCheckpointVersion) {
        throw FormatError("unsupported checkpoint version " + std::to_string(version) +
                          " (expected " + std::to_string(kCheckpointVersion) + ")");
    }
    const std::uint32_t cfg_len = r.u32le();
    const REDNetConfig cfg = config_from_json(r.bytes(cfg_len));

    Network<float> net = Network<float>::build(cfg, 0);
    const int L2 = cfg.total_layers();
    for (int layer = 1; layer <= L2; ++layer) {
        Tensor4<float>& w = net.weight(layer);
        if (layer <= cfg.conv_layers) {
            for (float& v : w.values()) v = r.f32le();
        } else {
            for (int o = 0; o < w.c(); ++o)
                for (int i = 0; i < w.n(); ++i)
                    for (int u = 0; u < w.h(); ++u)
                        for (int v = 0; v < w.w(); ++v) w.at(i, o, u, v) = r.f32le();
        }
        for (float& v : net.bias(layer)) v = r.f32le();
    }
    if (r.pos != buf.size()) throw FormatError("checkpoint has trailing bytes");
    return net;
}

template struct NetGrads<float>;
template struct NetGrads<double>;
template class Network<float>;
template class Network<double>;

}  // namespace rednet
