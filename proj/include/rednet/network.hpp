#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rednet/layers.hpp"
#include "rednet/tensor.hpp"

namespace rednet {

enum class SkipStyle { none, mirrored, sequential };

std::string to_string(SkipStyle style);
SkipStyle skip_style_from_string(const std::string& name);  // throws ConfigError

// One additive skip edge: the post-ReLU activation of layer `source` is
// added to the pre-ReLU output of layer `dest` (1-based layer ids).
struct SkipEdge {
    int source = 0;
    int dest = 0;
    bool operator==(const SkipEdge&) const = default;
};

// Architecture of a symmetric encoder-decoder: conv_layers convolutions
// followed by the same number of deconvolutions; every layer is rectified
// except the last.
struct REDNetConfig {
    int conv_layers = 15;     // L; the net has 2L layers total
    int feature_width = 64;   // channels of every hidden layer
    int kernel = 3;
    int stride = 1;
    int padding = 1;
    SkipStyle skip_style = SkipStyle::mirrored;
    int skip_step = 2;        // every skip_step-th conv layer feeds a skip
    bool global_input_skip = false;  // add the input image to the output
    int in_channels = 1;

    int total_layers() const { return 2 * conv_layers; }
    void validate() const;  // throws ConfigError

    static REDNetConfig red10();  // L=5, no skips
    static REDNetConfig red20();  // L=10, mirrored skips, step 2
    static REDNetConfig red30();  // L=15, mirrored skips, step 2
};

bool operator==(const REDNetConfig& a, const REDNetConfig& b);

// The skip edge set implied by a config, sorted by destination.
//
// Mirrored style pairs conv layer i with deconv layer 2L+1-i, starting at
// the innermost conv layer L and stepping down by skip_step. With stride 1
// both ends of such a pair have equal spatial size. With stride > 1 they
// do not, so strided configs pair i with 2L-i instead (origins L-1,
// L-3, ...), which lines the grids up exactly.
//
// Sequential style chains blocks of skip_step layers across layers
// 2..2L-1: the input of each block is added to the output of its last
// layer (edge source = first block layer - 1, dest = last block layer).
std::vector<SkipEdge> skip_edges_for(const REDNetConfig& cfg);

// Per-layer geometry. Layer ids are 1-based; 1..L are conv, L+1..2L deconv.
ConvSpec layer_spec(const REDNetConfig& cfg, int layer);

// Spatial size after each encoder (conv) layer for an h x w input; entry 0
// is the input size. Throws GeometryError if any layer collapses.
std::vector<std::pair<int, int>> encoder_sizes(const REDNetConfig& cfg, int h, int w);

// Everything forward() produced, kept for the backward pass. Index i holds
// layer i+1's tensors.
template <typename T>
struct ForwardTrace {
    Tensor4<T> output;                   // final output (after global skip, if any)
    std::vector<Tensor4<T>> pre_act;     // layer outputs before ReLU (skips applied)
    std::vector<Tensor4<T>> post_act;    // layer outputs after ReLU (last layer: same as pre)
};

// Gradients for every parameter, in layer order.
template <typename T>
struct NetGrads {
    std::vector<Tensor4<T>> weights;
    std::vector<std::vector<T>> biases;
    Tensor4<T> input;

    // Flat spans in the same order as Network::param_views().
    std::vector<std::span<const T>> views() const;
};

template <typename T>
class Network {
public:
    Network() = default;

    // He-initialized weights (normal, variance 2 / (k*k*fan_in)), zero
    // biases, drawn from a single stream seeded with `seed`.
    static Network build(const REDNetConfig& cfg, std::uint64_t seed);

    const REDNetConfig& config() const { return cfg_; }
    const std::vector<SkipEdge>& skip_edges() const { return edges_; }

    Tensor4<T> forward(const Tensor4<T>& x) const;
    ForwardTrace<T> forward_trace(const Tensor4<T>& x) const;
    NetGrads<T> backward(const Tensor4<T>& x, const ForwardTrace<T>& trace,
                         const Tensor4<T>& grad_output) const;

    // Layer ids are 1-based. Conv weights are (out, in, k, k); deconv
    // weights are (in, out, k, k).
    Tensor4<T>& weight(int layer) { return weights_[layer - 1]; }
    const Tensor4<T>& weight(int layer) const { return weights_[layer - 1]; }
    std::vector<T>& bias(int layer) { return biases_[layer - 1]; }
    const std::vector<T>& bias(int layer) const { return biases_[layer - 1]; }

    std::size_t param_count() const;

    // Mutable flat views over all parameters: layer 1..2L, weight then
    // bias. The optimizer's contract for parameter order.
    std::vector<std::span<T>> param_views();
    std::vector<std::span<const T>> param_views() const;

private:
    REDNetConfig cfg_;
    std::vector<SkipEdge> edges_;
    std::vector<Tensor4<T>> weights_;
    std::vector<std::vector<T>> biases_;
};

// Checkpoint container: "REDN" magic, u32 LE format version, u32 LE
// length-prefixed config JSON, then for each layer 1..2L the weights in
// (out, in, kh, kw) row-major float32 LE followed by the biases.
inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr char kCheckpointMagic[4] = {'R', 'E', 'D', 'N'};

void save_checkpoint(const Network<float>& net, const std::filesystem::path& path);
Network<float> load_checkpoint(const std::filesystem::path& path);

// Config JSON with a stable key order (round-trips byte-identically).
std::string config_to_json(const REDNetConfig& cfg);
REDNetConfig config_from_json(const std::string& text);  // strict: unknown keys fail

}  // namespace rednet
