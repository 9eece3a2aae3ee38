#ifndef RECALL_ENCODER_HPP
#define RECALL_ENCODER_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "vector_math.hpp"

namespace recall
{

/// One affine layer, weights stored row-major as out_dim x in_dim.
template <class Scalar>
struct BasicLayerParams {
    std::size_t out_dim = 0;
    std::size_t in_dim = 0;
    std::vector<Scalar> weights;
    std::vector<Scalar> bias;

    BasicLayerParams() = default;
    BasicLayerParams(std::size_t out, std::size_t in)
        : out_dim(out), in_dim(in), weights(out * in, Scalar(0)), bias(out, Scalar(0))
    {
    }

    Scalar& w(std::size_t r, std::size_t c) { return weights[r * in_dim + c]; }
    Scalar w(std::size_t r, std::size_t c) const { return weights[r * in_dim + c]; }

    bool operator==(const BasicLayerParams&) const = default;
};

template <class Scalar>
using BasicTower = std::vector<BasicLayerParams<Scalar>>;

/// Weights of the two-tower encoder. The query tower consumes the
/// concatenation [image features, text features]; the target tower consumes
/// image features alone. Hidden layers use tanh, the last layer is linear.
template <class Scalar>
struct BasicEncoderParameters {
    BasicTower<Scalar> query_tower;
    BasicTower<Scalar> target_tower;

    bool operator==(const BasicEncoderParameters&) const = default;

    std::size_t query_input_dim() const { return query_tower.front().in_dim; }
    std::size_t target_input_dim() const { return target_tower.front().in_dim; }
    std::size_t embedding_dim() const { return query_tower.back().out_dim; }
};

using LayerParams = BasicLayerParams<double>;
using Tower = BasicTower<double>;
using EncoderParameters = BasicEncoderParameters<double>;

template <class To, class From>
BasicEncoderParameters<To> cast_parameters(const BasicEncoderParameters<From>& params)
{
    auto cast_tower = [](const BasicTower<From>& tower) {
        BasicTower<To> out;
        for (const auto& layer : tower) {
            BasicLayerParams<To> l;
            l.out_dim = layer.out_dim;
            l.in_dim = layer.in_dim;
            l.weights.assign(layer.weights.begin(), layer.weights.end());
            l.bias.assign(layer.bias.begin(), layer.bias.end());
            out.push_back(std::move(l));
        }
        return out;
    };
    return {cast_tower(params.query_tower), cast_tower(params.target_tower)};
}

namespace detail
{

inline void validate_tower(const Tower& tower, const char* name)
{
    if (tower.empty()) {
        throw ShapeError(std::string(name) + ": tower has no layers");
    }
    for (std::size_t l = 0; l < tower.size(); ++l) {
        const auto& layer = tower[l];
        if (layer.out_dim == 0 || layer.in_dim == 0 || layer.weights.size() != layer.out_dim * layer.in_dim
            || layer.bias.size() != layer.out_dim) {
            throw ShapeError(std::string(name) + ": layer " + std::to_string(l) + " has inconsistent storage");
        }
        if (l > 0 && tower[l - 1].out_dim != layer.in_dim) {
            throw ShapeError(std::string(name) + ": layer " + std::to_string(l) + " does not chain");
        }
        if (!all_finite(layer.weights) || !all_finite(layer.bias)) {
            throw DomainError(std::string(name) + ": non-finite parameter");
        }
    }
}

} // namespace detail

inline void validate(const EncoderParameters& params)
{
    detail::validate_tower(params.query_tower, "query tower");
    detail::validate_tower(params.target_tower, "target tower");
    if (params.query_tower.back().out_dim != params.target_tower.back().out_dim) {
        throw ShapeError("towers emit different embedding dimensions");
    }
}

/// Post-activation outputs of every layer, input first.
template <class Scalar>
struct BasicTowerTrace {
    std::vector<std::vector<Scalar>> activations;

    const std::vector<Scalar>& output() const { return activations.back(); }
};

using TowerTrace = BasicTowerTrace<double>;

template <class Scalar>
BasicTowerTrace<Scalar> forward_trace(const BasicTower<Scalar>& tower, std::vector<Scalar> input)
{
    if (tower.empty() || input.size() != tower.front().in_dim) {
        throw ShapeError("tower input dimension mismatch: got " + std::to_string(input.size()) + ", expected "
                         + (tower.empty() ? std::string("<empty tower>") : std::to_string(tower.front().in_dim)));
    }
    using std::tanh;
    BasicTowerTrace<Scalar> trace;
    trace.activations.reserve(tower.size() + 1);
    trace.activations.push_back(std::move(input));
    for (std::size_t l = 0; l < tower.size(); ++l) {
        const auto& layer = tower[l];
        const auto& in = trace.activations.back();
        std::vector<Scalar> out(layer.out_dim);
        const bool hidden = l + 1 < tower.size();
        for (std::size_t r = 0; r < layer.out_dim; ++r) {
            Scalar z = layer.bias[r];
            const Scalar* row = &layer.weights[r * layer.in_dim];
            for (std::size_t c = 0; c < layer.in_dim; ++c) {
                z += row[c] * in[c];
            }
            out[r] = hidden ? tanh(z) : z;
        }
        trace.activations.push_back(std::move(out));
    }
    return trace;
}

inline Vector forward(const Tower& tower, std::span<const double> input)
{
    return std::move(forward_trace(tower, Vector(input.begin(), input.end())).activations.back());
}

/// Reverse pass: accumulates into grad_tower the gradient of a scalar whose
/// derivative with respect to the tower output is output_grad.
inline void backward(const Tower& tower, const TowerTrace& trace, std::span<const double> output_grad, Tower& grad_tower)
{
    Vector g(output_grad.begin(), output_grad.end());
    for (std::size_t l = tower.size(); l-- > 0;) {
        const auto& layer = tower[l];
        auto& glayer = grad_tower[l];
        const Vector& in = trace.activations[l];
        for (std::size_t r = 0; r < layer.out_dim; ++r) {
            glayer.bias[r] += g[r];
            double* grow = &glayer.weights[r * layer.in_dim];
            for (std::size_t c = 0; c < layer.in_dim; ++c) {
                grow[c] += g[r] * in[c];
            }
        }
        if (l == 0) {
            break;
        }
        Vector prev(layer.in_dim, 0.0);
        for (std::size_t r = 0; r < layer.out_dim; ++r) {
            const double* row = &layer.weights[r * layer.in_dim];
            for (std::size_t c = 0; c < layer.in_dim; ++c) {
                prev[c] += row[c] * g[r];
            }
        }
        // in is the tanh output of layer l-1
        for (std::size_t c = 0; c < layer.in_dim; ++c) {
            prev[c] *= 1.0 - in[c] * in[c];
        }
        g = std::move(prev);
    }
}

inline Vector encode_query(const EncoderParameters& params, std::span<const double> image_feat,
                           std::span<const double> text_feat)
{
    return forward(params.query_tower, concat(image_feat, text_feat));
}

inline Vector encode_target(const EncoderParameters& params, std::span<const double> image_feat)
{
    return forward(params.target_tower, image_feat);
}

/// Zero-filled parameters with the same shape as `like`.
inline EncoderParameters zeros_like(const EncoderParameters& like)
{
    EncoderParameters out;
    for (const auto& layer : like.query_tower) {
        out.query_tower.emplace_back(layer.out_dim, layer.in_dim);
    }
    for (const auto& layer : like.target_tower) {
        out.target_tower.emplace_back(layer.out_dim, layer.in_dim);
    }
    return out;
}

/// Calls fn(double&) on every parameter in a fixed order: query tower then
/// target tower, per layer weights then bias.
template <class Params, class Fn>
void for_each_parameter(Params& params, Fn&& fn)
{
    for (auto* tower : {&params.query_tower, &params.target_tower}) {
        for (auto& layer : *tower) {
            for (auto& w : layer.weights) {
                fn(w);
            }
            for (auto& b : layer.bias) {
                fn(b);
            }
        }
    }
}

inline std::size_t parameter_count(const EncoderParameters& params)
{
    std::size_t n = 0;
    for_each_parameter(params, [&n](const double&) { ++n; });
    return n;
}

inline std::vector<double*> parameter_refs(EncoderParameters& params)
{
    std::vector<double*> refs;
    for_each_parameter(params, [&refs](double& x) { refs.push_back(&x); });
    return refs;
}

struct EncoderShape {
    std::size_t image_dim = 0;
    std::size_t text_dim = 0;
    std::vector<std::size_t> hidden = {64};
    std::size_t embedding_dim = 32;
};

namespace detail
{

inline Tower init_tower(std::size_t in_dim, const EncoderShape& shape, std::mt19937_64& rng)
{
    Tower tower;
    std::size_t prev = in_dim;
    std::vector<std::size_t> dims = shape.hidden;
    dims.push_back(shape.embedding_dim);
    for (std::size_t out : dims) {
        LayerParams layer(out, prev);
        // Glorot-normal
        std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(prev + out)));
        for (auto& w : layer.weights) {
            w = dist(rng);
        }
        tower.push_back(std::move(layer));
        prev = out;
    }
    return tower;
}

} // namespace detail

/// Seeded Glorot-normal initialization, zero biases.
inline EncoderParameters init_encoder(const EncoderShape& shape, std::uint64_t seed)
{
    if (shape.image_dim == 0 || shape.text_dim == 0 || shape.embedding_dim == 0) {
        throw ArgumentError("init_encoder: dimensions must be positive");
    }
    for (auto h : shape.hidden) {
        if (h == 0) {
            throw ArgumentError("init_encoder: hidden widths must be positive");
        }
    }
    std::mt19937_64 rng(seed);
    EncoderParameters params;
    params.query_tower = detail::init_tower(shape.image_dim + shape.text_dim, shape, rng);
    params.target_tower = detail::init_tower(shape.image_dim, shape, rng);
    return params;
}

} // namespace recall

#endif
