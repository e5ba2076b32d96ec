#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "fedswarm/arena.hpp"

namespace fedswarm::nn {

enum class Activation : std::uint8_t { ReLU = 0, Tanh = 1, Sigmoid = 2, Linear = 3 };

std::string_view to_string(Activation a);

struct LayerSpec {
    std::size_t input_dim = 0;
    std::size_t output_dim = 0;
    Activation activation = Activation::Linear;
    friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
struct DenseLayer {
    Matrix<Scalar> weight;  // output_dim x input_dim
    Vector<Scalar> bias;    // output_dim
    Activation activation = Activation::Linear;

    LayerSpec spec() const {
        return {static_cast<std::size_t>(weight.cols()), static_cast<std::size_t>(weight.rows()), activation};
    }
};

/// Ordered (weight, bias) pairs of a dense network.
///
/// `concat_dim` extra inputs are appended to the input of layer 1; the critic
/// uses this to feed the action in after its first hidden layer. Gradients and
/// Adam moments reuse the same type, so every piece of weight-space arithmetic
/// works on one shape description.
template <typename Scalar>
struct BasicWeights {
    std::vector<DenseLayer<Scalar>> layers;
    std::size_t concat_dim = 0;

    static BasicWeights zeros(std::span<const LayerSpec> specs, std::size_t concat_dim = 0);
    /// Same shapes as `like`, every value zero.
    static BasicWeights zeros_like(const BasicWeights& like);

    std::vector<LayerSpec> specs() const;
    std::size_t parameter_count() const;
    std::size_t input_dim() const;
    std::size_t output_dim() const;

    /// Throws ShapeError unless layer k+1 consumes layer k's output (plus concat_dim at layer 1).
    void validate() const;
    bool same_shape(const BasicWeights& other) const;
    bool all_finite() const;

    /// Layer-major: each weight matrix row-major, then its bias.
    std::vector<Scalar> flatten() const;
    void assign_flat(std::span<const Scalar> values);

    template <typename Other>
    BasicWeights<Other> cast() const {
        BasicWeights<Other> out;
        out.concat_dim = concat_dim;
        out.layers.reserve(layers.size());
        for (const auto& l : layers) {
            out.layers.push_back({l.weight.template cast<Other>(), l.bias.template cast<Other>(), l.activation});
        }
        return out;
    }

    /// Bitwise-equal values and identical shapes.
    bool identical(const BasicWeights& other) const;
};

using NetworkWeights = BasicWeights<float>;

inline constexpr std::size_t kActionSize = 2;

/// 26 -> hidden (ReLU) -> hidden (ReLU) -> 2 (Linear, squashed by `squash_actions`).
std::vector<LayerSpec> actor_layout(std::size_t hidden, std::size_t obs_dim = sim::kObservationSize);
/// 26 -> hidden (ReLU); [hidden ++ action] -> hidden (ReLU) -> 1 (Linear).
std::vector<LayerSpec> critic_layout(std::size_t hidden, std::size_t obs_dim = sim::kObservationSize);

/// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for weights and biases.
NetworkWeights init_uniform(std::span<const LayerSpec> specs, std::size_t concat_dim, std::mt19937_64& rng);
NetworkWeights make_actor(std::size_t hidden, std::mt19937_64& rng);
NetworkWeights make_critic(std::size_t hidden, std::mt19937_64& rng);

/// Intermediate values kept for the backward pass.
template <typename Scalar>
struct ForwardCache {
    std::vector<Matrix<Scalar>> inputs;       // input to each layer (concat already applied)
    std::vector<Matrix<Scalar>> activations;  // post-activation output of each layer
};

/// Batched forward pass; columns are samples. `side` holds the concat inputs (may be null
/// when concat_dim is 0).
template <typename Scalar>
Matrix<Scalar> forward(const BasicWeights<Scalar>& net, const Matrix<Scalar>& input,
                       const Matrix<Scalar>* side = nullptr, ForwardCache<Scalar>* cache = nullptr);

template <typename Scalar>
struct BackwardResult {
    BasicWeights<Scalar> grad;
    Matrix<Scalar> grad_input;
    Matrix<Scalar> grad_side;
};

/// Backpropagates dLoss/dOutput through a cached forward pass.
template <typename Scalar>
BackwardResult<Scalar> backward(const BasicWeights<Scalar>& net, const ForwardCache<Scalar>& cache,
                                const Matrix<Scalar>& grad_output);

// Actor / critic -----------------------------------------------------------

/// Maps raw outputs u to (v, omega) = (0.25 * sigmoid(u_v), pi/2 * tanh(u_w)), column-wise.
template <typename Scalar>
Matrix<Scalar> squash_actions(const Matrix<Scalar>& raw);

template <typename Scalar>
Matrix<Scalar> actor_forward_batch(const BasicWeights<Scalar>& actor, const Matrix<Scalar>& states);

template <typename Scalar>
Vector<Scalar> critic_forward_batch(const BasicWeights<Scalar>& critic, const Matrix<Scalar>& states,
                                    const Matrix<Scalar>& actions);

sim::Action actor_forward(const NetworkWeights& actor, const sim::Observation& obs);
double critic_forward(const NetworkWeights& critic, const sim::Observation& obs, const sim::Action& action);

template <typename Scalar>
struct CriticGradient {
    BasicWeights<Scalar> grad;
    Scalar loss = 0;  // mean squared TD error
};

/// Gradient of (1/B) * sum_i (y_i - Q(s_i, a_i))^2. Throws InvalidArgument on an empty
/// batch or mismatched target count.
template <typename Scalar>
CriticGradient<Scalar> backprop_critic(const BasicWeights<Scalar>& critic, const Matrix<Scalar>& states,
                                       const Matrix<Scalar>& actions, const Vector<Scalar>& targets);

template <typename Scalar>
struct ActorGradient {
    BasicWeights<Scalar> grad;  // ascent direction of J
    Scalar objective = 0;       // J = (1/B) * sum_i Q(s_i, pi(s_i))
};

/// Deterministic policy gradient of J through the critic's action input and the
/// actor's output squashing.
template <typename Scalar>
ActorGradient<Scalar> backprop_actor(const BasicWeights<Scalar>& actor, const BasicWeights<Scalar>& critic,
                                     const Matrix<Scalar>& states);

// Optimizer ----------------------------------------------------------------

struct AdamParams {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    friend bool operator==(const AdamParams&, const AdamParams&) = default;
};

template <typename Scalar>
struct BasicAdamState {
    BasicWeights<Scalar> first_moment;
    BasicWeights<Scalar> second_moment;
    std::uint64_t step = 0;
    AdamParams params;

    static BasicAdamState init(const BasicWeights<Scalar>& like, AdamParams params);
};

using AdamState = BasicAdamState<float>;

enum class Direction { Minimize, Maximize };

/// One bias-corrected Adam update in place. Throws NumericError (weights untouched)
/// when the gradient holds NaN/Inf, ShapeError on mismatched shapes.
template <typename Scalar>
void adam_step(BasicWeights<Scalar>& weights, const BasicWeights<Scalar>& grad, BasicAdamState<Scalar>& state,
               Direction direction);

// Weight-space arithmetic ---------------------------------------------------

/// Elementwise arithmetic mean. Throws InvalidArgument on an empty list, ShapeError on mismatch.
NetworkWeights fedavg(std::span<const NetworkWeights> sets);
NetworkWeights fedavg(std::span<const NetworkWeights* const> sets);

/// tau * local + (1 - tau) * averaged. Throws InvalidArgument for tau outside [0, 1].
NetworkWeights soft_blend(const NetworkWeights& local, const NetworkWeights& averaged, double tau);
/// In-place variant: local <- tau * local + (1 - tau) * averaged.
void soft_blend_into(NetworkWeights& local, const NetworkWeights& averaged, double tau);

/// Payload bytes: parameter count times 4 (float32), no framing.
std::size_t serialized_size(const NetworkWeights& weights);

// Batch packing helpers.
Matrix<float> pack_observations(std::span<const sim::Observation> obs);
Matrix<float> pack_actions(std::span<const sim::Action> actions);

}  // namespace fedswarm::nn
