#include "fedswarm/neuralnet.hpp"

#include <cmath>
#include <cstring>
#include <numbers>
#include <string>

#include "fedswarm/error.hpp"

namespace fedswarm::nn {

std::string_view to_string(Activation a) {
    switch (a) {
        case Activation::ReLU: return "relu";
        case Activation::Tanh: return "tanh";
        case Activation::Sigmoid: return "sigmoid";
        case Activation::Linear: return "linear";
    }
    return "unknown";
}

// BasicWeights -------------------------------------------------------------

template <typename Scalar>
BasicWeights<Scalar> BasicWeights<Scalar>::zeros(std::span<const LayerSpec> specs, std::size_t concat_dim) {
    BasicWeights w;
    w.concat_dim = concat_dim;
    w.layers.reserve(specs.size());
    for (const LayerSpec& s : specs) {
        if (s.input_dim == 0 || s.output_dim == 0) {
            throw ShapeError("layer dimensions must be >= 1");
        }
        const auto rows = static_cast<Eigen::Index>(s.output_dim);
        const auto cols = static_cast<Eigen::Index>(s.input_dim);
        w.layers.push_back({Matrix<Scalar>::Zero(rows, cols), Vector<Scalar>::Zero(rows), s.activation});
    }
    w.validate();
    return w;
}

template <typename Scalar>
BasicWeights<Scalar> BasicWeights<Scalar>::zeros_like(const BasicWeights& like) {
    const auto s = like.specs();
    return zeros(s, like.concat_dim);
}

template <typename Scalar>
std::vector<LayerSpec> BasicWeights<Scalar>::specs() const {
    std::vector<LayerSpec> out;
    out.reserve(layers.size());
    for (const auto& l : layers) out.push_back(l.spec());
    return out;
}

template <typename Scalar>
std::size_t BasicWeights<Scalar>::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
}

template <typename Scalar>
std::size_t BasicWeights<Scalar>::input_dim() const {
    return layers.empty() ? 0 : static_cast<std::size_t>(layers.front().weight.cols());
}

template <typename Scalar>
std::size_t BasicWeights<Scalar>::output_dim() const {
    return layers.empty() ? 0 : static_cast<std::size_t>(layers.back().weight.rows());
}

template <typename Scalar>
void BasicWeights<Scalar>::validate() const {
    if (concat_dim > 0 && layers.size() < 2) {
        throw ShapeError("concat input requires at least two layers");
    }
    for (std::size_t k = 0; k < layers.size(); ++k) {
        const auto& l = layers[k];
        if (l.bias.size() != l.weight.rows()) {
            throw ShapeError("layer " + std::to_string(k) + ": bias length does not match output dim");
        }
        if (k + 1 < layers.size()) {
            const auto expected = l.weight.rows() + (k == 0 ? static_cast<Eigen::Index>(concat_dim) : 0);
            if (layers[k + 1].weight.cols() != expected) {
                throw ShapeError("layer " + std::to_string(k + 1) + " expects " +
                                 std::to_string(layers[k + 1].weight.cols()) + " inputs, previous layer provides " +
                                 std::to_string(expected));
            }
        }
    }
}

template <typename Scalar>
bool BasicWeights<Scalar>::same_shape(const BasicWeights& other) const {
    return concat_dim == other.concat_dim && specs() == other.specs();
}

template <typename Scalar>
bool BasicWeights<Scalar>::all_finite() const {
    for (const auto& l : layers) {
        if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
    }
    return true;
}

template <typename Scalar>
std::vector<Scalar> BasicWeights<Scalar>::flatten() const {
    std::vector<Scalar> out;
    out.reserve(parameter_count());
    for (const auto& l : layers) {
        for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
            for (Eigen::Index c = 0; c < l.weight.cols(); ++c) out.push_back(l.weight(r, c));
        }
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) out.push_back(l.bias(r));
    }
    return out;
}

template <typename Scalar>
void BasicWeights<Scalar>::assign_flat(std::span<const Scalar> values) {
    if (values.size() != parameter_count()) {
        throw ShapeError("flat parameter vector has " + std::to_string(values.size()) + " values, network has " +
                         std::to_string(parameter_count()));
    }
    std::size_t i = 0;
    for (auto& l : layers) {
        for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
            for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = values[i++];
        }
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = values[i++];
    }
}

template <typename Scalar>
bool BasicWeights<Scalar>::identical(const BasicWeights& other) const {
    if (!same_shape(other)) return false;
    for (std::size_t k = 0; k < layers.size(); ++k) {
        const auto& a = layers[k];
        const auto& b = other.layers[k];
        if (std::memcmp(a.weight.data(), b.weight.data(), sizeof(Scalar) * a.weight.size()) != 0 ||
            std::memcmp(a.bias.data(), b.bias.data(), sizeof(Scalar) * a.bias.size()) != 0) {
            return false;
        }
    }
    return true;
}

// Architectures ------------------------------------------------------------

std::vector<LayerSpec> actor_layout(std::size_t hidden, std::size_t obs_dim) {
    return {{obs_dim, hidden, Activation::ReLU},
            {hidden, hidden, Activation::ReLU},
            {hidden, kActionSize, Activation::Linear}};
}

std::vector<LayerSpec> critic_layout(std::size_t hidden, std::size_t obs_dim) {
    return {{obs_dim, hidden, Activation::ReLU},
            {hidden + kActionSize, hidden, Activation::ReLU},
            {hidden, 1, Activation::Linear}};
}

NetworkWeights init_uniform(std::span<const LayerSpec> specs, std::size_t concat_dim, std::mt19937_64& rng) {
    NetworkWeights w = NetworkWeights::zeros(specs, concat_dim);
    for (auto& l : w.layers) {
        const float bound = 1.0f / std::sqrt(static_cast<float>(l.weight.cols()));
        std::uniform_real_distribution<float> u(-bound, bound);
        for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
            for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = u(rng);
        }
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = u(rng);
    }
    return w;
}

NetworkWeights make_actor(std::size_t hidden, std::mt19937_64& rng) {
    const auto layout = actor_layout(hidden);
    return init_uniform(layout, 0, rng);
}

NetworkWeights make_critic(std::size_t hidden, std::mt19937_64& rng) {
    const auto layout = critic_layout(hidden);
    return init_uniform(layout, kActionSize, rng);
}

// Forward / backward -------------------------------------------------------

namespace {

template <typename Scalar>
void activate(Matrix<Scalar>& z, Activation a) {
    switch (a) {
        case Activation::ReLU: z = z.cwiseMax(Scalar(0)); break;
        case Activation::Tanh: z = z.array().tanh().matrix(); break;
        case Activation::Sigmoid: z = (Scalar(1) / (Scalar(1) + (-z.array()).exp())).matrix(); break;
        case Activation::Linear: break;
    }
}

// dz = delta * f'(z), written in terms of the post-activation value.
template <typename Scalar>
Matrix<Scalar> activation_grad(const Matrix<Scalar>& delta, const Matrix<Scalar>& out, Activation a) {
    switch (a) {
        case Activation::ReLU: return (out.array() > Scalar(0)).select(delta, Scalar(0));
        case Activation::Tanh: return (delta.array() * (Scalar(1) - out.array().square())).matrix();
        case Activation::Sigmoid: return (delta.array() * out.array() * (Scalar(1) - out.array())).matrix();
        case Activation::Linear: return delta;
    }
    return delta;
}

template <typename Scalar>
BackwardResult<Scalar> backward_impl(const BasicWeights<Scalar>& net, const ForwardCache<Scalar>& cache,
                                     const Matrix<Scalar>& grad_output, bool param_grads) {
    if (cache.inputs.size() != net.layers.size() || cache.activations.size() != net.layers.size()) {
        throw ShapeError("forward cache does not match the network");
    }
    BackwardResult<Scalar> result;
    if (param_grads) result.grad = BasicWeights<Scalar>::zeros_like(net);

    Matrix<Scalar> delta = grad_output;
    for (std::size_t i = net.layers.size(); i-- > 0;) {
        const auto& layer = net.layers[i];
        const Matrix<Scalar> dz = activation_grad(delta, cache.activations[i], layer.activation);
        if (param_grads) {
            result.grad.layers[i].weight.noalias() = dz * cache.inputs[i].transpose();
            result.grad.layers[i].bias = dz.rowwise().sum();
        }
        Matrix<Scalar> dx = layer.weight.transpose() * dz;
        if (i == 1 && net.concat_dim > 0) {
            const auto concat = static_cast<Eigen::Index>(net.concat_dim);
            result.grad_side = dx.bottomRows(concat);
            delta = dx.topRows(dx.rows() - concat);
            if (!param_grads) break;  // only the side input was wanted
        } else {
            delta = std::move(dx);
        }
        if (i == 0) result.grad_input = delta;
    }
    return result;
}

}  // namespace

template <typename Scalar>
Matrix<Scalar> forward(const BasicWeights<Scalar>& net, const Matrix<Scalar>& input, const Matrix<Scalar>* side,
                       ForwardCache<Scalar>* cache) {
    if (net.layers.empty()) throw ShapeError("network has no layers");
    if (static_cast<std::size_t>(input.rows()) != net.input_dim()) {
        throw ShapeError("input has " + std::to_string(input.rows()) + " rows, network expects " +
                         std::to_string(net.input_dim()));
    }
    if (net.concat_dim > 0) {
        if (side == nullptr || static_cast<std::size_t>(side->rows()) != net.concat_dim ||
            side->cols() != input.cols()) {
            throw ShapeError("concat input missing or mis-shaped");
        }
    }
    if (cache != nullptr) {
        cache->inputs.clear();
        cache->activations.clear();
    }

    Matrix<Scalar> x = input;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const auto& layer = net.layers[i];
        if (i == 1 && net.concat_dim > 0) {
            Matrix<Scalar> joined(x.rows() + side->rows(), x.cols());
            joined << x, *side;
            x = std::move(joined);
        }
        Matrix<Scalar> z(layer.weight.rows(), x.cols());
        z.noalias() = layer.weight * x;
        z.colwise() += layer.bias;
        activate(z, layer.activation);
        if (cache != nullptr) {
            cache->inputs.push_back(std::move(x));
            cache->activations.push_back(z);
        }
        x = std::move(z);
    }
    return x;
}

template <typename Scalar>
BackwardResult<Scalar> backward(const BasicWeights<Scalar>& net, const ForwardCache<Scalar>& cache,
                                const Matrix<Scalar>& grad_output) {
    return backward_impl(net, cache, grad_output, true);
}

template <typename Scalar>
Matrix<Scalar> squash_actions(const Matrix<Scalar>& raw) {
    if (raw.rows() != static_cast<Eigen::Index>(kActionSize)) throw ShapeError("actor output must have 2 rows");
    Matrix<Scalar> out(raw.rows(), raw.cols());
    const Scalar v_max = static_cast<Scalar>(sim::kMaxLinearVelocity);
    const Scalar w_max = static_cast<Scalar>(sim::kMaxAngularVelocity);
    out.row(0) = (v_max / (Scalar(1) + (-raw.row(0).array()).exp())).matrix();
    out.row(1) = (w_max * raw.row(1).array().tanh()).matrix();
    return out;
}

template <typename Scalar>
Matrix<Scalar> actor_forward_batch(const BasicWeights<Scalar>& actor, const Matrix<Scalar>& states) {
    return squash_actions<Scalar>(forward<Scalar>(actor, states));
}

template <typename Scalar>
Vector<Scalar> critic_forward_batch(const BasicWeights<Scalar>& critic, const Matrix<Scalar>& states,
                                    const Matrix<Scalar>& actions) {
    return forward<Scalar>(critic, states, &actions).row(0).transpose();
}

sim::Action actor_forward(const NetworkWeights& actor, const sim::Observation& obs) {
    const auto f = obs.features();
    const Matrix<float> x = Eigen::Map<const Matrix<float>>(f.data(), static_cast<Eigen::Index>(f.size()), 1);
    const Matrix<float> raw = forward<float>(actor, x);
    if (raw.rows() != static_cast<Eigen::Index>(kActionSize)) throw ShapeError("actor output must have 2 rows");
    // Squash in double so the bounds stay strict for any moderate raw output.
    const double uv = raw(0, 0);
    const double uw = raw(1, 0);
    return {sim::kMaxLinearVelocity / (1.0 + std::exp(-uv)), sim::kMaxAngularVelocity * std::tanh(uw)};
}

double critic_forward(const NetworkWeights& critic, const sim::Observation& obs, const sim::Action& action) {
    const auto f = obs.features();
    const Matrix<float> x = Eigen::Map<const Matrix<float>>(f.data(), static_cast<Eigen::Index>(f.size()), 1);
    Matrix<float> a(2, 1);
    a << static_cast<float>(action.v), static_cast<float>(action.omega);
    return forward<float>(critic, x, &a)(0, 0);
}

template <typename Scalar>
CriticGradient<Scalar> backprop_critic(const BasicWeights<Scalar>& critic, const Matrix<Scalar>& states,
                                       const Matrix<Scalar>& actions, const Vector<Scalar>& targets) {
    const Eigen::Index batch = states.cols();
    if (batch == 0) throw InvalidArgument("critic update on an empty batch");
    if (targets.size() != batch || actions.cols() != batch) {
        throw InvalidArgument("targets/actions do not match the batch size");
    }
    ForwardCache<Scalar> cache;
    const Matrix<Scalar> q = forward<Scalar>(critic, states, &actions, &cache);
    const Matrix<Scalar> diff = q - targets.transpose();
    CriticGradient<Scalar> out;
    out.loss = diff.squaredNorm() / static_cast<Scalar>(batch);
    const Matrix<Scalar> grad_q = diff * (Scalar(2) / static_cast<Scalar>(batch));
    out.grad = backward_impl(critic, cache, grad_q, true).grad;
    return out;
}

template <typename Scalar>
ActorGradient<Scalar> backprop_actor(const BasicWeights<Scalar>& actor, const BasicWeights<Scalar>& critic,
                                     const Matrix<Scalar>& states) {
    const Eigen::Index batch = states.cols();
    if (batch == 0) throw InvalidArgument("actor update on an empty batch");

    ForwardCache<Scalar> actor_cache;
    const Matrix<Scalar> raw = forward<Scalar>(actor, states, nullptr, &actor_cache);
    const Matrix<Scalar> actions = squash_actions<Scalar>(raw);

    ForwardCache<Scalar> critic_cache;
    const Matrix<Scalar> q = forward<Scalar>(critic, states, &actions, &critic_cache);

    ActorGradient<Scalar> out;
    out.objective = q.sum() / static_cast<Scalar>(batch);

    const Matrix<Scalar> grad_q = Matrix<Scalar>::Constant(1, batch, Scalar(1) / static_cast<Scalar>(batch));
    const Matrix<Scalar> dq_da = backward_impl(critic, critic_cache, grad_q, false).grad_side;

    // Chain through v = v_max * sigmoid(u_v) and omega = w_max * tanh(u_w).
    const Scalar v_max = static_cast<Scalar>(sim::kMaxLinearVelocity);
    const Scalar w_max = static_cast<Scalar>(sim::kMaxAngularVelocity);
    Matrix<Scalar> du(2, batch);
    const auto sig = actions.row(0).array() / v_max;
    du.row(0) = (dq_da.row(0).array() * v_max * sig * (Scalar(1) - sig)).matrix();
    const auto th = actions.row(1).array() / w_max;
    du.row(1) = (dq_da.row(1).array() * w_max * (Scalar(1) - th.square())).matrix();

    out.grad = backward_impl(actor, actor_cache, du, true).grad;
    return out;
}

// Adam ---------------------------------------------------------------------

template <typename Scalar>
BasicAdamState<Scalar> BasicAdamState<Scalar>::init(const BasicWeights<Scalar>& like, AdamParams params) {
    BasicAdamState s;
    s.first_moment = BasicWeights<Scalar>::zeros_like(like);
    s.second_moment = BasicWeights<Scalar>::zeros_like(like);
    s.params = params;
    return s;
}

template <typename Scalar>
void adam_step(BasicWeights<Scalar>& weights, const BasicWeights<Scalar>& grad, BasicAdamState<Scalar>& state,
               Direction direction) {
    if (!weights.same_shape(grad) || !weights.same_shape(state.first_moment) ||
        !weights.same_shape(state.second_moment)) {
        throw ShapeError("adam: weights, gradient and moments must share a shape");
    }
    if (!grad.all_finite()) {
        throw NumericError("adam: non-finite gradient, step aborted");
    }

    state.step += 1;
    const auto& p = state.params;
    const double t = static_cast<double>(state.step);
    const Scalar b1 = static_cast<Scalar>(p.beta1);
    const Scalar b2 = static_cast<Scalar>(p.beta2);
    const Scalar c1 = static_cast<Scalar>(1.0 / (1.0 - std::pow(p.beta1, t)));
    const Scalar c2 = static_cast<Scalar>(1.0 / (1.0 - std::pow(p.beta2, t)));
    const Scalar lr = static_cast<Scalar>(p.learning_rate);
    const Scalar eps = static_cast<Scalar>(p.epsilon);
    const Scalar sign = direction == Direction::Maximize ? Scalar(-1) : Scalar(1);

    auto update = [&](auto& w, const auto& g, auto& m, auto& v) {
        m.array() = b1 * m.array() + (Scalar(1) - b1) * sign * g.array();
        v.array() = b2 * v.array() + (Scalar(1) - b2) * g.array().square();
        w.array() -= lr * (m.array() * c1) / ((v.array() * c2).sqrt() + eps);
    };
    for (std::size_t i = 0; i < weights.layers.size(); ++i) {
        auto& w = weights.layers[i];
        const auto& g = grad.layers[i];
        auto& m = state.first_moment.layers[i];
        auto& v = state.second_moment.layers[i];
        update(w.weight, g.weight, m.weight, v.weight);
        update(w.bias, g.bias, m.bias, v.bias);
    }
    if (!weights.all_finite()) {
        throw NumericError("adam: update produced non-finite weights");
    }
}

// Weight-space arithmetic --------------------------------------------------

NetworkWeights fedavg(std::span<const NetworkWeights> sets) {
    std::vector<const NetworkWeights*> ptrs;
    ptrs.reserve(sets.size());
    for (const auto& w : sets) ptrs.push_back(&w);
    return fedavg(std::span<const NetworkWeights* const>(ptrs));
}

NetworkWeights fedavg(std::span<const NetworkWeights* const> sets) {
    if (sets.empty()) throw InvalidArgument("fedavg needs at least one weight set");
    for (std::size_t k = 1; k < sets.size(); ++k) {
        if (!sets[k]->same_shape(*sets[0])) {
            throw ShapeError("fedavg: weight set " + std::to_string(k) + " differs in architecture");
        }
    }
    NetworkWeights out = NetworkWeights::zeros(sets[0]->specs(), sets[0]->concat_dim);
    const double n = static_cast<double>(sets.size());
    // Column-wise double accumulation keeps the scratch small.
    Vector<double> acc;
    for (std::size_t i = 0; i < out.layers.size(); ++i) {
        auto& layer = out.layers[i];
        acc.setZero(layer.weight.rows());
        for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
            acc.setZero();
            for (const NetworkWeights* s : sets) acc += s->layers[i].weight.col(c).cast<double>();
            layer.weight.col(c) = (acc / n).cast<float>();
        }
        acc.setZero(layer.bias.size());
        for (const NetworkWeights* s : sets) acc += s->layers[i].bias.cast<double>();
        layer.bias = (acc / n).cast<float>();
    }
    return out;
}

void soft_blend_into(NetworkWeights& local, const NetworkWeights& averaged, double tau) {
    if (!(tau >= 0.0 && tau <= 1.0)) {
        throw InvalidArgument("soft_blend: tau must lie in [0, 1], got " + std::to_string(tau));
    }
    if (!local.same_shape(averaged)) throw ShapeError("soft_blend: shape mismatch");
    if (tau == 1.0) return;
    if (tau == 0.0) {
        for (std::size_t i = 0; i < local.layers.size(); ++i) {
            local.layers[i].weight = averaged.layers[i].weight;
            local.layers[i].bias = averaged.layers[i].bias;
        }
        return;
    }
    for (std::size_t i = 0; i < local.layers.size(); ++i) {
        auto& l = local.layers[i];
        const auto& m = averaged.layers[i];
        l.weight = (tau * l.weight.cast<double>() + (1.0 - tau) * m.weight.cast<double>()).cast<float>();
        l.bias = (tau * l.bias.cast<double>() + (1.0 - tau) * m.bias.cast<double>()).cast<float>();
    }
}

NetworkWeights soft_blend(const NetworkWeights& local, const NetworkWeights& averaged, double tau) {
    NetworkWeights out = local;
    soft_blend_into(out, averaged, tau);
    return out;
}

std::size_t serialized_size(const NetworkWeights& weights) { return weights.parameter_count() * sizeof(float); }

Matrix<float> pack_observations(std::span<const sim::Observation> obs) {
    Matrix<float> m(static_cast<Eigen::Index>(sim::kObservationSize), static_cast<Eigen::Index>(obs.size()));
    for (std::size_t j = 0; j < obs.size(); ++j) {
        const auto f = obs[j].features();
        for (std::size_t r = 0; r < f.size(); ++r) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = f[r];
    }
    return m;
}

Matrix<float> pack_actions(std::span<const sim::Action> actions) {
    Matrix<float> m(2, static_cast<Eigen::Index>(actions.size()));
    for (std::size_t j = 0; j < actions.size(); ++j) {
        m(0, static_cast<Eigen::Index>(j)) = static_cast<float>(actions[j].v);
        m(1, static_cast<Eigen::Index>(j)) = static_cast<float>(actions[j].omega);
    }
    return m;
}

// Explicit instantiations --------------------------------------------------

#define FEDSWARM_INSTANTIATE(S)                                                                                  \
    template struct BasicWeights<S>;                                                                             \
    template struct BasicAdamState<S>;                                                                           \
    template Matrix<S> forward<S>(const BasicWeights<S>&, const Matrix<S>&, const Matrix<S>*, ForwardCache<S>*); \
    template BackwardResult<S> backward<S>(const BasicWeights<S>&, const ForwardCache<S>&, const Matrix<S>&);    \
    template Matrix<S> squash_actions<S>(const Matrix<S>&);                                                      \
    template Matrix<S> actor_forward_batch<S>(const BasicWeights<S>&, const Matrix<S>&);                         \
    template Vector<S> critic_forward_batch<S>(const BasicWeights<S>&, const Matrix<S>&, const Matrix<S>&);      \
    template CriticGradient<S> backprop_critic<S>(const BasicWeights<S>&, const Matrix<S>&, const Matrix<S>&,    \
                                                  const Vector<S>&);                                             \
    template ActorGradient<S> backprop_actor<S>(const BasicWeights<S>&, const BasicWeights<S>&,                  \
                                                const Matrix<S>&);                                               \
    template void adam_step<S>(BasicWeights<S>&, const BasicWeights<S>&, BasicAdamState<S>&, Direction);

FEDSWARM_INSTANTIATE(float)
FEDSWARM_INSTANTIATE(double)

#undef FEDSWARM_INSTANTIATE

}  // namespace fedswarm::nn
