#ifndef RECALL_LOSSES_HPP
#define RECALL_LOSSES_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "encoder.hpp"
#include "errors.hpp"
#include "vector_math.hpp"

namespace recall
{

struct LossConfig {
    double temperature = 0.03;
    double margin = 0.05;
    double lambda = 0.30;

    void validate() const
    {
        if (!(temperature > 0.0) || !std::isfinite(temperature)) {
            throw ArgumentError("temperature must be positive");
        }
        if (!(margin >= 0.0) || !std::isfinite(margin)) {
            throw ArgumentError("margin must be non-negative");
        }
        if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
            throw ArgumentError("lambda must be non-negative");
        }
    }
};

namespace detail
{

// log sum exp(l), shifted by the max logit
template <class Scalar>
Scalar log_sum_exp(const std::vector<Scalar>& logits)
{
    using std::exp;
    using std::log;
    const Scalar hi = *std::max_element(logits.begin(), logits.end());
    Scalar acc = 0;
    for (Scalar l : logits) {
        acc += exp(l - hi);
    }
    return hi + log(acc);
}

inline double info_nce_from_similarities(std::span<const double> sims, std::size_t positive, double temperature)
{
    std::vector<double> logits(sims.size());
    for (std::size_t j = 0; j < sims.size(); ++j) {
        logits[j] = sims[j] / temperature;
    }
    // -log softmax_p >= 0 mathematically; clamp rounding
    return std::max(0.0, log_sum_exp(logits) - logits[positive]);
}

} // namespace detail

/// -log( exp(s(q,t+)/tau) / sum_t exp(s(q,t)/tau) ) over the given targets.
inline double info_nce(std::span<const double> query, const std::vector<Vector>& targets, std::size_t positive_index,
                       double temperature)
{
    if (targets.empty()) {
        throw ArgumentError("info_nce: empty target batch");
    }
    if (positive_index >= targets.size()) {
        throw ArgumentError("info_nce: positive index out of range");
    }
    if (!(temperature > 0.0)) {
        throw ArgumentError("info_nce: temperature must be positive");
    }
    std::vector<double> sims(targets.size());
    for (std::size_t j = 0; j < targets.size(); ++j) {
        sims[j] = cosine_similarity(query, targets[j]);
    }
    return detail::info_nce_from_similarities(sims, positive_index, temperature);
}

/// max(0, s(q,t-) - s(q,t+) + m)
inline double triplet_margin(std::span<const double> query, std::span<const double> positive,
                             std::span<const double> negative, double margin)
{
    if (!(margin >= 0.0)) {
        throw ArgumentError("triplet_margin: margin must be non-negative");
    }
    return std::max(0.0, cosine_similarity(query, negative) - cosine_similarity(query, positive) + margin);
}

/// One query of a training batch. Indices refer to LossBatch::targets.
struct BatchQuery {
    Vector image;
    Vector text;
    std::size_t positive = 0;
    // Informative instances used as t- by the triplet term; empty means no triplet term.
    std::vector<std::size_t> negatives;
};

/// Forward inputs of one optimization step. Every query is contrasted
/// against all targets of the batch.
struct LossBatch {
    std::vector<BatchQuery> queries;
    std::vector<Vector> targets;
};

template <class Scalar>
struct BasicLossBreakdown {
    Scalar total = 0;
    Scalar infonce = 0;
    Scalar triplet = 0;
};

using LossBreakdown = BasicLossBreakdown<double>;

struct Gradients {
    EncoderParameters grad;
    double loss_value = 0.0;
    LossBreakdown parts;
};

namespace detail
{

inline void validate_batch(const LossBatch& batch)
{
    if (batch.queries.empty()) {
        throw ArgumentError("loss batch has no queries");
    }
    if (batch.targets.empty()) {
        throw ArgumentError("loss batch has no targets");
    }
    for (const auto& q : batch.queries) {
        if (q.positive >= batch.targets.size()) {
            throw ArgumentError("positive index out of range");
        }
        for (auto n : q.negatives) {
            if (n >= batch.targets.size() || n == q.positive) {
                throw ArgumentError("invalid triplet negative index");
            }
        }
    }
}

template <class Scalar>
Scalar generic_cosine(const std::vector<Scalar>& u, const std::vector<Scalar>& v)
{
    using std::sqrt;
    Scalar uv = 0;
    Scalar uu = 0;
    Scalar vv = 0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        uv += u[k] * v[k];
        uu += u[k] * u[k];
        vv += v[k] * v[k];
    }
    const Scalar nu = sqrt(uu);
    const Scalar nv = sqrt(vv);
    if (nu < Scalar(kNormFloor) || nv < Scalar(kNormFloor)) {
        throw DomainError("cosine_similarity: zero-norm embedding");
    }
    return uv / (nu * nv);
}

template <class Scalar>
std::vector<Scalar> to_scalar(const Vector& v)
{
    return std::vector<Scalar>(v.begin(), v.end());
}

template <class Scalar>
struct SimilarityPass {
    std::vector<BasicTowerTrace<Scalar>> query_traces;
    std::vector<BasicTowerTrace<Scalar>> target_traces;
    std::vector<std::vector<Scalar>> sims;
};

template <class Scalar>
SimilarityPass<Scalar> similarity_pass(const BasicEncoderParameters<Scalar>& params, const LossBatch& batch)
{
    SimilarityPass<Scalar> pass;
    pass.query_traces.reserve(batch.queries.size());
    for (const auto& q : batch.queries) {
        pass.query_traces.push_back(forward_trace(params.query_tower, to_scalar<Scalar>(concat(q.image, q.text))));
    }
    pass.target_traces.reserve(batch.targets.size());
    for (const auto& t : batch.targets) {
        pass.target_traces.push_back(forward_trace(params.target_tower, to_scalar<Scalar>(t)));
    }
    pass.sims.assign(batch.queries.size(), std::vector<Scalar>(batch.targets.size()));
    for (std::size_t i = 0; i < batch.queries.size(); ++i) {
        for (std::size_t j = 0; j < batch.targets.size(); ++j) {
            pass.sims[i][j] = generic_cosine(pass.query_traces[i].output(), pass.target_traces[j].output());
        }
    }
    return pass;
}

// Loss from precomputed similarities; adds dL/ds into dsim when non-null.
template <class Scalar>
BasicLossBreakdown<Scalar> loss_from_similarities(const LossBatch& batch,
                                                  const std::vector<std::vector<Scalar>>& sims,
                                                  const LossConfig& config,
                                                  std::vector<std::vector<Scalar>>* dsim)
{
    using std::exp;
    const Scalar inv_nq = Scalar(1) / static_cast<Scalar>(batch.queries.size());
    const Scalar tau = config.temperature;
    const Scalar lambda = config.lambda;
    Scalar nce_sum = 0;
    Scalar trip_sum = 0;
    std::vector<Scalar> logits(batch.targets.size());
    for (std::size_t i = 0; i < batch.queries.size(); ++i) {
        const auto& q = batch.queries[i];
        const auto& s = sims[i];
        for (std::size_t j = 0; j < s.size(); ++j) {
            logits[j] = s[j] / tau;
        }
        const Scalar lse = log_sum_exp(logits);
        // -log softmax >= 0; clamp rounding
        nce_sum += std::max(Scalar(0), lse - logits[q.positive]);
        if (dsim != nullptr) {
            auto& d = (*dsim)[i];
            for (std::size_t j = 0; j < s.size(); ++j) {
                d[j] += exp(logits[j] - lse) / tau * inv_nq;
            }
            d[q.positive] -= inv_nq / tau;
        }
        if (q.negatives.empty()) {
            continue;
        }
        const Scalar per_neg = Scalar(1) / static_cast<Scalar>(q.negatives.size());
        Scalar hinge_sum = 0;
        for (auto n : q.negatives) {
            const Scalar h = s[n] - s[q.positive] + Scalar(config.margin);
            // subgradient 0 at the kink
            if (h > Scalar(0)) {
                hinge_sum += h;
                if (dsim != nullptr) {
                    const Scalar w = lambda * per_neg * inv_nq;
                    (*dsim)[i][n] += w;
                    (*dsim)[i][q.positive] -= w;
                }
            }
        }
        trip_sum += hinge_sum * per_neg;
    }
    BasicLossBreakdown<Scalar> out;
    out.infonce = nce_sum * inv_nq;
    out.triplet = trip_sum * inv_nq;
    out.total = out.infonce + lambda * out.triplet;
    return out;
}

} // namespace detail

/// L_total = L_infoNCE + lambda * L_triplet, both averaged over the queries of
/// the batch. Forward only; Scalar selects the evaluation precision.
template <class Scalar>
BasicLossBreakdown<Scalar> batch_loss(const BasicEncoderParameters<Scalar>& params, const LossBatch& batch,
                                              const LossConfig& config)
{
    config.validate();
    detail::validate_batch(batch);
    const auto pass = detail::similarity_pass(params, batch);
    return detail::loss_from_similarities<Scalar>(batch, pass.sims, config, nullptr);
}

/// Loss plus analytic gradients through both towers. Accumulation runs in
/// query order, then target order, so results are bit-reproducible.
inline Gradients total_loss(const EncoderParameters& params, const LossBatch& batch, const LossConfig& config)
{
    config.validate();
    detail::validate_batch(batch);
    const auto pass = detail::similarity_pass(params, batch);
    const std::size_t nq = batch.queries.size();
    const std::size_t nt = batch.targets.size();
    std::vector<std::vector<double>> dsim(nq, std::vector<double>(nt, 0.0));

    Gradients out;
    out.parts = detail::loss_from_similarities<double>(batch, pass.sims, config, &dsim);
    out.loss_value = out.parts.total;
    out.grad = zeros_like(params);

    const std::size_t emb = params.embedding_dim();
    std::vector<Vector> dtarget(nt, Vector(emb, 0.0));
    for (std::size_t i = 0; i < nq; ++i) {
        const Vector& zq = pass.query_traces[i].output();
        Vector dq(emb, 0.0);
        for (std::size_t j = 0; j < nt; ++j) {
            const double g = dsim[i][j];
            if (g == 0.0) {
                continue;
            }
            const Vector& zt = pass.target_traces[j].output();
            accumulate_cosine_grad(zq, zt, g, dq);
            accumulate_cosine_grad(zt, zq, g, dtarget[j]);
        }
        backward(params.query_tower, pass.query_traces[i], dq, out.grad.query_tower);
    }
    for (std::size_t j = 0; j < nt; ++j) {
        backward(params.target_tower, pass.target_traces[j], dtarget[j], out.grad.target_tower);
    }
    return out;
}

} // namespace recall

#endif
