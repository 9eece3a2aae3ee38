#ifndef RECALL_VECTOR_MATH_HPP
#define RECALL_VECTOR_MATH_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"

namespace recall
{

using Vector = std::vector<double>;

// Norms below this are treated as zero by every cosine computation.
inline constexpr double kNormFloor = 1e-12;

inline void require_same_dim(std::span<const double> u, std::span<const double> v, const char* what)
{
    if (u.size() != v.size()) {
        throw ShapeError(std::string(what) + ": dimension mismatch (" + std::to_string(u.size()) + " vs "
                         + std::to_string(v.size()) + ")");
    }
}

inline double dot(std::span<const double> u, std::span<const double> v)
{
    require_same_dim(u, v, "dot");
    double acc = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        acc += u[i] * v[i];
    }
    return acc;
}

inline double norm(std::span<const double> u)
{
    return std::sqrt(dot(u, u));
}

inline bool all_finite(std::span<const double> u)
{
    for (double x : u) {
        if (!std::isfinite(x)) {
            return false;
        }
    }
    return true;
}

/// Cosine similarity u.v / (|u| |v|).
///
/// Throws ShapeError on dimension mismatch, DomainError when either norm is
/// below kNormFloor.
inline double cosine_similarity(std::span<const double> u, std::span<const double> v)
{
    require_same_dim(u, v, "cosine_similarity");
    if (u.empty()) {
        throw ShapeError("cosine_similarity: empty vectors");
    }
    const double nu = norm(u);
    const double nv = norm(v);
    if (nu < kNormFloor || nv < kNormFloor) {
        throw DomainError("cosine_similarity: zero-norm input");
    }
    return dot(u, v) / (nu * nv);
}

/// Accumulates scale * d cos(u, v) / du into grad_u.
///
/// d cos / du = v / (|u||v|) - cos * u / |u|^2
inline void accumulate_cosine_grad(std::span<const double> u, std::span<const double> v, double scale,
                                   std::span<double> grad_u)
{
    const double nu = norm(u);
    const double nv = norm(v);
    if (nu < kNormFloor || nv < kNormFloor) {
        throw DomainError("cosine gradient: zero-norm input");
    }
    const double s = dot(u, v) / (nu * nv);
    const double a = scale / (nu * nv);
    const double b = scale * s / (nu * nu);
    for (std::size_t i = 0; i < u.size(); ++i) {
        grad_u[i] += a * v[i] - b * u[i];
    }
}

inline Vector concat(std::span<const double> a, std::span<const double> b)
{
    Vector out;
    out.reserve(a.size() + b.size());
    out.insert(out.end(), a.begin(), a.end());
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

} // namespace recall

#endif
