#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "ood/tensor.hpp"

namespace ood {

namespace detail {
template <typename T>
using MatMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <typename T>
using CMatMap =
    Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
}  // namespace detail

// c[m×n] (+)= op_a(a) · op_b(b) with optional transposes on the operands.
template <typename T>
void matmul_into(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n,
                 bool trans_a = false, bool trans_b = false, bool accumulate = false) {
    using detail::CMatMap;
    using detail::MatMap;
    CMatMap<T> ma(a, trans_a ? k : m, trans_a ? m : k);
    CMatMap<T> mb(b, trans_b ? n : k, trans_b ? k : n);
    MatMap<T> mc(c, m, n);
    if (trans_a && trans_b) {
        if (accumulate) mc.noalias() += ma.transpose() * mb.transpose();
        else mc.noalias() = ma.transpose() * mb.transpose();
    } else if (trans_a) {
        if (accumulate) mc.noalias() += ma.transpose() * mb;
        else mc.noalias() = ma.transpose() * mb;
    } else if (trans_b) {
        if (accumulate) mc.noalias() += ma * mb.transpose();
        else mc.noalias() = ma * mb.transpose();
    } else {
        if (accumulate) mc.noalias() += ma * mb;
        else mc.noalias() = ma * mb;
    }
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
    require(a.shape.size() == 2 && b.shape.size() == 2, "matmul: operands must be 2-D");
    require(a.shape[1] == b.shape[0], "matmul: inner dimensions disagree");
    Tensor<T> c({a.shape[0], b.shape[1]});
    matmul_into(a.data.data(), b.data.data(), c.data.data(), a.shape[0], a.shape[1], b.shape[1]);
    return c;
}

// Row-wise softmax over the last dimension of a [B×K] tensor.
template <typename T>
Tensor<T> softmax(const Tensor<T>& logits) {
    require(logits.shape.size() == 2 && logits.shape[1] >= 1, "softmax: need [B×K], K >= 1");
    check_finite(logits, "softmax input");
    const std::size_t B = logits.shape[0], K = logits.shape[1];
    Tensor<T> out(logits.shape);
    for (std::size_t b = 0; b < B; ++b) {
        T mx = logits(b, 0);
        for (std::size_t k = 1; k < K; ++k) mx = std::max(mx, logits(b, k));
        T sum = 0;
        for (std::size_t k = 0; k < K; ++k) {
            out(b, k) = std::exp(logits(b, k) - mx);
            sum += out(b, k);
        }
        for (std::size_t k = 0; k < K; ++k) out(b, k) /= sum;
    }
    return out;
}

template <typename T>
Tensor<T> log_softmax(const Tensor<T>& logits) {
    require(logits.shape.size() == 2, "log_softmax: need [B×K]");
    const std::size_t B = logits.shape[0], K = logits.shape[1];
    Tensor<T> out(logits.shape);
    for (std::size_t b = 0; b < B; ++b) {
        T mx = logits(b, 0);
        for (std::size_t k = 1; k < K; ++k) mx = std::max(mx, logits(b, k));
        T sum = 0;
        for (std::size_t k = 0; k < K; ++k) sum += std::exp(logits(b, k) - mx);
        T lse = mx + std::log(sum);
        for (std::size_t k = 0; k < K; ++k) out(b, k) = logits(b, k) - lse;
    }
    return out;
}

// Mean negative log-likelihood of the true labels. If dlogits is non-null it
// receives the gradient (softmax − one-hot)/B.
template <typename T>
T cross_entropy(const Tensor<T>& logits, const std::vector<std::size_t>& labels,
                Tensor<T>* dlogits = nullptr) {
    require(logits.shape.size() == 2, "cross_entropy: need [B×K]");
    const std::size_t B = logits.shape[0], K = logits.shape[1];
    require(labels.size() == B, "cross_entropy: label count != batch size");
    for (auto l : labels) require(l < K, "cross_entropy: label out of range");
    Tensor<T> ls = log_softmax(logits);
    T loss = 0;
    for (std::size_t b = 0; b < B; ++b) loss -= ls(b, labels[b]);
    loss /= static_cast<T>(B);
    if (dlogits) {
        *dlogits = Tensor<T>(logits.shape);
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t k = 0; k < K; ++k) {
                T p = std::exp(ls(b, k));
                (*dlogits)(b, k) = (p - (k == labels[b] ? T(1) : T(0))) / static_cast<T>(B);
            }
    }
    return loss;
}

// Mean Shannon entropy (natural log) of probability rows; 0·log 0 := 0.
template <typename T>
T entropy(const Tensor<T>& probs) {
    require(probs.shape.size() == 2, "entropy: need [B×K]");
    const std::size_t B = probs.shape[0], K = probs.shape[1];
    T total = 0;
    for (std::size_t b = 0; b < B; ++b) {
        T sum = 0;
        for (std::size_t k = 0; k < K; ++k) {
            T p = probs(b, k);
            require(p >= T(0) && p <= T(1) + T(1e-5), "entropy: row is not a distribution");
            sum += p;
            if (p > T(0)) total -= p * std::log(p);
        }
        require(std::abs(static_cast<double>(sum) - 1.0) <= 1e-5,
                "entropy: row does not sum to 1");
    }
    return total / static_cast<T>(B);
}

// Mean entropy of softmax(logits). If dlogits is non-null it receives
// d(meanH)/dlogits = −p(log p + H_row)/B, derived analytically.
template <typename T>
T entropy_of_logits(const Tensor<T>& logits, Tensor<T>* dlogits = nullptr) {
    const std::size_t B = logits.shape[0], K = logits.shape[1];
    Tensor<T> ls = log_softmax(logits);
    T total = 0;
    if (dlogits) *dlogits = Tensor<T>(logits.shape);
    for (std::size_t b = 0; b < B; ++b) {
        T h = 0;
        for (std::size_t k = 0; k < K; ++k) h -= std::exp(ls(b, k)) * ls(b, k);
        total += h;
        if (dlogits)
            for (std::size_t k = 0; k < K; ++k) {
                T p = std::exp(ls(b, k));
                (*dlogits)(b, k) = -p * (ls(b, k) + h) / static_cast<T>(B);
            }
    }
    return total / static_cast<T>(B);
}

// log(1 + e^x) without overflow
template <typename T>
T softplus(T x) {
    if (x > T(0)) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

template <typename T>
T sigmoid(T x) {
    if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
    T e = std::exp(x);
    return e / (T(1) + e);
}

}  // namespace ood
