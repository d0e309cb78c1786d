#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ood/ops.hpp"
#include "ood/params.hpp"
#include "ood/rng.hpp"

namespace ood {

constexpr std::size_t kPadId = 0;
constexpr std::size_t kUnkId = 1;

// ---- initialization -------------------------------------------------------

template <typename T>
void init_uniform(Tensor<T>& t, Rng& rng, double lo, double hi) {
    for (auto& v : t.data) v = static_cast<T>(rng.uniform(lo, hi));
}

// fan-in scaled uniform weights, zero bias
template <typename T>
void init_affine_params(ParamStore<T>& ps, const std::string& name, std::size_t n_in,
                        std::size_t n_out, Rng& rng) {
    auto& w = ps.add(name + ".w", {n_in, n_out});
    double limit = std::sqrt(1.0 / static_cast<double>(n_in));
    init_uniform(w, rng, -limit, limit);
    ps.add(name + ".b", {n_out});
}

template <typename T>
void init_embedding_params(ParamStore<T>& ps, const std::string& name, std::size_t vocab,
                           std::size_t dim, Rng& rng) {
    auto& e = ps.add(name, {vocab, dim});
    init_uniform(e, rng, -0.08, 0.08);
    for (std::size_t j = 0; j < dim; ++j) e(kPadId, j) = T(0);  // PAD row frozen at zero
}

// ---- layers ---------------------------------------------------------------

template <typename T>
struct AffineLayer {
    std::string name;
    Tensor<T> x_cache;

    explicit AffineLayer(std::string n) : name(std::move(n)) {}

    Tensor<T> forward(ParamStore<T>& ps, const Tensor<T>& x) {
        const auto& w = ps.value(name + ".w");
        const auto& b = ps.value(name + ".b");
        require(x.shape.size() == 2 && x.shape[1] == w.shape[0], "affine: shape mismatch");
        x_cache = x;
        Tensor<T> y = matmul(x, w);
        for (std::size_t i = 0; i < y.shape[0]; ++i)
            for (std::size_t j = 0; j < y.shape[1]; ++j) y(i, j) += b(j);
        return y;
    }

    Tensor<T> backward(ParamStore<T>& ps, const Tensor<T>& dy) {
        const auto& w = ps.value(name + ".w");
        auto& dw = ps.grad(name + ".w");
        auto& db = ps.grad(name + ".b");
        // dW += xᵀ dy ; db += column sums ; dx = dy Wᵀ
        matmul_into(x_cache.data.data(), dy.data.data(), dw.data.data(), w.shape[0], x_cache.shape[0],
                    w.shape[1], true, false, true);
        for (std::size_t i = 0; i < dy.shape[0]; ++i)
            for (std::size_t j = 0; j < dy.shape[1]; ++j) db(j) += dy(i, j);
        Tensor<T> dx(x_cache.shape);
        matmul_into(dy.data.data(), w.data.data(), dx.data.data(), dy.shape[0], dy.shape[1],
                    w.shape[0], false, true, false);
        return dx;
    }
};

// ids -> [B×L×d]; backward skips the PAD row so it stays zero.
template <typename T>
struct EmbeddingLayer {
    std::string name;
    std::vector<std::size_t> ids_cache;
    std::size_t batch_cache = 0, len_cache = 0;

    explicit EmbeddingLayer(std::string n) : name(std::move(n)) {}

    Tensor<T> forward(ParamStore<T>& ps, const std::vector<std::size_t>& ids, std::size_t B,
                      std::size_t L) {
        const auto& table = ps.value(name);
        require(ids.size() == B * L, "embedding: id count != B·L");
        const std::size_t V = table.shape[0], d = table.shape[1];
        for (auto id : ids) require(id < V, "embedding: id out of range");
        ids_cache = ids;
        batch_cache = B;
        len_cache = L;
        Tensor<T> out({B, L, d});
        for (std::size_t i = 0; i < B * L; ++i)
            for (std::size_t j = 0; j < d; ++j) out.data[i * d + j] = table(ids[i], j);
        return out;
    }

    void backward(ParamStore<T>& ps, const Tensor<T>& dy) {
        auto& dtable = ps.grad(name);
        const std::size_t d = dtable.shape[1];
        for (std::size_t i = 0; i < ids_cache.size(); ++i) {
            if (ids_cache[i] == kPadId) continue;
            for (std::size_t j = 0; j < d; ++j) dtable(ids_cache[i], j) += dy.data[i * d + j];
        }
    }
};

// 1-D convolution over token positions, one filter bank per width.
// Implemented as im2col + matmul; x is [B×L×d], output [B×P×F], P = L−w+1.
template <typename T>
struct Conv1dLayer {
    std::string name;
    std::size_t width;
    Tensor<T> cols_cache;  // [B·P × w·d]
    std::size_t B_ = 0, L_ = 0, d_ = 0;

    Conv1dLayer(std::string n, std::size_t w) : name(std::move(n)), width(w) {}

    Tensor<T> forward(ParamStore<T>& ps, const Tensor<T>& x) {
        const auto& wmat = ps.value(name + ".w");  // [w·d × F]
        const auto& b = ps.value(name + ".b");
        require(x.shape.size() == 3, "conv1d: need [B×L×d]");
        B_ = x.shape[0];
        L_ = x.shape[1];
        d_ = x.shape[2];
        require(L_ >= width, "conv1d: sequence shorter than filter width");
        require(wmat.shape[0] == width * d_, "conv1d: weight shape mismatch");
        const std::size_t P = L_ - width + 1, F = wmat.shape[1];
        cols_cache = Tensor<T>({B_ * P, width * d_});
        for (std::size_t bi = 0; bi < B_; ++bi)
            for (std::size_t p = 0; p < P; ++p)
                for (std::size_t i = 0; i < width; ++i)
                    for (std::size_t j = 0; j < d_; ++j)
                        cols_cache(bi * P + p, i * d_ + j) = x(bi, p + i, j);
        Tensor<T> flat = matmul(cols_cache, wmat);  // [B·P × F]
        Tensor<T> out({B_, P, F});
        for (std::size_t i = 0; i < flat.numel(); ++i) out.data[i] = flat.data[i];
        for (std::size_t bi = 0; bi < B_; ++bi)
            for (std::size_t p = 0; p < P; ++p)
                for (std::size_t f = 0; f < F; ++f) out(bi, p, f) += b(f);
        return out;
    }

    Tensor<T> backward(ParamStore<T>& ps, const Tensor<T>& dy) {
        const auto& wmat = ps.value(name + ".w");
        auto& dw = ps.grad(name + ".w");
        auto& db = ps.grad(name + ".b");
        const std::size_t P = L_ - width + 1, F = wmat.shape[1];
        // dW += colsᵀ dy_flat ; db += sums ; dcols = dy_flat Wᵀ
        matmul_into(cols_cache.data.data(), dy.data.data(), dw.data.data(), wmat.shape[0],
                    B_ * P, F, true, false, true);
        for (std::size_t bi = 0; bi < B_; ++bi)
            for (std::size_t p = 0; p < P; ++p)
                for (std::size_t f = 0; f < F; ++f) db(f) += dy(bi, p, f);
        Tensor<T> dcols({B_ * P, width * d_});
        matmul_into(dy.data.data(), wmat.data.data(), dcols.data.data(), B_ * P, F, wmat.shape[0],
                    false, true, false);
        Tensor<T> dx({B_, L_, d_});
        for (std::size_t bi = 0; bi < B_; ++bi)
            for (std::size_t p = 0; p < P; ++p)
                for (std::size_t i = 0; i < width; ++i)
                    for (std::size_t j = 0; j < d_; ++j)
                        dx(bi, p + i, j) += dcols(bi * P + p, i * d_ + j);
        return dx;
    }
};

// max over the time axis of [B×P×F] -> [B×F]
template <typename T>
struct MaxPoolTime {
    std::vector<std::size_t> argmax;
    std::vector<std::size_t> in_shape;

    Tensor<T> forward(const Tensor<T>& x) {
        require(x.shape.size() == 3, "maxpool: need [B×P×F]");
        const std::size_t B = x.shape[0], P = x.shape[1], F = x.shape[2];
        in_shape = x.shape;
        argmax.assign(B * F, 0);
        Tensor<T> out({B, F});
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t f = 0; f < F; ++f) {
                T best = x(b, 0, f);
                std::size_t bi = 0;
                for (std::size_t p = 1; p < P; ++p)
                    if (x(b, p, f) > best) {
                        best = x(b, p, f);
                        bi = p;
                    }
                out(b, f) = best;
                argmax[b * F + f] = bi;
            }
        return out;
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        const std::size_t B = in_shape[0], F = in_shape[2];
        Tensor<T> dx(in_shape);
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t f = 0; f < F; ++f) dx(b, argmax[b * F + f], f) += dy(b, f);
        return dx;
    }
};

// masked mean over time of [B×L×d] -> [B×d]; divisor max(len, 1)
template <typename T>
struct MeanPoolTime {
    std::vector<std::size_t> lengths_cache;
    std::vector<std::size_t> in_shape;

    Tensor<T> forward(const Tensor<T>& x, const std::vector<std::size_t>& lengths) {
        require(x.shape.size() == 3, "meanpool: need [B×L×d]");
        const std::size_t B = x.shape[0], L = x.shape[1], d = x.shape[2];
        require(lengths.size() == B, "meanpool: lengths size mismatch");
        in_shape = x.shape;
        lengths_cache = lengths;
        Tensor<T> out({B, d});
        for (std::size_t b = 0; b < B; ++b) {
            std::size_t n = std::min(std::max<std::size_t>(lengths[b], 1), L);
            for (std::size_t t = 0; t < n && t < lengths[b]; ++t)
                for (std::size_t j = 0; j < d; ++j) out(b, j) += x(b, t, j);
            for (std::size_t j = 0; j < d; ++j) out(b, j) /= static_cast<T>(n);
        }
        return out;
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        const std::size_t B = in_shape[0], L = in_shape[1], d = in_shape[2];
        Tensor<T> dx(in_shape);
        for (std::size_t b = 0; b < B; ++b) {
            std::size_t n = std::min(std::max<std::size_t>(lengths_cache[b], 1), L);
            for (std::size_t t = 0; t < n && t < lengths_cache[b]; ++t)
                for (std::size_t j = 0; j < d; ++j) dx(b, t, j) = dy(b, j) / static_cast<T>(n);
        }
        return dx;
    }
};

template <typename T>
struct ReluLayer {
    Tensor<T> x_cache;
    Tensor<T> forward(const Tensor<T>& x) {
        x_cache = x;
        Tensor<T> y(x.shape);
        for (std::size_t i = 0; i < x.numel(); ++i) y.data[i] = x.data[i] > T(0) ? x.data[i] : T(0);
        return y;
    }
    Tensor<T> backward(const Tensor<T>& dy) {
        Tensor<T> dx(dy.shape);
        for (std::size_t i = 0; i < dy.numel(); ++i)
            dx.data[i] = x_cache.data[i] > T(0) ? dy.data[i] : T(0);
        return dx;
    }
};

template <typename T>
struct TanhLayer {
    Tensor<T> y_cache;
    Tensor<T> forward(const Tensor<T>& x) {
        Tensor<T> y(x.shape);
        for (std::size_t i = 0; i < x.numel(); ++i) y.data[i] = std::tanh(x.data[i]);
        y_cache = y;
        return y;
    }
    Tensor<T> backward(const Tensor<T>& dy) {
        Tensor<T> dx(dy.shape);
        for (std::size_t i = 0; i < dy.numel(); ++i)
            dx.data[i] = dy.data[i] * (T(1) - y_cache.data[i] * y_cache.data[i]);
        return dx;
    }
};

// inverted dropout with seeded mask; identity in eval mode
template <typename T>
struct DropoutLayer {
    double rate;
    Tensor<T> mask;
    bool active = false;

    explicit DropoutLayer(double r) : rate(r) {}

    Tensor<T> forward(const Tensor<T>& x, bool train, Rng& rng) {
        active = train && rate > 0.0;
        if (!active) return x;
        mask = Tensor<T>(x.shape);
        const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
        Tensor<T> y(x.shape);
        for (std::size_t i = 0; i < x.numel(); ++i) {
            mask.data[i] = rng.uniform() >= rate ? keep_scale : T(0);
            y.data[i] = x.data[i] * mask.data[i];
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        if (!active) return dy;
        Tensor<T> dx(dy.shape);
        for (std::size_t i = 0; i < dy.numel(); ++i) dx.data[i] = dy.data[i] * mask.data[i];
        return dx;
    }
};

// Standard gated recurrent cell. One StepCache per time step; backward walks
// the steps in reverse.
template <typename T>
struct GruCell {
    std::string name;
    std::size_t d_in, d_h;

    struct StepCache {
        Tensor<T> x, h_prev, z, r, c, rh;
    };

    GruCell(std::string n, std::size_t din, std::size_t dh)
        : name(std::move(n)), d_in(din), d_h(dh) {}

    void init(ParamStore<T>& ps, Rng& rng) {
        for (const char* g : {"z", "r", "h"}) {
            init_affine_params(ps, name + ".w" + g, d_in, d_h, rng);
            init_affine_params(ps, name + ".u" + g, d_h, d_h, rng);
        }
    }

    Tensor<T> gate_pre(ParamStore<T>& ps, const char* g, const Tensor<T>& x,
                       const Tensor<T>& h) const {
        const auto& w = ps.value(name + ".w" + g + ".w");
        const auto& u = ps.value(name + ".u" + g + ".w");
        const auto& bw = ps.value(name + ".w" + g + ".b");
        const auto& bu = ps.value(name + ".u" + g + ".b");
        Tensor<T> pre = matmul(x, w);
        matmul_into(h.data.data(), u.data.data(), pre.data.data(), h.shape[0], d_h, d_h, false,
                    false, true);
        for (std::size_t i = 0; i < pre.shape[0]; ++i)
            for (std::size_t j = 0; j < d_h; ++j) pre(i, j) += bw(j) + bu(j);
        return pre;
    }

    Tensor<T> forward(ParamStore<T>& ps, const Tensor<T>& x, const Tensor<T>& h_prev,
                      StepCache& cache) {
        const std::size_t B = x.shape[0];
        cache.x = x;
        cache.h_prev = h_prev;
        Tensor<T> z = gate_pre(ps, "z", x, h_prev);
        Tensor<T> r = gate_pre(ps, "r", x, h_prev);
        for (auto& v : z.data) v = sigmoid(v);
        for (auto& v : r.data) v = sigmoid(v);
        Tensor<T> rh({B, d_h});
        for (std::size_t i = 0; i < rh.numel(); ++i) rh.data[i] = r.data[i] * h_prev.data[i];
        Tensor<T> c = gate_pre(ps, "h", x, rh);
        for (auto& v : c.data) v = std::tanh(v);
        Tensor<T> h({B, d_h});
        for (std::size_t i = 0; i < h.numel(); ++i)
            h.data[i] = (T(1) - z.data[i]) * h_prev.data[i] + z.data[i] * c.data[i];
        cache.z = std::move(z);
        cache.r = std::move(r);
        cache.c = std::move(c);
        cache.rh = std::move(rh);
        return h;
    }

    void gate_backward(ParamStore<T>& ps, const char* g, const Tensor<T>& dpre, const Tensor<T>& x,
                       const Tensor<T>& hin, Tensor<T>& dx, Tensor<T>& dhin) {
        const auto& w = ps.value(name + ".w" + g + ".w");
        const auto& u = ps.value(name + ".u" + g + ".w");
        const std::size_t B = dpre.shape[0];
        matmul_into(x.data.data(), dpre.data.data(), ps.grad(name + ".w" + g + ".w").data.data(),
                    d_in, B, d_h, true, false, true);
        matmul_into(hin.data.data(), dpre.data.data(), ps.grad(name + ".u" + g + ".w").data.data(),
                    d_h, B, d_h, true, false, true);
        auto& dbw = ps.grad(name + ".w" + g + ".b");
        auto& dbu = ps.grad(name + ".u" + g + ".b");
        for (std::size_t i = 0; i < B; ++i)
            for (std::size_t j = 0; j < d_h; ++j) {
                dbw(j) += dpre(i, j);
                dbu(j) += dpre(i, j);
            }
        matmul_into(dpre.data.data(), w.data.data(), dx.data.data(), B, d_h, d_in, false, true,
                    true);
        matmul_into(dpre.data.data(), u.data.data(), dhin.data.data(), B, d_h, d_h, false, true,
                    true);
    }

    // returns (dx, dh_prev)
    std::pair<Tensor<T>, Tensor<T>> backward(ParamStore<T>& ps, const StepCache& cache,
                                             const Tensor<T>& dh) {
        const std::size_t B = dh.shape[0];
        Tensor<T> dx({B, d_in});
        Tensor<T> dh_prev({B, d_h});
        Tensor<T> dz({B, d_h}), dc({B, d_h});
        for (std::size_t i = 0; i < dh.numel(); ++i) {
            dz.data[i] = dh.data[i] * (cache.c.data[i] - cache.h_prev.data[i]);
            dc.data[i] = dh.data[i] * cache.z.data[i];
            dh_prev.data[i] += dh.data[i] * (T(1) - cache.z.data[i]);
        }
        // candidate gate
        Tensor<T> dc_pre({B, d_h});
        for (std::size_t i = 0; i < dc.numel(); ++i)
            dc_pre.data[i] = dc.data[i] * (T(1) - cache.c.data[i] * cache.c.data[i]);
        Tensor<T> drh({B, d_h});
        gate_backward(ps, "h", dc_pre, cache.x, cache.rh, dx, drh);
        Tensor<T> dr({B, d_h});
        for (std::size_t i = 0; i < drh.numel(); ++i) {
            dr.data[i] = drh.data[i] * cache.h_prev.data[i];
            dh_prev.data[i] += drh.data[i] * cache.r.data[i];
        }
        // update and reset gates
        Tensor<T> dz_pre({B, d_h}), dr_pre({B, d_h});
        for (std::size_t i = 0; i < dz.numel(); ++i) {
            dz_pre.data[i] = dz.data[i] * cache.z.data[i] * (T(1) - cache.z.data[i]);
            dr_pre.data[i] = dr.data[i] * cache.r.data[i] * (T(1) - cache.r.data[i]);
        }
        gate_backward(ps, "z", dz_pre, cache.x, cache.h_prev, dx, dh_prev);
        gate_backward(ps, "r", dr_pre, cache.x, cache.h_prev, dx, dh_prev);
        return {std::move(dx), std::move(dh_prev)};
    }
};

}  // namespace ood
