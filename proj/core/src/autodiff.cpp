#include "antifor/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <memory>
#include <stdexcept>
#include <string>

namespace antifor {
namespace {

constexpr float kBceClampLo = 1e-7f;
constexpr float kBceClampHi = 1.0f - 1e-7f;

// C[M,N] = A[M,K] * B[K,N]; per-row accumulation in double.
void gemm(const float* a, const float* b, float* c, int m, int k, int n) {
    std::vector<double> acc(static_cast<std::size_t>(n));
    for (int i = 0; i < m; ++i) {
        std::fill(acc.begin(), acc.end(), 0.0);
        const float* arow = a + static_cast<std::size_t>(i) * k;
        for (int p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) continue;
            const float* brow = b + static_cast<std::size_t>(p) * n;
            for (int j = 0; j < n; ++j) acc[static_cast<std::size_t>(j)] += av * brow[j];
        }
        float* crow = c + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) crow[j] = static_cast<float>(acc[static_cast<std::size_t>(j)]);
    }
}

// C[M,N] += A[M,K] * B[N,K]^T, accumulated into a double buffer.
void gemm_abt_acc(const float* a, const float* b, double* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const float* arow = a + static_cast<std::size_t>(i) * k;
        double* crow = c + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) {
            const float* brow = b + static_cast<std::size_t>(j) * k;
            double acc = 0.0;
            for (int p = 0; p < k; ++p) acc += static_cast<double>(arow[p]) * brow[p];
            crow[j] += acc;
        }
    }
}

// C[M,N] = A[K,M]^T * B[K,N]; accumulation in double.
void gemm_atb(const float* a, const float* b, float* c, int k, int m, int n) {
    std::vector<double> acc(static_cast<std::size_t>(m) * n, 0.0);
    for (int p = 0; p < k; ++p) {
        const float* arow = a + static_cast<std::size_t>(p) * m;
        const float* brow = b + static_cast<std::size_t>(p) * n;
        for (int i = 0; i < m; ++i) {
            const double av = arow[i];
            if (av == 0.0) continue;
            double* crow = acc.data() + static_cast<std::size_t>(i) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
    for (std::size_t i = 0; i < acc.size(); ++i) c[i] = static_cast<float>(acc[i]);
}

void im2col(const float* img, int channels, int height, int width, int kh, int kw,
            int stride, int pad, int oh, int ow, float* col) {
    for (int c = 0; c < channels; ++c) {
        for (int i = 0; i < kh; ++i) {
            for (int j = 0; j < kw; ++j) {
                float* dst = col + (static_cast<std::size_t>(c) * kh * kw + static_cast<std::size_t>(i) * kw + j) *
                                       (static_cast<std::size_t>(oh) * ow);
                for (int oy = 0; oy < oh; ++oy) {
                    const int y = oy * stride - pad + i;
                    if (y < 0 || y >= height) {
                        std::memset(dst + static_cast<std::size_t>(oy) * ow, 0,
                                    sizeof(float) * static_cast<std::size_t>(ow));
                        continue;
                    }
                    const float* src = img + (static_cast<std::size_t>(c) * height + y) * width;
                    for (int ox = 0; ox < ow; ++ox) {
                        const int x = ox * stride - pad + j;
                        dst[static_cast<std::size_t>(oy) * ow + ox] = (x >= 0 && x < width) ? src[x] : 0.0f;
                    }
                }
            }
        }
    }
}

void col2im_add(const float* col, int channels, int height, int width, int kh, int kw,
                int stride, int pad, int oh, int ow, float* img) {
    for (int c = 0; c < channels; ++c) {
        for (int i = 0; i < kh; ++i) {
            for (int j = 0; j < kw; ++j) {
                const float* src = col + (static_cast<std::size_t>(c) * kh * kw + static_cast<std::size_t>(i) * kw + j) *
                                             (static_cast<std::size_t>(oh) * ow);
                for (int oy = 0; oy < oh; ++oy) {
                    const int y = oy * stride - pad + i;
                    if (y < 0 || y >= height) continue;
                    float* dst = img + (static_cast<std::size_t>(c) * height + y) * width;
                    for (int ox = 0; ox < ow; ++ox) {
                        const int x = ox * stride - pad + j;
                        if (x >= 0 && x < width) dst[x] += src[static_cast<std::size_t>(oy) * ow + ox];
                    }
                }
            }
        }
    }
}

void accumulate(Tensor& grad, const float* delta, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) grad.data[i] += delta[i];
}

}  // namespace

Var Tape::push(Tensor value, BackFn back) {
    nodes_.push_back(Node{std::move(value), Tensor{}, std::move(back)});
    return Var{static_cast<int>(nodes_.size()) - 1};
}

void Tape::check_open() const {
    if (finished_) throw std::runtime_error("tape already consumed by backward(); start a new forward pass");
}

void Tape::check_var(Var v) const {
    if (!v.valid() || v.id >= static_cast<int>(nodes_.size())) throw std::invalid_argument("invalid tape handle");
}

Var Tape::leaf(Tensor value) {
    check_open();
    return push(std::move(value), nullptr);
}

const Tensor& Tape::value(Var v) const {
    check_var(v);
    return nodes_[static_cast<std::size_t>(v.id)].value;
}

const Tensor& Tape::grad(Var v) const {
    check_var(v);
    if (!finished_) throw std::runtime_error("gradients unavailable before backward()");
    return nodes_[static_cast<std::size_t>(v.id)].grad;
}

Var Tape::conv2d(Var input, Var kernel, int stride, int padding) {
    check_open();
    check_var(input);
    check_var(kernel);
    const Tensor& x = val(input);
    const Tensor& k = val(kernel);
    if (x.ndim() != 4 || k.ndim() != 4 || x.dim(1) != k.dim(1)) {
        throw std::invalid_argument("conv2d shape mismatch: input " + shape_to_string(x.shape) +
                                    " vs kernel " + shape_to_string(k.shape));
    }
    if (stride <= 0 || padding < 0) throw std::invalid_argument("conv2d: stride must be positive, padding nonnegative");
    const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    const int f = k.dim(0), kh = k.dim(2), kw = k.dim(3);
    if (kh > h + 2 * padding || kw > w + 2 * padding) {
        throw std::invalid_argument("conv2d: kernel " + shape_to_string(k.shape) +
                                    " exceeds padded input " + shape_to_string(x.shape));
    }
    if ((h + 2 * padding - kh) % stride != 0 || (w + 2 * padding - kw) % stride != 0) {
        throw std::invalid_argument("conv2d: extents of input " + shape_to_string(x.shape) + " with kernel " +
                                    shape_to_string(k.shape) + " are not divisible by stride " + std::to_string(stride));
    }
    const int oh = (h + 2 * padding - kh) / stride + 1;
    const int ow = (w + 2 * padding - kw) / stride + 1;

    Tensor out({n, f, oh, ow});
    const int ckk = c * kh * kw;
    const int ohw = oh * ow;
    std::vector<float> col(static_cast<std::size_t>(ckk) * ohw);
    for (int b = 0; b < n; ++b) {
        im2col(x.data.data() + static_cast<std::size_t>(b) * c * h * w, c, h, w, kh, kw, stride, padding, oh, ow,
               col.data());
        gemm(k.data.data(), col.data(), out.data.data() + static_cast<std::size_t>(b) * f * ohw, f, ckk, ohw);
    }

    auto back = [=](Tape& t, const Tensor& gout) {
        const Tensor& xv = t.val(input);
        const Tensor& kv = t.val(kernel);
        Tensor& gx = t.grad_mut(input);
        Tensor& gk = t.grad_mut(kernel);
        std::vector<float> colb(static_cast<std::size_t>(ckk) * ohw);
        std::vector<float> dcol(static_cast<std::size_t>(ckk) * ohw);
        std::vector<double> dk(static_cast<std::size_t>(f) * ckk, 0.0);
        for (int b = 0; b < n; ++b) {
            const float* go = gout.data.data() + static_cast<std::size_t>(b) * f * ohw;
            im2col(xv.data.data() + static_cast<std::size_t>(b) * c * h * w, c, h, w, kh, kw, stride, padding,
                   oh, ow, colb.data());
            gemm_abt_acc(go, colb.data(), dk.data(), f, ohw, ckk);
            gemm_atb(kv.data.data(), go, dcol.data(), f, ckk, ohw);
            col2im_add(dcol.data(), c, h, w, kh, kw, stride, padding, oh, ow,
                       gx.data.data() + static_cast<std::size_t>(b) * c * h * w);
        }
        for (std::size_t i = 0; i < dk.size(); ++i) gk.data[i] += static_cast<float>(dk[i]);
    };
    return push(std::move(out), std::move(back));
}

Var Tape::channel_bias(Var x, Var bias) {
    check_open();
    check_var(x);
    check_var(bias);
    const Tensor& xv = val(x);
    const Tensor& bv = val(bias);
    if (xv.ndim() != 4 || bv.ndim() != 1 || bv.dim(0) != xv.dim(1)) {
        throw std::invalid_argument("channel_bias shape mismatch: " + shape_to_string(xv.shape) + " vs " +
                                    shape_to_string(bv.shape));
    }
    Tensor out = xv;
    const int n = xv.dim(0), f = xv.dim(1);
    const std::size_t hw = static_cast<std::size_t>(xv.dim(2)) * xv.dim(3);
    for (int b = 0; b < n; ++b) {
        for (int ch = 0; ch < f; ++ch) {
            float* p = out.data.data() + (static_cast<std::size_t>(b) * f + ch) * hw;
            const float add = bv.data[static_cast<std::size_t>(ch)];
            for (std::size_t i = 0; i < hw; ++i) p[i] += add;
        }
    }
    auto back = [=](Tape& t, const Tensor& gout) {
        Tensor& gx = t.grad_mut(x);
        Tensor& gb = t.grad_mut(bias);
        accumulate(gx, gout.data.data(), gout.data.size());
        for (int ch = 0; ch < f; ++ch) {
            double acc = 0.0;
            for (int b = 0; b < n; ++b) {
                const float* p = gout.data.data() + (static_cast<std::size_t>(b) * f + ch) * hw;
                for (std::size_t i = 0; i < hw; ++i) acc += p[i];
            }
            gb.data[static_cast<std::size_t>(ch)] += static_cast<float>(acc);
        }
    };
    return push(std::move(out), std::move(back));
}

Var Tape::dense(Var x, Var weight, Var bias) {
    check_open();
    check_var(x);
    check_var(weight);
    check_var(bias);
    const Tensor& xv = val(x);
    const Tensor& wv = val(weight);
    const Tensor& bv = val(bias);
    if (xv.ndim() != 2 || wv.ndim() != 2 || xv.dim(1) != wv.dim(0) || bv.ndim() != 1 || bv.dim(0) != wv.dim(1)) {
        throw std::invalid_argument("dense shape mismatch: x " + shape_to_string(xv.shape) + ", w " +
                                    shape_to_string(wv.shape) + ", b " + shape_to_string(bv.shape));
    }
    const int n = xv.dim(0), d = xv.dim(1), m = wv.dim(1);
    Tensor out({n, m});
    gemm(xv.data.data(), wv.data.data(), out.data.data(), n, d, m);
    for (int b = 0; b < n; ++b) {
        float* row = out.data.data() + static_cast<std::size_t>(b) * m;
        for (int j = 0; j < m; ++j) row[j] += bv.data[static_cast<std::size_t>(j)];
    }
    auto back = [=](Tape& t, const Tensor& gout) {
        const Tensor& xval = t.val(x);
        const Tensor& wval = t.val(weight);
        Tensor& gx = t.grad_mut(x);
        Tensor& gw = t.grad_mut(weight);
        Tensor& gb = t.grad_mut(bias);
        // gx = gout * w^T
        std::vector<double> gxacc(static_cast<std::size_t>(n) * d, 0.0);
        gemm_abt_acc(gout.data.data(), wval.data.data(), gxacc.data(), n, m, d);
        for (std::size_t i = 0; i < gxacc.size(); ++i) gx.data[i] += static_cast<float>(gxacc[i]);
        // gw = x^T * gout
        std::vector<float> gwbuf(static_cast<std::size_t>(d) * m);
        gemm_atb(xval.data.data(), gout.data.data(), gwbuf.data(), n, d, m);
        accumulate(gw, gwbuf.data(), gwbuf.size());
        for (int j = 0; j < m; ++j) {
            double acc = 0.0;
            for (int b = 0; b < n; ++b) acc += gout.data[static_cast<std::size_t>(b) * m + j];
            gb.data[static_cast<std::size_t>(j)] += static_cast<float>(acc);
        }
    };
    return push(std::move(out), std::move(back));
}

Var Tape::relu(Var x) {
    check_open();
    check_var(x);
    Tensor out = val(x);
    for (float& v : out.data) v = v > 0.0f ? v : 0.0f;
    auto back = [=](Tape& t, const Tensor& gout) {
        const Tensor& xv = t.val(x);
        Tensor& gx = t.grad_mut(x);
        for (std::size_t i = 0; i < gout.data.size(); ++i) {
            if (xv.data[i] > 0.0f) gx.data[i] += gout.data[i];
        }
    };
    return push(std::move(out), std::move(back));
}

Var Tape::sigmoid(Var x) {
    check_open();
    check_var(x);
    Tensor out = val(x);
    for (float& v : out.data) v = 1.0f / (1.0f + std::exp(-v));
    Var result = push(std::move(out), nullptr);
    nodes_.back().back = [x, result](Tape& t, const Tensor& gout) {
        const Tensor& y = t.val(result);
        Tensor& gx = t.grad_mut(x);
        for (std::size_t i = 0; i < gout.data.size(); ++i) {
            const float s = y.data[i];
            gx.data[i] += gout.data[i] * s * (1.0f - s);
        }
    };
    return result;
}

Var Tape::avg_pool2d(Var x, int k) {
    check_open();
    check_var(x);
    const Tensor& xv = val(x);
    if (xv.ndim() != 4 || k <= 0 || xv.dim(2) % k != 0 || xv.dim(3) % k != 0) {
        throw std::invalid_argument("avg_pool2d: input " + shape_to_string(xv.shape) +
                                    " not divisible by window " + std::to_string(k));
    }
    const int n = xv.dim(0), c = xv.dim(1), h = xv.dim(2), w = xv.dim(3);
    const int oh = h / k, ow = w / k;
    Tensor out({n, c, oh, ow});
    const double inv = 1.0 / (static_cast<double>(k) * k);
    for (int b = 0; b < n * c; ++b) {
        const float* src = xv.data.data() + static_cast<std::size_t>(b) * h * w;
        float* dst = out.data.data() + static_cast<std::size_t>(b) * oh * ow;
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                double acc = 0.0;
                for (int i = 0; i < k; ++i)
                    for (int j = 0; j < k; ++j) acc += src[(oy * k + i) * w + ox * k + j];
                dst[oy * ow + ox] = static_cast<float>(acc * inv);
            }
        }
    }
    auto back = [=](Tape& t, const Tensor& gout) {
        Tensor& gx = t.grad_mut(x);
        const float scale = static_cast<float>(inv);
        for (int b = 0; b < n * c; ++b) {
            const float* go = gout.data.data() + static_cast<std::size_t>(b) * oh * ow;
            float* gdst = gx.data.data() + static_cast<std::size_t>(b) * h * w;
            for (int oy = 0; oy < oh; ++oy) {
                for (int ox = 0; ox < ow; ++ox) {
                    const float g = go[oy * ow + ox] * scale;
                    for (int i = 0; i < k; ++i)
                        for (int j = 0; j < k; ++j) gdst[(oy * k + i) * w + ox * k + j] += g;
                }
            }
        }
    };
    return push(std::move(out), std::move(back));
}

Var Tape::max_pool2d(Var x, int k) {
    check_open();
    check_var(x);
    const Tensor& xv = val(x);
    if (xv.ndim() != 4 || k <= 0 || xv.dim(2) % k != 0 || xv.dim(3) % k != 0) {
        throw std::invalid_argument("max_pool2d: input " + shape_to_string(xv.shape) +
                                    " not divisible by window " + std::to_string(k));
    }
    const int n = xv.dim(0), c = xv.dim(1), h = xv.dim(2), w = xv.dim(3);
    const int oh = h / k, ow = w / k;
    Tensor out({n, c, oh, ow});
    auto argmax = std::make_shared<std::vector<int>>(out.data.size());
    for (int b = 0; b < n * c; ++b) {
        const float* src = xv.data.data() + static_cast<std::size_t>(b) * h * w;
        float* dst = out.data.data() + static_cast<std::size_t>(b) * oh * ow;
        int* amx = argmax->data() + static_cast<std::size_t>(b) * oh * ow;
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                int best = (oy * k) * w + ox * k;
                float bv = src[best];
                for (int i = 0; i < k; ++i) {
                    for (int j = 0; j < k; ++j) {
                        const int idx = (oy * k + i) * w + ox * k + j;
                        if (src[idx] > bv) {
                            bv = src[idx];
                            best = idx;
                        }
                    }
                }
                dst[oy * ow + ox] = bv;
                amx[oy * ow + ox] = best;
            }
        }
    }
    auto back = [=](Tape& t, const Tensor& gout) {
        Tensor& gx = t.grad_mut(x);
        for (int b = 0; b < n * c; ++b) {
            const float* go = gout.data.data() + static_cast<std::size_t>(b) * oh * ow;
            float* gdst = gx.data.data() + static_cast<std::size_t>(b) * h * w;
            const int* amx = argmax->data() + static_cast<std::size_t>(b) * oh * ow;
            for (int i = 0; i < oh * ow; ++i) gdst[amx[i]] += go[i];
        }
    };
    return push(std::move(out), std::move(back));
}

Var Tape::flatten(Var x) {
    check_open();
    check_var(x);
    const Tensor& xv = val(x);
    if (xv.ndim() < 2) throw std::invalid_argument("flatten expects rank >= 2, got " + shape_to_string(xv.shape));
    Tensor out;
    out.shape = {xv.dim(0), static_cast<int>(xv.size() / xv.dim(0))};
    out.data = xv.data;
    auto back = [=](Tape& t, const Tensor& gout) {
        Tensor& gx = t.grad_mut(x);
        accumulate(gx, gout.data.data(), gout.data.size());
    };
    return push(std::move(out), std::move(back));
}

Var Tape::add(Var a, Var b) {
    check_open();
    check_var(a);
    check_var(b);
    const Tensor& av = val(a);
    const Tensor& bv = val(b);
    if (!av.same_shape(bv)) {
        throw std::invalid_argument("add shape mismatch: " + shape_to_string(av.shape) + " vs " +
                                    shape_to_string(bv.shape));
    }
    Tensor out = av;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += bv.data[i];
    auto back = [=](Tape& t, const Tensor& gout) {
        accumulate(t.grad_mut(a), gout.data.data(), gout.data.size());
        accumulate(t.grad_mut(b), gout.data.data(), gout.data.size());
    };
    return push(std::move(out), std::move(back));
}

Var Tape::affine(Var x, float mul, float shift) {
    check_open();
    check_var(x);
    Tensor out = val(x);
    for (float& v : out.data) v = v * mul + shift;
    auto back = [=](Tape& t, const Tensor& gout) {
        Tensor& gx = t.grad_mut(x);
        for (std::size_t i = 0; i < gout.data.size(); ++i) gx.data[i] += gout.data[i] * mul;
    };
    return push(std::move(out), std::move(back));
}

Var Tape::layer_norm(Var x, float eps) {
    check_open();
    check_var(x);
    const Tensor& xv = val(x);
    if (xv.ndim() != 2 || eps <= 0.0f) {
        throw std::invalid_argument("layer_norm: expects [N,D] input and eps > 0, got " + shape_to_string(xv.shape));
    }
    const int n = xv.dim(0), d = xv.dim(1);
    Tensor out(xv.shape);
    std::vector<float> inv_sd(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const float* row = xv.data.data() + static_cast<std::size_t>(i) * d;
        double mu = 0.0;
        for (int j = 0; j < d; ++j) mu += row[j];
        mu /= d;
        double var = 0.0;
        for (int j = 0; j < d; ++j) var += (row[j] - mu) * (row[j] - mu);
        var /= d;
        const double s = std::sqrt(var + static_cast<double>(eps));
        inv_sd[static_cast<std::size_t>(i)] = static_cast<float>(1.0 / s);
        float* orow = out.data.data() + static_cast<std::size_t>(i) * d;
        for (int j = 0; j < d; ++j) orow[j] = static_cast<float>((row[j] - mu) / s);
    }
    Var result = push(std::move(out), nullptr);
    nodes_.back().back = [x, result, n, d, inv_sd = std::move(inv_sd)](Tape& t, const Tensor& gout) {
        const Tensor& y = t.val(result);
        Tensor& gx = t.grad_mut(x);
        for (int i = 0; i < n; ++i) {
            const float* g = gout.data.data() + static_cast<std::size_t>(i) * d;
            const float* yr = y.data.data() + static_cast<std::size_t>(i) * d;
            double g_mean = 0.0, gy_mean = 0.0;
            for (int j = 0; j < d; ++j) {
                g_mean += g[j];
                gy_mean += static_cast<double>(g[j]) * yr[j];
            }
            g_mean /= d;
            gy_mean /= d;
            const double inv = inv_sd[static_cast<std::size_t>(i)];
            float* gxr = gx.data.data() + static_cast<std::size_t>(i) * d;
            for (int j = 0; j < d; ++j) {
                gxr[j] += static_cast<float>((g[j] - g_mean - yr[j] * gy_mean) * inv);
            }
        }
    };
    return result;
}

Var Tape::sum(Var x) {
    check_open();
    check_var(x);
    const Tensor& xv = val(x);
    double acc = 0.0;
    for (float v : xv.data) acc += v;
    auto back = [=](Tape& t, const Tensor& gout) {
        Tensor& gx = t.grad_mut(x);
        const float g = gout.data[0];
        for (float& v : gx.data) v += g;
    };
    return push(Tensor::scalar(static_cast<float>(acc)), std::move(back));
}

Var Tape::square(Var x) {
    check_open();
    check_var(x);
    Tensor out = val(x);
    for (float& v : out.data) v = v * v;
    auto back = [=](Tape& t, const Tensor& gout) {
        const Tensor& xv = t.val(x);
        Tensor& gx = t.grad_mut(x);
        for (std::size_t i = 0; i < gout.data.size(); ++i) gx.data[i] += 2.0f * xv.data[i] * gout.data[i];
    };
    return push(std::move(out), std::move(back));
}

Var Tape::bce_loss(Var scores, const std::vector<float>& labels) {
    check_open();
    check_var(scores);
    const Tensor& sv = val(scores);
    const int n = sv.dim(0);
    if (static_cast<std::size_t>(n) != labels.size() || sv.size() != n) {
        throw std::invalid_argument("bce_loss: scores " + shape_to_string(sv.shape) + " vs " +
                                    std::to_string(labels.size()) + " labels (expect one score per label)");
    }
    for (float y : labels) {
        if (y != 0.0f && y != 1.0f) throw std::invalid_argument("bce_loss: label " + std::to_string(y) + " not in {0,1}");
    }
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const float s = std::clamp(sv.data[static_cast<std::size_t>(i)], kBceClampLo, kBceClampHi);
        const double y = labels[static_cast<std::size_t>(i)];
        acc += -y * std::log(static_cast<double>(s)) - (1.0 - y) * std::log(1.0 - static_cast<double>(s));
    }
    auto labs = std::make_shared<std::vector<float>>(labels);
    auto back = [=](Tape& t, const Tensor& gout) {
        const Tensor& s = t.val(scores);
        Tensor& gs = t.grad_mut(scores);
        const float g = gout.data[0] / static_cast<float>(n);
        for (int i = 0; i < n; ++i) {
            const float raw = s.data[static_cast<std::size_t>(i)];
            if (raw < kBceClampLo || raw > kBceClampHi) continue;  // clamp subgradient
            const float y = (*labs)[static_cast<std::size_t>(i)];
            gs.data[static_cast<std::size_t>(i)] += g * (raw - y) / (raw * (1.0f - raw));
        }
    };
    return push(Tensor::scalar(static_cast<float>(acc / n)), std::move(back));
}

void Tape::backward(Var loss) {
    check_open();
    check_var(loss);
    if (val(loss).size() != 1) {
        throw std::invalid_argument("backward expects a scalar loss, got " + shape_to_string(val(loss).shape));
    }
    for (Node& node : nodes_) node.grad = Tensor(node.value.shape, 0.0f);
    nodes_[static_cast<std::size_t>(loss.id)].grad.data[0] = 1.0f;
    for (std::size_t i = nodes_.size(); i-- > 0;) {
        if (nodes_[i].back) nodes_[i].back(*this, nodes_[i].grad);
    }
    finished_ = true;
}

void Tape::backward_seeded(Var out, const Tensor& seed) {
    check_open();
    check_var(out);
    if (!val(out).same_shape(seed)) {
        throw std::invalid_argument("backward seed shape " + shape_to_string(seed.shape) + " does not match output " +
                                    shape_to_string(val(out).shape));
    }
    for (Node& node : nodes_) node.grad = Tensor(node.value.shape, 0.0f);
    nodes_[static_cast<std::size_t>(out.id)].grad = seed;
    for (std::size_t i = nodes_.size(); i-- > 0;) {
        if (nodes_[i].back) nodes_[i].back(*this, nodes_[i].grad);
    }
    finished_ = true;
}

Tensor sign(const Tensor& t) {
    Tensor out = t;
    for (float& v : out.data) v = v > 0.0f ? 1.0f : (v < 0.0f ? -1.0f : 0.0f);
    return out;
}

}  // namespace antifor
