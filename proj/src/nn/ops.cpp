#include "nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace penseg::nn {

namespace {

inline void check(bool cond, const char* msg) {
    if (!cond) throw ValidationError(msg);
}

}  // namespace

Var conv3d_single_in(Tape& tape, const Var& x, const Var& w, const Var& b) {
    check(x->value.shape.size() == 3, "conv3d: input must be (Z,H,W)");
    check(w->value.shape.size() == 4, "conv3d: weight must be (C,K,K,K)");
    const int Z = x->value.dim(0), H = x->value.dim(1), W = x->value.dim(2);
    const int C = w->value.dim(0), K = w->value.dim(1);
    check(w->value.dim(2) == K && w->value.dim(3) == K, "conv3d: kernel must be cubic");
    check(K <= Z, "conv3d: kernel exceeds stack depth");
    const int L = Z - K + 1;
    const int P = K / 2;

    Tensor out({C, L, H, W});
    const double* xd = x->value.ptr();
    const double* wd = w->value.ptr();
    double* od = out.ptr();
    const size_t planeHW = static_cast<size_t>(H) * W;

    for (int c = 0; c < C; ++c) {
        for (int l = 0; l < L; ++l) {
            double* oplane = od + (static_cast<size_t>(c) * L + l) * planeHW;
            for (int kz = 0; kz < K; ++kz) {
                const double* xslab = xd + static_cast<size_t>(l + kz) * planeHW;
                const double* wslab = wd + ((static_cast<size_t>(c) * K + kz) * K) * K;
                for (int ky = 0; ky < K; ++ky) {
                    for (int kx = 0; kx < K; ++kx) {
                        const double wv = wslab[static_cast<size_t>(ky) * K + kx];
                        if (wv == 0.0) continue;
                        const int x0 = std::max(0, P - kx);
                        const int x1 = std::min(W - 1, W - 1 + P - kx);
                        for (int h = 0; h < H; ++h) {
                            const int y = h + ky - P;
                            if (y < 0 || y >= H) continue;
                            double* orow = oplane + static_cast<size_t>(h) * W;
                            const double* xrow = xslab + static_cast<size_t>(y) * W + (kx - P);
                            for (int xx = x0; xx <= x1; ++xx) orow[xx] += wv * xrow[xx];
                        }
                    }
                }
            }
            const double bv = b->value.data[static_cast<size_t>(c)];
            for (size_t i = 0; i < planeHW; ++i) oplane[i] += bv;
        }
    }

    bool rg = x->requires_grad || w->requires_grad || b->requires_grad;
    Var xs = x, ws = w, bs = b;
    Var node = tape.record(std::move(out), rg, nullptr);
    if (rg) {
        Var self = node;
        node->backward = [xs, ws, bs, self, Z, H, W, C, K, L, P, planeHW]() {
            const double* gd = self->grad.ptr();
            const double* xd = xs->value.ptr();
            const double* wd = ws->value.ptr();
            if (bs->requires_grad) {
                for (int c = 0; c < C; ++c) {
                    double s = 0.0;
                    const double* g = gd + static_cast<size_t>(c) * L * planeHW;
                    for (size_t i = 0; i < static_cast<size_t>(L) * planeHW; ++i) s += g[i];
                    bs->grad.data[static_cast<size_t>(c)] += s;
                }
            }
            for (int c = 0; c < C; ++c) {
                for (int l = 0; l < L; ++l) {
                    const double* gplane = gd + (static_cast<size_t>(c) * L + l) * planeHW;
                    for (int kz = 0; kz < K; ++kz) {
                        const double* xslab = xd + static_cast<size_t>(l + kz) * planeHW;
                        double* gxslab =
                            xs->requires_grad ? xs->grad.ptr() + static_cast<size_t>(l + kz) * planeHW
                                              : nullptr;
                        for (int ky = 0; ky < K; ++ky) {
                            for (int kx = 0; kx < K; ++kx) {
                                const size_t widx =
                                    ((static_cast<size_t>(c) * K + kz) * K + ky) * K + kx;
                                const double wv = wd[widx];
                                const int x0 = std::max(0, P - kx);
                                const int x1 = std::min(W - 1, W - 1 + P - kx);
                                double wacc = 0.0;
                                for (int h = 0; h < H; ++h) {
                                    const int y = h + ky - P;
                                    if (y < 0 || y >= H) continue;
                                    const double* grow = gplane + static_cast<size_t>(h) * W;
                                    const size_t roff = static_cast<size_t>(y) * W + (kx - P);
                                    if (ws->requires_grad) {
                                        const double* xrow = xslab + roff;
                                        for (int xx = x0; xx <= x1; ++xx) wacc += xrow[xx] * grow[xx];
                                    }
                                    if (gxslab) {
                                        double* gxrow = gxslab + roff;
                                        for (int xx = x0; xx <= x1; ++xx) gxrow[xx] += wv * grow[xx];
                                    }
                                }
                                if (ws->requires_grad) ws->grad.data[widx] += wacc;
                            }
                        }
                    }
                }
            }
        };
    }
    return node;
}

Var depth_linear(Tape& tape, const Var& x, const Var& w, const Var& b) {
    check(x->value.shape.size() == 4, "depth_linear: input must be (Cin,L,H,W)");
    const int Cin = x->value.dim(0), L = x->value.dim(1), H = x->value.dim(2), W = x->value.dim(3);
    const int Cout = w->value.dim(0);
    check(w->value.dim(1) == Cin && w->value.dim(2) == L, "depth_linear: weight must be (Cout,Cin,L)");
    const size_t planeHW = static_cast<size_t>(H) * W;

    Tensor out({Cout, H, W});
    const double* xd = x->value.ptr();
    const double* wd = w->value.ptr();
    double* od = out.ptr();
    for (int co = 0; co < Cout; ++co) {
        double* oplane = od + static_cast<size_t>(co) * planeHW;
        const double bv = b->value.data[static_cast<size_t>(co)];
        for (size_t i = 0; i < planeHW; ++i) oplane[i] = bv;
        for (int ci = 0; ci < Cin; ++ci)
            for (int l = 0; l < L; ++l) {
                const double wv = wd[(static_cast<size_t>(co) * Cin + ci) * L + l];
                const double* xplane = xd + (static_cast<size_t>(ci) * L + l) * planeHW;
                for (size_t i = 0; i < planeHW; ++i) oplane[i] += wv * xplane[i];
            }
    }

    bool rg = x->requires_grad || w->requires_grad || b->requires_grad;
    Var xs = x, ws = w, bs = b;
    Var node = tape.record(std::move(out), rg, nullptr);
    if (rg) {
        Var self = node;
        node->backward = [xs, ws, bs, self, Cin, Cout, L, planeHW]() {
            const double* gd = self->grad.ptr();
            const double* xd = xs->value.ptr();
            const double* wd = ws->value.ptr();
            for (int co = 0; co < Cout; ++co) {
                const double* gplane = gd + static_cast<size_t>(co) * planeHW;
                if (bs->requires_grad) {
                    double s = 0.0;
                    for (size_t i = 0; i < planeHW; ++i) s += gplane[i];
                    bs->grad.data[static_cast<size_t>(co)] += s;
                }
                for (int ci = 0; ci < Cin; ++ci)
                    for (int l = 0; l < L; ++l) {
                        const size_t widx = (static_cast<size_t>(co) * Cin + ci) * L + l;
                        const size_t xoff = (static_cast<size_t>(ci) * L + l) * planeHW;
                        if (ws->requires_grad) {
                            double s = 0.0;
                            const double* xplane = xd + xoff;
                            for (size_t i = 0; i < planeHW; ++i) s += xplane[i] * gplane[i];
                            ws->grad.data[widx] += s;
                        }
                        if (xs->requires_grad) {
                            const double wv = wd[widx];
                            double* gx = xs->grad.ptr() + xoff;
                            for (size_t i = 0; i < planeHW; ++i) gx[i] += wv * gplane[i];
                        }
                    }
            }
        };
    }
    return node;
}

Var depth_max(Tape& tape, const Var& x) {
    check(x->value.shape.size() == 4, "depth_max: input must be (C,L,H,W)");
    const int C = x->value.dim(0), L = x->value.dim(1), H = x->value.dim(2), W = x->value.dim(3);
    const size_t planeHW = static_cast<size_t>(H) * W;

    Tensor out({C, H, W});
    auto argmax = std::make_shared<std::vector<int>>(static_cast<size_t>(C) * planeHW, 0);
    const double* xd = x->value.ptr();
    for (int c = 0; c < C; ++c)
        for (size_t i = 0; i < planeHW; ++i) {
            double best = xd[(static_cast<size_t>(c) * L) * planeHW + i];
            int bl = 0;
            for (int l = 1; l < L; ++l) {
                double v = xd[(static_cast<size_t>(c) * L + l) * planeHW + i];
                if (v > best) {
                    best = v;
                    bl = l;
                }
            }
            out.data[static_cast<size_t>(c) * planeHW + i] = best;
            (*argmax)[static_cast<size_t>(c) * planeHW + i] = bl;
        }

    Var xs = x;
    Var node = tape.record(std::move(out), x->requires_grad, nullptr);
    if (x->requires_grad) {
        Var self = node;
        node->backward = [xs, self, argmax, C, L, planeHW]() {
            const double* gd = self->grad.ptr();
            double* gx = xs->grad.ptr();
            for (int c = 0; c < C; ++c)
                for (size_t i = 0; i < planeHW; ++i) {
                    int l = (*argmax)[static_cast<size_t>(c) * planeHW + i];
                    gx[(static_cast<size_t>(c) * L + l) * planeHW + i] +=
                        gd[static_cast<size_t>(c) * planeHW + i];
                }
        };
    }
    return node;
}

Var stack_depth(Tape& tape, const std::vector<Var>& xs) {
    check(!xs.empty(), "stack_depth: empty input list");
    const int C = xs[0]->value.dim(0), H = xs[0]->value.dim(1), W = xs[0]->value.dim(2);
    const int N = static_cast<int>(xs.size());
    const size_t planeHW = static_cast<size_t>(H) * W;
    bool rg = false;
    for (const auto& v : xs) {
        check(v->value.shape == xs[0]->value.shape, "stack_depth: shape mismatch");
        rg = rg || v->requires_grad;
    }
    Tensor out({C, N, H, W});
    for (int c = 0; c < C; ++c)
        for (int n = 0; n < N; ++n)
            std::copy_n(xs[static_cast<size_t>(n)]->value.ptr() + static_cast<size_t>(c) * planeHW,
                        planeHW, out.ptr() + (static_cast<size_t>(c) * N + n) * planeHW);

    auto parents = xs;
    Var node = tape.record(std::move(out), rg, nullptr);
    if (rg) {
        Var self = node;
        node->backward = [parents, self, C, N, planeHW]() {
            const double* gd = self->grad.ptr();
            for (int n = 0; n < N; ++n) {
                auto& p = parents[static_cast<size_t>(n)];
                if (!p->requires_grad) continue;
                for (int c = 0; c < C; ++c) {
                    const double* g = gd + (static_cast<size_t>(c) * N + n) * planeHW;
                    double* gp = p->grad.ptr() + static_cast<size_t>(c) * planeHW;
                    for (size_t i = 0; i < planeHW; ++i) gp[i] += g[i];
                }
            }
        };
    }
    return node;
}

Var relu(Tape& tape, const Var& x) {
    Tensor out(x->value.shape);
    for (size_t i = 0; i < out.size(); ++i) out.data[i] = std::max(0.0, x->value.data[i]);
    Var xs = x;
    Var node = tape.record(std::move(out), x->requires_grad, nullptr);
    if (x->requires_grad) {
        Var self = node;
        node->backward = [xs, self]() {
            for (size_t i = 0; i < xs->grad.size(); ++i)
                if (xs->value.data[i] > 0.0) xs->grad.data[i] += self->grad.data[i];
        };
    }
    return node;
}

Var batchnorm(Tape& tape, const Var& x, const Var& gamma, const Var& beta, Tensor* running_mean,
              Tensor* running_var, bool train, double momentum, double eps) {
    const int C = x->value.dim(0);
    const size_t n = x->value.size() / static_cast<size_t>(C);
    check(gamma->value.size() == static_cast<size_t>(C) && beta->value.size() == static_cast<size_t>(C),
          "batchnorm: scale/shift size mismatch");
    check(running_mean->size() == static_cast<size_t>(C) && running_var->size() == static_cast<size_t>(C),
          "batchnorm: running stat size mismatch");

    auto mean = std::make_shared<std::vector<double>>(C, 0.0);
    auto inv_std = std::make_shared<std::vector<double>>(C, 0.0);
    const double* xd = x->value.ptr();
    for (int c = 0; c < C; ++c) {
        double m, v;
        if (train) {
            double s = 0.0;
            const double* xc = xd + static_cast<size_t>(c) * n;
            for (size_t i = 0; i < n; ++i) s += xc[i];
            m = s / static_cast<double>(n);
            double s2 = 0.0;
            for (size_t i = 0; i < n; ++i) {
                double d = xc[i] - m;
                s2 += d * d;
            }
            v = s2 / static_cast<double>(n);
            running_mean->data[static_cast<size_t>(c)] =
                (1.0 - momentum) * running_mean->data[static_cast<size_t>(c)] + momentum * m;
            running_var->data[static_cast<size_t>(c)] =
                (1.0 - momentum) * running_var->data[static_cast<size_t>(c)] + momentum * v;
        } else {
            m = running_mean->data[static_cast<size_t>(c)];
            v = running_var->data[static_cast<size_t>(c)];
        }
        (*mean)[static_cast<size_t>(c)] = m;
        (*inv_std)[static_cast<size_t>(c)] = 1.0 / std::sqrt(v + eps);
    }

    Tensor out(x->value.shape);
    for (int c = 0; c < C; ++c) {
        const double g = gamma->value.data[static_cast<size_t>(c)];
        const double b = beta->value.data[static_cast<size_t>(c)];
        const double m = (*mean)[static_cast<size_t>(c)];
        const double is = (*inv_std)[static_cast<size_t>(c)];
        const double* xc = xd + static_cast<size_t>(c) * n;
        double* oc = out.ptr() + static_cast<size_t>(c) * n;
        for (size_t i = 0; i < n; ++i) oc[i] = g * (xc[i] - m) * is + b;
    }

    bool rg = x->requires_grad || gamma->requires_grad || beta->requires_grad;
    Var xs = x, gs = gamma, bs = beta;
    Var node = tape.record(std::move(out), rg, nullptr);
    if (rg) {
        Var self = node;
        node->backward = [xs, gs, bs, self, mean, inv_std, C, n, train]() {
            const double* gd = self->grad.ptr();
            const double* xd = xs->value.ptr();
            for (int c = 0; c < C; ++c) {
                const double m = (*mean)[static_cast<size_t>(c)];
                const double is = (*inv_std)[static_cast<size_t>(c)];
                const double g = gs->value.data[static_cast<size_t>(c)];
                const double* gc = gd + static_cast<size_t>(c) * n;
                const double* xc = xd + static_cast<size_t>(c) * n;
                double sum_g = 0.0, sum_gx = 0.0;
                for (size_t i = 0; i < n; ++i) {
                    sum_g += gc[i];
                    sum_gx += gc[i] * (xc[i] - m) * is;
                }
                if (bs->requires_grad) bs->grad.data[static_cast<size_t>(c)] += sum_g;
                if (gs->requires_grad) gs->grad.data[static_cast<size_t>(c)] += sum_gx;
                if (xs->requires_grad) {
                    double* gx = xs->grad.ptr() + static_cast<size_t>(c) * n;
                    if (train) {
                        const double inv_n = 1.0 / static_cast<double>(n);
                        for (size_t i = 0; i < n; ++i) {
                            double xhat = (xc[i] - m) * is;
                            gx[i] += g * is * (gc[i] - inv_n * sum_g - xhat * inv_n * sum_gx);
                        }
                    } else {
                        for (size_t i = 0; i < n; ++i) gx[i] += g * is * gc[i];
                    }
                }
            }
        };
    }
    return node;
}

Var minmax_norm(Tape& tape, const Var& x) {
    const size_t n = x->value.size();
    check(n > 0, "minmax_norm: empty tensor");
    size_t imin = 0, imax = 0;
    for (size_t i = 1; i < n; ++i) {
        if (x->value.data[i] < x->value.data[imin]) imin = i;
        if (x->value.data[i] > x->value.data[imax]) imax = i;
    }
    const double lo = x->value.data[imin], hi = x->value.data[imax];
    Tensor out(x->value.shape);
    const bool constant = (hi == lo);
    const double scale = constant ? 0.0 : 1.0 / (hi - lo);
    for (size_t i = 0; i < n; ++i) out.data[i] = (x->value.data[i] - lo) * scale;

    Var xs = x;
    Var node = tape.record(std::move(out), x->requires_grad, nullptr);
    if (x->requires_grad) {
        Var self = node;
        node->backward = [xs, self, imin, imax, scale, constant, n]() {
            if (constant) return;
            const double* gd = self->grad.ptr();
            const double* yd = self->value.ptr();
            double sum_g = 0.0, sum_gy = 0.0;
            for (size_t i = 0; i < n; ++i) {
                sum_g += gd[i];
                sum_gy += gd[i] * yd[i];
            }
            double* gx = xs->grad.ptr();
            for (size_t i = 0; i < n; ++i) gx[i] += scale * gd[i];
            gx[imin] -= scale * (sum_g - sum_gy);
            gx[imax] -= scale * sum_gy;
        };
    }
    return node;
}

Var conv2d(Tape& tape, const Var& x, const Var& w, const Var& b) {
    check(x->value.shape.size() == 3, "conv2d: input must be (Cin,H,W)");
    check(w->value.shape.size() == 4, "conv2d: weight must be (Cout,Cin,k,k)");
    const int Cin = x->value.dim(0), H = x->value.dim(1), W = x->value.dim(2);
    const int Cout = w->value.dim(0), K = w->value.dim(2);
    check(w->value.dim(1) == Cin && w->value.dim(3) == K, "conv2d: weight dims inconsistent");
    const int P = K / 2;
    const size_t planeHW = static_cast<size_t>(H) * W;

    Tensor out({Cout, H, W});
    const double* xd = x->value.ptr();
    const double* wd = w->value.ptr();
    for (int co = 0; co < Cout; ++co) {
        double* oplane = out.ptr() + static_cast<size_t>(co) * planeHW;
        const double bv = b->value.data[static_cast<size_t>(co)];
        for (size_t i = 0; i < planeHW; ++i) oplane[i] = bv;
        for (int ci = 0; ci < Cin; ++ci) {
            const double* xplane = xd + static_cast<size_t>(ci) * planeHW;
            const double* wk = wd + ((static_cast<size_t>(co) * Cin + ci) * K) * K;
            for (int ky = 0; ky < K; ++ky)
                for (int kx = 0; kx < K; ++kx) {
                    const double wv = wk[static_cast<size_t>(ky) * K + kx];
                    const int x0 = std::max(0, P - kx);
                    const int x1 = std::min(W - 1, W - 1 + P - kx);
                    for (int h = 0; h < H; ++h) {
                        const int y = h + ky - P;
                        if (y < 0 || y >= H) continue;
                        double* orow = oplane + static_cast<size_t>(h) * W;
                        const double* xrow = xplane + static_cast<size_t>(y) * W + (kx - P);
                        for (int xx = x0; xx <= x1; ++xx) orow[xx] += wv * xrow[xx];
                    }
                }
        }
    }

    bool rg = x->requires_grad || w->requires_grad || b->requires_grad;
    Var xs = x, ws = w, bs = b;
    Var node = tape.record(std::move(out), rg, nullptr);
    if (rg) {
        Var self = node;
        node->backward = [xs, ws, bs, self, Cin, Cout, H, W, K, P, planeHW]() {
            const double* gd = self->grad.ptr();
            const double* xd = xs->value.ptr();
            const double* wd = ws->value.ptr();
            for (int co = 0; co < Cout; ++co) {
                const double* gplane = gd + static_cast<size_t>(co) * planeHW;
                if (bs->requires_grad) {
                    double s = 0.0;
                    for (size_t i = 0; i < planeHW; ++i) s += gplane[i];
                    bs->grad.data[static_cast<size_t>(co)] += s;
                }
                for (int ci = 0; ci < Cin; ++ci) {
                    const double* xplane = xd + static_cast<size_t>(ci) * planeHW;
                    double* gxplane =
                        xs->requires_grad ? xs->grad.ptr() + static_cast<size_t>(ci) * planeHW : nullptr;
                    for (int ky = 0; ky < K; ++ky)
                        for (int kx = 0; kx < K; ++kx) {
                            const size_t widx = ((static_cast<size_t>(co) * Cin + ci) * K + ky) * K + kx;
                            const double wv = wd[widx];
                            const int x0 = std::max(0, P - kx);
                            const int x1 = std::min(W - 1, W - 1 + P - kx);
                            double wacc = 0.0;
                            for (int h = 0; h < H; ++h) {
                                const int y = h + ky - P;
                                if (y < 0 || y >= H) continue;
                                const double* grow = gplane + static_cast<size_t>(h) * W;
                                const size_t roff = static_cast<size_t>(y) * W + (kx - P);
                                if (ws->requires_grad) {
                                    const double* xrow = xplane + roff;
                                    for (int xx = x0; xx <= x1; ++xx) wacc += xrow[xx] * grow[xx];
                                }
                                if (gxplane) {
                                    double* gxrow = gxplane + roff;
                                    for (int xx = x0; xx <= x1; ++xx) gxrow[xx] += wv * grow[xx];
                                }
                            }
                            if (ws->requires_grad) ws->grad.data[widx] += wacc;
                        }
                }
            }
        };
    }
    return node;
}

Var maxpool2(Tape& tape, const Var& x) {
    const int C = x->value.dim(0), H = x->value.dim(1), W = x->value.dim(2);
    check(H % 2 == 0 && W % 2 == 0, "maxpool2: dims must be even");
    const int Ho = H / 2, Wo = W / 2;
    Tensor out({C, Ho, Wo});
    auto arg = std::make_shared<std::vector<size_t>>(out.size(), 0);
    const double* xd = x->value.ptr();
    for (int c = 0; c < C; ++c)
        for (int y = 0; y < Ho; ++y)
            for (int xx = 0; xx < Wo; ++xx) {
                size_t best_idx = 0;
                double best = -std::numeric_limits<double>::infinity();
                for (int dy = 0; dy < 2; ++dy)
                    for (int dx = 0; dx < 2; ++dx) {
                        size_t idx =
                            (static_cast<size_t>(c) * H + (2 * y + dy)) * W + (2 * xx + dx);
                        if (xd[idx] > best) {
                            best = xd[idx];
                            best_idx = idx;
                        }
                    }
                size_t oidx = (static_cast<size_t>(c) * Ho + y) * Wo + xx;
                out.data[oidx] = best;
                (*arg)[oidx] = best_idx;
            }
    Var xs = x;
    Var node = tape.record(std::move(out), x->requires_grad, nullptr);
    if (x->requires_grad) {
        Var self = node;
        node->backward = [xs, self, arg]() {
            for (size_t i = 0; i < self->grad.size(); ++i)
                xs->grad.data[(*arg)[i]] += self->grad.data[i];
        };
    }
    return node;
}

Var upsample2(Tape& tape, const Var& x) {
    const int C = x->value.dim(0), H = x->value.dim(1), W = x->value.dim(2);
    Tensor out({C, 2 * H, 2 * W});
    const double* xd = x->value.ptr();
    for (int c = 0; c < C; ++c)
        for (int y = 0; y < 2 * H; ++y)
            for (int xx = 0; xx < 2 * W; ++xx)
                out.data[(static_cast<size_t>(c) * 2 * H + y) * 2 * W + xx] =
                    xd[(static_cast<size_t>(c) * H + y / 2) * W + xx / 2];
    Var xs = x;
    Var node = tape.record(std::move(out), x->requires_grad, nullptr);
    if (x->requires_grad) {
        Var self = node;
        node->backward = [xs, self, C, H, W]() {
            const double* gd = self->grad.ptr();
            for (int c = 0; c < C; ++c)
                for (int y = 0; y < 2 * H; ++y)
                    for (int xx = 0; xx < 2 * W; ++xx)
                        xs->grad.data[(static_cast<size_t>(c) * H + y / 2) * W + xx / 2] +=
                            gd[(static_cast<size_t>(c) * 2 * H + y) * 2 * W + xx];
        };
    }
    return node;
}

Var concat_channels(Tape& tape, const Var& a, const Var& b) {
    const int Ca = a->value.dim(0), Cb = b->value.dim(0);
    const int H = a->value.dim(1), W = a->value.dim(2);
    check(b->value.dim(1) == H && b->value.dim(2) == W, "concat_channels: spatial dims differ");
    const size_t planeHW = static_cast<size_t>(H) * W;
    Tensor out({Ca + Cb, H, W});
    std::copy_n(a->value.ptr(), static_cast<size_t>(Ca) * planeHW, out.ptr());
    std::copy_n(b->value.ptr(), static_cast<size_t>(Cb) * planeHW,
                out.ptr() + static_cast<size_t>(Ca) * planeHW);
    bool rg = a->requires_grad || b->requires_grad;
    Var as = a, bs = b;
    Var node = tape.record(std::move(out), rg, nullptr);
    if (rg) {
        Var self = node;
        node->backward = [as, bs, self, Ca, Cb, planeHW]() {
            const double* gd = self->grad.ptr();
            if (as->requires_grad)
                for (size_t i = 0; i < static_cast<size_t>(Ca) * planeHW; ++i) as->grad.data[i] += gd[i];
            if (bs->requires_grad)
                for (size_t i = 0; i < static_cast<size_t>(Cb) * planeHW; ++i)
                    bs->grad.data[i] += gd[static_cast<size_t>(Ca) * planeHW + i];
        };
    }
    return node;
}

Var channel_slice(Tape& tape, const Var& x, int from, int count) {
    const int C = x->value.dim(0), H = x->value.dim(1), W = x->value.dim(2);
    check(from >= 0 && from + count <= C, "channel_slice: range out of bounds");
    const size_t planeHW = static_cast<size_t>(H) * W;
    Tensor out({count, H, W});
    std::copy_n(x->value.ptr() + static_cast<size_t>(from) * planeHW,
                static_cast<size_t>(count) * planeHW, out.ptr());
    Var xs = x;
    Var node = tape.record(std::move(out), x->requires_grad, nullptr);
    if (x->requires_grad) {
        Var self = node;
        node->backward = [xs, self, from, count, planeHW]() {
            double* gx = xs->grad.ptr() + static_cast<size_t>(from) * planeHW;
            for (size_t i = 0; i < static_cast<size_t>(count) * planeHW; ++i)
                gx[i] += self->grad.data[i];
        };
    }
    return node;
}

Var add(Tape& tape, const Var& a, const Var& b) {
    check(a->value.shape == b->value.shape, "add: shape mismatch");
    Tensor out(a->value.shape);
    for (size_t i = 0; i < out.size(); ++i) out.data[i] = a->value.data[i] + b->value.data[i];
    bool rg = a->requires_grad || b->requires_grad;
    Var as = a, bs = b;
    Var node = tape.record(std::move(out), rg, nullptr);
    if (rg) {
        Var self = node;
        node->backward = [as, bs, self]() {
            for (size_t i = 0; i < self->grad.size(); ++i) {
                if (as->requires_grad) as->grad.data[i] += self->grad.data[i];
                if (bs->requires_grad) bs->grad.data[i] += self->grad.data[i];
            }
        };
    }
    return node;
}

Var bce_with_logits_mean(Tape& tape, const Var& logits, const Tensor& target) {
    check(logits->value.shape == target.shape, "bce: shape mismatch");
    const size_t n = target.size();
    double loss = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double z = logits->value.data[i], t = target.data[i];
        loss += std::max(z, 0.0) - z * t + std::log1p(std::exp(-std::abs(z)));
    }
    loss /= static_cast<double>(n);
    Var ls = logits;
    auto tgt = std::make_shared<Tensor>(target);
    Var node = tape.record(Tensor({1}, {loss}), logits->requires_grad, nullptr);
    if (logits->requires_grad) {
        Var self = node;
        node->backward = [ls, self, tgt, n]() {
            const double g = self->grad.data[0] / static_cast<double>(n);
            for (size_t i = 0; i < n; ++i) {
                const double z = ls->value.data[i];
                const double s = 1.0 / (1.0 + std::exp(-z));
                ls->grad.data[i] += g * (s - tgt->data[i]);
            }
        };
    }
    return node;
}

Var mse_mean(Tape& tape, const Var& pred, const Tensor& target) {
    check(pred->value.shape == target.shape, "mse: shape mismatch");
    const size_t n = target.size();
    double loss = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double d = pred->value.data[i] - target.data[i];
        loss += d * d;
    }
    loss /= static_cast<double>(n);
    Var ps = pred;
    auto tgt = std::make_shared<Tensor>(target);
    Var node = tape.record(Tensor({1}, {loss}), pred->requires_grad, nullptr);
    if (pred->requires_grad) {
        Var self = node;
        node->backward = [ps, self, tgt, n]() {
            const double g = 2.0 * self->grad.data[0] / static_cast<double>(n);
            for (size_t i = 0; i < n; ++i)
                ps->grad.data[i] += g * (ps->value.data[i] - tgt->data[i]);
        };
    }
    return node;
}

Var dice_loss(Tape& tape, const Var& logits, const Tensor& target, double eps) {
    check(logits->value.shape == target.shape, "dice: shape mismatch");
    const size_t n = target.size();
    auto probs = std::make_shared<std::vector<double>>(n);
    double sum_pt = 0.0, sum_p = 0.0, sum_t = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double p = 1.0 / (1.0 + std::exp(-logits->value.data[i]));
        (*probs)[i] = p;
        sum_pt += p * target.data[i];
        sum_p += p;
        sum_t += target.data[i];
    }
    const double denom = sum_p + sum_t + eps;
    const double num = 2.0 * sum_pt + eps;
    const double loss = 1.0 - num / denom;

    Var ls = logits;
    auto tgt = std::make_shared<Tensor>(target);
    Var node = tape.record(Tensor({1}, {loss}), logits->requires_grad, nullptr);
    if (logits->requires_grad) {
        Var self = node;
        node->backward = [ls, self, tgt, probs, num, denom, n]() {
            const double g = self->grad.data[0];
            for (size_t i = 0; i < n; ++i) {
                const double p = (*probs)[i];
                // d(loss)/dp, then chain through the sigmoid
                const double dldp = -(2.0 * tgt->data[i] * denom - num) / (denom * denom);
                ls->grad.data[i] += g * dldp * p * (1.0 - p);
            }
        };
    }
    return node;
}

}  // namespace penseg::nn
