#include "lar/denoiser.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "lar/rng.hpp"

namespace lar::diff {

using Eigen::MatrixXd;
using RowMajorMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstRowMajorMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

namespace {

constexpr double kLeak = 0.1;

void lrelu_inplace(Tensor& t) {
    for (double& x : t.v)
        if (x < 0.0) x *= kLeak;
}

// col(r, p) with r = (ci*9 + ky*3 + kx), p = oy*wo + ox; pad 1, OOB = 0.
void im2col(const Tensor& in, int stride, int ho, int wo, MatrixXd& col) {
    col.resize(static_cast<long>(in.c) * 9, static_cast<long>(ho) * wo);
    for (int ci = 0; ci < in.c; ++ci) {
        const double* plane = in.plane(ci);
        for (int ky = 0; ky < 3; ++ky)
            for (int kx = 0; kx < 3; ++kx) {
                long r = static_cast<long>(ci) * 9 + ky * 3 + kx;
                for (int oy = 0; oy < ho; ++oy) {
                    int yy = oy * stride + ky - 1;
                    long p0 = static_cast<long>(oy) * wo;
                    if (yy < 0 || yy >= in.h) {
                        for (int ox = 0; ox < wo; ++ox) col(r, p0 + ox) = 0.0;
                        continue;
                    }
                    const double* row = plane + static_cast<size_t>(yy) * in.w;
                    for (int ox = 0; ox < wo; ++ox) {
                        int xx = ox * stride + kx - 1;
                        col(r, p0 + ox) = (xx < 0 || xx >= in.w) ? 0.0 : row[xx];
                    }
                }
            }
    }
}

void col2im_accumulate(const MatrixXd& dcol, int stride, int ho, int wo, Tensor& din) {
    for (int ci = 0; ci < din.c; ++ci) {
        double* plane = din.plane(ci);
        for (int ky = 0; ky < 3; ++ky)
            for (int kx = 0; kx < 3; ++kx) {
                long r = static_cast<long>(ci) * 9 + ky * 3 + kx;
                for (int oy = 0; oy < ho; ++oy) {
                    int yy = oy * stride + ky - 1;
                    if (yy < 0 || yy >= din.h) continue;
                    double* row = plane + static_cast<size_t>(yy) * din.w;
                    long p0 = static_cast<long>(oy) * wo;
                    for (int ox = 0; ox < wo; ++ox) {
                        int xx = ox * stride + kx - 1;
                        if (xx >= 0 && xx < din.w) row[xx] += dcol(r, p0 + ox);
                    }
                }
            }
    }
}

void conv_forward(const Tensor& in, const double* w, const double* b, int co, int stride,
                  Tensor& out, MatrixXd& col) {
    int ho = in.h / stride, wo = in.w / stride;
    im2col(in, stride, ho, wo, col);
    out = Tensor(co, ho, wo);
    ConstRowMajorMap W(w, co, static_cast<long>(in.c) * 9);
    RowMajorMap O(out.v.data(), co, static_cast<long>(ho) * wo);
    O.noalias() = W * col;
    if (b)
        for (int c = 0; c < co; ++c) O.row(c).array() += b[c];
}

// dW/db accumulate; din may be null when input grads are not needed.
void conv_backward(const Tensor& dout, const MatrixXd& col, const double* w, double* dw, double* db,
                   int ci, int stride, Tensor* din) {
    int co = dout.c;
    long n = static_cast<long>(dout.h) * dout.w;
    ConstRowMajorMap dY(dout.v.data(), co, n);
    RowMajorMap dW(dw, co, static_cast<long>(ci) * 9);
    dW.noalias() += dY * col.transpose();
    if (db)
        for (int c = 0; c < co; ++c) db[c] += dY.row(c).sum();
    if (din) {
        ConstRowMajorMap W(w, co, static_cast<long>(ci) * 9);
        MatrixXd dcol = W.transpose() * dY;
        col2im_accumulate(dcol, stride, dout.h, dout.w, *din);
    }
}

Tensor upsample2(const Tensor& in) {
    Tensor out(in.c, in.h * 2, in.w * 2);
    for (int c = 0; c < in.c; ++c)
        for (int y = 0; y < out.h; ++y) {
            const double* src = in.plane(c) + static_cast<size_t>(y / 2) * in.w;
            double* dst = out.plane(c) + static_cast<size_t>(y) * out.w;
            for (int x = 0; x < out.w; ++x) dst[x] = src[x / 2];
        }
    return out;
}

Tensor downsample2_sum(const Tensor& dout) {
    Tensor din(dout.c, dout.h / 2, dout.w / 2);
    for (int c = 0; c < dout.c; ++c)
        for (int y = 0; y < dout.h; ++y) {
            const double* src = dout.plane(c) + static_cast<size_t>(y) * dout.w;
            double* dst = din.plane(c) + static_cast<size_t>(y / 2) * din.w;
            for (int x = 0; x < dout.w; ++x) dst[x / 2] += src[x];
        }
    return din;
}

std::vector<double> time_features(int t, int num_levels, int count) {
    std::vector<double> f(count);
    double tau = num_levels > 0 ? static_cast<double>(t) / num_levels : 0.0;
    for (int i = 0; i < count / 2; ++i) {
        double omega = M_PI * std::pow(2.0, i);
        f[2 * i] = std::sin(omega * tau);
        f[2 * i + 1] = std::cos(omega * tau);
    }
    return f;
}

}  // namespace

struct DenoiserModel::Layout {
    int cl, cin, c1, c2, c3, d, f;
    size_t temb_w, temb_b;
    size_t conv1_w, conv1_b, down1_w, down1_b, down2_w, down2_b;
    size_t wq, wk, wv, wo;
    size_t up1_w, up1_b, up2_w, up2_b, out_w, out_b;
    size_t total;
};

struct DenoiserTrace {
    int h = 0, w = 0, h2 = 0, w2 = 0, h4 = 0, w4 = 0, n = 0;
    Tensor x0, pre1, a1, pre2, a2, pre3, a3;
    MatrixXd X, Q, K, V, P, attnO;
    Tensor a4, ups1, preu1, u1, ups2, preu2, u2;
    MatrixXd col1, cold1, cold2, colu1, colu2, colout;
    std::vector<double> tfeat;
};

std::unique_ptr<DenoiserTrace> make_trace() { return std::make_unique<DenoiserTrace>(); }
void free_trace(DenoiserTrace* t) { delete t; }
TracePtr new_trace() { return TracePtr(new DenoiserTrace()); }

void DenoiserModel::build_layout() {
    lay_ = std::make_unique<Layout>();
    Layout& L = *lay_;
    L.cl = cfg_.latent_channels;
    L.cin = 2 * L.cl;
    L.c1 = cfg_.base_channels;
    L.c2 = 2 * L.c1;
    L.c3 = 4 * L.c1;
    L.d = cfg_.attn_dim;
    L.f = cfg_.time_features;
    size_t off = 0;
    table_.clear();
    auto add = [&](const char* name, std::vector<int> shape) {
        size_t count = 1;
        for (int s : shape) count *= static_cast<size_t>(s);
        table_.push_back({name, shape, off, count});
        size_t at = off;
        off += count;
        return at;
    };
    L.temb_w = add("temb.w", {L.c1, L.f});
    L.temb_b = add("temb.b", {L.c1});
    L.conv1_w = add("conv1.w", {L.c1, L.cin, 3, 3});
    L.conv1_b = add("conv1.b", {L.c1});
    L.down1_w = add("down1.w", {L.c2, L.c1, 3, 3});
    L.down1_b = add("down1.b", {L.c2});
    L.down2_w = add("down2.w", {L.c3, L.c2, 3, 3});
    L.down2_b = add("down2.b", {L.c3});
    L.wq = add("attn.wq", {L.c3, L.d});
    L.wk = add("attn.wk", {L.c3, L.d});
    L.wv = add("attn.wv", {L.c3, L.d});
    L.wo = add("attn.wo", {L.d, L.c3});
    L.up1_w = add("up1.w", {L.c2, L.c3, 3, 3});
    L.up1_b = add("up1.b", {L.c2});
    L.up2_w = add("up2.w", {L.c1, L.c2, 3, 3});
    L.up2_b = add("up2.b", {L.c1});
    L.out_w = add("out.w", {L.cl, L.c1, 3, 3});
    L.out_b = add("out.b", {L.cl});
    L.total = off;
    params_.resize(off, 0.0);
}

DenoiserModel::DenoiserModel(const DenoiserConfig& cfg, uint64_t init_seed) : cfg_(cfg) {
    if (cfg.time_features % 2 != 0) throw std::invalid_argument("time_features must be even");
    build_layout();
    Rng rng(Rng::splitmix(init_seed ^ 0xD0E11075ULL));
    const Layout& L = *lay_;
    auto fill_normal = [&](size_t off, size_t count, double std, uint64_t stream) {
        Rng r = rng.fork(stream, "init");
        for (size_t i = 0; i < count; ++i) params_[off + i] = r.normal() * std;
    };
    fill_normal(L.temb_w, static_cast<size_t>(L.c1) * L.f, 0.1, 1);
    fill_normal(L.conv1_w, static_cast<size_t>(L.c1) * L.cin * 9, std::sqrt(2.0 / (L.cin * 9)), 2);
    fill_normal(L.down1_w, static_cast<size_t>(L.c2) * L.c1 * 9, std::sqrt(2.0 / (L.c1 * 9)), 3);
    fill_normal(L.down2_w, static_cast<size_t>(L.c3) * L.c2 * 9, std::sqrt(2.0 / (L.c2 * 9)), 4);
    fill_normal(L.wq, static_cast<size_t>(L.c3) * L.d, 1.0 / std::sqrt(L.c3), 5);
    fill_normal(L.wk, static_cast<size_t>(L.c3) * L.d, 1.0 / std::sqrt(L.c3), 6);
    fill_normal(L.wv, static_cast<size_t>(L.c3) * L.d, 1.0 / std::sqrt(L.c3), 7);
    fill_normal(L.wo, static_cast<size_t>(L.d) * L.c3, 0.02, 8);
    fill_normal(L.up1_w, static_cast<size_t>(L.c2) * L.c3 * 9, std::sqrt(2.0 / (L.c3 * 9)), 9);
    fill_normal(L.up2_w, static_cast<size_t>(L.c1) * L.c2 * 9, std::sqrt(2.0 / (L.c2 * 9)), 10);
    fill_normal(L.out_w, static_cast<size_t>(L.cl) * L.c1 * 9, std::sqrt(2.0 / (L.c1 * 9)), 11);
}

DenoiserModel::~DenoiserModel() = default;
DenoiserModel::DenoiserModel(const DenoiserModel& o)
    : cfg_(o.cfg_), params_(o.params_), table_(o.table_) {
    build_layout();
    params_ = o.params_;
}
DenoiserModel& DenoiserModel::operator=(const DenoiserModel& o) {
    if (this != &o) {
        cfg_ = o.cfg_;
        build_layout();
        params_ = o.params_;
    }
    return *this;
}
DenoiserModel::DenoiserModel(DenoiserModel&&) noexcept = default;
DenoiserModel& DenoiserModel::operator=(DenoiserModel&&) noexcept = default;

Tensor DenoiserModel::forward_train(const Tensor& z_t, const Tensor& cond, int t, int num_levels,
                                    DenoiserTrace& tr) const {
    const Layout& L = *lay_;
    if (z_t.c != L.cl || !z_t.same_shape(cond))
        throw std::invalid_argument("denoiser: latent/conditioning shape mismatch");
    if (z_t.h % 4 != 0 || z_t.w % 4 != 0)
        throw std::invalid_argument("denoiser: latent dims must be multiples of 4");
    const double* p = params_.data();
    tr.h = z_t.h;
    tr.w = z_t.w;
    tr.h2 = tr.h / 2;
    tr.w2 = tr.w / 2;
    tr.h4 = tr.h / 4;
    tr.w4 = tr.w / 4;
    tr.n = tr.h4 * tr.w4;

    tr.x0 = Tensor(L.cin, tr.h, tr.w);
    std::copy(z_t.v.begin(), z_t.v.end(), tr.x0.v.begin());
    std::copy(cond.v.begin(), cond.v.end(), tr.x0.v.begin() + z_t.v.size());

    conv_forward(tr.x0, p + L.conv1_w, p + L.conv1_b, L.c1, 1, tr.pre1, tr.col1);
    tr.tfeat = time_features(t, num_levels, L.f);
    for (int c = 0; c < L.c1; ++c) {
        double bias = 0.0;
        for (int i = 0; i < L.f; ++i) bias += p[L.temb_w + static_cast<size_t>(c) * L.f + i] * tr.tfeat[i];
        bias += p[L.temb_b + c];
        double* plane = tr.pre1.plane(c);
        for (int i = 0; i < tr.h * tr.w; ++i) plane[i] += bias;
    }
    tr.a1 = tr.pre1;
    lrelu_inplace(tr.a1);

    conv_forward(tr.a1, p + L.down1_w, p + L.down1_b, L.c2, 2, tr.pre2, tr.cold1);
    tr.a2 = tr.pre2;
    lrelu_inplace(tr.a2);

    conv_forward(tr.a2, p + L.down2_w, p + L.down2_b, L.c3, 2, tr.pre3, tr.cold2);
    tr.a3 = tr.pre3;
    lrelu_inplace(tr.a3);

    ConstRowMajorMap A3(tr.a3.v.data(), L.c3, tr.n);
    tr.X = A3.transpose();
    ConstRowMajorMap Wq(p + L.wq, L.c3, L.d), Wk(p + L.wk, L.c3, L.d), Wv(p + L.wv, L.c3, L.d);
    ConstRowMajorMap Wo(p + L.wo, L.d, L.c3);
    tr.Q.noalias() = tr.X * Wq;
    tr.K.noalias() = tr.X * Wk;
    tr.V.noalias() = tr.X * Wv;
    double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(L.d));
    MatrixXd S = tr.Q * tr.K.transpose() * inv_sqrt_d;
    tr.P.resize(tr.n, tr.n);
    for (int i = 0; i < tr.n; ++i) {
        double mx = S.row(i).maxCoeff();
        double denom = 0.0;
        for (int j = 0; j < tr.n; ++j) {
            double e = std::exp(S(i, j) - mx);
            tr.P(i, j) = e;
            denom += e;
        }
        tr.P.row(i) /= denom;
    }
    tr.attnO.noalias() = tr.P * tr.V;
    MatrixXd Ytok = tr.attnO * Wo;  // n × c3
    tr.a4 = tr.a3;
    RowMajorMap A4(tr.a4.v.data(), L.c3, tr.n);
    A4.noalias() += Ytok.transpose();

    tr.ups1 = upsample2(tr.a4);
    conv_forward(tr.ups1, p + L.up1_w, p + L.up1_b, L.c2, 1, tr.preu1, tr.colu1);
    for (size_t i = 0; i < tr.preu1.v.size(); ++i) tr.preu1.v[i] += tr.a2.v[i];
    tr.u1 = tr.preu1;
    lrelu_inplace(tr.u1);

    tr.ups2 = upsample2(tr.u1);
    conv_forward(tr.ups2, p + L.up2_w, p + L.up2_b, L.c1, 1, tr.preu2, tr.colu2);
    for (size_t i = 0; i < tr.preu2.v.size(); ++i) tr.preu2.v[i] += tr.a1.v[i];
    tr.u2 = tr.preu2;
    lrelu_inplace(tr.u2);

    Tensor eps;
    conv_forward(tr.u2, p + L.out_w, p + L.out_b, L.cl, 1, eps, tr.colout);
    return eps;
}

Tensor DenoiserModel::forward(const Tensor& z_t, const Tensor& cond, int t, int num_levels,
                              const std::vector<AttnBank>* read_banks,
                              AttnBank* write_bank) const {
    // Same pass as forward_train, with the attention generalized to banks.
    const Layout& L = *lay_;
    if (z_t.c != L.cl || !z_t.same_shape(cond))
        throw std::invalid_argument("denoiser: latent/conditioning shape mismatch");
    if (z_t.h % 4 != 0 || z_t.w % 4 != 0)
        throw std::invalid_argument("denoiser: latent dims must be multiples of 4");
    const double* p = params_.data();
    int h = z_t.h, w = z_t.w, n = (h / 4) * (w / 4);

    Tensor x0(L.cin, h, w);
    std::copy(z_t.v.begin(), z_t.v.end(), x0.v.begin());
    std::copy(cond.v.begin(), cond.v.end(), x0.v.begin() + z_t.v.size());

    MatrixXd col;
    Tensor pre1;
    conv_forward(x0, p + L.conv1_w, p + L.conv1_b, L.c1, 1, pre1, col);
    std::vector<double> tfeat = time_features(t, num_levels, L.f);
    for (int c = 0; c < L.c1; ++c) {
        double bias = 0.0;
        for (int i = 0; i < L.f; ++i) bias += p[L.temb_w + static_cast<size_t>(c) * L.f + i] * tfeat[i];
        bias += p[L.temb_b + c];
        double* plane = pre1.plane(c);
        for (int i = 0; i < h * w; ++i) plane[i] += bias;
    }
    lrelu_inplace(pre1);

    Tensor pre2;
    conv_forward(pre1, p + L.down1_w, p + L.down1_b, L.c2, 2, pre2, col);
    lrelu_inplace(pre2);

    Tensor pre3;
    conv_forward(pre2, p + L.down2_w, p + L.down2_b, L.c3, 2, pre3, col);
    lrelu_inplace(pre3);

    ConstRowMajorMap A3(pre3.v.data(), L.c3, n);
    MatrixXd X = A3.transpose();
    ConstRowMajorMap Wq(p + L.wq, L.c3, L.d), Wk(p + L.wk, L.c3, L.d), Wv(p + L.wv, L.c3, L.d);
    ConstRowMajorMap Wo(p + L.wo, L.d, L.c3);
    AttentionBatch batch;
    batch.Q.noalias() = X * Wq;
    batch.keys.push_back(X * Wk);
    batch.values.push_back(X * Wv);
    if (write_bank) {
        write_bank->K = batch.keys[0];
        write_bank->V = batch.values[0];
    }
    if (read_banks)
        for (const AttnBank& b : *read_banks) {
            if (b.K.cols() != L.d || b.V.cols() != L.d || b.K.rows() != b.V.rows())
                throw std::invalid_argument("denoiser: attention bank shape mismatch");
            batch.keys.push_back(b.K);
            batch.values.push_back(b.V);
        }
    MatrixXd attnO = cross_frame_attention(batch);
    MatrixXd Ytok = attnO * Wo;
    RowMajorMap A4(pre3.v.data(), L.c3, n);
    A4.noalias() += Ytok.transpose();

    Tensor preu1;
    Tensor ups1 = upsample2(pre3);
    conv_forward(ups1, p + L.up1_w, p + L.up1_b, L.c2, 1, preu1, col);
    for (size_t i = 0; i < preu1.v.size(); ++i) preu1.v[i] += pre2.v[i];
    lrelu_inplace(preu1);

    Tensor preu2;
    Tensor ups2 = upsample2(preu1);
    conv_forward(ups2, p + L.up2_w, p + L.up2_b, L.c1, 1, preu2, col);
    for (size_t i = 0; i < preu2.v.size(); ++i) preu2.v[i] += pre1.v[i];
    lrelu_inplace(preu2);

    Tensor eps;
    conv_forward(preu2, p + L.out_w, p + L.out_b, L.cl, 1, eps, col);
    return eps;
}

void DenoiserModel::backward(const Tensor& d_eps, const DenoiserTrace& tr,
                             DenoiserGrads& grads) const {
    const Layout& L = *lay_;
    if (grads.g.size() != params_.size()) grads.g.assign(params_.size(), 0.0);
    const double* p = params_.data();
    double* g = grads.g.data();

    auto lrelu_back = [](const Tensor& pre, Tensor& d) {
        for (size_t i = 0; i < d.v.size(); ++i)
            if (pre.v[i] < 0.0) d.v[i] *= kLeak;
    };

    // out conv
    Tensor d_u2(L.c1, tr.h, tr.w);
    conv_backward(d_eps, tr.colout, p + L.out_w, g + L.out_w, g + L.out_b, L.c1, 1, &d_u2);
    lrelu_back(tr.preu2, d_u2);

    // skip into a1 and conv up2
    Tensor d_a1 = d_u2;  // residual add
    Tensor d_ups2(L.c2, tr.h, tr.w);
    conv_backward(d_u2, tr.colu2, p + L.up2_w, g + L.up2_w, g + L.up2_b, L.c2, 1, &d_ups2);
    Tensor d_u1 = downsample2_sum(d_ups2);
    lrelu_back(tr.preu1, d_u1);

    Tensor d_a2 = d_u1;
    Tensor d_ups1(L.c3, tr.h2, tr.w2);
    conv_backward(d_u1, tr.colu1, p + L.up1_w, g + L.up1_w, g + L.up1_b, L.c3, 1, &d_ups1);
    Tensor d_a4 = downsample2_sum(d_ups1);

    // attention block
    ConstRowMajorMap dA4(d_a4.v.data(), L.c3, tr.n);
    MatrixXd dYtok = dA4.transpose();  // n × c3
    ConstRowMajorMap Wq(p + L.wq, L.c3, L.d), Wk(p + L.wk, L.c3, L.d), Wv(p + L.wv, L.c3, L.d);
    ConstRowMajorMap Wo(p + L.wo, L.d, L.c3);
    RowMajorMap dWq(g + L.wq, L.c3, L.d), dWk(g + L.wk, L.c3, L.d), dWv(g + L.wv, L.c3, L.d);
    RowMajorMap dWo(g + L.wo, L.d, L.c3);

    MatrixXd d_attnO = dYtok * Wo.transpose();
    dWo.noalias() += tr.attnO.transpose() * dYtok;
    MatrixXd dP = d_attnO * tr.V.transpose();
    MatrixXd dV = tr.P.transpose() * d_attnO;
    MatrixXd dS(tr.n, tr.n);
    for (int i = 0; i < tr.n; ++i) {
        double dot = dP.row(i).dot(tr.P.row(i));
        dS.row(i) = tr.P.row(i).cwiseProduct((dP.row(i).array() - dot).matrix());
    }
    double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(L.d));
    MatrixXd dQ = dS * tr.K * inv_sqrt_d;
    MatrixXd dK = dS.transpose() * tr.Q * inv_sqrt_d;
    MatrixXd dX = dQ * Wq.transpose() + dK * Wk.transpose() + dV * Wv.transpose();
    dWq.noalias() += tr.X.transpose() * dQ;
    dWk.noalias() += tr.X.transpose() * dK;
    dWv.noalias() += tr.X.transpose() * dV;

    Tensor d_a3(L.c3, tr.h4, tr.w4);
    RowMajorMap dA3(d_a3.v.data(), L.c3, tr.n);
    dA3 = dA4;  // residual path
    dA3.noalias() += dX.transpose();
    lrelu_back(tr.pre3, d_a3);

    Tensor d_a2_conv(L.c2, tr.h2, tr.w2);
    conv_backward(d_a3, tr.cold2, p + L.down2_w, g + L.down2_w, g + L.down2_b, L.c2, 2, &d_a2_conv);
    for (size_t i = 0; i < d_a2.v.size(); ++i) d_a2.v[i] += d_a2_conv.v[i];
    lrelu_back(tr.pre2, d_a2);

    Tensor d_a1_conv(L.c1, tr.h, tr.w);
    conv_backward(d_a2, tr.cold1, p + L.down1_w, g + L.down1_w, g + L.down1_b, L.c1, 2, &d_a1_conv);
    for (size_t i = 0; i < d_a1.v.size(); ++i) d_a1.v[i] += d_a1_conv.v[i];
    lrelu_back(tr.pre1, d_a1);

    // timestep bias
    for (int c = 0; c < L.c1; ++c) {
        const double* plane = d_a1.plane(c);
        double s = 0.0;
        for (int i = 0; i < tr.h * tr.w; ++i) s += plane[i];
        for (int i = 0; i < L.f; ++i) g[L.temb_w + static_cast<size_t>(c) * L.f + i] += s * tr.tfeat[i];
        g[L.temb_b + c] += s;
    }

    conv_backward(d_a1, tr.col1, p + L.conv1_w, g + L.conv1_w, g + L.conv1_b, L.cin, 1, nullptr);
}

LatentFrame denoise_step(const DenoiserModel& model, const LatentFrame& z_t, int t,
                         const Tensor& cond, const NoiseSchedule& schedule) {
    if (t < 1) throw std::invalid_argument("denoise_step: t must be >= 1");
    Tensor eps_hat = model.forward(z_t.grid, cond, t, schedule.num_steps);
    LatentFrame out;
    out.grid = ddim_step(z_t.grid, eps_hat, t, t - 1, schedule);
    out.frame_index = z_t.frame_index;
    out.timestep = t - 1;
    return out;
}

void save_checkpoint(const std::string& path, const DenoiserModel& model,
                     const NoiseSchedule& schedule, const std::string& config_hash,
                     uint64_t seed, const std::string& stage) {
    nlohmann::json header;
    header["format"] = "larckpt";
    header["version"] = 1;
    header["stage"] = stage;
    header["config_hash"] = config_hash;
    header["seed"] = seed;
    header["model"] = {{"latent_channels", model.config().latent_channels},
                       {"base_channels", model.config().base_channels},
                       {"attn_dim", model.config().attn_dim},
                       {"time_features", model.config().time_features}};
    header["schedule"] = {{"betas", schedule.betas}};
    nlohmann::json tensors = nlohmann::json::array();
    for (const auto& e : model.param_table()) {
        tensors.push_back({{"name", e.name},
                           {"shape", e.shape},
                           {"dtype", "f64"},
                           {"offset_bytes", e.offset * sizeof(double)},
                           {"count", e.count}});
    }
    header["tensors"] = tensors;
    std::string hs = header.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    out.write("LARCKPT1", 8);
    uint64_t len = hs.size();
    out.write(reinterpret_cast<const char*>(&len), 8);  // little-endian host assumed
    out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    out.write(reinterpret_cast<const char*>(model.params().data()),
              static_cast<std::streamsize>(model.params().size() * sizeof(double)));
    if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, "LARCKPT1", 8) != 0)
        throw std::runtime_error("not a checkpoint file: " + path);
    uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), 8);
    std::string hs(len, '\0');
    in.read(hs.data(), static_cast<std::streamsize>(len));
    nlohmann::json header = nlohmann::json::parse(hs);

    DenoiserConfig cfg;
    cfg.latent_channels = header["model"]["latent_channels"].get<int>();
    cfg.base_channels = header["model"]["base_channels"].get<int>();
    cfg.attn_dim = header["model"]["attn_dim"].get<int>();
    cfg.time_features = header["model"]["time_features"].get<int>();

    LoadedCheckpoint lc{DenoiserModel(cfg, 0), NoiseSchedule{}, "", 0, ""};
    lc.schedule.betas = header["schedule"]["betas"].get<std::vector<double>>();
    finalize_schedule(lc.schedule);
    lc.config_hash = header.value("config_hash", "");
    lc.seed = header.value("seed", 0ull);
    lc.stage = header.value("stage", "");
    in.read(reinterpret_cast<char*>(lc.model.params().data()),
            static_cast<std::streamsize>(lc.model.params().size() * sizeof(double)));
    if (!in) throw std::runtime_error("checkpoint payload truncated: " + path);
    return lc;
}

}  // namespace lar::diff
