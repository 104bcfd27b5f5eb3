#include "lar/attention.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace lar::diff {
namespace {

void validate(const AttentionBatch& b) {
    if (b.keys.empty() || b.keys.size() != b.values.size())
        throw std::invalid_argument("attention: need matching, non-empty key/value lists");
    long d = b.Q.cols();
    long cv = b.values[0].cols();
    for (size_t i = 0; i < b.keys.size(); ++i) {
        if (b.keys[i].cols() != d)
            throw std::invalid_argument("attention: key width must match query width");
        if (b.keys[i].rows() != b.values[i].rows())
            throw std::invalid_argument("attention: key/value row count mismatch");
        if (b.values[i].cols() != cv)
            throw std::invalid_argument("attention: value widths must agree");
    }
}

struct RowPartial {
    double denom = 0.0;
    Eigen::VectorXd num;        // c_v
    std::vector<double> expw;   // per token, original order
};

// Per-row partials for one reference; exp is taken against the global max.
RowPartial row_partial(const Eigen::RowVectorXd& q, const Eigen::MatrixXd& K,
                       const Eigen::MatrixXd& V, double inv_sqrt_d, double row_max) {
    RowPartial p;
    p.num = Eigen::VectorXd::Zero(V.cols());
    p.expw.resize(static_cast<size_t>(K.rows()));
    for (long j = 0; j < K.rows(); ++j) {
        double e = std::exp(q.dot(K.row(j)) * inv_sqrt_d - row_max);
        p.expw[static_cast<size_t>(j)] = e;
        p.denom += e;
        p.num += e * V.row(j).transpose();
    }
    return p;
}

bool partial_less(const RowPartial& a, const RowPartial& b) {
    if (a.denom != b.denom) return a.denom < b.denom;
    for (long i = 0; i < a.num.size(); ++i)
        if (a.num[i] != b.num[i]) return a.num[i] < b.num[i];
    return false;
}

}  // namespace

Eigen::MatrixXd cross_frame_attention(const AttentionBatch& batch) {
    validate(batch);
    long n = batch.Q.rows();
    long cv = batch.values[0].cols();
    double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(batch.Q.cols()));
    Eigen::MatrixXd out(n, cv);

    std::vector<RowPartial> parts(batch.keys.size());
    std::vector<size_t> order(batch.keys.size());
    for (long i = 0; i < n; ++i) {
        Eigen::RowVectorXd q = batch.Q.row(i);
        double row_max = -std::numeric_limits<double>::infinity();
        for (const auto& K : batch.keys)
            for (long j = 0; j < K.rows(); ++j)
                row_max = std::max(row_max, q.dot(K.row(j)) * inv_sqrt_d);
        for (size_t r = 0; r < batch.keys.size(); ++r)
            parts[r] = row_partial(q, batch.keys[r], batch.values[r], inv_sqrt_d, row_max);

        std::iota(order.begin(), order.end(), size_t{0});
        std::sort(order.begin(), order.end(),
                  [&](size_t a, size_t b) { return partial_less(parts[a], parts[b]); });
        double denom = 0.0;
        Eigen::VectorXd num = Eigen::VectorXd::Zero(cv);
        for (size_t r : order) {
            denom += parts[r].denom;
            num += parts[r].num;
        }
        out.row(i) = (num / denom).transpose();
    }
    return out;
}

Eigen::MatrixXd cross_frame_attention_weights(const AttentionBatch& batch) {
    validate(batch);
    long n = batch.Q.rows();
    long total = 0;
    for (const auto& K : batch.keys) total += K.rows();
    double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(batch.Q.cols()));
    Eigen::MatrixXd W(n, total);

    std::vector<RowPartial> parts(batch.keys.size());
    std::vector<size_t> order(batch.keys.size());
    for (long i = 0; i < n; ++i) {
        Eigen::RowVectorXd q = batch.Q.row(i);
        double row_max = -std::numeric_limits<double>::infinity();
        for (const auto& K : batch.keys)
            for (long j = 0; j < K.rows(); ++j)
                row_max = std::max(row_max, q.dot(K.row(j)) * inv_sqrt_d);
        for (size_t r = 0; r < batch.keys.size(); ++r)
            parts[r] = row_partial(q, batch.keys[r], batch.values[r], inv_sqrt_d, row_max);
        std::iota(order.begin(), order.end(), size_t{0});
        std::sort(order.begin(), order.end(),
                  [&](size_t a, size_t b) { return partial_less(parts[a], parts[b]); });
        double denom = 0.0;
        for (size_t r : order) denom += parts[r].denom;
        long col = 0;
        for (size_t r = 0; r < batch.keys.size(); ++r)
            for (double e : parts[r].expw) W(i, col++) = e / denom;
    }
    return W;
}

}  // namespace lar::diff
