#pragma once

#include <Eigen/Dense>
#include <vector>

namespace lar::diff {

// One query block attending to keys/values gathered from k+1 frames; index 0
// is conventionally the query frame itself, so k=0 reduces to self-attention.
struct AttentionBatch {
    Eigen::MatrixXd Q;                   // n × d
    std::vector<Eigen::MatrixXd> keys;   // each m_i × d
    std::vector<Eigen::MatrixXd> values; // each m_i × c_v
};

// softmax(Q · concat(K_i)^T / sqrt(d)) · concat(V_i).
//
// The per-reference partial sums are reduced in a value-sorted order, so
// permuting the (K_i, V_i) pairs reproduces bit-identical output.
Eigen::MatrixXd cross_frame_attention(const AttentionBatch& batch);

// Row-stochastic attention weights, columns in the given reference order
// (n × sum m_i). Shares the reduction with cross_frame_attention.
Eigen::MatrixXd cross_frame_attention_weights(const AttentionBatch& batch);

}  // namespace lar::diff
