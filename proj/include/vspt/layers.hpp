#pragma once
#include <utility>
#include <vector>

#include "vspt/tensor.hpp"

namespace vspt {

// Ring length for a padded H x W feature map: padded area minus interior.
int pad_region_size(int H, int W, int L, int R, int U, int B);

// Border cell coordinates (y, x) of the padded map, in the fixed scatter
// order used for prompt rings: top rows, bottom rows, then left and right
// columns of the middle band, each region row-major.
std::vector<std::pair<int, int>> border_positions(int H, int W, int L, int R, int U, int B);

// Per-layer padding: constant zeros or a learnable ring of shape [S x C].
struct PaddingSpec {
    enum class Mode { Zero, Prompt };
    int left = 0, right = 0, top = 0, bottom = 0;
    Mode mode = Mode::Zero;
    Tensor ring; // [S x C], only in Prompt mode

    bool any() const { return left || right || top || bottom; }
};

// [C,H,W] -> [C,H+U+B,W+L+R]; border from zeros or the ring, gradient flows
// back into the ring.
Tensor apply_padding(const Tensor& feature, const PaddingSpec& spec);
// same, applied to every item of a [B,C,H,W] batch (ring shared across B)
Tensor apply_padding_batch(const Tensor& batch, const PaddingSpec& spec);
// same, applied to every frame of [B,C,T,H,W]
Tensor apply_padding_frames(const Tensor& batch, const PaddingSpec& spec);
// zero padding along the T axis of [B,C,T,H,W]
Tensor pad_temporal(const Tensor& batch, int pad);

struct ConvLayer {
    Tensor kernel; // 2-D: [Cout,Cin,kh,kw]; 3-D: [Cout,Cin,kt,kh,kw]
    Tensor bias;   // [Cout]
    int stride_h = 1, stride_w = 1;
    PaddingSpec padding;
    int temporal_pad = 0; // 3-D only; always zero-filled
    int layer_index = 0;

    bool is3d() const { return kernel.rank() == 5; }
    int out_channels() const { return kernel.dim(0); }
    int in_channels() const { return kernel.dim(1); }
};

Tensor conv2d_forward(const Tensor& input, const ConvLayer& layer); // [B,C,H,W]
Tensor conv3d_forward(const Tensor& input, const ConvLayer& layer); // [B,C,T,H,W]

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b); // [N,Din]x[Din,Dout]+[Dout]

// per-row normalization to zero mean / unit variance, then affine
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);

// fixed sinusoidal table [T,D]: first D/2 columns sin, last D/2 cos
Tensor positional_encoding(int T, int D);

struct TransformerBlock {
    Tensor wq, wk, wv, wo; // [D,D]
    Tensor bq, bk, bv, bo; // [D]
    Tensor ff1_w, ff1_b;   // [D,Dff], [Dff]
    Tensor ff2_w, ff2_b;   // [Dff,D], [D]
    Tensor ln1_g, ln1_b, ln2_g, ln2_b; // [D]
    int heads = 1;
};

Tensor multi_head_attention(const Tensor& x, const TransformerBlock& block);
// pre-norm residual block: x + MHA(LN(x)), then + FFN(LN(.)); no causal mask
Tensor attention_block(const Tensor& x, const TransformerBlock& block);
// per-head softmax(QK^T/sqrt(dh)) matrices, for inspection in tests
std::vector<Tensor> attention_matrices(const Tensor& x, const TransformerBlock& block);

} // namespace vspt
