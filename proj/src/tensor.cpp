#include "vspt/tensor.hpp"

#include <cmath>
#include <cstring>
#include <sstream>
#include <stdexcept>

namespace vspt {

int64_t shape_numel(const Shape& s) {
    int64_t n = 1;
    for (int d : s) n *= d;
    return n;
}

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << '[';
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) os << ',';
        os << s[i];
    }
    os << ']';
    return os.str();
}

namespace {

void check_shape(const Shape& s) {
    for (int d : s) {
        if (d <= 0) throw std::invalid_argument("tensor dimensions must be positive, got " + shape_str(s));
    }
}

std::vector<double>& ensure_grad(const std::shared_ptr<TensorNode>& n) {
    if (n->grad.empty()) n->grad.assign(n->value.size(), 0.0);
    return n->grad;
}

} // namespace

Tensor::Tensor(Shape shape, double fill, bool requires_grad) {
    check_shape(shape);
    node_ = std::make_shared<TensorNode>();
    node_->value.assign(size_t(shape_numel(shape)), fill);
    node_->shape = std::move(shape);
    node_->requires_grad = requires_grad;
}

Tensor::Tensor(Shape shape, std::vector<double> values, bool requires_grad) {
    check_shape(shape);
    if (int64_t(values.size()) != shape_numel(shape)) {
        throw std::invalid_argument("tensor data size " + std::to_string(values.size()) +
                                    " does not match shape " + shape_str(shape));
    }
    node_ = std::make_shared<TensorNode>();
    node_->shape = std::move(shape);
    node_->value = std::move(values);
    node_->requires_grad = requires_grad;
}

Tensor Tensor::scalar(double v, bool requires_grad) {
    return Tensor(Shape{1}, std::vector<double>{v}, requires_grad);
}

double* Tensor::grad() {
    ensure_grad(node_);
    return node_->grad.data();
}

void Tensor::zero_grad() { node_->grad.clear(); }

void Tensor::set_requires_grad(bool rg) { node_->requires_grad = rg; }

double Tensor::item() const {
    if (numel() != 1) throw std::invalid_argument("item() on non-scalar tensor " + shape_str(shape()));
    return node_->value[0];
}

double Tensor::at(const std::vector<int>& idx) const {
    if (int(idx.size()) != rank()) throw std::invalid_argument("index rank mismatch");
    int64_t flat = 0;
    for (size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] < 0 || idx[i] >= node_->shape[i]) throw std::out_of_range("tensor index out of range");
        flat = flat * node_->shape[i] + idx[i];
    }
    return node_->value[size_t(flat)];
}

Tensor Tensor::detached_copy() const {
    Tensor t(node_->shape, node_->value, false);
    return t;
}

// ---------------------------------------------------------------------------
// Tape

namespace {
thread_local Tape* g_active_tape = nullptr;
}

Tape::Tape() {
    previous_ = g_active_tape;
    g_active_tape = this;
}

Tape::~Tape() { g_active_tape = previous_; }

Tape* Tape::active() { return g_active_tape; }

bool grad_enabled(const Tensor& t) { return t.defined() && t.requires_grad(); }

void Tape::record(const std::vector<Tensor>& inputs, Tensor& output,
                  std::function<void()> backward_rule) {
    Record r;
    r.input_ids.reserve(inputs.size());
    for (const auto& in : inputs) r.input_ids.push_back(in.node_id());
    r.output = output.node();
    r.output_id = int(records_.size());
    r.backward_rule = std::move(backward_rule);
    output.node()->node_id = r.output_id;
    output.node()->requires_grad = true;
    records_.push_back(std::move(r));
}

void Tape::backward(const Tensor& loss) {
    if (loss.numel() != 1) {
        throw std::invalid_argument("backward: loss must be scalar, got " + shape_str(loss.shape()));
    }
    int id = loss.node_id();
    if (id < 0 || size_t(id) >= records_.size() || records_[size_t(id)].output != loss.node()) {
        throw std::invalid_argument("backward: loss is not recorded on the active tape");
    }
    ensure_grad(loss.node())[0] += 1.0;
    rules_run_ = 0;
    for (size_t i = records_.size(); i-- > 0;) {
        records_[i].backward_rule();
        ++rules_run_;
    }
}

// ---------------------------------------------------------------------------
// op helpers

namespace {

// leading-dimension broadcast: returns the number of elements of the larger
// shape per copy of the smaller, or throws if incompatible
int64_t broadcast_repeat(const char* op, const Shape& big, const Shape& small) {
    if (small.size() > big.size()) {
        throw std::invalid_argument(std::string(op) + ": shapes " + shape_str(big) + " and " +
                                    shape_str(small) + " are not broadcast-compatible");
    }
    size_t off = big.size() - small.size();
    for (size_t i = 0; i < small.size(); ++i) {
        if (big[off + i] != small[i]) {
            throw std::invalid_argument(std::string(op) + ": shapes " + shape_str(big) + " and " +
                                        shape_str(small) + " are not broadcast-compatible");
        }
    }
    int64_t rep = 1;
    for (size_t i = 0; i < off; ++i) rep *= big[i];
    return rep;
}

template <class Fwd, class BwdBig, class BwdSmall>
Tensor binary_broadcast_op(const char* name, const Tensor& a, const Tensor& b, Fwd fwd,
                           BwdBig bwd_first, BwdSmall bwd_second) {
    // orient: x is the larger operand (or a, when equal), y the smaller
    bool a_big = a.numel() >= b.numel();
    const Tensor& big = a_big ? a : b;
    const Tensor& small = a_big ? b : a;
    int64_t rep = broadcast_repeat(name, big.shape(), small.shape());
    int64_t block = small.numel();

    std::vector<double> out(size_t(big.numel()));
    const double* pa = a.data();
    const double* pb = b.data();
    if (rep == 1) {
        for (int64_t i = 0; i < big.numel(); ++i) out[size_t(i)] = fwd(pa[i], pb[i]);
    } else if (a_big) {
        for (int64_t r = 0; r < rep; ++r)
            for (int64_t i = 0; i < block; ++i)
                out[size_t(r * block + i)] = fwd(pa[r * block + i], pb[i]);
    } else {
        for (int64_t r = 0; r < rep; ++r)
            for (int64_t i = 0; i < block; ++i)
                out[size_t(r * block + i)] = fwd(pa[i], pb[r * block + i]);
    }

    Tensor result(big.shape(), std::move(out));
    Tape* tape = Tape::active();
    if (tape && (grad_enabled(a) || grad_enabled(b))) {
        auto an = a.node();
        auto bn = b.node();
        auto on = result.node();
        bool ga = grad_enabled(a), gb = grad_enabled(b);
        tape->record({a, b}, result, [an, bn, on, ga, gb, rep, block, a_big, bwd_first, bwd_second]() {
            if (on->grad.empty()) return;
            const double* dy = on->grad.data();
            const double* pa2 = an->value.data();
            const double* pb2 = bn->value.data();
            auto accum = [&](const std::shared_ptr<TensorNode>& n, bool is_first) {
                auto& g = ensure_grad(n);
                for (int64_t r = 0; r < rep; ++r) {
                    for (int64_t i = 0; i < block; ++i) {
                        int64_t bi = r * block + i;
                        int64_t ai = a_big ? bi : i; // flat index into a
                        int64_t bj = a_big ? i : bi; // flat index into b
                        double d = is_first ? bwd_first(dy[bi], pa2[ai], pb2[bj])
                                            : bwd_second(dy[bi], pa2[ai], pb2[bj]);
                        g[size_t(is_first ? ai : bj)] += d;
                    }
                }
            };
            if (ga) accum(an, true);
            if (gb) accum(bn, false);
        });
    }
    return result;
}

template <class Fwd, class Bwd>
Tensor unary_op(const Tensor& a, Fwd fwd, Bwd bwd) {
    std::vector<double> out(size_t(a.numel()));
    const double* pa = a.data();
    for (int64_t i = 0; i < a.numel(); ++i) out[size_t(i)] = fwd(pa[i]);
    Tensor result(a.shape(), std::move(out));
    Tape* tape = Tape::active();
    if (tape && grad_enabled(a)) {
        auto an = a.node();
        auto on = result.node();
        tape->record({a}, result, [an, on, bwd]() {
            if (on->grad.empty()) return;
            auto& g = ensure_grad(an);
            const double* dy = on->grad.data();
            const double* x = an->value.data();
            const double* y = on->value.data();
            for (size_t i = 0; i < g.size(); ++i) g[i] += bwd(dy[i], x[i], y[i]);
        });
    }
    return result;
}

} // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    return binary_broadcast_op(
        "add", a, b, [](double x, double y) { return x + y; },
        [](double dy, double, double) { return dy; }, [](double dy, double, double) { return dy; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return binary_broadcast_op(
        "sub", a, b, [](double x, double y) { return x - y; },
        [](double dy, double, double) { return dy; }, [](double dy, double, double) { return -dy; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return binary_broadcast_op(
        "mul", a, b, [](double x, double y) { return x * y; },
        [](double dy, double, double y) { return dy * y; },
        [](double dy, double x, double) { return dy * x; });
}

Tensor scale(const Tensor& a, double s) {
    return unary_op(a, [s](double x) { return x * s; },
                    [s](double dy, double, double) { return dy * s; });
}

Tensor relu(const Tensor& a) {
    return unary_op(a, [](double x) { return x > 0.0 ? x : 0.0; },
                    [](double dy, double x, double) { return x > 0.0 ? dy : 0.0; });
}

Tensor exp(const Tensor& a) {
    return unary_op(a, [](double x) { return std::exp(x); },
                    [](double dy, double, double y) { return dy * y; });
}

Tensor log(const Tensor& a) {
    return unary_op(a, [](double x) { return std::log(x); },
                    [](double dy, double x, double) { return dy / x; });
}

// ---------------------------------------------------------------------------
// raw matmul kernels

void mat_mul_raw(const double* a, const double* b, double* out, int m, int k, int n) {
    std::memset(out, 0, sizeof(double) * size_t(m) * size_t(n));
    for (int i = 0; i < m; ++i) {
        const double* arow = a + size_t(i) * k;
        double* crow = out + size_t(i) * n;
        for (int l = 0; l < k; ++l) {
            double av = arow[l];
            const double* brow = b + size_t(l) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

namespace {

// C[m,n] += A[m,k] * B[k,n]
void mm_nn_acc(const double* a, const double* b, double* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const double* arow = a + size_t(i) * k;
        double* crow = c + size_t(i) * n;
        for (int l = 0; l < k; ++l) {
            double av = arow[l];
            const double* brow = b + size_t(l) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// C[m,n] += A[m,k] * B[n,k]^T
void mm_nt_acc(const double* a, const double* b, double* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const double* arow = a + size_t(i) * k;
        double* crow = c + size_t(i) * n;
        for (int j = 0; j < n; ++j) {
            const double* brow = b + size_t(j) * k;
            double acc = 0.0;
            for (int l = 0; l < k; ++l) acc += arow[l] * brow[l];
            crow[j] += acc;
        }
    }
}

// C[m,n] += A[k,m]^T * B[k,n]
void mm_tn_acc(const double* a, const double* b, double* c, int k, int m, int n) {
    for (int l = 0; l < k; ++l) {
        const double* arow = a + size_t(l) * m;
        const double* brow = b + size_t(l) * n;
        for (int i = 0; i < m; ++i) {
            double av = arow[i];
            double* crow = c + size_t(i) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

} // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2) {
        throw std::invalid_argument("matmul: expects 2-D tensors, got " + shape_str(a.shape()) +
                                    " and " + shape_str(b.shape()));
    }
    int m = a.dim(0), k = a.dim(1), k2 = b.dim(0), n = b.dim(1);
    if (k != k2) {
        throw std::invalid_argument("matmul: inner dimensions disagree, " + shape_str(a.shape()) +
                                    " vs " + shape_str(b.shape()));
    }
    Tensor result(Shape{m, n});
    mat_mul_raw(a.data(), b.data(), result.data(), m, k, n);
    Tape* tape = Tape::active();
    if (tape && (grad_enabled(a) || grad_enabled(b))) {
        auto an = a.node();
        auto bn = b.node();
        auto on = result.node();
        bool ga = grad_enabled(a), gb = grad_enabled(b);
        tape->record({a, b}, result, [an, bn, on, ga, gb, m, k, n]() {
            if (on->grad.empty()) return;
            const double* dy = on->grad.data();
            if (ga) mm_nt_acc(dy, bn->value.data(), ensure_grad(an).data(), m, n, k);
            if (gb) mm_tn_acc(an->value.data(), dy, ensure_grad(bn).data(), m, k, n);
        });
    }
    return result;
}

// ---------------------------------------------------------------------------
// shape ops

Tensor reshape(const Tensor& a, Shape new_shape) {
    check_shape(new_shape);
    if (shape_numel(new_shape) != a.numel()) {
        throw std::invalid_argument("reshape: cannot view " + shape_str(a.shape()) + " as " +
                                    shape_str(new_shape));
    }
    Tensor result(new_shape, a.values());
    Tape* tape = Tape::active();
    if (tape && grad_enabled(a)) {
        auto an = a.node();
        auto on = result.node();
        tape->record({a}, result, [an, on]() {
            if (on->grad.empty()) return;
            auto& g = ensure_grad(an);
            for (size_t i = 0; i < g.size(); ++i) g[i] += on->grad[i];
        });
    }
    return result;
}

Tensor transpose(const Tensor& a) {
    if (a.rank() != 2) throw std::invalid_argument("transpose: expects 2-D, got " + shape_str(a.shape()));
    return permute(a, {1, 0});
}

Tensor permute(const Tensor& a, const std::vector<int>& dims) {
    int r = a.rank();
    if (int(dims.size()) != r) throw std::invalid_argument("permute: dims rank mismatch");
    std::vector<char> seen(size_t(r), 0);
    for (int d : dims) {
        if (d < 0 || d >= r || seen[size_t(d)]) throw std::invalid_argument("permute: invalid dims");
        seen[size_t(d)] = 1;
    }
    Shape out_shape(size_t(r), 0);
    for (int i = 0; i < r; ++i) out_shape[size_t(i)] = a.dim(dims[size_t(i)]);

    std::vector<int64_t> in_strides(size_t(r), 1), out_strides(size_t(r), 1);
    for (int i = r - 2; i >= 0; --i) in_strides[size_t(i)] = in_strides[size_t(i + 1)] * a.dim(i + 1);
    for (int i = r - 2; i >= 0; --i) out_strides[size_t(i)] = out_strides[size_t(i + 1)] * out_shape[size_t(i + 1)];

    // per-output-element stride into the input
    std::vector<int64_t> gather(size_t(r), 0);
    for (int i = 0; i < r; ++i) gather[size_t(i)] = in_strides[size_t(dims[size_t(i)])];

    int64_t total = a.numel();
    std::vector<double> out(size_t(total), 0.0);
    std::vector<int> idx(size_t(r), 0);
    const double* src = a.data();
    for (int64_t o = 0; o < total; ++o) {
        int64_t src_off = 0;
        for (int i = 0; i < r; ++i) src_off += idx[size_t(i)] * gather[size_t(i)];
        out[size_t(o)] = src[src_off];
        for (int i = r - 1; i >= 0; --i) {
            if (++idx[size_t(i)] < out_shape[size_t(i)]) break;
            idx[size_t(i)] = 0;
        }
    }

    Tensor result(out_shape, std::move(out));
    Tape* tape = Tape::active();
    if (tape && grad_enabled(a)) {
        auto an = a.node();
        auto on = result.node();
        tape->record({a}, result, [an, on, gather, out_shape, r]() {
            if (on->grad.empty()) return;
            auto& g = ensure_grad(an);
            const double* dy = on->grad.data();
            std::vector<int> idx2(size_t(r), 0);
            int64_t total2 = int64_t(on->value.size());
            for (int64_t o = 0; o < total2; ++o) {
                int64_t src_off = 0;
                for (int i = 0; i < r; ++i) src_off += idx2[size_t(i)] * gather[size_t(i)];
                g[size_t(src_off)] += dy[o];
                for (int i = r - 1; i >= 0; --i) {
                    if (++idx2[size_t(i)] < out_shape[size_t(i)]) break;
                    idx2[size_t(i)] = 0;
                }
            }
        });
    }
    return result;
}

namespace {

void axis_split(const Shape& s, int axis, int64_t& outer, int64_t& alen, int64_t& inner) {
    outer = 1;
    for (int i = 0; i < axis; ++i) outer *= s[size_t(i)];
    alen = s[size_t(axis)];
    inner = 1;
    for (size_t i = size_t(axis) + 1; i < s.size(); ++i) inner *= s[i];
}

void check_axis(const char* op, const Tensor& t, int axis) {
    if (axis < 0 || axis >= t.rank()) {
        throw std::invalid_argument(std::string(op) + ": axis " + std::to_string(axis) +
                                    " out of range for shape " + shape_str(t.shape()));
    }
}

} // namespace

Tensor slice(const Tensor& a, int axis, int start, int len) {
    check_axis("slice", a, axis);
    if (start < 0 || len <= 0 || start + len > a.dim(axis)) {
        throw std::invalid_argument("slice: range [" + std::to_string(start) + "," +
                                    std::to_string(start + len) + ") invalid for axis " +
                                    std::to_string(axis) + " of " + shape_str(a.shape()));
    }
    int64_t outer, alen, inner;
    axis_split(a.shape(), axis, outer, alen, inner);
    Shape out_shape = a.shape();
    out_shape[size_t(axis)] = len;
    std::vector<double> out(size_t(outer * len * inner));
    const double* src = a.data();
    for (int64_t o = 0; o < outer; ++o) {
        std::memcpy(out.data() + o * len * inner, src + (o * alen + start) * inner,
                    sizeof(double) * size_t(len) * size_t(inner));
    }
    Tensor result(out_shape, std::move(out));
    Tape* tape = Tape::active();
    if (tape && grad_enabled(a)) {
        auto an = a.node();
        auto on = result.node();
        tape->record({a}, result, [an, on, outer, alen, inner, start, len]() {
            if (on->grad.empty()) return;
            auto& g = ensure_grad(an);
            const double* dy = on->grad.data();
            for (int64_t o = 0; o < outer; ++o) {
                double* dst = g.data() + (o * alen + start) * inner;
                const double* s2 = dy + o * len * inner;
                for (int64_t i = 0; i < len * inner; ++i) dst[i] += s2[i];
            }
        });
    }
    return result;
}

Tensor concat(const Tensor& a, const Tensor& b, int axis) {
    check_axis("concat", a, axis);
    if (a.rank() != b.rank()) {
        throw std::invalid_argument("concat: rank mismatch " + shape_str(a.shape()) + " vs " +
                                    shape_str(b.shape()));
    }
    for (int i = 0; i < a.rank(); ++i) {
        if (i != axis && a.dim(i) != b.dim(i)) {
            throw std::invalid_argument("concat: non-concat dims differ, " + shape_str(a.shape()) +
                                        " vs " + shape_str(b.shape()) + " on axis " + std::to_string(axis));
        }
    }
    int64_t outer, alen, inner;
    axis_split(a.shape(), axis, outer, alen, inner);
    int64_t blen = b.dim(axis);
    Shape out_shape = a.shape();
    out_shape[size_t(axis)] = int(alen + blen);
    std::vector<double> out(size_t(outer * (alen + blen) * inner));
    const double* pa = a.data();
    const double* pb = b.data();
    for (int64_t o = 0; o < outer; ++o) {
        double* dst = out.data() + o * (alen + blen) * inner;
        std::memcpy(dst, pa + o * alen * inner, sizeof(double) * size_t(alen * inner));
        std::memcpy(dst + alen * inner, pb + o * blen * inner, sizeof(double) * size_t(blen * inner));
    }
    Tensor result(out_shape, std::move(out));
    Tape* tape = Tape::active();
    if (tape && (grad_enabled(a) || grad_enabled(b))) {
        auto an = a.node();
        auto bn = b.node();
        auto on = result.node();
        bool ga = grad_enabled(a), gb = grad_enabled(b);
        tape->record({a, b}, result, [an, bn, on, ga, gb, outer, alen, blen, inner]() {
            if (on->grad.empty()) return;
            const double* dy = on->grad.data();
            if (ga) {
                auto& g = ensure_grad(an);
                for (int64_t o = 0; o < outer; ++o) {
                    const double* s2 = dy + o * (alen + blen) * inner;
                    double* dst = g.data() + o * alen * inner;
                    for (int64_t i = 0; i < alen * inner; ++i) dst[i] += s2[i];
                }
            }
            if (gb) {
                auto& g = ensure_grad(bn);
                for (int64_t o = 0; o < outer; ++o) {
                    const double* s2 = dy + o * (alen + blen) * inner + alen * inner;
                    double* dst = g.data() + o * blen * inner;
                    for (int64_t i = 0; i < blen * inner; ++i) dst[i] += s2[i];
                }
            }
        });
    }
    return result;
}

namespace {

Tensor reduce_axis(const Tensor& a, int axis, bool take_mean) {
    check_axis(take_mean ? "mean" : "sum", a, axis);
    int64_t outer, alen, inner;
    axis_split(a.shape(), axis, outer, alen, inner);
    Shape out_shape;
    for (int i = 0; i < a.rank(); ++i)
        if (i != axis) out_shape.push_back(a.dim(i));
    if (out_shape.empty()) out_shape = {1};
    std::vector<double> out(size_t(outer * inner), 0.0);
    const double* src = a.data();
    for (int64_t o = 0; o < outer; ++o)
        for (int64_t j = 0; j < alen; ++j) {
            const double* s2 = src + (o * alen + j) * inner;
            double* dst = out.data() + o * inner;
            for (int64_t i = 0; i < inner; ++i) dst[i] += s2[i];
        }
    double factor = take_mean ? 1.0 / double(alen) : 1.0;
    if (take_mean)
        for (auto& v : out) v *= factor;
    Tensor result(out_shape, std::move(out));
    Tape* tape = Tape::active();
    if (tape && grad_enabled(a)) {
        auto an = a.node();
        auto on = result.node();
        tape->record({a}, result, [an, on, outer, alen, inner, factor]() {
            if (on->grad.empty()) return;
            auto& g = ensure_grad(an);
            const double* dy = on->grad.data();
            for (int64_t o = 0; o < outer; ++o)
                for (int64_t j = 0; j < alen; ++j) {
                    double* dst = g.data() + (o * alen + j) * inner;
                    const double* s2 = dy + o * inner;
                    for (int64_t i = 0; i < inner; ++i) dst[i] += s2[i] * factor;
                }
        });
    }
    return result;
}

} // namespace

Tensor sum(const Tensor& a, int axis) { return reduce_axis(a, axis, false); }
Tensor mean(const Tensor& a, int axis) { return reduce_axis(a, axis, true); }

Tensor sum_all(const Tensor& a) {
    double total = 0.0;
    const double* src = a.data();
    for (int64_t i = 0; i < a.numel(); ++i) total += src[i];
    Tensor result = Tensor::scalar(total);
    Tape* tape = Tape::active();
    if (tape && grad_enabled(a)) {
        auto an = a.node();
        auto on = result.node();
        tape->record({a}, result, [an, on]() {
            if (on->grad.empty()) return;
            auto& g = ensure_grad(an);
            double dy = on->grad[0];
            for (auto& v : g) v += dy;
        });
    }
    return result;
}

Tensor select(const Tensor& a, int64_t flat_index) {
    if (flat_index < 0 || flat_index >= a.numel()) {
        throw std::invalid_argument("select: index " + std::to_string(flat_index) +
                                    " out of range for " + shape_str(a.shape()));
    }
    Tensor result = Tensor::scalar(a.data()[flat_index]);
    Tape* tape = Tape::active();
    if (tape && grad_enabled(a)) {
        auto an = a.node();
        auto on = result.node();
        tape->record({a}, result, [an, on, flat_index]() {
            if (on->grad.empty()) return;
            ensure_grad(an)[size_t(flat_index)] += on->grad[0];
        });
    }
    return result;
}

// ---------------------------------------------------------------------------
// softmax family

namespace {

void check_2d(const char* op, const Tensor& t) {
    if (t.rank() != 2) {
        throw std::invalid_argument(std::string(op) + ": expects 2-D input, got " + shape_str(t.shape()));
    }
}

} // namespace

Tensor softmax_rows(const Tensor& a) {
    check_2d("softmax_rows", a);
    int r = a.dim(0), c = a.dim(1);
    std::vector<double> out(size_t(r) * size_t(c));
    const double* src = a.data();
    for (int i = 0; i < r; ++i) {
        const double* row = src + size_t(i) * c;
        double* orow = out.data() + size_t(i) * c;
        double mx = row[0];
        for (int j = 1; j < c; ++j) mx = std::max(mx, row[j]);
        double s = 0.0;
        for (int j = 0; j < c; ++j) {
            orow[j] = std::exp(row[j] - mx);
            s += orow[j];
        }
        for (int j = 0; j < c; ++j) orow[j] /= s;
    }
    Tensor result(Shape{r, c}, std::move(out));
    Tape* tape = Tape::active();
    if (tape && grad_enabled(a)) {
        auto an = a.node();
        auto on = result.node();
        tape->record({a}, result, [an, on, r, c]() {
            if (on->grad.empty()) return;
            auto& g = ensure_grad(an);
            const double* dy = on->grad.data();
            const double* y = on->value.data();
            for (int i = 0; i < r; ++i) {
                const double* yr = y + size_t(i) * c;
                const double* dr = dy + size_t(i) * c;
                double dot = 0.0;
                for (int j = 0; j < c; ++j) dot += dr[j] * yr[j];
                double* gr = g.data() + size_t(i) * c;
                for (int j = 0; j < c; ++j) gr[j] += yr[j] * (dr[j] - dot);
            }
        });
    }
    return result;
}

Tensor log_softmax_rows(const Tensor& a) {
    check_2d("log_softmax_rows", a);
    int r = a.dim(0), c = a.dim(1);
    std::vector<double> out(size_t(r) * size_t(c));
    const double* src = a.data();
    for (int i = 0; i < r; ++i) {
        const double* row = src + size_t(i) * c;
        double* orow = out.data() + size_t(i) * c;
        double mx = row[0];
        for (int j = 1; j < c; ++j) mx = std::max(mx, row[j]);
        double s = 0.0;
        for (int j = 0; j < c; ++j) s += std::exp(row[j] - mx);
        double lse = mx + std::log(s);
        for (int j = 0; j < c; ++j) orow[j] = row[j] - lse;
    }
    Tensor result(Shape{r, c}, std::move(out));
    Tape* tape = Tape::active();
    if (tape && grad_enabled(a)) {
        auto an = a.node();
        auto on = result.node();
        tape->record({a}, result, [an, on, r, c]() {
            if (on->grad.empty()) return;
            auto& g = ensure_grad(an);
            const double* dy = on->grad.data();
            const double* y = on->value.data();
            for (int i = 0; i < r; ++i) {
                const double* yr = y + size_t(i) * c;
                const double* dr = dy + size_t(i) * c;
                double dsum = 0.0;
                for (int j = 0; j < c; ++j) dsum += dr[j];
                double* gr = g.data() + size_t(i) * c;
                for (int j = 0; j < c; ++j) gr[j] += dr[j] - std::exp(yr[j]) * dsum;
            }
        });
    }
    return result;
}

} // namespace vspt
