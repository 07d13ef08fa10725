#pragma once
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace vspt {

using Shape = std::vector<int>;

int64_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

// One node of the differentiation graph. Tensors are cheap handles that
// share the node; the active tape keeps nodes alive via its backward rules.
struct TensorNode {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad; // empty until touched by backward / grad()
    bool requires_grad = false;
    int node_id = -1; // position of the producing op on the active tape
};

class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0, bool requires_grad = false);
    Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

    static Tensor scalar(double v, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    int dim(int axis) const { return node_->shape[size_t(axis)]; }
    int rank() const { return int(node_->shape.size()); }
    int64_t numel() const { return int64_t(node_->value.size()); }

    double* data() { return node_->value.data(); }
    const double* data() const { return node_->value.data(); }
    std::vector<double>& values() { return node_->value; }
    const std::vector<double>& values() const { return node_->value; }

    // gradient buffer, allocated zero-filled on first touch
    double* grad();
    bool has_grad() const { return !node_->grad.empty(); }
    const std::vector<double>& grad_values() const { return node_->grad; }
    void zero_grad();

    bool requires_grad() const { return node_->requires_grad; }
    void set_requires_grad(bool rg);
    int node_id() const { return node_->node_id; }

    double item() const; // scalar tensors only
    double at(const std::vector<int>& idx) const;

    Tensor detached_copy() const; // deep copy, off-tape, requires_grad=false
    bool same_node(const Tensor& other) const { return node_ == other.node_; }
    const std::shared_ptr<TensorNode>& node() const { return node_; }

private:
    std::shared_ptr<TensorNode> node_;
};

// Reverse-mode tape (define-by-run, rebuilt each forward pass). One tape may
// be active per thread; ops record themselves while any input is
// grad-connected. backward() replays the rules once each, in reverse order.
class Tape {
public:
    Tape();
    ~Tape();
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    static Tape* active();

    void record(const std::vector<Tensor>& inputs, Tensor& output,
                std::function<void()> backward_rule);
    void backward(const Tensor& loss);

    size_t size() const { return records_.size(); }
    size_t rules_run() const { return rules_run_; } // during the last backward

private:
    struct Record {
        std::vector<int> input_ids;
        int output_id;
        std::shared_ptr<TensorNode> output;
        std::function<void()> backward_rule;
    };
    std::vector<Record> records_;
    size_t rules_run_ = 0;
    Tape* previous_ = nullptr;
};

// true when gradients should flow out of t (leaf flag or tape-recorded)
bool grad_enabled(const Tensor& t);

// --- elementwise ---------------------------------------------------------
// binary ops broadcast by leading-dimension expansion: shapes must be equal,
// or the smaller shape must equal a trailing suffix of the larger.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor relu(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);

// --- matrix --------------------------------------------------------------
Tensor matmul(const Tensor& a, const Tensor& b); // [m,k] x [k,n]

// --- shape ---------------------------------------------------------------
Tensor reshape(const Tensor& a, Shape new_shape);
Tensor transpose(const Tensor& a);                           // 2-D
Tensor permute(const Tensor& a, const std::vector<int>& dims);
Tensor slice(const Tensor& a, int axis, int start, int len);
Tensor concat(const Tensor& a, const Tensor& b, int axis);
Tensor sum(const Tensor& a, int axis);
Tensor mean(const Tensor& a, int axis);
Tensor sum_all(const Tensor& a);
Tensor select(const Tensor& a, int64_t flat_index); // scalar pick

// --- row-wise softmax family (numerically stable) ------------------------
Tensor softmax_rows(const Tensor& a);     // [r,c]
Tensor log_softmax_rows(const Tensor& a); // [r,c]

// raw m x k * k x n product used by the ops above and the conv kernels
void mat_mul_raw(const double* a, const double* b, double* out, int m, int k, int n);

} // namespace vspt
