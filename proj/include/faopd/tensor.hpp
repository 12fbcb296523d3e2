#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "faopd/errors.hpp"
#include "faopd/rng.hpp"

namespace faopd {

using Shape = std::vector<std::size_t>;

// Dense row-major float64 array. Doubles as plain storage (parameters,
// batches) and as the value/gradient payload of tape nodes. `node` is the
// handle into the tape that produced it, -1 when detached.
struct Tensor {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad;  // empty = absent; otherwise same length as data
    int node = -1;

    Tensor() = default;
    explicit Tensor(Shape s);
    Tensor(Shape s, std::vector<double> values);

    static Tensor zeros(Shape s) { return Tensor(std::move(s)); }
    static Tensor scalar(double v) { return Tensor({1}, {v}); }
    static Tensor row(std::vector<double> values);

    std::size_t size() const { return data.size(); }
    std::size_t rows() const;
    std::size_t cols() const;
    bool is_scalar() const { return data.size() == 1; }

    double& at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

    void ensure_grad();          // allocate zeroed grad buffer
    void zero_grad();
    bool all_finite() const;     // data only
    void check_finite(const std::string& context) const;  // throws NumericError
};

std::size_t shape_size(const Shape& s);
std::string shape_str(const Shape& s);

// Handle to a node on a Tape.
struct Var {
    int id = -1;
};

// Reverse-mode gradient tape. One tape per training step: record forward
// ops, call backward() once on a scalar loss, read gradients off the bound
// parameters, then discard the tape.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Constant input; receives a grad buffer but no write-back.
    Var constant(Tensor value);
    // Trainable leaf; after backward() the node gradient is written (and
    // accumulated across multiple bindings) into p.grad.
    Var param(Tensor& p);

    const Tensor& value(Var v) const { return nodes_[check(v)].value; }
    const Tensor& grad(Var v) const { return nodes_[check(v)].grad; }
    double scalar_value(Var v) const;
    std::size_t size() const { return nodes_.size(); }

    // ---- ops ----
    Var matmul(Var a, Var b);              // (m,k) x (k,n)
    Var add(Var a, Var b);                 // same shape
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);                 // elementwise
    Var add_row(Var m, Var row);           // (m,n) + (1,n), broadcast over rows
    Var mul_row(Var m, Var row);           // (m,n) * (1,n)
    Var add_scalar(Var a, Var s);          // broadcast scalar node
    Var scale(Var a, double k);
    Var shift(Var a, double k);            // a + k
    Var neg(Var a) { return scale(a, -1.0); }
    Var tanh(Var a);
    Var exp(Var a);
    Var log(Var a);
    Var sigmoid(Var a);
    Var softplus(Var a);                   // log(1 + e^x), stable
    Var square(Var a);
    Var row_sum(Var a);                    // (m,n) -> (m,1)
    Var sum(Var a);                        // -> scalar
    Var mean(Var a);                       // -> scalar
    Var min(Var a, Var b);                 // elementwise; ties route grad to a
    Var clamp(Var a, double lo, double hi);  // zero grad outside [lo,hi]

    // Backward pass from a scalar loss. Populates grads of every bound
    // parameter (zeros for parameters the loss does not reach). Single use.
    void backward(Var loss);

private:
    struct Node {
        Tensor value;
        Tensor grad;
        std::function<void(Tape&, int)> backprop;  // may be empty (leaf)
    };

    int check(Var v) const;
    Var emplace(Tensor value, std::function<void(Tape&, int)> backprop);
    Tensor& grad_of(int id) { return nodes_[id].grad; }

    std::vector<Node> nodes_;
    std::vector<std::pair<int, Tensor*>> bindings_;
    bool used_ = false;
};

}  // namespace faopd
