#include "faopd/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace faopd {

namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<EMat>;
using CMapMat = Eigen::Map<const EMat>;

CMapMat as_mat(const Tensor& t) {
    return CMapMat(t.data.data(), static_cast<Eigen::Index>(t.rows()),
                   static_cast<Eigen::Index>(t.cols()));
}

MapMat as_mat(Tensor& t) {
    return MapMat(t.data.data(), static_cast<Eigen::Index>(t.rows()),
                  static_cast<Eigen::Index>(t.cols()));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape != b.shape) {
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape) +
                             " vs " + shape_str(b.shape));
    }
}

}  // namespace

std::size_t shape_size(const Shape& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return s.empty() ? 0 : n;
}

std::string shape_str(const Shape& s) {
    std::string out = "(";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + ")";
}

Tensor::Tensor(Shape s) : shape(std::move(s)), data(shape_size(shape), 0.0) {
    for (std::size_t d : shape) {
        if (d == 0) throw DimensionError("Tensor: zero dimension in shape " + shape_str(shape));
    }
}

Tensor::Tensor(Shape s, std::vector<double> values) : shape(std::move(s)), data(std::move(values)) {
    if (data.size() != shape_size(shape)) {
        throw DimensionError("Tensor: data length " + std::to_string(data.size()) +
                             " does not match shape " + shape_str(shape));
    }
}

Tensor Tensor::row(std::vector<double> values) {
    const std::size_t n = values.size();
    return Tensor({1, n}, std::move(values));
}

std::size_t Tensor::rows() const {
    if (shape.empty()) return 0;
    return shape.size() == 1 ? 1 : shape[0];
}

std::size_t Tensor::cols() const {
    if (shape.empty()) return 0;
    return shape.size() == 1 ? shape[0] : shape[1];
}

void Tensor::ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
}

void Tensor::zero_grad() {
    ensure_grad();
    std::fill(grad.begin(), grad.end(), 0.0);
}

bool Tensor::all_finite() const {
    for (double v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void Tensor::check_finite(const std::string& context) const {
    if (!all_finite()) throw NumericError(context + ": non-finite value");
}

int Tape::check(Var v) const {
    if (v.id < 0 || v.id >= static_cast<int>(nodes_.size())) {
        throw ContractError("Tape: variable does not belong to this tape");
    }
    return v.id;
}

Var Tape::emplace(Tensor value, std::function<void(Tape&, int)> backprop) {
    value.check_finite("Tape op output");
    Node n;
    n.grad = Tensor(value.shape);
    n.value = std::move(value);
    n.backprop = std::move(backprop);
    nodes_.push_back(std::move(n));
    const int id = static_cast<int>(nodes_.size()) - 1;
    nodes_.back().value.node = id;
    return Var{id};
}

Var Tape::constant(Tensor value) { return emplace(std::move(value), nullptr); }

Var Tape::param(Tensor& p) {
    Var v = emplace(p, nullptr);
    bindings_.emplace_back(v.id, &p);
    return v;
}

double Tape::scalar_value(Var v) const {
    const Tensor& t = value(v);
    if (!t.is_scalar()) throw ContractError("scalar_value: tensor has size " + std::to_string(t.size()));
    return t.data[0];
}

Var Tape::matmul(Var a, Var b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (ta.shape.size() != 2 || tb.shape.size() != 2 || ta.cols() != tb.rows()) {
        throw DimensionError("matmul: incompatible shapes " + shape_str(ta.shape) + " x " +
                             shape_str(tb.shape));
    }
    Tensor out({ta.rows(), tb.cols()});
    as_mat(out).noalias() = as_mat(ta) * as_mat(tb);
    const int ia = a.id, ib = b.id;
    return emplace(std::move(out), [ia, ib](Tape& t, int self) {
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& va = t.nodes_[ia].value;
        const Tensor& vb = t.nodes_[ib].value;
        as_mat(t.grad_of(ia)).noalias() += as_mat(g) * as_mat(vb).transpose();
        as_mat(t.grad_of(ib)).noalias() += as_mat(va).transpose() * as_mat(g);
    });
}

Var Tape::add(Var a, Var b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    require_same_shape(ta, tb, "add");
    Tensor out(ta.shape);
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = ta.data[i] + tb.data[i];
    const int ia = a.id, ib = b.id;
    return emplace(std::move(out), [ia, ib](Tape& t, int self) {
        const auto& g = t.nodes_[self].grad.data;
        auto& ga = t.grad_of(ia).data;
        auto& gb = t.grad_of(ib).data;
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga[i] += g[i];
            gb[i] += g[i];
        }
    });
}

Var Tape::sub(Var a, Var b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    require_same_shape(ta, tb, "sub");
    Tensor out(ta.shape);
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = ta.data[i] - tb.data[i];
    const int ia = a.id, ib = b.id;
    return emplace(std::move(out), [ia, ib](Tape& t, int self) {
        const auto& g = t.nodes_[self].grad.data;
        auto& ga = t.grad_of(ia).data;
        auto& gb = t.grad_of(ib).data;
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga[i] += g[i];
            gb[i] -= g[i];
        }
    });
}

Var Tape::mul(Var a, Var b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    require_same_shape(ta, tb, "mul");
    Tensor out(ta.shape);
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = ta.data[i] * tb.data[i];
    const int ia = a.id, ib = b.id;
    return emplace(std::move(out), [ia, ib](Tape& t, int self) {
        const auto& g = t.nodes_[self].grad.data;
        const auto& va = t.nodes_[ia].value.data;
        const auto& vb = t.nodes_[ib].value.data;
        auto& ga = t.grad_of(ia).data;
        auto& gb = t.grad_of(ib).data;
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga[i] += g[i] * vb[i];
            gb[i] += g[i] * va[i];
        }
    });
}

Var Tape::add_row(Var m, Var row) {
    const Tensor& tm = value(m);
    const Tensor& tr = value(row);
    if (tr.rows() != 1 || tr.cols() != tm.cols()) {
        throw DimensionError("add_row: row shape " + shape_str(tr.shape) + " vs matrix " +
                             shape_str(tm.shape));
    }
    Tensor out(tm.shape);
    const std::size_t n = tm.cols();
    for (std::size_t r = 0; r < tm.rows(); ++r) {
        for (std::size_t c = 0; c < n; ++c) out.data[r * n + c] = tm.data[r * n + c] + tr.data[c];
    }
    const int im = m.id, ir = row.id;
    return emplace(std::move(out), [im, ir](Tape& t, int self) {
        const Tensor& g = t.nodes_[self].grad;
        auto& gm = t.grad_of(im).data;
        auto& gr = t.grad_of(ir).data;
        const std::size_t n = g.cols();
        for (std::size_t r = 0; r < g.rows(); ++r) {
            for (std::size_t c = 0; c < n; ++c) {
                gm[r * n + c] += g.data[r * n + c];
                gr[c] += g.data[r * n + c];
            }
        }
    });
}

Var Tape::mul_row(Var m, Var row) {
    const Tensor& tm = value(m);
    const Tensor& tr = value(row);
    if (tr.rows() != 1 || tr.cols() != tm.cols()) {
        throw DimensionError("mul_row: row shape " + shape_str(tr.shape) + " vs matrix " +
                             shape_str(tm.shape));
    }
    Tensor out(tm.shape);
    const std::size_t n = tm.cols();
    for (std::size_t r = 0; r < tm.rows(); ++r) {
        for (std::size_t c = 0; c < n; ++c) out.data[r * n + c] = tm.data[r * n + c] * tr.data[c];
    }
    const int im = m.id, ir = row.id;
    return emplace(std::move(out), [im, ir](Tape& t, int self) {
        const Tensor& g = t.nodes_[self].grad;
        const auto& vm = t.nodes_[im].value.data;
        const auto& vr = t.nodes_[ir].value.data;
        auto& gm = t.grad_of(im).data;
        auto& gr = t.grad_of(ir).data;
        const std::size_t n = g.cols();
        for (std::size_t r = 0; r < g.rows(); ++r) {
            for (std::size_t c = 0; c < n; ++c) {
                gm[r * n + c] += g.data[r * n + c] * vr[c];
                gr[c] += g.data[r * n + c] * vm[r * n + c];
            }
        }
    });
}

Var Tape::add_scalar(Var a, Var s) {
    const Tensor& ta = value(a);
    const Tensor& ts = value(s);
    if (!ts.is_scalar()) throw DimensionError("add_scalar: second operand must be scalar");
    Tensor out(ta.shape);
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = ta.data[i] + ts.data[0];
    const int ia = a.id, is = s.id;
    return emplace(std::move(out), [ia, is](Tape& t, int self) {
        const auto& g = t.nodes_[self].grad.data;
        auto& ga = t.grad_of(ia).data;
        double total = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga[i] += g[i];
            total += g[i];
        }
        t.grad_of(is).data[0] += total;
    });
}

Var Tape::scale(Var a, double k) {
    const Tensor& ta = value(a);
    Tensor out(ta.shape);
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = ta.data[i] * k;
    const int ia = a.id;
    return emplace(std::move(out), [ia, k](Tape& t, int self) {
        const auto& g = t.nodes_[self].grad.data;
        auto& ga = t.grad_of(ia).data;
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * k;
    });
}

Var Tape::shift(Var a, double k) {
    const Tensor& ta = value(a);
    Tensor out(ta.shape);
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = ta.data[i] + k;
    const int ia = a.id;
    return emplace(std::move(out), [ia](Tape& t, int self) {
        const auto& g = t.nodes_[self].grad.data;
        auto& ga = t.grad_of(ia).data;
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    });
}

Var Tape::tanh(Var a) {
    const Tensor& ta = value(a);
    Tensor out(ta.shape);
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = std::tanh(ta.data[i]);
    const int ia = a.id;
    return emplace(std::move(out), [ia](Tape& t, int self) {
        const auto& g = t.nodes_[self].grad.data;
        const auto& y = t.nodes_[self].value.data;
        auto& ga = t.grad_of(ia).data;
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
    });
}

Var Tape::exp(Var a) {
    const Tensor& ta = value(a);
    Tensor out(ta.shape);
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = std::exp(ta.data[i]);
    const int ia = a.id;
    return emplace(std::move(out), [ia](Tape& t, int self) {
        const auto& g = t.nodes_[self].grad.data;
        const auto& y = t.nodes_[self].value.data;
        auto& ga = t.grad_of(ia).data;
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i];
    });
}

Var Tape::log(Var a) {
    const Tensor& ta = value(a);
    Tensor out(ta.shape);
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!(ta.data[i] > 0.0)) throw NumericError("log: non-positive input");
        out.data[i] = std::log(ta.data[i]);
    }
    const int ia = a.id;
    return emplace(std::move(out), [ia](Tape& t, int self) {
        const auto& g = t.nodes_[self].grad.data;
        const auto& x = t.nodes_[ia].value.data;
        auto& ga = t.grad_of(ia).data;
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / x[i];
    });
}

Var Tape::sigmoid(Var a) {
    const Tensor& ta = value(a);
    Tensor out(ta.shape);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double x = ta.data[i];
        out.data[i] = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    }
    const int ia = a.id;
    return emplace(std::move(out), [ia](Tape& t, int self) {
        const auto& g = t.nodes_[self].grad.data;
        const auto& y = t.nodes_[self].value.data;
        auto& ga = t.grad_of(ia).data;
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
    });
}

Var Tape::softplus(Var a) {
    const Tensor& ta = value(a);
    Tensor out(ta.shape);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double x = ta.data[i];
        out.data[i] = x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
    }
    const int ia = a.id;
    return emplace(std::move(out), [ia](Tape& t, int self) {
        const auto& g = t.nodes_[self].grad.data;
        const auto& x = t.nodes_[ia].value.data;
        auto& ga = t.grad_of(ia).data;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double s = x[i] >= 0.0 ? 1.0 / (1.0 + std::exp(-x[i]))
                                         : std::exp(x[i]) / (1.0 + std::exp(x[i]));
            ga[i] += g[i] * s;
        }
    });
}

Var Tape::square(Var a) {
    const Tensor& ta = value(a);
    Tensor out(ta.shape);
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = ta.data[i] * ta.data[i];
    const int ia = a.id;
    return emplace(std::move(out), [ia](Tape& t, int self) {
        const auto& g = t.nodes_[self].grad.data;
        const auto& x = t.nodes_[ia].value.data;
        auto& ga = t.grad_of(ia).data;
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * 2.0 * x[i];
    });
}

Var Tape::row_sum(Var a) {
    const Tensor& ta = value(a);
    if (ta.shape.size() != 2) throw DimensionError("row_sum: expects a matrix");
    Tensor out({ta.rows(), 1});
    const std::size_t n = ta.cols();
    for (std::size_t r = 0; r < ta.rows(); ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < n; ++c) s += ta.data[r * n + c];
        out.data[r] = s;
    }
    const int ia = a.id;
    return emplace(std::move(out), [ia](Tape& t, int self) {
        const auto& g = t.nodes_[self].grad.data;
        Tensor& ga = t.grad_of(ia);
        const std::size_t n = ga.cols();
        for (std::size_t r = 0; r < ga.rows(); ++r) {
            for (std::size_t c = 0; c < n; ++c) ga.data[r * n + c] += g[r];
        }
    });
}

Var Tape::sum(Var a) {
    const Tensor& ta = value(a);
    double s = 0.0;
    for (double v : ta.data) s += v;
    const int ia = a.id;
    return emplace(Tensor::scalar(s), [ia](Tape& t, int self) {
        const double g = t.nodes_[self].grad.data[0];
        auto& ga = t.grad_of(ia).data;
        for (double& v : ga) v += g;
    });
}

Var Tape::mean(Var a) {
    const Tensor& ta = value(a);
    const double inv = 1.0 / static_cast<double>(ta.size());
    double s = 0.0;
    for (double v : ta.data) s += v;
    const int ia = a.id;
    return emplace(Tensor::scalar(s * inv), [ia, inv](Tape& t, int self) {
        const double g = t.nodes_[self].grad.data[0] * inv;
        auto& ga = t.grad_of(ia).data;
        for (double& v : ga) v += g;
    });
}

Var Tape::min(Var a, Var b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    require_same_shape(ta, tb, "min");
    Tensor out(ta.shape);
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = std::min(ta.data[i], tb.data[i]);
    const int ia = a.id, ib = b.id;
    return emplace(std::move(out), [ia, ib](Tape& t, int self) {
        const auto& g = t.nodes_[self].grad.data;
        const auto& va = t.nodes_[ia].value.data;
        const auto& vb = t.nodes_[ib].value.data;
        auto& ga = t.grad_of(ia).data;
        auto& gb = t.grad_of(ib).data;
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (va[i] <= vb[i]) {
                ga[i] += g[i];
            } else {
                gb[i] += g[i];
            }
        }
    });
}

Var Tape::clamp(Var a, double lo, double hi) {
    if (!(lo <= hi)) throw ContractError("clamp: lo > hi");
    const Tensor& ta = value(a);
    Tensor out(ta.shape);
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = std::clamp(ta.data[i], lo, hi);
    const int ia = a.id;
    return emplace(std::move(out), [ia, lo, hi](Tape& t, int self) {
        const auto& g = t.nodes_[self].grad.data;
        const auto& x = t.nodes_[ia].value.data;
        auto& ga = t.grad_of(ia).data;
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (x[i] >= lo && x[i] <= hi) ga[i] += g[i];
        }
    });
}

void Tape::backward(Var loss) {
    const int id = check(loss);
    if (used_) throw ContractError("Tape: backward() may only run once per tape");
    used_ = true;
    if (!nodes_[id].value.is_scalar()) {
        throw ContractError("backward: loss must be scalar, got shape " +
                            shape_str(nodes_[id].value.shape));
    }
    nodes_[id].grad.data[0] = 1.0;
    // Node indices are already a topological order of the graph.
    for (int i = id; i >= 0; --i) {
        if (nodes_[i].backprop) nodes_[i].backprop(*this, i);
    }
    std::unordered_map<Tensor*, bool> seen;
    for (auto& [node_id, target] : bindings_) {
        const Tensor& g = nodes_[node_id].grad;
        if (!seen[target]) {
            seen[target] = true;
            target->grad = g.data;
        } else {
            for (std::size_t i = 0; i < g.data.size(); ++i) target->grad[i] += g.data[i];
        }
    }
    for (auto& [node_id, target] : bindings_) {
        for (double v : target->grad) {
            if (!std::isfinite(v)) throw NumericError("backward: non-finite gradient");
        }
    }
}

}  // namespace faopd
