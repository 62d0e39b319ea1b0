#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace mlct::ad {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Tape-based reverse-mode differentiation over dense matrices.
// Nodes are created in topological order; backward() walks them in reverse.
// A Var is an index into the tape.
using Var = int;

class Tape {
public:
    Var leaf(Mat value, bool requires_grad = false);

    const Mat& value(Var v) const { return nodes_[v].value; }
    const Mat& grad(Var v) const { return nodes_[v].grad; }
    bool requires_grad(Var v) const { return nodes_[v].requires_grad; }
    std::size_t size() const { return nodes_.size(); }

    Var matmul(Var a, Var b);
    Var transpose(Var a);
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var scale(Var a, double s);
    Var hadamard(Var a, Var b);
    Var tanh(Var a);
    Var silu(Var a);
    // broadcast a 1xN row vector onto every row of an MxN matrix
    Var add_row(Var a, Var row);
    // replicate a 1xN row vector into M rows
    Var broadcast_rows(Var row, int m);
    // diag(s) * a with constant per-row scales (no grad w.r.t. s)
    Var row_scale(Var a, const Vec& s);
    Var mean_rows(Var a);          // MxN -> 1xN column means
    Var cumsum_rows(Var a);        // running sum down each column
    Var softmax_rows(Var a);
    // round(l * x)/l with straight-through gradient (identity backward)
    Var quantize_ste(Var a, int l);

    // scalar (1x1) losses
    Var smooth_l1(Var a, Var b);   // mean over elements, threshold 1
    // mean over rows of w_i * (sqrt(|a_i - b_i|^2 + c^2) - c)
    Var pseudo_huber_rows(Var a, Var b, double c, const Vec& row_weights);
    Var sum_squares(Var a);        // 0.5 * sum a^2
    Var add_scalars(Var a, Var b); // both 1x1

    // seed d(loss)=1 and propagate; loss must be 1x1
    void backward(Var loss);

private:
    struct Node {
        Mat value;
        Mat grad;
        bool requires_grad = false;
        bool grad_alloc = false;
        std::function<void(Tape&, const Mat&)> backprop;  // upstream grad -> parents
    };

    Var push(Mat value, bool requires_grad,
             std::function<void(Tape&, const Mat&)> backprop);
    void accumulate(Var v, const Mat& g);

    std::vector<Node> nodes_;
};

}  // namespace mlct::ad
