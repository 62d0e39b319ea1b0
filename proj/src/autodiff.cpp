#include "mlct/autodiff.hpp"

#include <cmath>
#include <stdexcept>

namespace mlct::ad {

Var Tape::push(Mat value, bool requires_grad,
               std::function<void(Tape&, const Mat&)> backprop) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    n.backprop = std::move(backprop);
    nodes_.push_back(std::move(n));
    return static_cast<Var>(nodes_.size() - 1);
}

void Tape::accumulate(Var v, const Mat& g) {
    Node& n = nodes_[v];
    if (!n.requires_grad) return;
    if (!n.grad_alloc) {
        n.grad = Mat::Zero(n.value.rows(), n.value.cols());
        n.grad_alloc = true;
    }
    n.grad += g;
}

Var Tape::leaf(Mat value, bool requires_grad) {
    return push(std::move(value), requires_grad, nullptr);
}

Var Tape::matmul(Var a, Var b) {
    const Mat& A = value(a);
    const Mat& B = value(b);
    if (A.cols() != B.rows()) throw std::invalid_argument("matmul: shape mismatch");
    bool rg = requires_grad(a) || requires_grad(b);
    return push(A * B, rg, [a, b](Tape& t, const Mat& g) {
        t.accumulate(a, g * t.value(b).transpose());
        t.accumulate(b, t.value(a).transpose() * g);
    });
}

Var Tape::transpose(Var a) {
    return push(value(a).transpose(), requires_grad(a), [a](Tape& t, const Mat& g) {
        t.accumulate(a, g.transpose());
    });
}

Var Tape::add(Var a, Var b) {
    if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols())
        throw std::invalid_argument("add: shape mismatch");
    bool rg = requires_grad(a) || requires_grad(b);
    return push(value(a) + value(b), rg, [a, b](Tape& t, const Mat& g) {
        t.accumulate(a, g);
        t.accumulate(b, g);
    });
}

Var Tape::sub(Var a, Var b) {
    if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols())
        throw std::invalid_argument("sub: shape mismatch");
    bool rg = requires_grad(a) || requires_grad(b);
    return push(value(a) - value(b), rg, [a, b](Tape& t, const Mat& g) {
        t.accumulate(a, g);
        t.accumulate(b, -g);
    });
}

Var Tape::scale(Var a, double s) {
    return push(s * value(a), requires_grad(a), [a, s](Tape& t, const Mat& g) {
        t.accumulate(a, s * g);
    });
}

Var Tape::hadamard(Var a, Var b) {
    if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols())
        throw std::invalid_argument("hadamard: shape mismatch");
    bool rg = requires_grad(a) || requires_grad(b);
    return push(value(a).cwiseProduct(value(b)), rg, [a, b](Tape& t, const Mat& g) {
        t.accumulate(a, g.cwiseProduct(t.value(b)));
        t.accumulate(b, g.cwiseProduct(t.value(a)));
    });
}

Var Tape::tanh(Var a) {
    Mat y = value(a).array().tanh().matrix();
    return push(y, requires_grad(a), [a, y](Tape& t, const Mat& g) {
        t.accumulate(a, g.cwiseProduct((1.0 - y.array().square()).matrix()));
    });
}

Var Tape::silu(Var a) {
    const Mat& x = value(a);
    Mat sig = (1.0 / (1.0 + (-x.array()).exp())).matrix();
    Mat y = x.cwiseProduct(sig);
    return push(y, requires_grad(a), [a, sig](Tape& t, const Mat& g) {
        const Mat& x = t.value(a);
        Mat d = sig.array() * (1.0 + x.array() * (1.0 - sig.array()));
        t.accumulate(a, g.cwiseProduct(d));
    });
}

Var Tape::add_row(Var a, Var row) {
    const Mat& A = value(a);
    const Mat& R = value(row);
    if (R.rows() != 1 || R.cols() != A.cols())
        throw std::invalid_argument("add_row: row must be 1 x cols(a)");
    Mat y = A.rowwise() + R.row(0);
    bool rg = requires_grad(a) || requires_grad(row);
    return push(y, rg, [a, row](Tape& t, const Mat& g) {
        t.accumulate(a, g);
        t.accumulate(row, g.colwise().sum());
    });
}

Var Tape::broadcast_rows(Var row, int m) {
    const Mat& R = value(row);
    if (R.rows() != 1) throw std::invalid_argument("broadcast_rows: expect 1xN");
    Mat y = R.replicate(m, 1);
    return push(y, requires_grad(row), [row](Tape& t, const Mat& g) {
        t.accumulate(row, g.colwise().sum());
    });
}

Var Tape::row_scale(Var a, const Vec& s) {
    const Mat& A = value(a);
    if (s.size() != A.rows()) throw std::invalid_argument("row_scale: size mismatch");
    Mat y = s.asDiagonal() * A;
    return push(y, requires_grad(a), [a, s](Tape& t, const Mat& g) {
        t.accumulate(a, s.asDiagonal() * g);
    });
}

Var Tape::mean_rows(Var a) {
    const Mat& A = value(a);
    int m = static_cast<int>(A.rows());
    Mat y = A.colwise().mean();
    return push(y, requires_grad(a), [a, m](Tape& t, const Mat& g) {
        t.accumulate(a, g.replicate(m, 1) / static_cast<double>(m));
    });
}

Var Tape::cumsum_rows(Var a) {
    const Mat& A = value(a);
    Mat y = A;
    for (Eigen::Index i = 1; i < y.rows(); ++i) y.row(i) += y.row(i - 1);
    return push(y, requires_grad(a), [a](Tape& t, const Mat& g) {
        Mat d = g;
        for (Eigen::Index i = d.rows() - 2; i >= 0; --i) d.row(i) += d.row(i + 1);
        t.accumulate(a, d);
    });
}

Var Tape::softmax_rows(Var a) {
    const Mat& A = value(a);
    Mat y(A.rows(), A.cols());
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
        Eigen::RowVectorXd r = A.row(i);
        double m = r.maxCoeff();
        Eigen::RowVectorXd e = (r.array() - m).exp();
        y.row(i) = e / e.sum();
    }
    return push(y, requires_grad(a), [a, y](Tape& t, const Mat& g) {
        Mat d(y.rows(), y.cols());
        for (Eigen::Index i = 0; i < y.rows(); ++i) {
            double dot = g.row(i).dot(y.row(i));
            d.row(i) = (y.row(i).array() * (g.row(i).array() - dot)).matrix();
        }
        t.accumulate(a, d);
    });
}

Var Tape::quantize_ste(Var a, int l) {
    if (l < 1) throw std::invalid_argument("quantize_ste: level must be >= 1");
    const Mat& A = value(a);
    double L = static_cast<double>(l);
    Mat y = (A.array() * L).round() / L;
    return push(y, requires_grad(a), [a](Tape& t, const Mat& g) {
        t.accumulate(a, g);  // straight-through
    });
}

Var Tape::smooth_l1(Var a, Var b) {
    const Mat& A = value(a);
    const Mat& B = value(b);
    if (A.rows() != B.rows() || A.cols() != B.cols())
        throw std::invalid_argument("smooth_l1: shape mismatch");
    Mat e = A - B;
    double n = static_cast<double>(e.size());
    double acc = 0.0;
    for (Eigen::Index j = 0; j < e.cols(); ++j)
        for (Eigen::Index i = 0; i < e.rows(); ++i) {
            double d = std::abs(e(i, j));
            acc += d < 1.0 ? 0.5 * d * d : d - 0.5;
        }
    Mat y(1, 1);
    y(0, 0) = acc / n;
    bool rg = requires_grad(a) || requires_grad(b);
    return push(y, rg, [a, b, e, n](Tape& t, const Mat& g) {
        Mat d = e.unaryExpr([](double v) {
            return std::abs(v) < 1.0 ? v : (v > 0 ? 1.0 : -1.0);
        });
        d *= g(0, 0) / n;
        t.accumulate(a, d);
        t.accumulate(b, -d);
    });
}

Var Tape::pseudo_huber_rows(Var a, Var b, double c, const Vec& w) {
    const Mat& A = value(a);
    const Mat& B = value(b);
    if (A.rows() != B.rows() || A.cols() != B.cols())
        throw std::invalid_argument("pseudo_huber_rows: shape mismatch");
    if (w.size() != A.rows())
        throw std::invalid_argument("pseudo_huber_rows: weight size mismatch");
    if (!(c > 0.0)) throw std::invalid_argument("pseudo_huber_rows: c <= 0");
    Mat e = A - B;
    Vec root(e.rows());
    double acc = 0.0;
    for (Eigen::Index i = 0; i < e.rows(); ++i) {
        root(i) = std::sqrt(e.row(i).squaredNorm() + c * c);
        acc += w(i) * (root(i) - c);
    }
    Mat y(1, 1);
    y(0, 0) = acc / static_cast<double>(e.rows());
    bool rg = requires_grad(a) || requires_grad(b);
    return push(y, rg, [a, b, e, w, root](Tape& t, const Mat& g) {
        Mat d = e;
        double m = static_cast<double>(e.rows());
        for (Eigen::Index i = 0; i < d.rows(); ++i)
            d.row(i) *= g(0, 0) * w(i) / (root(i) * m);
        t.accumulate(a, d);
        t.accumulate(b, -d);
    });
}

Var Tape::sum_squares(Var a) {
    const Mat& A = value(a);
    Mat y(1, 1);
    y(0, 0) = 0.5 * A.squaredNorm();
    return push(y, requires_grad(a), [a](Tape& t, const Mat& g) {
        t.accumulate(a, g(0, 0) * t.value(a));
    });
}

Var Tape::add_scalars(Var a, Var b) { return add(a, b); }

void Tape::backward(Var loss) {
    if (value(loss).size() != 1)
        throw std::invalid_argument("backward: loss must be a 1x1 scalar");
    Mat one(1, 1);
    one(0, 0) = 1.0;
    nodes_[loss].grad = one;
    nodes_[loss].grad_alloc = true;
    for (Var v = loss; v >= 0; --v) {
        Node& n = nodes_[v];
        if (!n.grad_alloc || !n.backprop) continue;
        if (!n.requires_grad) continue;
        n.backprop(*this, n.grad);
    }
}

}  // namespace mlct::ad
