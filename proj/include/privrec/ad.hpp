#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace privrec::ad {

template <typename S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using VecX = Eigen::Matrix<S, Eigen::Dynamic, 1>;

// Reverse-mode tape over dense matrices. Values are computed eagerly as ops
// are recorded; backward() walks the record once, accumulating adjoints.
// Scalars are 1x1 matrices. The tape is rebuilt per training step.
template <typename S>
class Tape {
 public:
  using Mat = MatX<S>;
  using Vec = VecX<S>;

  int leaf(Mat value, bool needs_grad = true) {
    Node n;
    n.op = Op::kLeaf;
    n.needs_grad = needs_grad;
    n.value = std::move(value);
    return push(std::move(n));
  }

  // out = A * B
  int matmul(int a, int b) {
    check_cols_rows(a, b, "matmul");
    Node n;
    n.op = Op::kMatmul;
    n.a = a;
    n.b = b;
    n.value.noalias() = value(a) * value(b);
    return push(std::move(n));
  }

  int add(int a, int b) {
    check_same_shape(a, b, "add");
    Node n;
    n.op = Op::kAdd;
    n.a = a;
    n.b = b;
    n.value = value(a) + value(b);
    return push(std::move(n));
  }

  int sub(int a, int b) {
    check_same_shape(a, b, "sub");
    Node n;
    n.op = Op::kSub;
    n.a = a;
    n.b = b;
    n.value = value(a) - value(b);
    return push(std::move(n));
  }

  // out.col(j) = A.col(j) + bias for a column-vector bias
  int add_bias(int a, int bias) {
    if (value(bias).cols() != 1 || value(bias).rows() != value(a).rows()) {
      throw std::invalid_argument("add_bias: bias must be a matching column vector");
    }
    Node n;
    n.op = Op::kAddBias;
    n.a = a;
    n.b = bias;
    n.value = value(a).colwise() + value(bias).col(0);
    return push(std::move(n));
  }

  // out = A + s for a 1x1 scalar node s
  int add_scalar(int a, int scalar) {
    if (value(scalar).size() != 1) {
      throw std::invalid_argument("add_scalar: second input must be 1x1");
    }
    Node n;
    n.op = Op::kAddScalar;
    n.a = a;
    n.b = scalar;
    n.value = value(a).array() + value(scalar)(0, 0);
    return push(std::move(n));
  }

  int relu(int a) {
    Node n;
    n.op = Op::kRelu;
    n.a = a;
    n.value = value(a).cwiseMax(S(0));
    return push(std::move(n));
  }

  // min(x, 1); with relu upstream this yields the [0,1] clip
  int clamp_max1(int a) {
    Node n;
    n.op = Op::kClampMax1;
    n.a = a;
    n.value = value(a).cwiseMin(S(1));
    return push(std::move(n));
  }

  int logistic(int a) {
    Node n;
    n.op = Op::kLogistic;
    n.a = a;
    n.value = value(a).unaryExpr([](S x) { return S(1) / (S(1) + std::exp(-x)); });
    return push(std::move(n));
  }

  int hcat(int a, int b) {
    if (value(a).rows() != value(b).rows()) {
      throw std::invalid_argument("hcat: row mismatch");
    }
    Node n;
    n.op = Op::kHcat;
    n.a = a;
    n.b = b;
    n.value.resize(value(a).rows(), value(a).cols() + value(b).cols());
    n.value << value(a), value(b);
    return push(std::move(n));
  }

  int gather_cols(int a, std::vector<int> ids) {
    Node n;
    n.op = Op::kGatherCols;
    n.a = a;
    n.value.resize(value(a).rows(), static_cast<Eigen::Index>(ids.size()));
    for (size_t j = 0; j < ids.size(); ++j) n.value.col(j) = value(a).col(ids[j]);
    n.idx_a = std::move(ids);
    return push(std::move(n));
  }

  // out.col(j) = [A.col(ia[j]); B.col(ib[j])]
  int vstack_gather(int a, int b, std::vector<int> ia, std::vector<int> ib) {
    if (ia.size() != ib.size()) throw std::invalid_argument("vstack_gather: index mismatch");
    Node n;
    n.op = Op::kVstackGather;
    n.a = a;
    n.b = b;
    const Eigen::Index ra = value(a).rows(), rb = value(b).rows();
    n.value.resize(ra + rb, static_cast<Eigen::Index>(ia.size()));
    for (size_t j = 0; j < ia.size(); ++j) {
      n.value.col(j).head(ra) = value(a).col(ia[j]);
      n.value.col(j).tail(rb) = value(b).col(ib[j]);
    }
    n.idx_a = std::move(ia);
    n.idx_b = std::move(ib);
    return push(std::move(n));
  }

  int cols_range(int a, int start, int len) {
    Node n;
    n.op = Op::kColsRange;
    n.a = a;
    n.aux_i = start;
    n.value = value(a).middleCols(start, len);
    return push(std::move(n));
  }

  // out = v^T * A for a column-vector node v
  int row_vec_mat(int v, int a) {
    if (value(v).cols() != 1 || value(v).rows() != value(a).rows()) {
      throw std::invalid_argument("row_vec_mat: v must be a matching column vector");
    }
    Node n;
    n.op = Op::kRowVecMat;
    n.a = v;
    n.b = a;
    n.value.noalias() = value(v).transpose() * value(a);
    return push(std::move(n));
  }

  // Softmax within each segment of a 1xP row; seg[j] in [0, num_segments).
  int segment_softmax(int a, std::vector<int> seg, int num_segments) {
    if (value(a).rows() != 1 || value(a).cols() != static_cast<Eigen::Index>(seg.size())) {
      throw std::invalid_argument("segment_softmax: need 1xP input matching seg");
    }
    Node n;
    n.op = Op::kSegmentSoftmax;
    n.a = a;
    n.aux_i = num_segments;
    const auto& x = value(a);
    std::vector<S> seg_max(num_segments, std::numeric_limits<S>::lowest());
    for (size_t j = 0; j < seg.size(); ++j)
      seg_max[seg[j]] = std::max(seg_max[seg[j]], x(0, j));
    n.value.resize(1, x.cols());
    std::vector<S> seg_sum(num_segments, S(0));
    for (size_t j = 0; j < seg.size(); ++j) {
      n.value(0, j) = std::exp(x(0, j) - seg_max[seg[j]]);
      seg_sum[seg[j]] += n.value(0, j);
    }
    for (size_t j = 0; j < seg.size(); ++j) n.value(0, j) /= seg_sum[seg[j]];
    n.idx_a = std::move(seg);
    return push(std::move(n));
  }

  // out.col(seg[j]) += w(0,j) * A.col(ids[j]); one output column per segment.
  int segment_weighted_cols(int a, std::vector<int> ids, int w, std::vector<int> seg,
                            int num_segments) {
    if (ids.size() != seg.size() ||
        value(w).cols() != static_cast<Eigen::Index>(ids.size()) || value(w).rows() != 1) {
      throw std::invalid_argument("segment_weighted_cols: shape mismatch");
    }
    Node n;
    n.op = Op::kSegmentWeightedCols;
    n.a = a;
    n.b = w;
    n.aux_i = num_segments;
    n.value = Mat::Zero(value(a).rows(), num_segments);
    for (size_t j = 0; j < ids.size(); ++j) {
      n.value.col(seg[j]) += value(w)(0, j) * value(a).col(ids[j]);
    }
    n.idx_a = std::move(ids);
    n.idx_b = std::move(seg);
    return push(std::move(n));
  }

  // Scalar: sum_j log(1 + exp(-x_j)) over a 1xB row, numerically stable.
  int softplus_neg_sum(int a) {
    Node n;
    n.op = Op::kSoftplusNegSum;
    n.a = a;
    S total = 0;
    for (Eigen::Index j = 0; j < value(a).cols(); ++j) {
      const S s = value(a)(0, j);
      total += s >= S(0) ? std::log1p(std::exp(-s)) : -s + std::log1p(std::exp(s));
    }
    n.value = Mat::Constant(1, 1, total);
    return push(std::move(n));
  }

  // Scalar: sum_j (ln 2 - x_j/2 + x_j^2/8) over a 1xB row.
  int taylor_sum(int a) {
    Node n;
    n.op = Op::kTaylorSum;
    n.a = a;
    S total = 0;
    for (Eigen::Index j = 0; j < value(a).cols(); ++j) {
      const S s = value(a)(0, j);
      total += S(std::log(2.0)) - s / S(2) + s * s / S(8);
    }
    n.value = Mat::Constant(1, 1, total);
    return push(std::move(n));
  }

  // Scalar: frac * (n1 . h + h^T N2 h) for a column-vector node h; the noise
  // tensors are constants.
  int quad_noise(int h, Vec n1, Mat n2, S frac) {
    if (value(h).cols() != 1 || value(h).rows() != n1.size() || n2.rows() != n1.size() ||
        n2.cols() != n1.size()) {
      throw std::invalid_argument("quad_noise: shape mismatch");
    }
    Node n;
    n.op = Op::kQuadNoise;
    n.a = h;
    const Vec hv = value(h).col(0);
    const S val = frac * (n1.dot(hv) + hv.dot(n2 * hv));
    n.value = Mat::Constant(1, 1, val);
    n.aux_vec = std::move(n1);
    n.aux_mat = std::move(n2);
    n.aux_s = frac;
    return push(std::move(n));
  }

  // Scalar: sum of squared entries.
  int sum_sq(int a) {
    Node n;
    n.op = Op::kSumSq;
    n.a = a;
    n.value = Mat::Constant(1, 1, value(a).squaredNorm());
    return push(std::move(n));
  }

  // Scalar: sum_i coeff_i * node_i over 1x1 nodes.
  int scale_add(std::vector<std::pair<int, S>> terms) {
    Node n;
    n.op = Op::kScaleAdd;
    S total = 0;
    for (const auto& [id, c] : terms) {
      if (value(id).size() != 1) throw std::invalid_argument("scale_add: non-scalar term");
      total += c * value(id)(0, 0);
    }
    n.value = Mat::Constant(1, 1, total);
    n.terms = std::move(terms);
    return push(std::move(n));
  }

  const Mat& value(int id) const { return nodes_[id].value; }
  const Mat& grad(int id) const { return nodes_[id].grad; }
  S scalar(int id) const { return nodes_[id].value(0, 0); }
  int size() const { return static_cast<int>(nodes_.size()); }

  // Seeds d(loss)/d(loss) = 1 and accumulates adjoints for every node.
  void backward(int loss) {
    if (nodes_[loss].value.size() != 1) {
      throw std::invalid_argument("backward: loss must be scalar");
    }
    for (auto& n : nodes_) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
    nodes_[loss].grad(0, 0) = S(1);
    for (int id = loss; id >= 0; --id) step_backward(nodes_[id]);
  }

 private:
  enum class Op {
    kLeaf,
    kMatmul,
    kAdd,
    kSub,
    kAddBias,
    kAddScalar,
    kRelu,
    kClampMax1,
    kLogistic,
    kHcat,
    kGatherCols,
    kVstackGather,
    kColsRange,
    kRowVecMat,
    kSegmentSoftmax,
    kSegmentWeightedCols,
    kSoftplusNegSum,
    kTaylorSum,
    kQuadNoise,
    kSumSq,
    kScaleAdd,
  };

  struct Node {
    Op op;
    int a = -1, b = -1;
    bool needs_grad = true;
    Mat value, grad;
    std::vector<int> idx_a, idx_b;
    int aux_i = 0;
    S aux_s = 0;
    Vec aux_vec;
    Mat aux_mat;
    std::vector<std::pair<int, S>> terms;
  };

  int push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  Mat& g(int id) { return nodes_[id].grad; }

  void check_same_shape(int a, int b, const char* who) const {
    if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols()) {
      throw std::invalid_argument(std::string(who) + ": shape mismatch");
    }
  }
  void check_cols_rows(int a, int b, const char* who) const {
    if (value(a).cols() != value(b).rows()) {
      throw std::invalid_argument(std::string(who) + ": inner-dimension mismatch");
    }
  }

  void step_backward(Node& n) {
    const Mat& gout = n.grad;
    switch (n.op) {
      case Op::kLeaf:
        break;
      case Op::kMatmul:
        g(n.a).noalias() += gout * value(n.b).transpose();
        g(n.b).noalias() += value(n.a).transpose() * gout;
        break;
      case Op::kAdd:
        g(n.a) += gout;
        g(n.b) += gout;
        break;
      case Op::kSub:
        g(n.a) += gout;
        g(n.b) -= gout;
        break;
      case Op::kAddBias:
        g(n.a) += gout;
        g(n.b).col(0) += gout.rowwise().sum();
        break;
      case Op::kAddScalar:
        g(n.a) += gout;
        g(n.b)(0, 0) += gout.sum();
        break;
      case Op::kRelu:
        g(n.a).array() +=
            gout.array() * (value(n.a).array() > S(0)).template cast<S>();
        break;
      case Op::kClampMax1:
        g(n.a).array() +=
            gout.array() * (value(n.a).array() < S(1)).template cast<S>();
        break;
      case Op::kLogistic:
        g(n.a).array() += gout.array() * n.value.array() * (S(1) - n.value.array());
        break;
      case Op::kHcat: {
        const Eigen::Index ca = value(n.a).cols();
        g(n.a) += gout.leftCols(ca);
        g(n.b) += gout.rightCols(gout.cols() - ca);
        break;
      }
      case Op::kGatherCols:
        for (size_t j = 0; j < n.idx_a.size(); ++j) {
          g(n.a).col(n.idx_a[j]) += gout.col(static_cast<Eigen::Index>(j));
        }
        break;
      case Op::kVstackGather: {
        const Eigen::Index ra = value(n.a).rows();
        for (size_t j = 0; j < n.idx_a.size(); ++j) {
          const auto col = gout.col(static_cast<Eigen::Index>(j));
          g(n.a).col(n.idx_a[j]) += col.head(ra);
          g(n.b).col(n.idx_b[j]) += col.tail(col.size() - ra);
        }
        break;
      }
      case Op::kColsRange:
        g(n.a).middleCols(n.aux_i, gout.cols()) += gout;
        break;
      case Op::kRowVecMat:
        g(n.a).noalias() += value(n.b) * gout.transpose();
        g(n.b).noalias() += value(n.a) * gout;
        break;
      case Op::kSegmentSoftmax: {
        // d a_j = alpha_j * (g_j - sum_{k in seg} g_k alpha_k)
        std::vector<S> seg_dot(n.aux_i, S(0));
        for (size_t j = 0; j < n.idx_a.size(); ++j) {
          seg_dot[n.idx_a[j]] += gout(0, static_cast<Eigen::Index>(j)) * n.value(0, j);
        }
        for (size_t j = 0; j < n.idx_a.size(); ++j) {
          g(n.a)(0, static_cast<Eigen::Index>(j)) +=
              n.value(0, j) * (gout(0, static_cast<Eigen::Index>(j)) - seg_dot[n.idx_a[j]]);
        }
        break;
      }
      case Op::kSegmentWeightedCols:
        for (size_t j = 0; j < n.idx_a.size(); ++j) {
          const auto gcol = gout.col(n.idx_b[j]);
          g(n.a).col(n.idx_a[j]) += value(n.b)(0, static_cast<Eigen::Index>(j)) * gcol;
          g(n.b)(0, static_cast<Eigen::Index>(j)) += value(n.a).col(n.idx_a[j]).dot(gcol);
        }
        break;
      case Op::kSoftplusNegSum: {
        const S gs = gout(0, 0);
        for (Eigen::Index j = 0; j < value(n.a).cols(); ++j) {
          const S s = value(n.a)(0, j);
          const S sig = S(1) / (S(1) + std::exp(-s));
          g(n.a)(0, j) += gs * (sig - S(1));
        }
        break;
      }
      case Op::kTaylorSum: {
        const S gs = gout(0, 0);
        for (Eigen::Index j = 0; j < value(n.a).cols(); ++j) {
          g(n.a)(0, j) += gs * (S(-0.5) + value(n.a)(0, j) / S(4));
        }
        break;
      }
      case Op::kQuadNoise: {
        const Vec hv = value(n.a).col(0);
        g(n.a).col(0) +=
            gout(0, 0) * n.aux_s * (n.aux_vec + S(2) * (n.aux_mat * hv));
        break;
      }
      case Op::kSumSq:
        g(n.a) += S(2) * gout(0, 0) * value(n.a);
        break;
      case Op::kScaleAdd:
        for (const auto& [id, c] : n.terms) g(id)(0, 0) += c * gout(0, 0);
        break;
    }
  }

  std::vector<Node> nodes_;
};

}  // namespace privrec::ad
