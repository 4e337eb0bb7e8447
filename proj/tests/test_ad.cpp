#include <cmath>
#include <functional>
#include <vector>

#include "doctest.h"
#include "privrec/ad.hpp"
#include "privrec/rng.hpp"

using namespace privrec;
using Mat = ad::MatX<double>;
using Vec = ad::VecX<double>;

namespace {

// Builds the graph from leaf values and returns the scalar loss node; called
// fresh for every finite-difference probe.
using Builder = std::function<int(ad::Tape<double>&, const std::vector<int>&)>;

double evaluate(const Builder& build, const std::vector<Mat>& leaf_values) {
  ad::Tape<double> tape;
  std::vector<int> ids;
  for (const Mat& v : leaf_values) ids.push_back(tape.leaf(v));
  const int loss = build(tape, ids);
  return tape.scalar(loss);
}

// Central finite differences on every entry of every leaf against the tape
// gradients. `tol` is an absolute-plus-relative bound.
void gradcheck(const Builder& build, std::vector<Mat> leaf_values, double tol = 1e-6) {
  ad::Tape<double> tape;
  std::vector<int> ids;
  for (const Mat& v : leaf_values) ids.push_back(tape.leaf(v));
  const int loss = build(tape, ids);
  REQUIRE(tape.value(loss).size() == 1);
  tape.backward(loss);

  const double h = 1e-6;
  for (size_t l = 0; l < leaf_values.size(); ++l) {
    const Mat& g = tape.grad(ids[l]);
    REQUIRE(g.rows() == leaf_values[l].rows());
    REQUIRE(g.cols() == leaf_values[l].cols());
    for (Eigen::Index r = 0; r < leaf_values[l].rows(); ++r) {
      for (Eigen::Index c = 0; c < leaf_values[l].cols(); ++c) {
        std::vector<Mat> probe = leaf_values;
        probe[l](r, c) += h;
        const double up = evaluate(build, probe);
        probe[l](r, c) -= 2 * h;
        const double down = evaluate(build, probe);
        const double fd = (up - down) / (2 * h);
        INFO("leaf ", l, " entry (", r, ",", c, "): tape=", g(r, c), " fd=", fd);
        CHECK(std::abs(g(r, c) - fd) <= tol * std::max(1.0, std::abs(fd)));
      }
    }
  }
}

Mat random_matrix(int rows, int cols, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Mat m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = rng.uniform(lo, hi);
  }
  return m;
}

// Keeps entries away from the ReLU/clamp kinks so finite differences are valid.
Mat away_from(Mat m, double kink, double margin) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (std::abs(m(r, c) - kink) < margin) {
        m(r, c) = kink + (m(r, c) >= kink ? margin : -margin);
      }
    }
  }
  return m;
}

}  // namespace

TEST_SUITE("ad") {

TEST_CASE("values are computed eagerly and match Eigen") {
  ad::Tape<double> tape;
  Mat a(2, 2), b(2, 2);
  a << 1, 2, 3, 4;
  b << 5, 6, 7, 8;
  const int ia = tape.leaf(a), ib = tape.leaf(b);
  CHECK(tape.value(tape.matmul(ia, ib)).isApprox(a * b));
  CHECK(tape.value(tape.add(ia, ib)).isApprox(a + b));
  CHECK(tape.value(tape.sub(ia, ib)).isApprox(a - b));
  CHECK(tape.scalar(tape.sum_sq(ia)) == doctest::Approx(30.0));
  CHECK_THROWS_AS(tape.matmul(ia, tape.leaf(Mat::Zero(3, 2))), std::invalid_argument);
  CHECK_THROWS_AS(tape.add(ia, tape.leaf(Mat::Zero(3, 2))), std::invalid_argument);
}

TEST_CASE("gradcheck: matmul / add / sub chain") {
  Rng rng(1);
  gradcheck(
      [](ad::Tape<double>& t, const std::vector<int>& id) {
        return t.sum_sq(t.sub(t.matmul(id[0], id[1]), t.add(id[2], id[2])));
      },
      {random_matrix(3, 4, rng), random_matrix(4, 2, rng), random_matrix(3, 2, rng)});
}

TEST_CASE("gradcheck: add_bias and add_scalar") {
  Rng rng(2);
  gradcheck(
      [](ad::Tape<double>& t, const std::vector<int>& id) {
        return t.sum_sq(t.add_scalar(t.add_bias(id[0], id[1]), id[2]));
      },
      {random_matrix(3, 5, rng), random_matrix(3, 1, rng), random_matrix(1, 1, rng)});
}

TEST_CASE("gradcheck: relu away from the kink") {
  Rng rng(3);
  gradcheck(
      [](ad::Tape<double>& t, const std::vector<int>& id) {
        return t.sum_sq(t.relu(id[0]));
      },
      {away_from(random_matrix(4, 4, rng), 0.0, 1e-3)});
}

TEST_CASE("gradcheck: clamp_max1 away from the kink") {
  Rng rng(4);
  gradcheck(
      [](ad::Tape<double>& t, const std::vector<int>& id) {
        return t.sum_sq(t.clamp_max1(id[0]));
      },
      {away_from(random_matrix(4, 4, rng, 0.0, 2.0), 1.0, 1e-3)});
}

TEST_CASE("clamped entries pass zero gradient") {
  ad::Tape<double> tape;
  Mat a(1, 2);
  a << 2.0, 0.5;  // first entry clamps at 1, second passes through
  const int ia = tape.leaf(a);
  const int loss = tape.sum_sq(tape.clamp_max1(ia));
  tape.backward(loss);
  CHECK(tape.grad(ia)(0, 0) == 0.0);
  CHECK(tape.grad(ia)(0, 1) == doctest::Approx(1.0));
  // Negative side: relu kills gradients for negative inputs.
  ad::Tape<double> tape2;
  Mat b(1, 2);
  b << -0.5, 0.5;
  const int ib = tape2.leaf(b);
  const int loss2 = tape2.sum_sq(tape2.relu(ib));
  tape2.backward(loss2);
  CHECK(tape2.grad(ib)(0, 0) == 0.0);
  CHECK(tape2.grad(ib)(0, 1) == doctest::Approx(1.0));
}

TEST_CASE("gradcheck: logistic") {
  Rng rng(5);
  gradcheck(
      [](ad::Tape<double>& t, const std::vector<int>& id) {
        return t.sum_sq(t.logistic(id[0]));
      },
      {random_matrix(3, 3, rng, -2.0, 2.0)});
}

TEST_CASE("gradcheck: hcat, gather_cols and cols_range") {
  Rng rng(6);
  gradcheck(
      [](ad::Tape<double>& t, const std::vector<int>& id) {
        const int cat = t.hcat(id[0], id[1]);                 // 3 x 5
        const int picked = t.gather_cols(cat, {4, 0, 2, 0});  // repeats allowed
        return t.sum_sq(t.cols_range(picked, 1, 3));
      },
      {random_matrix(3, 2, rng), random_matrix(3, 3, rng)});
}

TEST_CASE("gradcheck: vstack_gather and row_vec_mat") {
  Rng rng(7);
  gradcheck(
      [](ad::Tape<double>& t, const std::vector<int>& id) {
        const int g = t.vstack_gather(id[0], id[1], {0, 2, 1}, {1, 1, 0});  // 4 x 3
        return t.sum_sq(t.row_vec_mat(id[2], g));
      },
      {random_matrix(2, 3, rng), random_matrix(2, 2, rng), random_matrix(4, 1, rng)});
}

TEST_CASE("gradcheck: segment softmax with weighted column reduction") {
  Rng rng(8);
  const std::vector<int> seg = {0, 0, 0, 1, 1};
  const std::vector<int> ids = {0, 2, 1, 3, 2};
  gradcheck(
      [&](ad::Tape<double>& t, const std::vector<int>& id) {
        const int alpha = t.segment_softmax(id[0], seg, 2);
        const int agg = t.segment_weighted_cols(id[1], ids, alpha, seg, 2);
        return t.sum_sq(agg);
      },
      {random_matrix(1, 5, rng), random_matrix(3, 4, rng)});
}

TEST_CASE("segment softmax normalizes within each segment") {
  ad::Tape<double> tape;
  Mat s(1, 5);
  s << 0.3, -1.0, 2.0, 5.0, 5.0;
  const int alpha = tape.segment_softmax(tape.leaf(s), {0, 0, 0, 1, 1}, 2);
  const Mat& a = tape.value(alpha);
  CHECK(a(0, 0) + a(0, 1) + a(0, 2) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(a(0, 3) + a(0, 4) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(a(0, 3) == doctest::Approx(0.5));
  for (int j = 0; j < 5; ++j) CHECK(a(0, j) > 0.0);
  // Shift invariance inside a segment.
  ad::Tape<double> tape2;
  Mat shifted = s;
  shifted.leftCols(3).array() += 100.0;
  const int alpha2 = tape2.segment_softmax(tape2.leaf(shifted), {0, 0, 0, 1, 1}, 2);
  CHECK(tape2.value(alpha2).isApprox(a, 1e-12));
}

TEST_CASE("gradcheck: softplus_neg_sum matches the exact pairwise loss") {
  Rng rng(9);
  const Mat s = random_matrix(1, 6, rng, -3.0, 3.0);
  ad::Tape<double> tape;
  const int id = tape.leaf(s);
  const int loss = tape.softplus_neg_sum(id);
  double expect = 0.0;
  for (int j = 0; j < 6; ++j) expect += std::log1p(std::exp(-s(0, j)));
  CHECK(tape.scalar(loss) == doctest::Approx(expect).epsilon(1e-12));
  gradcheck(
      [](ad::Tape<double>& t, const std::vector<int>& id2) {
        return t.softplus_neg_sum(id2[0]);
      },
      {s});
}

TEST_CASE("gradcheck: taylor_sum matches the truncated loss") {
  Rng rng(10);
  const Mat s = random_matrix(1, 5, rng);
  ad::Tape<double> tape;
  const int loss = tape.taylor_sum(tape.leaf(s));
  double expect = 0.0;
  for (int j = 0; j < 5; ++j) {
    expect += std::log(2.0) - 0.5 * s(0, j) + 0.125 * s(0, j) * s(0, j);
  }
  CHECK(tape.scalar(loss) == doctest::Approx(expect).epsilon(1e-12));
  gradcheck(
      [](ad::Tape<double>& t, const std::vector<int>& id) { return t.taylor_sum(id[0]); },
      {s});
}

TEST_CASE("gradcheck: quad_noise routes gradient to h only") {
  Rng rng(11);
  Vec n1(3);
  n1 << 0.2, -0.4, 0.1;
  Mat n2(3, 3);
  n2 << 0.3, 0.1, 0.0, 0.1, -0.2, 0.05, 0.0, 0.05, 0.4;
  const double frac = 0.25;
  const Mat h = random_matrix(3, 1, rng);
  ad::Tape<double> tape;
  const int ih = tape.leaf(h);
  const int loss = tape.quad_noise(ih, n1, n2, frac);
  const double expect = frac * (n1.dot(h.col(0)) + (h.col(0).transpose() * n2 * h.col(0))(0));
  CHECK(tape.scalar(loss) == doctest::Approx(expect).epsilon(1e-12));
  gradcheck(
      [&](ad::Tape<double>& t, const std::vector<int>& id) {
        return t.quad_noise(id[0], n1, n2, frac);
      },
      {h});
}

TEST_CASE("gradcheck: scale_add combines weighted scalar terms") {
  Rng rng(12);
  gradcheck(
      [](ad::Tape<double>& t, const std::vector<int>& id) {
        std::vector<std::pair<int, double>> terms;
        terms.emplace_back(t.sum_sq(id[0]), 0.01);
        terms.emplace_back(t.softplus_neg_sum(t.row_vec_mat(id[1], id[0])), 1.0);
        return t.scale_add(std::move(terms));
      },
      {random_matrix(3, 4, rng), random_matrix(3, 1, rng)});
}

TEST_CASE("gradients accumulate across fan-out") {
  // y = sum_sq(A) + sum_sq(A) must give dy/dA = 4A.
  Mat a(2, 2);
  a << 1, -2, 3, 0.5;
  ad::Tape<double> tape;
  const int ia = tape.leaf(a);
  std::vector<std::pair<int, double>> terms;
  terms.emplace_back(tape.sum_sq(ia), 1.0);
  terms.emplace_back(tape.sum_sq(ia), 1.0);
  const int loss = tape.scale_add(std::move(terms));
  tape.backward(loss);
  CHECK(tape.grad(ia).isApprox(4.0 * a, 1e-12));
}

TEST_CASE("no-grad leaves receive no gradient buffer use") {
  Mat a(2, 2), b(2, 2);
  a << 1, 2, 3, 4;
  b << 2, 0, 1, 1;
  ad::Tape<double> tape;
  const int ia = tape.leaf(a, /*needs_grad=*/true);
  const int ib = tape.leaf(b, /*needs_grad=*/false);
  const int loss = tape.sum_sq(tape.matmul(ia, ib));
  tape.backward(loss);
  CHECK(tape.grad(ia).rows() == 2);  // gradient exists for the trainable leaf
}

}  // TEST_SUITE
