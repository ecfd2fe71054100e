#pragma once

// Independent reference implementations used only by tests. Each one takes a
// deliberately different route from the library code it checks: dense matrix
// circuits instead of in-place gate updates, raw double loops instead of
// cached Gram matrices, and direct definition enumeration for the quantile.

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "mmdfuse/types.hpp"

namespace oracles {

using mmdfuse::FeatureMatrix;
using mmdfuse::Index;

// Product-encoding fidelity in closed form: prod_j cos^2(gamma (x_j - y_j)/2).
inline double product_fidelity_closed_form(Eigen::Ref<const Eigen::RowVectorXd> x,
                                           Eigen::Ref<const Eigen::RowVectorXd> y,
                                           double gamma) {
  double result = 1.0;
  for (Index j = 0; j < x.size(); ++j) {
    const double c = std::cos(gamma * (x(j) - y(j)) / 2.0);
    result *= c * c;
  }
  return result;
}

// Dense-matrix statevector simulator: builds every gate as a full
// 2^D x 2^D matrix via Kronecker products and multiplies it out.
class DenseCircuit {
 public:
  explicit DenseCircuit(int qubits) : qubits_(qubits), dim_(1u << qubits) {
    state_ = Eigen::VectorXcd::Constant(dim_, std::pow(2.0, -0.5 * qubits));
  }

  void ry(int qubit, double theta) {
    Eigen::MatrixXcd gate(2, 2);
    const double c = std::cos(theta / 2.0);
    const double s = std::sin(theta / 2.0);
    gate << c, -s, s, c;
    state_ = embed(gate, qubit) * state_;
  }

  void cz(int qubit_a, int qubit_b) {
    Eigen::MatrixXcd gate = Eigen::MatrixXcd::Identity(dim_, dim_);
    for (std::size_t i = 0; i < dim_; ++i) {
      if (((i >> qubit_a) & 1u) && ((i >> qubit_b) & 1u)) gate(i, i) = -1.0;
    }
    state_ = gate * state_;
  }

  const Eigen::VectorXcd& state() const { return state_; }

  static double fidelity(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
    return std::norm(a.dot(b));  // Eigen dot conjugates the left argument
  }

 private:
  Eigen::MatrixXcd embed(const Eigen::MatrixXcd& gate, int qubit) const {
    // Little-endian: qubit j is bit j of the amplitude index, so the gate
    // sits between identities of size 2^j (low bits) and 2^(D-1-j) (high).
    const auto low = Eigen::MatrixXcd::Identity(1 << qubit, 1 << qubit);
    const auto high = Eigen::MatrixXcd::Identity(1 << (qubits_ - 1 - qubit),
                                                 1 << (qubits_ - 1 - qubit));
    return kronecker(high, kronecker(gate, low));
  }

  static Eigen::MatrixXcd kronecker(const Eigen::MatrixXcd& a,
                                    const Eigen::MatrixXcd& b) {
    Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      for (Eigen::Index j = 0; j < a.cols(); ++j) {
        out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
      }
    }
    return out;
  }

  int qubits_;
  std::size_t dim_;
  Eigen::VectorXcd state_;
};

// Entangled-encoding fidelity via the dense simulator.
inline Eigen::VectorXcd entangled_state_dense(Eigen::Ref<const Eigen::RowVectorXd> x,
                                              double gamma, int depth) {
  DenseCircuit circuit(static_cast<int>(x.size()));
  const int qubits = static_cast<int>(x.size());
  for (int layer = 0; layer < depth; ++layer) {
    for (int j = 0; j < qubits; ++j) circuit.ry(j, gamma * x(j));
    for (int j = 0; j < qubits; ++j) circuit.cz(j, (j + 1) % qubits);
  }
  return circuit.state();
}

inline Eigen::VectorXcd product_state_dense(Eigen::Ref<const Eigen::RowVectorXd> x,
                                            double gamma) {
  DenseCircuit circuit(static_cast<int>(x.size()));
  for (int j = 0; j < static_cast<int>(x.size()); ++j) circuit.ry(j, gamma * x(j));
  return circuit.state();
}

// Unbiased MMD^2 straight from raw data with a caller-supplied kernel
// function; no Gram caching, no index indirection.
template <typename KernelFn>
double mmd2_double_loop(const FeatureMatrix& x, const FeatureMatrix& y,
                        KernelFn kernel) {
  const double n = static_cast<double>(x.rows());
  const double m = static_cast<double>(y.rows());
  double within_x = 0.0;
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < x.rows(); ++j) {
      if (i != j) within_x += kernel(x.row(i), x.row(j));
    }
  }
  double within_y = 0.0;
  for (Index i = 0; i < y.rows(); ++i) {
    for (Index j = 0; j < y.rows(); ++j) {
      if (i != j) within_y += kernel(y.row(i), y.row(j));
    }
  }
  double cross = 0.0;
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < y.rows(); ++j) cross += kernel(x.row(i), y.row(j));
  }
  return within_x / (n * (n - 1.0)) + within_y / (m * (m - 1.0)) -
         2.0 * cross / (n * m);
}

// Spearman rank correlation with average ranks for ties.
inline double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
  const std::size_t n = xs.size();
  auto ranks = [&](const std::vector<double>& v) {
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) {
      double less = 0.0;
      double equal = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (v[j] < v[i]) ++less;
        if (v[j] == v[i]) ++equal;
      }
      r[i] = less + (equal + 1.0) / 2.0;
    }
    return r;
  };
  const auto rx = ranks(xs);
  const auto ry = ranks(ys);
  const double mean = (static_cast<double>(n) + 1.0) / 2.0;
  double num = 0.0;
  double dx = 0.0;
  double dy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    num += (rx[i] - mean) * (ry[i] - mean);
    dx += (rx[i] - mean) * (rx[i] - mean);
    dy += (ry[i] - mean) * (ry[i] - mean);
  }
  if (dx == 0.0 || dy == 0.0) return 0.0;
  return num / std::sqrt(dx * dy);
}

// Finite-set quantile by direct enumeration of the definition: the smallest
// attained value r whose coverage fraction #{a <= r}/N reaches q.
inline double quantile_enumeration(const std::vector<double>& values, double q) {
  const double n = static_cast<double>(values.size());
  double best = std::numeric_limits<double>::infinity();
  bool found = false;
  for (const double candidate : values) {
    int count = 0;
    for (const double v : values) {
      if (v <= candidate) ++count;
    }
    if (static_cast<double>(count) / n >= q && candidate < best) {
      best = candidate;
      found = true;
    }
  }
  return found ? best : values.back();
}

}  // namespace oracles
