#pragma once

#include <complex>
#include <string>
#include <vector>

#include "mmdfuse/types.hpp"

namespace mmdfuse::kernels {

enum class KernelFamily { gaussian, laplace, quantum_product, quantum_entangled };

const char* family_name(KernelFamily family);
KernelFamily family_from_name(const std::string& name);
bool is_quantum(KernelFamily family);

// One kernel in a pool: a classical family with a bandwidth, or a quantum
// feature map with a pre-encoding scaling factor (and, for the entangled
// map, a circuit depth).
struct KernelSpec {
  KernelFamily family = KernelFamily::gaussian;
  double bandwidth = 0.0;  // classical families, > 0
  double scaling = 0.0;    // quantum families, > 0
  int depth = 0;           // quantum_entangled only, >= 1

  static KernelSpec gaussian(double bandwidth);
  static KernelSpec laplace(double bandwidth);
  static KernelSpec quantum_product(double scaling);
  static KernelSpec quantum_entangled(double scaling, int depth = 1);

  bool is_quantum() const { return kernels::is_quantum(family); }
  std::string describe() const;
  void validate() const;
};

// Default cap on simulated qubits (= feature dimension): 2^16 amplitudes.
inline constexpr int kDefaultQubitCap = 16;

// Pure state over `qubits` qubits as 2^qubits complex amplitudes,
// little-endian (qubit j <-> bit j of the amplitude index).
struct QuantumState {
  std::vector<std::complex<double>> amplitudes;
  int qubits = 0;

  double norm_squared() const;
};

// Dense symmetric kernel matrix over a pooled sample; entry (i, j) is the
// kernel evaluated on rows i and j. Upper triangle is computed and mirrored,
// so G(i,j) == G(j,i) holds exactly.
struct GramMatrix {
  Eigen::MatrixXd values;

  Index size() const { return values.rows(); }
};

// Single kernel evaluation; always in [0, 1] with k(x, x) == 1.
double eval_kernel(const KernelSpec& spec, Eigen::Ref<const Eigen::RowVectorXd> x,
                   Eigen::Ref<const Eigen::RowVectorXd> y);

// Product feature map: one qubit per feature, each prepared as
// R_y(scaling * x_j)|+>.
QuantumState encode_product(Eigen::Ref<const Eigen::RowVectorXd> x, double scaling,
                            int qubit_cap = kDefaultQubitCap);

// Entangled feature map: |+>^D, then `depth` layers of per-qubit
// R_y(scaling * x_j) followed by a ring of CZ gates (j, j+1 mod D).
// Requires D >= 2.
QuantumState encode_entangled(Eigen::Ref<const Eigen::RowVectorXd> x,
                              double scaling, int depth,
                              int qubit_cap = kDefaultQubitCap);

// |<a|b>|^2.
double fidelity(const QuantumState& a, const QuantumState& b);

// Gram matrix of `spec` over the rows of Z. Quantum rows are encoded once and
// the states reused for all pairwise fidelities.
GramMatrix gram(const KernelSpec& spec, const FeatureMatrix& z);

// Geometric grid of `count` bandwidths between the q_lo and q_hi quantiles of
// the nonzero pairwise Euclidean distances of Z. count == 1 collapses to the
// geometric mean of the two quantiles.
std::vector<double> bandwidth_grid(const FeatureMatrix& z, int count,
                                   double q_lo = 0.05, double q_hi = 0.95);

// `count` log-spaced values from lo to hi inclusive; count == 1 gives the
// geometric mean.
std::vector<double> scaling_grid(double lo, double hi, int count);

}  // namespace mmdfuse::kernels
