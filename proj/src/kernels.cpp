#include "mmdfuse/kernels.hpp"

#include <cmath>
#include <sstream>

#include "mmdfuse/errors.hpp"
#include "mmdfuse/statistics.hpp"

namespace mmdfuse::kernels {

namespace {

void require_same_dims(Eigen::Ref<const Eigen::RowVectorXd> x,
                       Eigen::Ref<const Eigen::RowVectorXd> y) {
  if (x.size() != y.size()) {
    std::ostringstream msg;
    msg << "feature dimension mismatch: " << x.size() << " vs " << y.size();
    throw DataError(msg.str());
  }
}

void require_finite(Eigen::Ref<const Eigen::RowVectorXd> x) {
  if (!x.allFinite()) throw DataError("non-finite feature value");
}

// In-place R_y(theta) on one qubit. Pairs (i, i | 1<<qubit) with the qubit
// bit clear in i.
void apply_ry(QuantumState& state, int qubit, double theta) {
  const double c = std::cos(theta / 2.0);
  const double s = std::sin(theta / 2.0);
  const std::size_t mask = std::size_t{1} << qubit;
  const std::size_t dim = state.amplitudes.size();
  for (std::size_t i = 0; i < dim; ++i) {
    if ((i & mask) == 0) {
      const auto a = state.amplitudes[i];
      const auto b = state.amplitudes[i | mask];
      state.amplitudes[i] = c * a - s * b;
      state.amplitudes[i | mask] = s * a + c * b;
    }
  }
}

// In-place controlled-Z between two qubits: phase -1 on |11>.
void apply_cz(QuantumState& state, int qubit_a, int qubit_b) {
  const std::size_t mask =
      (std::size_t{1} << qubit_a) | (std::size_t{1} << qubit_b);
  const std::size_t dim = state.amplitudes.size();
  for (std::size_t i = 0; i < dim; ++i) {
    if ((i & mask) == mask) state.amplitudes[i] = -state.amplitudes[i];
  }
}

QuantumState plus_state(int qubits) {
  QuantumState state;
  state.qubits = qubits;
  const std::size_t dim = std::size_t{1} << qubits;
  state.amplitudes.assign(dim, std::pow(2.0, -0.5 * qubits));
  return state;
}

int checked_qubit_count(Eigen::Index dims, int qubit_cap) {
  if (dims < 1) throw DataError("empty feature vector");
  if (dims > qubit_cap) {
    std::ostringstream msg;
    msg << "feature dimension " << dims << " exceeds qubit cap " << qubit_cap;
    throw ConfigError(msg.str());
  }
  return static_cast<int>(dims);
}

QuantumState encode_for_spec(const KernelSpec& spec,
                             Eigen::Ref<const Eigen::RowVectorXd> x) {
  return spec.family == KernelFamily::quantum_product
             ? encode_product(x, spec.scaling)
             : encode_entangled(x, spec.scaling, spec.depth);
}

std::vector<double> geometric_grid(double lo, double hi, int count) {
  if (lo == hi) return std::vector<double>(static_cast<std::size_t>(count), lo);
  if (count == 1) return {std::sqrt(lo * hi)};
  std::vector<double> grid(static_cast<std::size_t>(count));
  const double log_lo = std::log(lo);
  const double log_hi = std::log(hi);
  for (int i = 0; i < count; ++i) {
    grid[static_cast<std::size_t>(i)] =
        std::exp(log_lo + (log_hi - log_lo) * i / (count - 1));
  }
  grid.front() = lo;
  grid.back() = hi;
  return grid;
}

}  // namespace

const char* family_name(KernelFamily family) {
  switch (family) {
    case KernelFamily::gaussian: return "gaussian";
    case KernelFamily::laplace: return "laplace";
    case KernelFamily::quantum_product: return "quantum_product";
    case KernelFamily::quantum_entangled: return "quantum_entangled";
  }
  return "unknown";
}

KernelFamily family_from_name(const std::string& name) {
  if (name == "gaussian") return KernelFamily::gaussian;
  if (name == "laplace") return KernelFamily::laplace;
  if (name == "quantum_product") return KernelFamily::quantum_product;
  if (name == "quantum_entangled") return KernelFamily::quantum_entangled;
  throw ConfigError("unknown kernel family '" + name + "'");
}

bool is_quantum(KernelFamily family) {
  return family == KernelFamily::quantum_product ||
         family == KernelFamily::quantum_entangled;
}

KernelSpec KernelSpec::gaussian(double bandwidth) {
  KernelSpec spec;
  spec.family = KernelFamily::gaussian;
  spec.bandwidth = bandwidth;
  spec.validate();
  return spec;
}

KernelSpec KernelSpec::laplace(double bandwidth) {
  KernelSpec spec;
  spec.family = KernelFamily::laplace;
  spec.bandwidth = bandwidth;
  spec.validate();
  return spec;
}

KernelSpec KernelSpec::quantum_product(double scaling) {
  KernelSpec spec;
  spec.family = KernelFamily::quantum_product;
  spec.scaling = scaling;
  spec.validate();
  return spec;
}

KernelSpec KernelSpec::quantum_entangled(double scaling, int depth) {
  KernelSpec spec;
  spec.family = KernelFamily::quantum_entangled;
  spec.scaling = scaling;
  spec.depth = depth;
  spec.validate();
  return spec;
}

std::string KernelSpec::describe() const {
  std::ostringstream out;
  out << family_name(family);
  if (is_quantum()) {
    out << "(scaling=" << scaling;
    if (family == KernelFamily::quantum_entangled) out << ", depth=" << depth;
    out << ")";
  } else {
    out << "(bandwidth=" << bandwidth << ")";
  }
  return out.str();
}

void KernelSpec::validate() const {
  if (is_quantum()) {
    if (!(scaling > 0.0) || !std::isfinite(scaling)) {
      throw ConfigError("quantum kernel requires scaling > 0");
    }
    if (family == KernelFamily::quantum_entangled && depth < 1) {
      throw ConfigError("quantum_entangled kernel requires depth >= 1");
    }
  } else {
    if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
      throw ConfigError("classical kernel requires bandwidth > 0");
    }
  }
}

double QuantumState::norm_squared() const {
  double total = 0.0;
  for (const auto& a : amplitudes) total += std::norm(a);
  return total;
}

QuantumState encode_product(Eigen::Ref<const Eigen::RowVectorXd> x,
                            double scaling, int qubit_cap) {
  require_finite(x);
  const int qubits = checked_qubit_count(x.size(), qubit_cap);
  QuantumState state = plus_state(qubits);
  for (int j = 0; j < qubits; ++j) apply_ry(state, j, scaling * x(j));
  return state;
}

QuantumState encode_entangled(Eigen::Ref<const Eigen::RowVectorXd> x,
                              double scaling, int depth, int qubit_cap) {
  require_finite(x);
  if (x.size() < 2) {
    throw ConfigError("quantum_entangled encoding requires dimension >= 2");
  }
  if (depth < 1) throw ConfigError("quantum_entangled requires depth >= 1");
  const int qubits = checked_qubit_count(x.size(), qubit_cap);
  QuantumState state = plus_state(qubits);
  for (int layer = 0; layer < depth; ++layer) {
    for (int j = 0; j < qubits; ++j) apply_ry(state, j, scaling * x(j));
    for (int j = 0; j < qubits; ++j) apply_cz(state, j, (j + 1) % qubits);
  }
  return state;
}

double fidelity(const QuantumState& a, const QuantumState& b) {
  if (a.qubits != b.qubits || a.amplitudes.size() != b.amplitudes.size()) {
    throw DataError("quantum state dimension mismatch");
  }
  std::complex<double> overlap{0.0, 0.0};
  for (std::size_t i = 0; i < a.amplitudes.size(); ++i) {
    overlap += std::conj(a.amplitudes[i]) * b.amplitudes[i];
  }
  return std::norm(overlap);
}

double eval_kernel(const KernelSpec& spec,
                   Eigen::Ref<const Eigen::RowVectorXd> x,
                   Eigen::Ref<const Eigen::RowVectorXd> y) {
  spec.validate();
  require_same_dims(x, y);
  require_finite(x);
  require_finite(y);
  switch (spec.family) {
    case KernelFamily::gaussian: {
      const double sq = (x - y).squaredNorm();
      return std::exp(-sq / (2.0 * spec.bandwidth * spec.bandwidth));
    }
    case KernelFamily::laplace: {
      const double l1 = (x - y).cwiseAbs().sum();
      return std::exp(-l1 / spec.bandwidth);
    }
    case KernelFamily::quantum_product:
    case KernelFamily::quantum_entangled: {
      return fidelity(encode_for_spec(spec, x), encode_for_spec(spec, y));
    }
  }
  throw ConfigError("unsupported kernel family");
}

GramMatrix gram(const KernelSpec& spec, const FeatureMatrix& z) {
  spec.validate();
  const Index n = z.rows();
  if (n < 1) throw DataError("gram requires at least one sample");
  if (z.cols() < 1) throw DataError("gram requires at least one feature");
  if (!z.allFinite()) throw DataError("non-finite feature value");

  GramMatrix result;
  result.values.resize(n, n);

  if (spec.is_quantum()) {
    std::vector<QuantumState> states;
    states.reserve(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) states.push_back(encode_for_spec(spec, z.row(i)));
    for (Index i = 0; i < n; ++i) {
      for (Index j = i; j < n; ++j) {
        const double value = fidelity(states[static_cast<std::size_t>(i)],
                                      states[static_cast<std::size_t>(j)]);
        result.values(i, j) = value;
        result.values(j, i) = value;
      }
    }
  } else {
    for (Index i = 0; i < n; ++i) {
      for (Index j = i; j < n; ++j) {
        const double value = eval_kernel(spec, z.row(i), z.row(j));
        result.values(i, j) = value;
        result.values(j, i) = value;
      }
    }
  }
  return result;
}

std::vector<double> bandwidth_grid(const FeatureMatrix& z, int count,
                                   double q_lo, double q_hi) {
  if (count < 1) throw ConfigError("bandwidth count must be >= 1");
  if (!(q_lo > 0.0 && q_lo < q_hi && q_hi < 1.0)) {
    throw ConfigError("bandwidth quantiles must satisfy 0 < q_lo < q_hi < 1");
  }
  const Index n = z.rows();
  if (n < 2) throw DataError("bandwidth grid requires at least two samples");
  if (!z.allFinite()) throw DataError("non-finite feature value");

  std::vector<double> distances;
  distances.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      const double d = (z.row(i) - z.row(j)).norm();
      if (d > 0.0) distances.push_back(d);
    }
  }
  if (distances.empty()) {
    throw DataError("degenerate data: all pairwise distances are zero");
  }
  const double lo = statistics::quantile(distances, q_lo);
  const double hi = statistics::quantile(distances, q_hi);
  return geometric_grid(lo, hi, count);
}

std::vector<double> scaling_grid(double lo, double hi, int count) {
  if (count < 1) throw ConfigError("scaling count must be >= 1");
  if (!(lo > 0.0) || !(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw ConfigError("scaling grid requires 0 < lo <= hi");
  }
  return geometric_grid(lo, hi, count);
}

}  // namespace mmdfuse::kernels
