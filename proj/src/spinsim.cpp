#include "ddshaper/spinsim.hpp"

#include <cmath>
#include <numbers>

#include "ddshaper/envelope.hpp"
#include "ddshaper/parallel.hpp"

namespace ddshaper {

namespace {
using cd = std::complex<double>;
constexpr double kPi = std::numbers::pi;
constexpr double kUnitarityTol = 1e-10;
}  // namespace

void HyperfineCoupling::validate() const {
  if (!std::isfinite(a_par) || !std::isfinite(a_perp))
    throw ValidationError("coupling", "must be finite");
  if (a_perp < 0.0)
    throw ValidationError("a_perp", "must be >= 0 (sign absorbed into the "
                                    "nuclear frame)");
}

void NuclearBath::validate() const {
  if (!(larmor > 0.0)) throw ValidationError("larmor", "must be > 0");
  if (couplings.empty() || couplings.size() > 4)
    throw ValidationError("couplings",
                          "need between 1 and 4 nuclei (Hilbert dim <= 32)");
  for (const auto& c : couplings) c.validate();
}

void DriveParams::validate() const {
  if (shape != PulseShape::Ideal) {
    if (!(t_pi > 0.0)) throw ValidationError("t_pi", "must be > 0");
    if (std::abs(rabi_peak * t_pi - kPi) > 1e-12 * kPi)
      throw ValidationError("rabi_peak",
                            "pi-area condition violated: rabi_peak * t_pi "
                            "must equal pi");
    if (!(sample_rate > 0.0)) throw ValidationError("sample_rate", "must be > 0");
  }
  if (substeps_per_sample < 1)
    throw ValidationError("substeps_per_sample", "must be >= 1");
  if (quantize_bits && *quantize_bits < 1)
    throw ValidationError("quantize_bits", "must be >= 1 when set");
}

MatrixXcd kron(const MatrixXcd& a, const MatrixXcd& b) {
  MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

namespace pauli {
Matrix2cd id() { return Matrix2cd::Identity(); }
Matrix2cd x() {
  Matrix2cd m;
  m << 0, 1, 1, 0;
  return m;
}
Matrix2cd y() {
  Matrix2cd m;
  m << 0, cd(0, -1), cd(0, 1), 0;
  return m;
}
Matrix2cd z() {
  Matrix2cd m;
  m << 1, 0, 0, -1;
  return m;
}
Matrix2cd p1() {
  Matrix2cd m;
  m << 0, 0, 0, 1;
  return m;
}
}  // namespace pauli

namespace {

// op acting on nucleus j (0-based) within the k-nucleus subspace
MatrixXcd nuclear_op(const Matrix2cd& op, int j, int k) {
  MatrixXcd out = MatrixXcd::Identity(1, 1);
  for (int s = 0; s < k; ++s)
    out = kron(out, s == j ? MatrixXcd(op) : MatrixXcd(Matrix2cd::Identity()));
  return out;
}

MatrixXcd on_sensor(const Matrix2cd& op, int k) {
  const long nuc_dim = 1L << k;
  return kron(op, MatrixXcd::Identity(nuc_dim, nuc_dim));
}

}  // namespace

MatrixXcd build_hamiltonian(const NuclearBath& bath, double drive_amplitude,
                            double drive_phase, double detuning) {
  bath.validate();
  const int k = bath.n_nuclei();
  const Matrix2cd iz = 0.5 * pauli::z();
  const Matrix2cd ix = 0.5 * pauli::x();
  const Matrix2cd drive_axis = std::cos(drive_phase) * pauli::x() +
                               std::sin(drive_phase) * pauli::y();
  MatrixXcd h = on_sensor(0.5 * detuning * pauli::z() +
                              0.5 * drive_amplitude * drive_axis,
                          k);
  for (int j = 0; j < k; ++j) {
    const auto& c = bath.couplings[static_cast<size_t>(j)];
    h += kron(pauli::id(), bath.larmor * nuclear_op(iz, j, k));
    h += kron(pauli::p1(), nuclear_op(c.a_par * iz + c.a_perp * ix, j, k));
  }
  return h;
}

MatrixXcd evolve_unitary(const MatrixXcd& h, double t) {
  if ((h - h.adjoint()).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + h.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("evolve_unitary: Hamiltonian is not Hermitian");
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(h);
  const Eigen::ArrayXd w = es.eigenvalues().array();
  const MatrixXcd& v = es.eigenvectors();
  Eigen::VectorXcd phases(w.size());
  for (Eigen::Index i = 0; i < w.size(); ++i)
    phases[i] = std::polar(1.0, -w[i] * t);
  MatrixXcd u = v * phases.asDiagonal() * v.adjoint();
  const double err =
      (u * u.adjoint() - MatrixXcd::Identity(u.rows(), u.cols()))
          .cwiseAbs()
          .maxCoeff();
  if (err > kUnitarityTol)
    throw std::runtime_error("evolve_unitary: unitarity assertion failed");
  return u;
}

double QuantumState::purity() const { return (rho * rho).trace().real(); }

double QuantumState::trace_error() const {
  return std::abs(rho.trace() - cd(1.0, 0.0));
}

double QuantumState::hermiticity_error() const {
  return (rho - rho.adjoint()).cwiseAbs().maxCoeff();
}

double QuantumState::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(rho,
                                              Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

void QuantumState::require_valid() const {
  if (hermiticity_error() > 1e-12)
    throw std::runtime_error("state is not Hermitian");
  if (trace_error() > 1e-12) throw std::runtime_error("state trace is not 1");
  if (min_eigenvalue() < -1e-10)
    throw std::runtime_error("state is not positive semidefinite");
}

QuantumState initial_sensor_state(int n_nuclei) {
  Matrix2cd plus;
  plus << 0.5, 0.5, 0.5, 0.5;  // |+><+|
  const long nuc_dim = 1L << n_nuclei;
  QuantumState s;
  s.rho = kron(plus, MatrixXcd::Identity(nuc_dim, nuc_dim) /
                         static_cast<double>(nuc_dim));
  return s;
}

void propagate(QuantumState& state, std::span<const Segment> schedule) {
  for (const Segment& seg : schedule) {
    if (!(seg.duration > 0.0))
      throw ValidationError("duration", "segment duration must be > 0");
    if (seg.h.rows() != state.rho.rows())
      throw ValidationError("hamiltonian", "dimension mismatch with state");
    const MatrixXcd u = evolve_unitary(seg.h, seg.duration);
    state.rho = u * state.rho * u.adjoint();
  }
}

namespace {

struct SequenceKernel {
  MatrixXcd half_gap;   // free evolution tau/2 - support/2
  MatrixXcd gap;        // free evolution tau - support
  std::vector<MatrixXcd> pulses;  // one per phase in the pattern cycle
};

std::vector<double> pattern_phases(PhasePattern pattern) {
  if (pattern == PhasePattern::Cpmg) return {0.0};
  const double x = 0.0, y = kPi / 2.0;
  return {x, y, x, y, y, x, y, x};
}

MatrixXcd ideal_pi_pulse(const NuclearBath& bath, double phase) {
  // exp(-i pi/2 (cos sx + sin sy)) = -i (cos sx + sin sy), global phase kept
  const Matrix2cd axis =
      std::cos(phase) * pauli::x() + std::sin(phase) * pauli::y();
  return on_sensor(cd(0.0, -1.0) * axis, bath.n_nuclei());
}

MatrixXcd shaped_pi_pulse(const NuclearBath& bath, const DriveParams& drive,
                          double tau, double phase) {
  const PulseCells cells = pulse_profile(drive.shape, tau, drive.t_pi,
                                         drive.sample_rate, drive.quantize_bits);
  const double sub_dt =
      cells.cell_width / static_cast<double>(drive.substeps_per_sample);
  const long dim = bath.dim();
  MatrixXcd u = MatrixXcd::Identity(dim, dim);
  for (Eigen::Index j = 0; j < cells.amplitudes.size(); ++j) {
    const MatrixXcd h = build_hamiltonian(
        bath, drive.rabi_peak * cells.amplitudes[j], phase, drive.detuning);
    const MatrixXcd u_sub = evolve_unitary(h, sub_dt);
    for (int s = 0; s < drive.substeps_per_sample; ++s) u = u_sub * u;
  }
  return u;
}

SequenceKernel make_kernel(double tau, const DriveParams& drive,
                           const NuclearBath& bath) {
  SequenceKernel kernel;
  double support = 0.0;
  if (drive.shape != PulseShape::Ideal) {
    const PulseCells cells = pulse_profile(drive.shape, tau, drive.t_pi,
                                           drive.sample_rate, std::nullopt);
    support = cells.support();
  }
  const MatrixXcd h_free = build_hamiltonian(bath, 0.0, 0.0, drive.detuning);
  const double gap = std::max(0.0, tau - support);
  const double half_gap = std::max(0.0, 0.5 * tau - 0.5 * support);
  const long dim = bath.dim();
  kernel.gap = gap > 0.0 ? evolve_unitary(h_free, gap)
                         : MatrixXcd(MatrixXcd::Identity(dim, dim));
  kernel.half_gap = half_gap > 0.0 ? evolve_unitary(h_free, half_gap)
                                   : MatrixXcd(MatrixXcd::Identity(dim, dim));
  for (double phase : pattern_phases(drive.pattern)) {
    kernel.pulses.push_back(drive.shape == PulseShape::Ideal
                                ? ideal_pi_pulse(bath, phase)
                                : shaped_pi_pulse(bath, drive, tau, phase));
  }
  return kernel;
}

}  // namespace

double sequence_response(long n_pulses, double tau, const DriveParams& drive,
                         const NuclearBath& bath) {
  bath.validate();
  drive.validate();
  if (n_pulses < 0 || n_pulses % 2 != 0)
    throw ValidationError("n_pulses", "must be a non-negative even integer");
  if (n_pulses == 0) return 1.0;  // zero total time, nothing evolves
  if (!(tau > 0.0)) throw ValidationError("tau", "must be > 0");
  if (drive.shape != PulseShape::Ideal && tau < drive.t_pi)
    throw ValidationError("tau", "pulses overlap: tau must be >= t_pi");

  const SequenceKernel kernel = make_kernel(tau, drive, bath);

  // tau/2 - pi - tau - pi - ... - tau - pi - tau/2, right factor acts first
  MatrixXcd u = kernel.half_gap;
  for (long k = 0; k < n_pulses; ++k) {
    if (k > 0) u = kernel.gap * u;
    const auto& pulse =
        kernel.pulses[static_cast<size_t>(k) % kernel.pulses.size()];
    u = pulse * u;
  }
  u = kernel.half_gap * u;

  const QuantumState initial = initial_sensor_state(bath.n_nuclei());
  const MatrixXcd rho_f = u * initial.rho * u.adjoint();
  const MatrixXcd sx = on_sensor(pauli::x(), bath.n_nuclei());
  const double sx_expect = (rho_f * sx).trace().real();
  return 0.5 * (1.0 + sx_expect);
}

std::string ShapeVariant::label() const {
  std::string name = to_string(shape);
  if (quantize_bits) name += std::to_string(*quantize_bits);
  return name;
}

ShapeComparison compare_pulse_shapes(long n_pulses,
                                     const Eigen::ArrayXd& tau_grid,
                                     const DriveParams& drive,
                                     const NuclearBath& bath,
                                     std::span<const ShapeVariant> variants,
                                     int threads) {
  ShapeComparison out;
  out.tau_values = tau_grid;
  const long n = tau_grid.size();

  // ideal reference first
  Eigen::ArrayXd p_ideal(n);
  {
    DriveParams ideal = drive;
    ideal.shape = PulseShape::Ideal;
    ideal.quantize_bits.reset();
    parallel_for(n, threads, [&](long i) {
      p_ideal[i] = sequence_response(n_pulses, tau_grid[i], ideal, bath);
    });
  }

  for (const ShapeVariant& variant : variants) {
    DriveParams d = drive;
    d.shape = variant.shape;
    d.quantize_bits = variant.quantize_bits;
    Eigen::ArrayXd p(n);
    if (variant.shape == PulseShape::Ideal && !variant.quantize_bits) {
      p = p_ideal;
    } else {
      parallel_for(n, threads, [&](long i) {
        p[i] = sequence_response(n_pulses, tau_grid[i], d, bath);
      });
    }
    ScanResult scan;
    scan.tau_values = tau_grid;
    scan.p_values = p;
    scan.label = variant.label();
    scan.metadata = {{"version", kVersion},
                     {"n_pulses", n_pulses},
                     {"shape", variant.label()},
                     {"t_pi_s", drive.t_pi},
                     {"rabi_peak_rad_per_s", drive.rabi_peak},
                     {"detuning_rad_per_s", drive.detuning},
                     {"larmor_rad_per_s", bath.larmor}};
    scan.validate();
    out.scans.push_back(std::move(scan));

    const Eigen::ArrayXd dp = p - p_ideal;
    if (variant.shape == PulseShape::Square && !variant.quantize_bits)
      out.dp_square = dp;
    else if (variant.shape == PulseShape::CosineSquare && !variant.quantize_bits)
      out.dp_cosine = dp;
    else if (variant.shape == PulseShape::CosineSquare && variant.quantize_bits)
      out.dp_cosine14 = dp;
  }
  return out;
}

}  // namespace ddshaper
