#pragma once

#include <complex>
#include <span>
#include <vector>

#include "ddshaper/types.hpp"

namespace ddshaper {

using Matrix2cd = Eigen::Matrix2cd;
using MatrixXcd = Eigen::MatrixXcd;

MatrixXcd kron(const MatrixXcd& a, const MatrixXcd& b);

namespace pauli {
Matrix2cd id();
Matrix2cd x();
Matrix2cd y();
Matrix2cd z();
Matrix2cd p1();  // |1><1|
}  // namespace pauli

// Rotating-frame Hamiltonian of the NV two-level sensor coupled to the bath:
//   H = detuning/2 sz (x) 1 + omega/2 (cos(phase) sx + sin(phase) sy) (x) 1
//     + sum_j [ larmor Iz_j + |1><1| (x) (a_par_j Iz_j + a_perp_j Ix_j) ]
// with the NV factor first and spin-1/2 operators I = sigma/2.
MatrixXcd build_hamiltonian(const NuclearBath& bath, double drive_amplitude,
                            double drive_phase, double detuning);

// exp(-i h t) of a Hermitian h via eigendecomposition; checks unitarity to
// 1e-10 before returning.
MatrixXcd evolve_unitary(const MatrixXcd& h, double t);

struct Segment {
  MatrixXcd h;          // Hermitian
  double duration = 0;  // > 0
};

struct QuantumState {
  MatrixXcd rho;

  double purity() const;
  double trace_error() const;        // |tr(rho) - 1|
  double hermiticity_error() const;  // max |rho - rho^dagger|
  double min_eigenvalue() const;
  void require_valid() const;  // throws on violated state invariants
};

// NV in (|0>+|1>)/sqrt(2), nuclei maximally mixed.
QuantumState initial_sensor_state(int n_nuclei);

// rho <- U rho U^dagger per piecewise-constant segment.
void propagate(QuantumState& state, std::span<const Segment> schedule);

// Full sequence tau/2 - pi - tau - ... - pi - tau/2 with N pi pulses centered
// at (k + 1/2) tau. Finite-width pulses use the staircase profile from
// pulse_profile() sliced into substeps_per_sample segments per cell; free
// evolution fills the gaps exactly so the total time is N*tau. Readout is
// p = (1 + <sx>)/2 along the initial superposition axis.
double sequence_response(long n_pulses, double tau, const DriveParams& drive,
                         const NuclearBath& bath);

struct ShapeVariant {
  PulseShape shape = PulseShape::Ideal;
  std::optional<int> quantize_bits;

  std::string label() const;
};

struct ShapeComparison {
  Eigen::ArrayXd tau_values;
  std::vector<ScanResult> scans;   // one per variant, labelled
  // Differences to the ideal-pulse response, empty when the corresponding
  // variant was not requested.
  Eigen::ArrayXd dp_square;
  Eigen::ArrayXd dp_cosine;
  Eigen::ArrayXd dp_cosine14;
};

// Runs sequence_response per shape variant per tau. The ideal-pulse curve is
// always computed as the reference for the difference curves.
ShapeComparison compare_pulse_shapes(long n_pulses,
                                     const Eigen::ArrayXd& tau_grid,
                                     const DriveParams& drive,
                                     const NuclearBath& bath,
                                     std::span<const ShapeVariant> variants,
                                     int threads = 0);

}  // namespace ddshaper
