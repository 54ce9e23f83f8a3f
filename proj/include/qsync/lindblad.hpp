// Copyright 2026 The qsync Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <functional>
#include <span>
#include <vector>

#include "qsync/collision.hpp"
#include "qsync/qops.hpp"
#include "qsync/series.hpp"

namespace qsync {

struct JumpTerm {
    double rate;
    Operator op;
};

/// drho/dt = -i[H, rho] + sum_k rate_k D[o_k](rho).
class LindbladModel {
public:
    LindbladModel(Operator hamiltonian, std::vector<JumpTerm> jumps);

    const Operator& hamiltonian() const { return h_; }
    const std::vector<JumpTerm>& jumps() const { return jumps_; }
    int dim() const { return static_cast<int>(h_.rows()); }
    double max_rate() const;

private:
    Operator h_;
    std::vector<JumpTerm> jumps_;
};

/// cos(theta) sigma^-_1 + sin(theta) e^{i phi} sigma^-_2.
Operator effective_jump(double theta, double phi);

/// Continuous-time counterpart of a collision stream with the given ancilla:
/// H = omega (sigma^z_1 + sigma^z_2) and jumps at overall rate gamma.
/// Pure ancillas give the single effective_jump channel. Mixed ancillas are
/// split through the eigenvectors of their {g, e} block, and an |r>
/// population adds sigma^+_j gain channels. Coherences between |r> and
/// {g, e} are rejected with ValidationError.
LindbladModel effective_model(const AncillaSpec& ancilla, double omega, double gamma);

/// o rho o^dag - (o^dag o rho + rho o^dag o) / 2.
Operator dissipator_apply(const Operator& rho, const Operator& o);
Operator dissipator_apply(const DensityMatrix& rho, const Operator& o);

/// Right-hand side of the master equation, optionally with an extra
/// Hamiltonian term.
Operator lindblad_rhs(const LindbladModel& model, const Operator& rho, const Operator* extra_h = nullptr);

/// Superoperator acting on column-stacked vec(rho).
Operator liouvillian(const LindbladModel& model);

/// Caches exp(L dt) for repeated steps of a fixed size.
class MasterEquationPropagator {
public:
    MasterEquationPropagator(const LindbladModel& model, double dt);
    Operator step(const Operator& rho) const;
    double dt() const { return dt_; }

private:
    int dim_;
    double dt_;
    Operator prop_;
};

/// One classical RK4 step of the master equation with H -> H + extra_h.
Operator rk4_step(const LindbladModel& model, const Operator& rho, double dt, const Operator* extra_h = nullptr);

/// States at every grid time, via the exact exponential of the Liouvillian.
/// Grid must start at 0 and increase. Throws NumericalError if a state
/// drifts out of the PSD cone by more than 1e-8.
std::vector<DensityMatrix> propagate_me(const LindbladModel& model, const DensityMatrix& rho0,
                                        std::span<const double> t_grid);

ObservableSeries evolve_me(const LindbladModel& model, const DensityMatrix& rho0, std::span<const double> t_grid,
                           const std::vector<NamedObservable>& observables);

/// Model with |up up> adiabatically removed: jump
/// (cos(theta)/2)(s1 - s1 z2) + (sin(theta) e^{i phi}/2)(s2 - z1 s2) and
/// H = diag(0, 0, 0, -2 omega).
LindbladModel reduced_model(double theta, double phi, double omega, double gamma);

/// Zeroes row and column 0 and moves the |up up> population onto |down down>.
DensityMatrix reduce_initial_state(const DensityMatrix& rho);

/// Twelve-level model (qubit1 x qubit2 x qutrit): H = H_S x 1 + H_I and a
/// single jump (|g> + |e>)<r| at rate gamma.
LindbladModel qutrit_emission_model(double gamma, double g, double omega);

/// Effective jump from eliminating |r> in the qutrit model,
/// sqrt(gamma) L H_nh^{-1} H_+ with H_nh = -(i/2) gamma L^dag L restricted
/// to the |r> manifold. Returned on the 12-dim space, with unit rate.
Operator effective_emission_jump(double g, double gamma);

struct DarkStateSet {
    std::vector<PureState> states;
    std::vector<double> energies;
};

/// Hamiltonian eigenstates annihilated by every jump with positive rate,
/// ordered by energy. Each state's first component above 1e-8 in modulus is
/// made real and positive.
DarkStateSet dark_states(const LindbladModel& model, double svd_threshold = 1e-10);

/// Eigenvalues of the Liouvillian.
Eigen::VectorXcd liouvillian_spectrum(const LindbladModel& model);

/// Number of Liouvillian eigenvalues with |Re(lambda)| <= tol: stationary
/// modes plus undamped coherences between dark states.
int peripheral_dimension(const LindbladModel& model, double tol = 1e-9);

struct OscillationDiagnostic {
    Operator initial_overlaps;     // <D_j| rho0 |D_k>
    Operator asymptotic_weights;   // <D_j| P rho0 |D_k>, P the peripheral projector
    double ratio = 0.0;            // asymptotic c11 / c22 (inf if c22 = 0)
};

/// Dark-state weights of rho0 for a model with exactly two dark states.
/// Throws ValidationError otherwise.
OscillationDiagnostic oscillation_diagnostic(const LindbladModel& model, const DensityMatrix& rho0);

}  // namespace qsync
