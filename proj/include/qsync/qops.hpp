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

#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "qsync/error.hpp"

namespace qsync {

using cplx = std::complex<double>;
using Operator = Eigen::MatrixXcd;
using Ket = Eigen::VectorXcd;

/// Numerical tolerances used by state validation. The defaults are the
/// documented contract; tests that stress edge cases may loosen them.
struct Tolerances {
    double hermitian = 1e-10;
    double trace = 1e-10;
    double psd = 1e-10;
    double norm = 1e-12;
};

const Tolerances& tolerances();
/// Replaces the process-wide tolerances. Not synchronized: call before
/// starting any worker threads.
void set_tolerances(const Tolerances& tol);

/// Unit-norm state vector.
class PureState {
public:
    /// Normalizes `amplitudes`. Throws ValidationError on a zero or
    /// non-finite vector.
    explicit PureState(Ket amplitudes);

    int dim() const { return static_cast<int>(amp_.size()); }
    const Ket& amplitudes() const { return amp_; }
    cplx operator[](int i) const { return amp_(i); }
    Operator projector() const { return amp_ * amp_.adjoint(); }

private:
    Ket amp_;
};

/// Hermitian, unit-trace, positive semidefinite matrix (within tolerances()).
class DensityMatrix {
public:
    /// Validates all three invariants; throws ValidationError naming the
    /// violated one.
    explicit DensityMatrix(Operator m);
    explicit DensityMatrix(const PureState& psi);

    /// Skips validation except for a cheap shape check. For hot loops whose
    /// maps are CPTP by construction; the matrix is re-Hermitized.
    static DensityMatrix trusted(Operator m);

    int dim() const { return static_cast<int>(m_.rows()); }
    const Operator& matrix() const { return m_; }
    cplx operator()(int r, int c) const { return m_(r, c); }

    static DensityMatrix maximally_mixed(int dim);

private:
    struct NoCheck {};
    DensityMatrix(Operator m, NoCheck);
    Operator m_;
};

/// Kronecker product a ⊗ b.
Operator kron(const Operator& a, const Operator& b);
Operator kron(std::initializer_list<Operator> factors);

/// Traces out every subsystem not listed in `keep`. Subsystem 0 is the most
/// significant factor of the tensor-product index.
Operator partial_trace(const Operator& rho, std::span<const int> dims, std::span<const int> keep);
DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const int> dims,
                            std::span<const int> keep);

/// exp(scale * a) by scaling and squaring with a Padé approximant.
Operator matexp(const Operator& a, cplx scale);

struct EigenSystem {
    Eigen::VectorXd values;  // descending
    Operator vectors;        // column k pairs with values(k)
};

/// Spectral decomposition of a Hermitian matrix. Throws ValidationError if
/// max|a - a†| exceeds 1e-8.
EigenSystem herm_eig(const Operator& a);

/// Principal square root of a PSD matrix. Eigenvalues in [-1e-8, 0) are
/// clamped; anything more negative throws NumericalError.
Operator matsqrt_psd(const Operator& a);
Operator matsqrt_psd(const DensityMatrix& a);

/// tr(rho * obs).
cplx expectation(const DensityMatrix& rho, const Operator& obs);
cplx expectation(const PureState& psi, const Operator& obs);

double max_abs(const Operator& a);
bool is_hermitian(const Operator& a, double tol);

namespace ops {

Operator identity(int dim);
Operator sigma_x();
Operator sigma_y();
Operator sigma_z();
/// Lowering operator, maps |↑⟩ (index 0) to |↓⟩ (index 1).
Operator sigma_minus();
Operator sigma_plus();

/// Embeds a single-qubit operator on qubit `q` (0 is the leftmost factor)
/// of an `n`-qubit register.
Operator on_qubit(const Operator& op, int q, int n);

/// Two-qubit basis kets in the order (↑↑, ↑↓, ↓↑, ↓↓).
Ket basis_ket(int index, int dim);

}  // namespace ops

}  // namespace qsync
