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

#include "qsync/qops.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

namespace qsync {

namespace {
Tolerances g_tolerances{};

void require_square(const Operator& a, const char* what) {
    if (a.rows() != a.cols() || a.rows() == 0) {
        std::ostringstream os;
        os << what << ": expected a non-empty square matrix, got " << a.rows() << "x" << a.cols();
        throw DimensionError(os.str());
    }
}
}  // namespace

const Tolerances& tolerances() { return g_tolerances; }
void set_tolerances(const Tolerances& tol) { g_tolerances = tol; }

double max_abs(const Operator& a) {
    return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

bool is_hermitian(const Operator& a, double tol) {
    return a.rows() == a.cols() && max_abs(a - a.adjoint()) <= tol;
}

// ---------------------------------------------------------------------------
// PureState / DensityMatrix

PureState::PureState(Ket amplitudes) : amp_(std::move(amplitudes)) {
    if (amp_.size() == 0) throw ValidationError("PureState: empty amplitude vector");
    const double nrm = amp_.norm();
    if (!std::isfinite(nrm) || nrm == 0.0)
        throw ValidationError("PureState: amplitude vector has zero or non-finite norm");
    amp_ /= nrm;
}

DensityMatrix::DensityMatrix(Operator m, NoCheck) : m_(std::move(m)) {}

DensityMatrix::DensityMatrix(Operator m) : m_(std::move(m)) {
    require_square(m_, "DensityMatrix");
    const Tolerances& tol = tolerances();
    if (!m_.allFinite()) throw ValidationError("DensityMatrix: non-finite entries");
    const double herm = max_abs(m_ - m_.adjoint());
    if (herm > tol.hermitian) {
        std::ostringstream os;
        os << "DensityMatrix: not Hermitian (max |rho - rho^dag| = " << herm << ")";
        throw ValidationError(os.str());
    }
    const double tr_err = std::abs(m_.trace() - cplx(1.0, 0.0));
    if (tr_err > tol.trace) {
        std::ostringstream os;
        os << "DensityMatrix: trace differs from 1 by " << tr_err;
        throw ValidationError(os.str());
    }
    Operator h = 0.5 * (m_ + m_.adjoint());
    Eigen::SelfAdjointEigenSolver<Operator> es(h, Eigen::EigenvaluesOnly);
    const double min_ev = es.eigenvalues().minCoeff();
    if (min_ev < -tol.psd) {
        std::ostringstream os;
        os << "DensityMatrix: not positive semidefinite (min eigenvalue " << min_ev << ")";
        throw ValidationError(os.str());
    }
}

DensityMatrix::DensityMatrix(const PureState& psi) : m_(psi.projector()) {}

DensityMatrix DensityMatrix::trusted(Operator m) {
    require_square(m, "DensityMatrix::trusted");
    Operator h = 0.5 * (m + m.adjoint());
    return DensityMatrix(std::move(h), NoCheck{});
}

DensityMatrix DensityMatrix::maximally_mixed(int dim) {
    return DensityMatrix(Operator::Identity(dim, dim) / static_cast<double>(dim), NoCheck{});
}

// ---------------------------------------------------------------------------
// Linear algebra

Operator kron(const Operator& a, const Operator& b) {
    Operator out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

Operator kron(std::initializer_list<Operator> factors) {
    if (factors.size() == 0) throw DimensionError("kron: empty factor list");
    auto it = factors.begin();
    Operator acc = *it;
    for (++it; it != factors.end(); ++it) acc = kron(acc, *it);
    return acc;
}

Operator partial_trace(const Operator& rho, std::span<const int> dims, std::span<const int> keep) {
    require_square(rho, "partial_trace");
    if (keep.empty()) throw DimensionError("partial_trace: keep set is empty");
    long total = 1;
    for (int d : dims) {
        if (d <= 0) throw DimensionError("partial_trace: subsystem dimensions must be positive");
        total *= d;
    }
    if (total != rho.rows()) throw DimensionError("partial_trace: product of dims does not match matrix size");
    const int ns = static_cast<int>(dims.size());
    std::vector<bool> kept(ns, false);
    for (int k : keep) {
        if (k < 0 || k >= ns) throw DimensionError("partial_trace: keep index out of range");
        if (kept[k]) throw DimensionError("partial_trace: duplicate keep index");
        kept[k] = true;
    }

    // Split each full index into a kept index and a traced index.
    std::vector<long> kept_idx(total), traced_idx(total);
    long kept_dim = 1;
    for (int s = 0; s < ns; ++s)
        if (kept[s]) kept_dim *= dims[s];
    for (long i = 0; i < total; ++i) {
        long rem = i, ki = 0, ti = 0, kstride = 1, tstride = 1;
        for (int s = ns - 1; s >= 0; --s) {
            const long digit = rem % dims[s];
            rem /= dims[s];
            if (kept[s]) {
                ki += digit * kstride;
                kstride *= dims[s];
            } else {
                ti += digit * tstride;
                tstride *= dims[s];
            }
        }
        kept_idx[i] = ki;
        traced_idx[i] = ti;
    }

    Operator out = Operator::Zero(kept_dim, kept_dim);
    for (long c = 0; c < total; ++c)
        for (long r = 0; r < total; ++r)
            if (traced_idx[r] == traced_idx[c]) out(kept_idx[r], kept_idx[c]) += rho(r, c);
    return out;
}

DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const int> dims, std::span<const int> keep) {
    return DensityMatrix::trusted(partial_trace(rho.matrix(), dims, keep));
}

Operator matexp(const Operator& a, cplx scale) {
    require_square(a, "matexp");
    Operator s = scale * a;
    return s.exp();
}

EigenSystem herm_eig(const Operator& a) {
    require_square(a, "herm_eig");
    const double herm = max_abs(a - a.adjoint());
    if (herm > 1e-8) {
        std::ostringstream os;
        os << "herm_eig: input is not Hermitian (max |A - A^dag| = " << herm << ")";
        throw ValidationError(os.str());
    }
    Eigen::SelfAdjointEigenSolver<Operator> es(0.5 * (a + a.adjoint()));
    if (es.info() != Eigen::Success) throw NumericalError("herm_eig: eigensolver did not converge");
    const Eigen::Index n = a.rows();
    EigenSystem out;
    out.values.resize(n);
    out.vectors.resize(n, n);
    // Eigen returns ascending order.
    for (Eigen::Index k = 0; k < n; ++k) {
        out.values(k) = es.eigenvalues()(n - 1 - k);
        out.vectors.col(k) = es.eigenvectors().col(n - 1 - k);
    }
    return out;
}

Operator matsqrt_psd(const Operator& a) {
    EigenSystem es = herm_eig(a);
    Eigen::VectorXd root(es.values.size());
    for (Eigen::Index k = 0; k < es.values.size(); ++k) {
        const double v = es.values(k);
        if (v < -1e-8) {
            std::ostringstream os;
            os << "matsqrt_psd: eigenvalue " << v << " is below -1e-8";
            throw NumericalError(os.str());
        }
        root(k) = std::sqrt(std::max(v, 0.0));
    }
    return es.vectors * root.cast<cplx>().asDiagonal() * es.vectors.adjoint();
}

Operator matsqrt_psd(const DensityMatrix& a) { return matsqrt_psd(a.matrix()); }

cplx expectation(const DensityMatrix& rho, const Operator& obs) {
    if (obs.rows() != rho.dim() || obs.cols() != rho.dim())
        throw DimensionError("expectation: operator and state dimensions differ");
    // tr(rho O) without forming the product.
    return (rho.matrix().transpose().cwiseProduct(obs)).sum();
}

cplx expectation(const PureState& psi, const Operator& obs) {
    if (obs.rows() != psi.dim() || obs.cols() != psi.dim())
        throw DimensionError("expectation: operator and state dimensions differ");
    return psi.amplitudes().dot(obs * psi.amplitudes());
}

// ---------------------------------------------------------------------------
// Standard operators

namespace ops {

Operator identity(int dim) { return Operator::Identity(dim, dim); }

Operator sigma_x() {
    Operator m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}

Operator sigma_y() {
    Operator m(2, 2);
    m << 0, cplx(0, -1), cplx(0, 1), 0;
    return m;
}

Operator sigma_z() {
    Operator m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}

Operator sigma_minus() {
    Operator m(2, 2);
    m << 0, 0, 1, 0;
    return m;
}

Operator sigma_plus() { return sigma_minus().adjoint(); }

Operator on_qubit(const Operator& op, int q, int n) {
    if (op.rows() != 2 || op.cols() != 2) throw DimensionError("on_qubit: expected a 2x2 operator");
    if (q < 0 || q >= n) throw DimensionError("on_qubit: qubit index out of range");
    Operator acc = (q == 0) ? op : identity(2);
    for (int k = 1; k < n; ++k) acc = kron(acc, k == q ? op : identity(2));
    return acc;
}

Ket basis_ket(int index, int dim) {
    if (index < 0 || index >= dim) throw DimensionError("basis_ket: index out of range");
    Ket v = Ket::Zero(dim);
    v(index) = 1.0;
    return v;
}

}  // namespace ops

}  // namespace qsync
