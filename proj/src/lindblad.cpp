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

#include "qsync/lindblad.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace qsync {

LindbladModel::LindbladModel(Operator hamiltonian, std::vector<JumpTerm> jumps)
    : h_(std::move(hamiltonian)), jumps_(std::move(jumps)) {
    if (h_.rows() != h_.cols() || h_.rows() == 0) throw DimensionError("LindbladModel: Hamiltonian must be square");
    if (!is_hermitian(h_, 1e-10)) throw ValidationError("LindbladModel: Hamiltonian is not Hermitian");
    for (const auto& j : jumps_) {
        if (!(j.rate >= 0.0) || !std::isfinite(j.rate)) throw ValidationError("LindbladModel: jump rates must be >= 0");
        if (j.op.rows() != h_.rows() || j.op.cols() != h_.cols())
            throw DimensionError("LindbladModel: jump operator dimension differs from Hamiltonian");
    }
}

double LindbladModel::max_rate() const {
    double m = 0.0;
    for (const auto& j : jumps_) m = std::max(m, j.rate);
    return m;
}

Operator effective_jump(double theta, double phi) {
    const Operator i2 = ops::identity(2);
    return std::cos(theta) * kron(ops::sigma_minus(), i2) +
           std::sin(theta) * std::polar(1.0, phi) * kron(i2, ops::sigma_minus());
}

LindbladModel effective_model(const AncillaSpec& ancilla, double omega, double gamma) {
    const Operator h = system_hamiltonian(omega);
    if (ancilla.is_pure()) return LindbladModel(h, {{gamma, effective_jump(ancilla.theta(), ancilla.phi())}});

    const Operator& eta = ancilla.eta().matrix();
    if (std::abs(eta(0, 2)) > 1e-12 || std::abs(eta(1, 2)) > 1e-12)
        throw ValidationError("effective_model: ancilla coherences with |r> have no Lindblad counterpart");
    const Operator i2 = ops::identity(2);
    const Operator s1 = kron(ops::sigma_minus(), i2), s2 = kron(i2, ops::sigma_minus());

    // Coefficient of s_k rho s_j^dag is eta(j, k), so the Kossakowski matrix
    // is the transpose of the {g, e} block.
    const Operator kossakowski = eta.topLeftCorner(2, 2).transpose();
    const EigenSystem es = herm_eig(kossakowski);
    std::vector<JumpTerm> jumps;
    for (int m = 0; m < 2; ++m) {
        const double lam = es.values(m);
        if (lam <= 1e-14) continue;
        jumps.push_back({gamma * lam, es.vectors(0, m) * s1 + es.vectors(1, m) * s2});
    }
    const double p_r = eta(2, 2).real();
    if (p_r > 1e-14) {
        jumps.push_back({gamma * p_r, s1.adjoint()});
        jumps.push_back({gamma * p_r, s2.adjoint()});
    }
    return LindbladModel(h, std::move(jumps));
}

Operator dissipator_apply(const Operator& rho, const Operator& o) {
    if (rho.rows() != o.rows() || rho.cols() != o.cols() || rho.rows() != rho.cols())
        throw DimensionError("dissipator_apply: operator and state dimensions differ");
    const Operator od = o.adjoint();
    const Operator ood = od * o;
    return o * rho * od - 0.5 * (ood * rho + rho * ood);
}

Operator dissipator_apply(const DensityMatrix& rho, const Operator& o) {
    return dissipator_apply(rho.matrix(), o);
}

Operator lindblad_rhs(const LindbladModel& model, const Operator& rho, const Operator* extra_h) {
    const Operator h = extra_h ? Operator(model.hamiltonian() + *extra_h) : model.hamiltonian();
    Operator out = cplx(0.0, -1.0) * (h * rho - rho * h);
    for (const auto& j : model.jumps())
        if (j.rate > 0.0) out += j.rate * dissipator_apply(rho, j.op);
    return out;
}

Operator liouvillian(const LindbladModel& model) {
    const int d = model.dim();
    const Operator id = ops::identity(d);
    const Operator& h = model.hamiltonian();
    // vec(A X B) = (B^T kron A) vec(X)
    Operator l = cplx(0.0, -1.0) * (kron(id, h) - kron(h.transpose(), id));
    for (const auto& j : model.jumps()) {
        if (j.rate == 0.0) continue;
        const Operator ood = j.op.adjoint() * j.op;
        l += j.rate * (kron(j.op.conjugate(), j.op) - 0.5 * kron(id, ood) - 0.5 * kron(ood.transpose(), id));
    }
    return l;
}

MasterEquationPropagator::MasterEquationPropagator(const LindbladModel& model, double dt)
    : dim_(model.dim()), dt_(dt), prop_(matexp(liouvillian(model), cplx(dt, 0.0))) {}

Operator MasterEquationPropagator::step(const Operator& rho) const {
    if (rho.rows() != dim_ || rho.cols() != dim_) throw DimensionError("MasterEquationPropagator: state dimension");
    Ket v = prop_ * Eigen::Map<const Ket>(rho.data(), rho.size());
    Operator out = Eigen::Map<Operator>(v.data(), dim_, dim_);
    return 0.5 * (out + out.adjoint());
}

Operator rk4_step(const LindbladModel& model, const Operator& rho, double dt, const Operator* extra_h) {
    const Operator k1 = lindblad_rhs(model, rho, extra_h);
    const Operator k2 = lindblad_rhs(model, rho + 0.5 * dt * k1, extra_h);
    const Operator k3 = lindblad_rhs(model, rho + 0.5 * dt * k2, extra_h);
    const Operator k4 = lindblad_rhs(model, rho + dt * k3, extra_h);
    Operator out = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    return 0.5 * (out + out.adjoint());
}

namespace {

DensityMatrix checked_state(const Operator& m, double t) {
    Eigen::SelfAdjointEigenSolver<Operator> es(m, Eigen::EigenvaluesOnly);
    const double min_ev = es.eigenvalues().minCoeff();
    if (min_ev < -1e-8) {
        std::ostringstream os;
        os << "master equation: state left the PSD cone at t=" << t << " (min eigenvalue " << min_ev << ")";
        throw NumericalError(os.str());
    }
    return DensityMatrix::trusted(m);
}

}  // namespace

std::vector<DensityMatrix> propagate_me(const LindbladModel& model, const DensityMatrix& rho0,
                                        std::span<const double> t_grid) {
    if (rho0.dim() != model.dim()) throw DimensionError("propagate_me: state and model dimensions differ");
    if (t_grid.empty() || t_grid[0] != 0.0) throw ValidationError("propagate_me: time grid must start at 0");
    for (std::size_t i = 1; i < t_grid.size(); ++i)
        if (!(t_grid[i] > t_grid[i - 1])) throw ValidationError("propagate_me: time grid must be increasing");

    const Operator l = liouvillian(model);
    std::vector<DensityMatrix> out;
    out.reserve(t_grid.size());
    out.push_back(rho0);
    Operator rho = rho0.matrix();
    double cached_dt = -1.0;
    Operator prop;
    for (std::size_t i = 1; i < t_grid.size(); ++i) {
        const double dt = t_grid[i] - t_grid[i - 1];
        if (std::abs(dt - cached_dt) > 1e-12 * std::max(1.0, dt)) {
            prop = matexp(l, cplx(dt, 0.0));
            cached_dt = dt;
        }
        Ket v = prop * Eigen::Map<const Ket>(rho.data(), rho.size());
        rho = Eigen::Map<Operator>(v.data(), model.dim(), model.dim());
        rho = (0.5 * (rho + rho.adjoint())).eval();
        out.push_back(checked_state(rho, t_grid[i]));
    }
    return out;
}

ObservableSeries evolve_me(const LindbladModel& model, const DensityMatrix& rho0, std::span<const double> t_grid,
                           const std::vector<NamedObservable>& observables) {
    std::vector<std::string> labels;
    for (const auto& o : observables) labels.push_back(o.name);
    ObservableSeries series(labels);
    const auto states = propagate_me(model, rho0, t_grid);
    for (std::size_t i = 0; i < states.size(); ++i) {
        std::vector<double> v;
        for (const auto& o : observables) v.push_back(expectation(states[i], o.op).real());
        series.append(static_cast<long>(i), t_grid[i], std::move(v));
    }
    return series;
}

LindbladModel reduced_model(double theta, double phi, double omega, double gamma) {
    const Operator i2 = ops::identity(2);
    const Operator s1 = kron(ops::sigma_minus(), i2), s2 = kron(i2, ops::sigma_minus());
    const Operator z1 = kron(ops::sigma_z(), i2), z2 = kron(i2, ops::sigma_z());
    const Operator jump = 0.5 * std::cos(theta) * (s1 - s1 * z2) +
                          0.5 * std::sin(theta) * std::polar(1.0, phi) * (s2 - z1 * s2);
    Operator h = Operator::Zero(4, 4);
    h(3, 3) = -2.0 * omega;
    return LindbladModel(h, {{gamma, jump}});
}

DensityMatrix reduce_initial_state(const DensityMatrix& rho) {
    if (rho.dim() != 4) throw DimensionError("reduce_initial_state: expected a two-qubit state");
    Operator m = rho.matrix();
    const cplx p_upup = m(0, 0);
    m.row(0).setZero();
    m.col(0).setZero();
    m(3, 3) += p_upup;
    Eigen::SelfAdjointEigenSolver<Operator> es(m, Eigen::EigenvaluesOnly);
    const double min_ev = es.eigenvalues().minCoeff();
    if (min_ev < -tolerances().psd) {
        std::ostringstream os;
        os << "reduce_initial_state: reduced state is not PSD (min eigenvalue " << min_ev << ")";
        throw NumericalError(os.str());
    }
    return DensityMatrix(m);
}

LindbladModel qutrit_emission_model(double gamma, double g, double omega) {
    if (!(gamma > 0.0)) throw ValidationError("qutrit_emission_model: gamma must be positive");
    const Operator h = kron(system_hamiltonian(omega), ops::identity(3)) + build_interaction_hamiltonian(g);
    Operator l = Operator::Zero(3, 3);
    l(0, 2) = 1.0;
    l(1, 2) = 1.0;
    return LindbladModel(h, {{gamma, kron(ops::identity(4), l)}});
}

Operator effective_emission_jump(double g, double gamma) {
    if (!(gamma > 0.0)) throw ValidationError("effective_emission_jump: gamma must be positive");
    const LindbladModel m = qutrit_emission_model(gamma, g, 0.0);
    const Operator& l = m.jumps().front().op;
    Operator p_r = Operator::Zero(3, 3);
    p_r(2, 2) = 1.0;
    const Operator proj_r = kron(ops::identity(4), p_r);
    const Operator proj_low = ops::identity(12) - proj_r;
    const Operator h_plus = proj_r * build_interaction_hamiltonian(g) * proj_low;
    const Operator h_nh = cplx(0.0, -0.5 * gamma) * proj_r * (l.adjoint() * l) * proj_r;
    const Operator h_nh_inv = h_nh.completeOrthogonalDecomposition().pseudoInverse();
    return std::sqrt(gamma) * l * h_nh_inv * h_plus;
}

DarkStateSet dark_states(const LindbladModel& model, double svd_threshold) {
    const EigenSystem es = herm_eig(model.hamiltonian());
    const int d = model.dim();
    std::vector<const JumpTerm*> active;
    for (const auto& j : model.jumps())
        if (j.rate > 0.0) active.push_back(&j);

    struct Found {
        Ket v;
        double e;
    };
    std::vector<Found> found;
    int start = 0;
    while (start < d) {
        int stop = start + 1;
        while (stop < d && std::abs(es.values(stop) - es.values(start)) < 1e-9) ++stop;
        const int m = stop - start;
        const Operator basis = es.vectors.middleCols(start, m);
        std::vector<Ket> null_vecs;
        if (active.empty()) {
            for (int c = 0; c < m; ++c) null_vecs.push_back(basis.col(c));
        } else {
            Operator stacked(static_cast<Eigen::Index>(active.size()) * d, m);
            for (std::size_t k = 0; k < active.size(); ++k) stacked.middleRows(k * d, d) = active[k]->op * basis;
            Eigen::JacobiSVD<Operator> svd(stacked, Eigen::ComputeFullV);
            const auto& sv = svd.singularValues();
            for (int c = 0; c < m; ++c) {
                const double s = c < sv.size() ? sv(c) : 0.0;
                if (s <= svd_threshold) null_vecs.push_back(basis * svd.matrixV().col(c));
            }
        }
        for (auto& v : null_vecs) {
            const cplx e = v.dot(model.hamiltonian() * v);
            found.push_back({v, e.real()});
        }
        start = stop;
    }
    std::stable_sort(found.begin(), found.end(), [](const Found& a, const Found& b) { return a.e < b.e; });

    DarkStateSet out;
    for (auto& f : found) {
        for (Eigen::Index i = 0; i < f.v.size(); ++i) {
            if (std::abs(f.v(i)) > 1e-8) {
                f.v *= std::conj(f.v(i)) / std::abs(f.v(i));
                f.v(i) = std::abs(f.v(i));
                break;
            }
        }
        out.states.emplace_back(f.v);
        out.energies.push_back(f.e);
    }
    return out;
}

Eigen::VectorXcd liouvillian_spectrum(const LindbladModel& model) {
    Eigen::ComplexEigenSolver<Operator> es(liouvillian(model), false);
    if (es.info() != Eigen::Success) throw NumericalError("liouvillian_spectrum: eigensolver did not converge");
    return es.eigenvalues();
}

int peripheral_dimension(const LindbladModel& model, double tol) {
    const Eigen::VectorXcd ev = liouvillian_spectrum(model);
    int count = 0;
    for (Eigen::Index i = 0; i < ev.size(); ++i)
        if (std::abs(ev(i).real()) <= tol) ++count;
    return count;
}

OscillationDiagnostic oscillation_diagnostic(const LindbladModel& model, const DensityMatrix& rho0) {
    const DarkStateSet ds = dark_states(model);
    if (ds.states.size() != 2) throw ValidationError("oscillation_diagnostic: model must have exactly two dark states");
    const int d = model.dim();
    Operator basis(d, 2);
    basis.col(0) = ds.states[0].amplitudes();
    basis.col(1) = ds.states[1].amplitudes();

    Eigen::ComplexEigenSolver<Operator> es(liouvillian(model));
    if (es.info() != Eigen::Success) throw NumericalError("oscillation_diagnostic: eigensolver did not converge");
    const Operator& v = es.eigenvectors();
    Eigen::VectorXcd mask = Eigen::VectorXcd::Zero(v.cols());
    for (Eigen::Index i = 0; i < mask.size(); ++i)
        if (std::abs(es.eigenvalues()(i).real()) <= 1e-9) mask(i) = 1.0;
    const Operator projector = v * mask.asDiagonal() * v.inverse();
    Ket w = projector * Eigen::Map<const Ket>(rho0.matrix().data(), rho0.matrix().size());
    const Operator asym = Eigen::Map<Operator>(w.data(), d, d);

    OscillationDiagnostic out;
    out.initial_overlaps = basis.adjoint() * rho0.matrix() * basis;
    out.asymptotic_weights = basis.adjoint() * asym * basis;
    const double c11 = out.asymptotic_weights(0, 0).real(), c22 = out.asymptotic_weights(1, 1).real();
    out.ratio = c22 > 1e-14 ? c11 / c22 : std::numeric_limits<double>::infinity();
    return out;
}

}  // namespace qsync
