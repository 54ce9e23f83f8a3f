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

#include "qsync/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace qsync {

std::optional<double> pearson(std::span<const double> alpha, std::span<const double> beta,
                              std::size_t start, std::size_t window) {
    if (window < 2) throw DimensionError("pearson: window must be at least 2");
    const std::size_t stop = start + window;  // inclusive
    if (stop >= alpha.size() || stop >= beta.size())
        throw DimensionError("pearson: window extends past the end of the series");
    const double count = static_cast<double>(window + 1);
    double ma = 0.0, mb = 0.0;
    for (std::size_t j = start; j <= stop; ++j) {
        ma += alpha[j];
        mb += beta[j];
    }
    ma /= count;
    mb /= count;
    double saa = 0.0, sbb = 0.0, sab = 0.0;
    for (std::size_t j = start; j <= stop; ++j) {
        const double da = alpha[j] - ma, db = beta[j] - mb;
        saa += da * da;
        sbb += db * db;
        sab += da * db;
    }
    const double floor = 1e-24 * count;
    if (!(saa > floor) || !(sbb > floor)) return std::nullopt;
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

std::vector<std::optional<double>> pearson_series(std::span<const double> alpha,
                                                  std::span<const double> beta, std::size_t window) {
    const std::size_t len = std::min(alpha.size(), beta.size());
    std::vector<std::optional<double>> out(len);
    for (std::size_t n = 0; n + window < len; ++n) out[n] = pearson(alpha, beta, n, window);
    return out;
}

namespace {

void require_two_qubit(const DensityMatrix& rho, const char* what) {
    if (rho.dim() != 4) throw DimensionError(std::string(what) + ": expected a two-qubit (4-dim) state");
}

// B with m = B B^dag, dropping eigenvalues below 1e-13 of the largest.
Operator psd_factor(const Operator& m) {
    const EigenSystem es = herm_eig(m);
    const double cutoff = 1e-13 * std::max(es.values(0), 1e-300);
    Eigen::VectorXcd w(es.values.size());
    for (Eigen::Index k = 0; k < w.size(); ++k) w(k) = es.values(k) > cutoff ? std::sqrt(es.values(k)) : 0.0;
    return es.vectors * w.asDiagonal();
}

double entropy_of(const Operator& m) {
    Eigen::SelfAdjointEigenSolver<Operator> es(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
    double s = 0.0;
    for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
        const double p = es.eigenvalues()(k);
        if (p > 0.0) s -= p * std::log(p);
    }
    return std::max(s, 0.0);
}

}  // namespace

double concurrence(const DensityMatrix& rho) {
    require_two_qubit(rho, "concurrence");
    // With rho = B B^dag, the square roots of the eigenvalues of
    // rho (Y rho* Y) are the singular values of tau = B^T Y B. Working with
    // tau avoids taking square roots of round-off sized eigenvalues.
    const Operator b = psd_factor(rho.matrix());
    const Operator yy = kron(ops::sigma_y(), ops::sigma_y());
    Eigen::JacobiSVD<Operator> svd(Operator(b.transpose() * yy * b));
    const Eigen::VectorXd& s = svd.singularValues();  // descending
    return std::clamp(s(0) - s(1) - s(2) - s(3), 0.0, 1.0);
}

double von_neumann_entropy(const DensityMatrix& rho) { return entropy_of(rho.matrix()); }

double mutual_information(const DensityMatrix& rho) {
    require_two_qubit(rho, "mutual_information");
    const std::array<int, 2> dims{2, 2};
    const std::array<int, 1> first{0}, second{1};
    const Operator r1 = partial_trace(rho.matrix(), dims, first);
    const Operator r2 = partial_trace(rho.matrix(), dims, second);
    return std::max(entropy_of(r1) + entropy_of(r2) - entropy_of(rho.matrix()), 0.0);
}

double fidelity(const DensityMatrix& rho1, const DensityMatrix& rho2) {
    if (rho1.dim() != rho2.dim()) throw DimensionError("fidelity: state dimensions differ");
    // tr sqrt(sqrt(r1) r2 sqrt(r1)) equals the trace norm of B1^dag B2 for
    // any factorizations r_i = B_i B_i^dag.
    const Operator b = psd_factor(rho1.matrix()).adjoint() * psd_factor(rho2.matrix());
    Eigen::JacobiSVD<Operator> svd(b);
    const double tr = svd.singularValues().sum();
    return std::clamp(tr * tr, 0.0, 1.0);
}

double purity(const DensityMatrix& rho) {
    return rho.matrix().cwiseAbs2().sum();
}

}  // namespace qsync
