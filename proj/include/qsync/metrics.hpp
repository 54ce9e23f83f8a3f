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

#include <optional>
#include <span>
#include <vector>

#include "qsync/qops.hpp"

namespace qsync {

/// Windowed Pearson correlation over the inclusive index range
/// [start, start + window], i.e. window + 1 samples, with the sample means
/// taken over the same range. Returns nullopt when either window has zero
/// variance (sum of squared deviations below 1e-24 per sample).
/// Throws DimensionError if the range is not covered by both series or
/// window < 2.
std::optional<double> pearson(std::span<const double> alpha, std::span<const double> beta,
                              std::size_t start, std::size_t window);

/// pearson() evaluated at every start index. Entries whose window runs past
/// the end of the data are nullopt.
std::vector<std::optional<double>> pearson_series(std::span<const double> alpha,
                                                  std::span<const double> beta, std::size_t window);

/// Wootters concurrence of a two-qubit state. Eigenvalues below 1e-13 of
/// the largest are treated as zero.
double concurrence(const DensityMatrix& rho);

/// -tr(rho ln rho), natural logarithm.
double von_neumann_entropy(const DensityMatrix& rho);

/// S(rho_1) + S(rho_2) - S(rho) for a two-qubit state.
double mutual_information(const DensityMatrix& rho);

/// Uhlmann fidelity (tr sqrt(sqrt(rho1) rho2 sqrt(rho1)))^2. Same eigenvalue
/// cutoff as concurrence().
double fidelity(const DensityMatrix& rho1, const DensityMatrix& rho2);

/// tr(rho^2).
double purity(const DensityMatrix& rho);

}  // namespace qsync
