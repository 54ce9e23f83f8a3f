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

#include "qsync/series.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "qsync/error.hpp"

namespace qsync {

ObservableSeries::ObservableSeries(std::vector<std::string> labels) : labels_(std::move(labels)) {
    for (std::size_t i = 0; i < labels_.size(); ++i)
        for (std::size_t j = i + 1; j < labels_.size(); ++j)
            if (labels_[i] == labels_[j]) throw ValidationError("ObservableSeries: duplicate label " + labels_[i]);
}

void ObservableSeries::append(long n, double t, std::vector<double> values, std::string phase) {
    if (values.size() != labels_.size())
        throw DimensionError("ObservableSeries::append: value count does not match label count");
    if (!records_.empty() && n <= records_.back().n)
        throw ValidationError("ObservableSeries::append: record index must be strictly increasing");
    records_.push_back({n, t, std::move(values), std::move(phase)});
}

void ObservableSeries::add_column(std::string label, const std::vector<double>& values) {
    if (values.size() != records_.size())
        throw DimensionError("ObservableSeries::add_column: expected one value per record");
    if (has_label(label)) throw ValidationError("ObservableSeries::add_column: duplicate label " + label);
    labels_.push_back(std::move(label));
    for (std::size_t i = 0; i < records_.size(); ++i) records_[i].values.push_back(values[i]);
}

bool ObservableSeries::has_label(std::string_view label) const {
    return std::find(labels_.begin(), labels_.end(), label) != labels_.end();
}

std::size_t ObservableSeries::label_index(std::string_view label) const {
    auto it = std::find(labels_.begin(), labels_.end(), label);
    if (it == labels_.end()) throw ValidationError("ObservableSeries: unknown label " + std::string(label));
    return static_cast<std::size_t>(it - labels_.begin());
}

std::vector<double> ObservableSeries::column(std::string_view label) const {
    const std::size_t k = label_index(label);
    std::vector<double> out;
    out.reserve(records_.size());
    for (const auto& r : records_) out.push_back(r.values[k]);
    return out;
}

std::vector<double> ObservableSeries::times() const {
    std::vector<double> out;
    out.reserve(records_.size());
    for (const auto& r : records_) out.push_back(r.t);
    return out;
}

std::string format_real(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (v == 0.0) return "0";  // folds -0 into 0 for stable diffs
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

void ObservableSeries::write_csv(std::ostream& os) const {
    os << "n,t";
    for (const auto& l : labels_) os << ',' << l;
    os << ",phase\n";
    for (const auto& r : records_) {
        os << r.n << ',' << format_real(r.t);
        for (double v : r.values) os << ',' << format_real(v);
        os << ',' << r.phase << '\n';
    }
}

}  // namespace qsync
