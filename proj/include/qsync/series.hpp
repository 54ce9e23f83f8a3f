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

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace qsync {

struct SeriesRecord {
    long n = 0;
    double t = 0.0;
    std::vector<double> values;  // NaN marks an undefined entry
    std::string phase;
};

/// Time series of labelled real values, one record per collision index or
/// grid point. Indices must be strictly increasing.
class ObservableSeries {
public:
    ObservableSeries() = default;
    explicit ObservableSeries(std::vector<std::string> labels);

    void append(long n, double t, std::vector<double> values, std::string phase = {});

    /// Adds a derived column; `values` must have one entry per record.
    void add_column(std::string label, const std::vector<double>& values);

    const std::vector<std::string>& labels() const { return labels_; }
    const std::vector<SeriesRecord>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }

    bool has_label(std::string_view label) const;
    std::size_t label_index(std::string_view label) const;
    std::vector<double> column(std::string_view label) const;
    std::vector<double> times() const;

    /// Header row then one row per record: n,t,<labels...>,phase.
    /// Reals use %.12g, NaN prints as "nan", lines end in LF.
    void write_csv(std::ostream& os) const;

private:
    std::vector<std::string> labels_;
    std::vector<SeriesRecord> records_;
};

/// printf-style %.12g with NaN rendered as "nan".
std::string format_real(double v);

}  // namespace qsync
