// Copyright 2026 The tcsbond Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "tcsbond/experiment.hpp"
#include "tcsbond/threshold.hpp"

namespace tcsbond {

enum class OutputFormat : uint8_t { csv, json };

inline std::optional<OutputFormat> parse_format(std::string_view text) {
    if (text == "csv") return OutputFormat::csv;
    if (text == "json") return OutputFormat::json;
    return std::nullopt;
}

inline constexpr std::string_view kPointCsvHeader =
    "scheme,d,p_bond,p_comp,trials,failures,percolation_failures,rate,ci_low,ci_high,seed";
inline constexpr std::string_view kThresholdCsvHeader =
    "scheme,p_bond,crossing,p_th,ci_low,ci_high,method,nu,chi2_per_dof,note";

/// Six significant digits; non-finite values print as "nan".
inline std::string format_number(double v) {
    if (!std::isfinite(v)) {
        return "nan";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

namespace internal {

// A JSON number carrying the same six significant digits as the CSV text.
inline nlohmann::json json_number(double v) {
    if (!std::isfinite(v)) {
        return nullptr;
    }
    return std::strtod(format_number(v).c_str(), nullptr);
}

inline std::string csv_field(const std::string &s) {
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace internal

inline std::string point_csv_row(const PointEstimate &p) {
    std::string row = to_string(p.scheme);
    row += ',' + std::to_string(p.d);
    row += ',' + format_number(p.p_bond);
    row += ',' + format_number(p.p_comp);
    row += ',' + std::to_string(p.trials);
    row += ',' + std::to_string(p.failures);
    row += ',' + std::to_string(p.percolation_failures);
    row += ',' + format_number(p.rate);
    row += ',' + format_number(p.ci_low);
    row += ',' + format_number(p.ci_high);
    row += ',' + std::to_string(p.seed);
    return row;
}

inline nlohmann::ordered_json point_json(const PointEstimate &p) {
    using internal::json_number;
    nlohmann::ordered_json j;
    j["scheme"] = to_string(p.scheme);
    j["d"] = p.d;
    j["p_bond"] = json_number(p.p_bond);
    j["p_comp"] = json_number(p.p_comp);
    j["trials"] = p.trials;
    j["failures"] = p.failures;
    j["percolation_failures"] = p.percolation_failures;
    j["rate"] = json_number(p.rate);
    j["ci_low"] = json_number(p.ci_low);
    j["ci_high"] = json_number(p.ci_high);
    j["seed"] = p.seed;
    return j;
}

inline std::string threshold_csv_row(const ThresholdEstimate &t) {
    std::string row = to_string(t.scheme);
    row += ',' + format_number(t.p_bond);
    row += ',' + std::string(t.crossing ? "true" : "false");
    row += ',' + format_number(t.p_th);
    row += ',' + format_number(t.ci_low);
    row += ',' + format_number(t.ci_high);
    row += ',' + std::string(to_string(t.method));
    row += ',' + format_number(t.nu);
    row += ',' + format_number(t.chi2_per_dof);
    row += ',' + internal::csv_field(t.note);
    return row;
}

inline nlohmann::ordered_json threshold_json(const ThresholdEstimate &t) {
    using internal::json_number;
    nlohmann::ordered_json j;
    j["scheme"] = to_string(t.scheme);
    j["p_bond"] = json_number(t.p_bond);
    j["crossing"] = t.crossing;
    j["p_th"] = json_number(t.p_th);
    j["ci_low"] = json_number(t.ci_low);
    j["ci_high"] = json_number(t.ci_high);
    j["method"] = to_string(t.method);
    j["nu"] = json_number(t.nu);
    j["chi2_per_dof"] = json_number(t.chi2_per_dof);
    j["coefficients"] = nlohmann::ordered_json::array(
        {json_number(t.coefficients[0]), json_number(t.coefficients[1]), json_number(t.coefficients[2])});
    auto crossings = nlohmann::ordered_json::array();
    for (const auto &c : t.pair_crossings) {
        crossings.push_back({{"smaller", c.smaller}, {"larger", c.larger}, {"at", json_number(c.at)}});
    }
    j["pair_crossings"] = std::move(crossings);
    j["note"] = t.note;
    return j;
}

/// Streams records as CSV rows, or collects them into one JSON array that
/// is written by `finish`.
class RecordWriter {
   public:
    RecordWriter(std::ostream &out, OutputFormat format, std::string_view csv_header)
        : out_(&out), format_(format), header_(csv_header) {
    }

    void write(const PointEstimate &p) {
        emit(point_csv_row(p), point_json(p));
    }
    void write(const ThresholdEstimate &t) {
        emit(threshold_csv_row(t), threshold_json(t));
    }
    void write_row(const std::string &csv, nlohmann::ordered_json json) {
        emit(csv, std::move(json));
    }

    void finish() {
        if (format_ == OutputFormat::json) {
            *out_ << records_.dump(2) << '\n';
        } else if (!header_written_) {
            *out_ << header_ << '\n';
            header_written_ = true;
        }
        out_->flush();
    }

   private:
    void emit(const std::string &csv, nlohmann::ordered_json json) {
        if (format_ == OutputFormat::json) {
            records_.push_back(std::move(json));
            return;
        }
        if (!header_written_) {
            *out_ << header_ << '\n';
            header_written_ = true;
        }
        *out_ << csv << '\n';
        out_->flush();
    }

    std::ostream *out_;
    OutputFormat format_;
    std::string header_;
    bool header_written_ = false;
    nlohmann::ordered_json records_ = nlohmann::ordered_json::array();
};

}  // namespace tcsbond
