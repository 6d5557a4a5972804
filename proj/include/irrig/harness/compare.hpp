#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "irrig/harness/season.hpp"

namespace irrig::harness {

struct CompareRow {
    std::string name;
    double total_irrigation = 0.0;  ///< m
    double iwue = 0.0;              ///< kg/m3
    double yield = 0.0;             ///< kg/m2
    int violation_days = 0;
    bool reference = false;  ///< published figure, not computed here
    std::string against;     ///< reference rows: name of the reference row their deltas use
};

CompareRow compare_row(const std::string& name, const SeasonMetrics& m);

struct CompareTable {
    std::string baseline;
    std::vector<CompareRow> rows;
    /// Percent change of each row against the baseline row, same order as `rows`.
    std::vector<double> irrigation_delta;
    std::vector<double> iwue_delta;

    std::string csv() const;
    std::string text() const;
};

/// Deltas are taken against the computed row named `baseline`; reference rows use their
/// own `against` row.
CompareTable compare(const std::vector<CompareRow>& rows, const std::string& baseline);

/// Published season results of the four schedulers.
std::vector<CompareRow> reference_rows();

}  // namespace irrig::harness
