#pragma once

#include <filesystem>
#include <string>

#include "bbm/experiments.hpp"

namespace bbm {

/// Rows beyond this count go to a sidecar CSV instead of the JSON body.
inline constexpr std::size_t kInlineRowLimit = 10000;

/// {experiment, config, columns, rows[], aggregates{}, summary{}, decay_fit?,
///  failures, seed, wallclock}. Wallclock is null unless requested, keeping
/// the document a pure function of (config, seed).
std::string report_to_json(const AggregateReport& report, bool include_wallclock = false,
                           const std::string& rows_sidecar = {});

/// Header `replica_id,<columns...>`, 17 significant digits.
std::string rows_to_csv(const AggregateReport& report);

/// Writes <stem>.json (and <stem>_rows.csv when rows exceed the inline
/// limit) into dir. Returns the JSON path.
std::filesystem::path write_report(const std::filesystem::path& dir, const std::string& stem,
                                   const AggregateReport& report, bool include_wallclock = false);

}  // namespace bbm
