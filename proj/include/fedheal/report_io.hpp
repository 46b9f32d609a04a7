#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <string_view>

#include "fedheal/config.hpp"
#include "fedheal/orchestrator.hpp"
#include "fedheal/puc.hpp"

namespace fedheal {

enum class ReportFormat { kCsv, kJson };

/// "csv" or "json"; throws ConfigError otherwise.
ReportFormat parse_report_format(std::string_view text);

/// Full report: config echo, every round record, final metrics (null when
/// unavailable). Model digests are 16-digit lowercase hex strings. Doubles
/// use the shortest representation that parses back to the same bits.
Json report_to_json(const ExperimentReport& report);
ExperimentReport report_from_json(const Json& doc);

/// Plot-ready CSV with header "section,round,domain,value":
///   accuracy,<round>,<domain>,<acc>   one row per evaluated round and domain
///   summary_avg,,,<AVG>
///   summary_std,,,<STD>
///   summary_domain,,<domain>,<score>  one row per domain
/// Summary rows are omitted when the report has no final metrics. Reals are
/// printed with 17 significant digits.
void write_report_csv(const ExperimentReport& report, std::ostream& out);

/// Writes the report to `path`; throws std::runtime_error if the file cannot
/// be written.
void export_report(const ExperimentReport& report, const std::filesystem::path& path, ReportFormat format);

ExperimentReport import_report_json(const std::filesystem::path& path);

Json histogram_to_json(const PucHistogram& hist);

/// The same JSON dump used for files, as a string.
std::string dump_json(const Json& doc);

}  // namespace fedheal
