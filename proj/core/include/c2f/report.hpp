#pragma once

// Human-readable and JSON reports. Numbers use fixed six-decimal formatting
// so reports are byte-stable across runs.

#include <string>

#include "c2f/metrics.hpp"
#include "c2f/pipeline.hpp"

namespace c2f {

/// Per-case lines `case_id coarse_dsc fine_dsc verdict`, an errors section,
/// then the Coarse/Fine summary block in percent.
std::string format_report_text(const Evaluation& ev);
std::string format_report_json(const Evaluation& ev);

/// Text to `path`, JSON copy to `path + ".json"`.
void write_report(const Evaluation& ev, const std::string& path);

/// Summary of one predict run. Contains no timings.
std::string format_case_report(const std::string& case_id, const CaseResult& r);
void write_case_report(const std::string& case_id, const CaseResult& r, const std::string& path);

/// Verdict string recorded by write_case_report.
std::string read_case_verdict(const std::string& path);

}  // namespace c2f
