#pragma once

#include "kdeint/bandwidth.hpp"
#include "kdeint/experiments.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace kdeint {

//! Shortest decimal form that reads back to the same double.
std::string format_number(double v);

//! replication,n,variant,status,value,h,n_used,min_fhat
void write_rows_csv(std::ostream& out, const std::vector<ReplicationRow>& rows);
//! replication,n,variant,wall_seconds
void write_timings_csv(std::ostream& out, const std::vector<ReplicationRow>& rows);
void write_summary_csv(std::ostream& out, const std::vector<VariantSummary>& s);
//! One box per variant: whiskers at 1.5 IQR, quartile values printed next to
//! each box with format_number and repeated as data-* attributes.
void write_boxes_svg(std::ostream& out,
                     const std::vector<VariantSummary>& s,
                     const std::string& title);
//! quantity,value pairs describing a CLT run.
void write_clt_csv(std::ostream& out, const CltSummary& s);
void write_rate_csv(std::ostream& out, const RateResult& r);
void write_candidate_table_csv(std::ostream& out,
                               const std::vector<CandidateRow>& table);

void write_benchmark_outputs(const std::filesystem::path& dir,
                             const BenchmarkResult& r,
                             const std::string& title);
void write_clt_outputs(const std::filesystem::path& dir, const CltSummary& s);
void write_rate_outputs(const std::filesystem::path& dir, const RateResult& r);

} // namespace kdeint
