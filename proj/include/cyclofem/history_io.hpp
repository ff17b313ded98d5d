#pragma once

#include <string>
#include <vector>

#include "cyclofem/incremental.hpp"

namespace cyclofem {

// Chunked binary history container. The data file carries named typed chunks;
// a JSON sidecar (<path>.json) carries the schema version and layout summary.
void save_history(const HistoryRecord& record, const std::string& path);
HistoryRecord load_history(const std::string& path);

// A named displacement row to export alongside step, time, and load.
struct TraceColumn {
  std::string name;
  int dof = 0;
};

// RFC 4180 CSV: header row, one row per step, CRLF line endings.
void export_trace_csv(const HistoryRecord& record, const std::vector<TraceColumn>& columns,
                      const std::string& path);

}  // namespace cyclofem
