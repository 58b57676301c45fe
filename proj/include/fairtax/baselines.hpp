#pragma once

#include <string>
#include <vector>

#include "fairtax/csv.hpp"
#include "fairtax/firm.hpp"

// Analytical baselines: per-firm optima for the fairness-agnostic and
// fairness-aware objectives, in the layout of the reference tables. The Avg
// welfare column follows the tables' convention of multiplying the averaged
// fairness and profit columns.

namespace fairtax {

struct BaselineRow {
  std::string id;
  double price = 0.0;
  double fairness = 0.0;
  double phi = 0.0;
  double swf = 0.0;
};

struct BaselineTable {
  std::vector<BaselineRow> rows;
  double avg_f = 0.0;
  double avg_phi = 0.0;
  double avg_swf = 0.0; // avg_f * avg_phi
};

inline BaselineTable compute_baselines(const std::vector<FirmSpec>& firms,
                                       const PriceGrid& grid, bool aware) {
  BaselineTable table;
  for (const FirmSpec& firm : firms) {
    const PricingDecision d =
        aware ? optimize_aware(firm, grid) : optimize_agnostic(firm, grid);
    table.rows.push_back({firm.id, d.price, d.fairness, d.phi,
                          d.fairness * d.phi});
    table.avg_f += d.fairness / firms.size();
    table.avg_phi += d.phi / firms.size();
  }
  table.avg_swf = table.avg_f * table.avg_phi;
  return table;
}

inline void write_baselines_csv(const std::string& path,
                                const BaselineTable& table,
                                const std::string& mode,
                                const std::string& config_hash) {
  CsvWriter out(path, {"config_hash", "mode", "firm", "price", "fairness",
                       "phi", "swf"});
  for (const BaselineRow& row : table.rows) {
    out.write_row({config_hash, mode, row.id, csv_num(row.price),
                   csv_num(row.fairness), csv_num(row.phi), csv_num(row.swf)});
  }
  out.write_row({config_hash, mode, "Avg", "", csv_num(table.avg_f),
                 csv_num(table.avg_phi), csv_num(table.avg_swf)});
}

} // namespace fairtax
