#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pmmd/numeric.hpp"

namespace pmmd {

// Fixed-weight occupation vectors of a common length, plus free-text metadata.
struct Dataset {
  std::size_t m = 0;
  std::size_t n = 0;
  bool collisions = false;  // records may hold counts above 1
  std::vector<OccupationVector> records;
  std::vector<std::string> provenance;  // written as '#' comment lines

  void validate() const;
};

// Text format:
//   # comment lines (anywhere)
//   <m> <n> <collision_flag>
//   one digit string per record
std::string format_dataset(const Dataset& ds);
Dataset parse_dataset(const std::string& text);

void write_dataset(const Dataset& ds, const std::string& path);
Dataset read_dataset(const std::string& path);

// Each row lists 1-based item ids, most preferred first; the first n become 1s.
Dataset ingest_rankings(const std::vector<std::vector<std::size_t>>& rows, std::size_t m,
                        std::size_t n);

// Comma-separated ranking rows, '#' comments, optional non-numeric header.
std::vector<std::vector<std::size_t>> read_ranking_csv(const std::string& path);

// PrefLib strict-order lines "count: item,item,..." (each expanded count times).
std::vector<std::vector<std::size_t>> read_preflib_strict_order(const std::string& path);

struct ExpressionTable {
  std::vector<std::string> items;          // column ids
  std::vector<std::vector<double>> rows;   // one score per column
};

// CSV with a header row of item ids. An empty first header cell marks a
// leading row-label column, which is dropped.
ExpressionTable read_expression_csv(const std::string& path);

// Per row, 1s at the n largest scores among `universe` (by magnitude unless
// `signed_order`); ties go to the smaller universe index.
Dataset ingest_expression_table(const ExpressionTable& table,
                                const std::vector<std::string>& universe, std::size_t n,
                                bool signed_order = false);

// Seeded shuffle then split; the first part gets round(train_fraction * size) records.
std::pair<Dataset, Dataset> shuffle_split(const Dataset& ds, double train_fraction,
                                          std::uint64_t seed);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace pmmd
