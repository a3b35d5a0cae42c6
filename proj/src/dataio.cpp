#include "pmmd/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "pmmd/error.hpp"
#include "pmmd/random.hpp"

namespace pmmd {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

bool parse_size(const std::string& tok, std::size_t& out) {
  if (tok.empty()) return false;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return res.ec == std::errc() && res.ptr == tok.data() + tok.size();
}

bool parse_real(const std::string& tok, double& out) {
  if (tok.empty()) return false;
  const char* begin = tok.data();
  if (*begin == '+') ++begin;
  auto res = std::from_chars(begin, tok.data() + tok.size(), out);
  return res.ec == std::errc() && res.ptr == tok.data() + tok.size() && std::isfinite(out);
}

std::string at_line(std::size_t lineno) { return "line " + std::to_string(lineno) + ": "; }

std::vector<std::size_t> parse_id_list(const std::vector<std::string>& cells,
                                       std::size_t lineno) {
  std::vector<std::size_t> ids;
  ids.reserve(cells.size());
  for (const auto& c : cells) {
    if (c.empty()) continue;
    std::size_t id = 0;
    require(parse_size(c, id), ErrorCode::parse_error,
            at_line(lineno) + "bad item id '" + c + "'");
    ids.push_back(id);
  }
  return ids;
}

}  // namespace

void Dataset::validate() const {
  require(m >= 1, ErrorCode::invalid_argument, "dataset needs m >= 1");
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const std::string where = "record " + std::to_string(i + 1) + ": ";
    require(r.modes() == m, ErrorCode::shape_mismatch,
            where + "length " + std::to_string(r.modes()) + " != " + std::to_string(m));
    require(r.total() == n, ErrorCode::shape_mismatch,
            where + "weight " + std::to_string(r.total()) + " != " + std::to_string(n));
    require(collisions || r.collision_free(), ErrorCode::shape_mismatch,
            where + "count above 1 without the collision flag");
  }
}

std::string format_dataset(const Dataset& ds) {
  ds.validate();
  std::string out;
  for (const auto& line : ds.provenance) out += "# " + line + "\n";
  out += std::to_string(ds.m) + " " + std::to_string(ds.n) + " " +
         (ds.collisions ? "1" : "0") + "\n";
  for (const auto& r : ds.records) {
    out += r.to_string();
    out += '\n';
  }
  return out;
}

Dataset parse_dataset(const std::string& text) {
  Dataset ds;
  std::istringstream in(text);
  std::string raw;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = trim(raw);
    if (line.empty()) continue;
    if (line[0] == '#') {
      ds.provenance.push_back(trim(line.substr(1)));
      continue;
    }
    if (!have_header) {
      std::istringstream h(line);
      std::string a, b, c, extra;
      h >> a >> b >> c;
      std::size_t flag = 0;
      require(parse_size(a, ds.m) && parse_size(b, ds.n) && parse_size(c, flag) && flag <= 1 &&
                  !(h >> extra) && ds.m >= 1,
              ErrorCode::parse_error, at_line(lineno) + "expected header 'm n collision_flag'");
      ds.collisions = flag == 1;
      have_header = true;
      continue;
    }
    require(line.size() == ds.m, ErrorCode::parse_error,
            at_line(lineno) + "record length " + std::to_string(line.size()) + " != m = " +
                std::to_string(ds.m));
    OccupationVector rec;
    try {
      rec = OccupationVector::from_string(line);
    } catch (const Error& e) {
      fail(ErrorCode::parse_error, at_line(lineno) + e.what());
    }
    require(rec.total() == ds.n, ErrorCode::parse_error,
            at_line(lineno) + "weight " + std::to_string(rec.total()) +
                " != " + std::to_string(ds.n));
    require(ds.collisions || rec.collision_free(), ErrorCode::parse_error,
            at_line(lineno) + "digit above 1 but the collision flag is 0");
    ds.records.push_back(std::move(rec));
  }
  require(have_header, ErrorCode::parse_error, "dataset has no header line");
  return ds;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::io_error, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::io_error, "cannot write '" + path + "'");
  out << content;
  out.flush();
  require(static_cast<bool>(out), ErrorCode::io_error, "write to '" + path + "' failed");
}

void write_dataset(const Dataset& ds, const std::string& path) {
  write_text_file(path, format_dataset(ds));
}

Dataset read_dataset(const std::string& path) {
  try {
    return parse_dataset(read_text_file(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::io_error) throw;
    fail(e.code(), path + ": " + e.what());
  }
}

Dataset ingest_rankings(const std::vector<std::vector<std::size_t>>& rows, std::size_t m,
                        std::size_t n) {
  require(m >= 1 && n >= 1 && n <= m, ErrorCode::invalid_argument,
          "ranking ingestion needs 1 <= n <= m");
  Dataset ds;
  ds.m = m;
  ds.n = n;
  ds.records.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    const std::string where = "ranking row " + std::to_string(i + 1) + ": ";
    require(row.size() >= n, ErrorCode::invalid_argument,
            where + "has " + std::to_string(row.size()) + " items, need at least " +
                std::to_string(n));
    std::vector<OccupationVector::value_type> bits(m, 0);
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t id = row[k];
      require(id >= 1 && id <= m, ErrorCode::invalid_argument,
              where + "unknown item id " + std::to_string(id));
      require(bits[id - 1] == 0, ErrorCode::invalid_argument,
              where + "duplicate item " + std::to_string(id) + " in the top " +
                  std::to_string(n));
      bits[id - 1] = 1;
    }
    ds.records.emplace_back(std::move(bits));
  }
  ds.provenance.push_back("ingested from " + std::to_string(rows.size()) +
                          " rankings, top " + std::to_string(n) + " of " + std::to_string(m));
  return ds;
}

std::vector<std::vector<std::size_t>> read_ranking_csv(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::vector<std::vector<std::size_t>> rows;
  std::string raw;
  std::size_t lineno = 0;
  bool first = true;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const auto cells = split(line, ',');
    if (first) {
      first = false;
      std::size_t probe = 0;
      if (!parse_size(cells.front(), probe)) continue;  // header row
    }
    rows.push_back(parse_id_list(cells, lineno));
  }
  return rows;
}

std::vector<std::vector<std::size_t>> read_preflib_strict_order(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::vector<std::vector<std::size_t>> rows;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const auto colon = line.find(':');
    require(colon != std::string::npos, ErrorCode::parse_error,
            path + ": " + at_line(lineno) + "expected 'count: item,item,...'");
    std::size_t count = 0;
    require(parse_size(trim(line.substr(0, colon)), count), ErrorCode::parse_error,
            path + ": " + at_line(lineno) + "bad multiplicity");
    const std::string body = line.substr(colon + 1);
    require(body.find('{') == std::string::npos, ErrorCode::parse_error,
            path + ": " + at_line(lineno) + "ties are not allowed in a strict order");
    const auto ids = parse_id_list(split(body, ','), lineno);
    for (std::size_t k = 0; k < count; ++k) rows.push_back(ids);
  }
  return rows;
}

ExpressionTable read_expression_csv(const std::string& path) {
  std::istringstream in(read_text_file(path));
  ExpressionTable table;
  std::string raw;
  std::size_t lineno = 0;
  bool have_header = false;
  bool label_column = false;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    auto cells = split(line, ',');
    if (!have_header) {
      label_column = cells.front().empty();
      if (label_column) cells.erase(cells.begin());
      table.items = std::move(cells);
      have_header = true;
      continue;
    }
    if (label_column) cells.erase(cells.begin());
    require(cells.size() == table.items.size(), ErrorCode::parse_error,
            path + ": " + at_line(lineno) + "expected " + std::to_string(table.items.size()) +
                " scores, got " + std::to_string(cells.size()));
    std::vector<double> scores(cells.size());
    for (std::size_t k = 0; k < cells.size(); ++k)
      require(parse_real(cells[k], scores[k]), ErrorCode::parse_error,
              path + ": " + at_line(lineno) + "missing or bad score for item '" +
                  table.items[k] + "'");
    table.rows.push_back(std::move(scores));
  }
  require(have_header, ErrorCode::parse_error, path + ": no header row");
  return table;
}

Dataset ingest_expression_table(const ExpressionTable& table,
                                const std::vector<std::string>& universe, std::size_t n,
                                bool signed_order) {
  const std::size_t m = universe.size();
  require(m >= 1 && n >= 1 && n <= m, ErrorCode::invalid_argument,
          "expression ingestion needs 1 <= n <= |universe|");
  std::vector<std::size_t> column(m);
  for (std::size_t u = 0; u < m; ++u) {
    const auto it = std::find(table.items.begin(), table.items.end(), universe[u]);
    require(it != table.items.end(), ErrorCode::invalid_argument,
            "universe item '" + universe[u] + "' has no scores");
    column[u] = static_cast<std::size_t>(it - table.items.begin());
  }
  Dataset ds;
  ds.m = m;
  ds.n = n;
  std::vector<std::size_t> order(m);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    require(row.size() == table.items.size(), ErrorCode::invalid_argument,
            "expression row " + std::to_string(r + 1) + " is missing scores");
    auto key = [&](std::size_t u) {
      const double s = row[column[u]];
      return signed_order ? s : std::abs(s);
    };
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return key(a) > key(b); });
    std::vector<OccupationVector::value_type> bits(m, 0);
    for (std::size_t k = 0; k < n; ++k) bits[order[k]] = 1;
    ds.records.emplace_back(std::move(bits));
  }
  ds.provenance.push_back(std::string("ingested from expression table, top ") +
                          std::to_string(n) + " of " + std::to_string(m) + " by " +
                          (signed_order ? "signed score" : "magnitude"));
  return ds;
}

std::pair<Dataset, Dataset> shuffle_split(const Dataset& ds, double train_fraction,
                                          std::uint64_t seed) {
  require(train_fraction > 0.0 && train_fraction < 1.0, ErrorCode::invalid_argument,
          "train fraction must lie in (0, 1)");
  std::vector<std::size_t> idx(ds.records.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng = substream(seed, Stream::split);
  for (std::size_t i = idx.size(); i > 1; --i) {
    const std::size_t j = uniform_index(rng, i);
    std::swap(idx[i - 1], idx[j]);
  }
  const auto cut = static_cast<std::size_t>(
      std::llround(train_fraction * static_cast<double>(ds.records.size())));
  Dataset train{ds.m, ds.n, ds.collisions, {}, ds.provenance};
  Dataset test{ds.m, ds.n, ds.collisions, {}, ds.provenance};
  for (std::size_t k = 0; k < idx.size(); ++k)
    (k < cut ? train : test).records.push_back(ds.records[idx[k]]);
  train.provenance.push_back("train split " + std::to_string(train.records.size()) +
                             " records, seed " + std::to_string(seed));
  test.provenance.push_back("test split " + std::to_string(test.records.size()) +
                            " records, seed " + std::to_string(seed));
  return {std::move(train), std::move(test)};
}

}  // namespace pmmd
