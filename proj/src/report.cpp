#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "masseval/harness.hpp"

namespace masseval {

ReportTable report_from_artifacts(const std::vector<nlohmann::json>& artifacts,
                                  const std::vector<std::string>& names) {
  if (artifacts.empty()) throw_validation("no artifacts to report");
  if (artifacts.size() != names.size()) throw_validation("artifact and name counts differ");
  ReportTable table;
  try {
    const auto classes = ClassTable::from_json(artifacts.front().at("config").at("classes"));
    for (const auto& e : classes.entries()) table.class_names.push_back(e.name);
    for (std::size_t a = 0; a < artifacts.size(); ++a) {
      const auto& art = artifacts[a];
      const auto other = ClassTable::from_json(art.at("config").at("classes"));
      if (!(other == classes)) {
        throw_validation("artifact '" + names[a] + "' uses a different class table");
      }
      ReportRow row;
      row.method = names[a];
      const auto& per_class = art.at("per_class");
      for (const auto& name : table.class_names) {
        std::optional<double> v;
        if (per_class.contains(name) && !per_class.at(name).at("iou").is_null()) {
          v = per_class.at(name).at("iou").get<double>();
        }
        row.class_iou.push_back(v);
      }
      const auto& means = art.at("means");
      row.miou = means.at("miou").get<double>();
      row.mbiou = means.at("mbiou").get<double>();
      row.mbf1 = means.at("mbf1").get<double>();
      table.rows.push_back(std::move(row));
    }
  } catch (const nlohmann::json::exception& e) {
    throw_validation(std::string("malformed evaluation artifact: ") + e.what());
  }
  return table;
}

namespace {

struct Column {
  std::string header;
  bool percent = true;
  std::vector<std::optional<double>> values;  // one per row, unscaled
};

std::vector<Column> columns_of(const ReportTable& table) {
  std::vector<Column> cols;
  for (std::size_t c = 0; c < table.class_names.size(); ++c) {
    Column col{table.class_names[c], true, {}};
    for (const auto& r : table.rows) col.values.push_back(r.class_iou[c]);
    cols.push_back(std::move(col));
  }
  Column miou{"mIoU", true, {}};
  Column mbiou{"mBIoU", true, {}};
  Column mbf1{"mBF1", false, {}};
  for (const auto& r : table.rows) {
    miou.values.push_back(r.miou);
    mbiou.values.push_back(r.mbiou);
    mbf1.values.push_back(r.mbf1);
  }
  cols.push_back(std::move(miou));
  cols.push_back(std::move(mbiou));
  cols.push_back(std::move(mbf1));
  return cols;
}

double scaled(const Column& col, double v) { return col.percent ? v * 100.0 : v; }

std::string rendered(const Column& col, double v) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(col.percent ? 2 : 4);
  os << scaled(col, v);
  return os.str();
}

// 1 = best, 2 = second best, 0 = neither. Ranks compare the rendered cells so
// equal-looking numbers share a rank.
std::vector<int> ranks(const Column& col) {
  std::vector<double> order;
  for (const auto& v : col.values) {
    if (v) order.push_back(std::stod(rendered(col, *v)));
  }
  std::sort(order.begin(), order.end(), std::greater<>());
  order.erase(std::unique(order.begin(), order.end()), order.end());
  std::vector<int> out;
  for (const auto& v : col.values) {
    if (!v) {
      out.push_back(0);
      continue;
    }
    const double key = std::stod(rendered(col, *v));
    if (!order.empty() && key == order[0]) {
      out.push_back(1);
    } else if (order.size() > 1 && key == order[1]) {
      out.push_back(2);
    } else {
      out.push_back(0);
    }
  }
  return out;
}

}  // namespace

std::string render_report(const ReportTable& table, ReportFormat format) {
  const auto cols = columns_of(table);
  std::ostringstream os;
  if (format == ReportFormat::json) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      nlohmann::json row = {{"method", table.rows[r].method}};
      for (const auto& col : cols) {
        const auto& v = col.values[r];
        row[col.header] = v ? nlohmann::json(scaled(col, *v)) : nlohmann::json(nullptr);
      }
      rows.push_back(row);
    }
    std::vector<std::string> headers;
    for (const auto& col : cols) headers.push_back(col.header);
    return nlohmann::json{{"columns", headers}, {"rows", rows}}.dump(2) + "\n";
  }
  if (format == ReportFormat::csv) {
    os << "method";
    for (const auto& col : cols) os << ',' << col.header;
    os << '\n';
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      os << table.rows[r].method;
      for (const auto& col : cols) {
        os << ',';
        if (col.values[r]) os << rendered(col, *col.values[r]);
      }
      os << '\n';
    }
    return os.str();
  }
  std::vector<std::vector<int>> col_ranks;
  for (const auto& col : cols) col_ranks.push_back(ranks(col));
  os << "| Method |";
  for (const auto& col : cols) os << ' ' << col.header << " |";
  os << "\n|---|";
  for (std::size_t c = 0; c < cols.size(); ++c) os << "---|";
  os << '\n';
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    os << "| " << table.rows[r].method << " |";
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const auto& v = cols[c].values[r];
      if (!v) {
        os << " - |";
        continue;
      }
      const auto text = rendered(cols[c], *v);
      switch (col_ranks[c][r]) {
        case 1:
          os << " **" << text << "** |";
          break;
        case 2:
          os << " <u>" << text << "</u> |";
          break;
        default:
          os << ' ' << text << " |";
      }
    }
    os << '\n';
  }
  os << "\nBold: best. Underlined: second best.\n";
  return os.str();
}

}  // namespace masseval
