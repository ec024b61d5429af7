#include <cmath>
#include <cstdio>
#include <fstream>
#include <system_error>

#include <unistd.h>

#include "fracnoether/cli.hpp"
#include "fracnoether/error.hpp"
#include "json.hpp"

namespace fracnoether::cli {

namespace {

std::string format_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void check_shape(const Report& report) {
  if (report.columns.empty()) throw ValidationError("report has no columns");
  const std::size_t rows = report.columns.front().values.size();
  for (const auto& c : report.columns) {
    if (c.values.size() != rows || c.flagged.size() != rows)
      throw ValidationError("report column '" + c.name + "' has the wrong length");
    for (std::size_t i = 0; i < rows; ++i)
      if (!c.flagged[i] && !std::isfinite(c.values[i]))
        throw NumericError("non-finite value in column '" + c.name + "' at row " + std::to_string(i));
  }
}

}  // namespace

Column column(std::string name, const GridFunction& f) {
  return {std::move(name), std::vector<double>(f.values().begin(), f.values().end()), f.flags()};
}

std::string render_csv(const Report& report) {
  check_shape(report);
  std::string out;
  for (std::size_t c = 0; c < report.columns.size(); ++c) {
    if (c) out += ',';
    out += report.columns[c].name;
  }
  out += '\n';
  const std::size_t rows = report.columns.front().values.size();
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t c = 0; c < report.columns.size(); ++c) {
      if (c) out += ',';
      const Column& col = report.columns[c];
      if (!col.flagged[i]) out += format_number(col.values[i]);
    }
    out += '\n';
  }
  return out;
}

std::string render_refinement_csv(const Report& report) {
  std::string out = "N,interior_norm,ratio\n";
  for (std::size_t k = 0; k < report.refinement.size(); ++k) {
    const auto [n, norm] = report.refinement[k];
    out += std::to_string(n) + ',' + format_number(norm) + ',';
    if (k > 0) out += format_number(report.refinement[k - 1].second / norm);
    out += '\n';
  }
  return out;
}

std::string render_json(const Report& report) {
  check_shape(report);
  nlohmann::ordered_json doc;
  doc["meta"] = nlohmann::ordered_json::parse(report.meta_json.empty() ? "{}" : report.meta_json);
  if (!report.refinement.empty()) {
    auto& trace = doc["refinement"] = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < report.refinement.size(); ++k) {
      nlohmann::ordered_json row;
      row["N"] = report.refinement[k].first;
      row["interior_norm"] = report.refinement[k].second;
      row["ratio"] = k > 0 ? nlohmann::ordered_json(report.refinement[k - 1].second / report.refinement[k].second)
                           : nlohmann::ordered_json(nullptr);
      trace.push_back(std::move(row));
    }
  }
  auto& cols = doc["columns"] = nlohmann::ordered_json::object();
  for (const auto& c : report.columns) {
    auto& arr = cols[c.name] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < c.values.size(); ++i)
      arr.push_back(c.flagged[i] ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(c.values[i]));
  }
  return doc.dump(2) + "\n";
}

void write_atomically(const std::vector<std::pair<std::filesystem::path, std::string>>& files) {
  namespace fs = std::filesystem;
  std::vector<fs::path> staged;
  auto discard = [&] {
    std::error_code ec;
    for (const auto& p : staged) fs::remove(p, ec);
  };
  for (const auto& [path, contents] : files) {
    fs::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (out) {
      staged.push_back(tmp);
      out << contents;
      out.close();
    }
    if (!out) {
      discard();
      throw ValidationError("cannot write '" + path.string() + "'");
    }
  }
  for (std::size_t k = 0; k < files.size(); ++k) {
    std::error_code ec;
    fs::rename(staged[k], files[k].first, ec);
    if (ec) {
      discard();
      throw ValidationError("cannot write '" + files[k].first.string() + "': " + ec.message());
    }
  }
}

}  // namespace fracnoether::cli
