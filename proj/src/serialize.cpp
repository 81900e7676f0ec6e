#include "lent/serialize.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "lent/errors.hpp"

namespace lent {

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw Error("number formatting failed");
  return std::string(buf, ptr);
}

std::string csv_row(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out.push_back(',');
    out += fields[i];
  }
  out.push_back('\n');
  return out;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw Error("write to '" + path + "' failed");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Json mark_to_json(const Mark& mark) {
  if (is_angle(mark)) return Json{{"angle", mark_angle(mark)}};
  const DriverPath& path = mark_path(mark);
  Json rows = Json::array();
  for (int i = 0; i < path.n_steps(); ++i) {
    Json row = Json::array();
    for (int j = 0; j < path.dims(); ++j) row.push_back(path.increments(i, j));
    rows.push_back(std::move(row));
  }
  return Json{{"path", Json{{"dt", path.dt}, {"increments", std::move(rows)}}}};
}

Mark mark_from_json(const Json& j) {
  if (j.contains("angle")) return Mark(j.at("angle").get<double>());
  if (!j.contains("path")) throw Error("mark JSON must contain 'angle' or 'path'");
  const Json& p = j.at("path");
  DriverPath path;
  path.dt = p.at("dt").get<double>();
  const Json& rows = p.at("increments");
  const int n = static_cast<int>(rows.size());
  const int d = n > 0 ? static_cast<int>(rows.at(0).size()) : 0;
  path.increments.resize(n, d);
  for (int i = 0; i < n; ++i) {
    const Json& row = rows.at(i);
    if (static_cast<int>(row.size()) != d) throw Error("ragged driver-path increments");
    for (int j2 = 0; j2 < d; ++j2) path.increments(i, j2) = row.at(j2).get<double>();
  }
  return Mark(std::move(path));
}

Json configuration_to_json(const Configuration& cfg) {
  Json points = Json::array();
  for (const MarkedPoint& p : cfg.points()) {
    Json attr = Json::array();
    for (Eigen::Index i = 0; i < p.base.attribute.size(); ++i)
      attr.push_back(p.base.attribute[i]);
    points.push_back(Json{
        {"time", p.base.time},
        {"attribute", std::move(attr)},
        {"mark", mark_to_json(p.mark)},
    });
  }
  return Json{
      {"mark_space", cfg.mark_space_id()},
      {"horizon", cfg.horizon()},
      {"points", std::move(points)},
  };
}

Configuration configuration_from_json(const Json& j) {
  std::vector<MarkedPoint> points;
  for (const Json& pj : j.at("points")) {
    MarkedPoint p;
    p.base.time = pj.at("time").get<double>();
    const Json& attr = pj.at("attribute");
    p.base.attribute.resize(static_cast<Eigen::Index>(attr.size()));
    for (std::size_t i = 0; i < attr.size(); ++i)
      p.base.attribute[static_cast<Eigen::Index>(i)] = attr.at(i).get<double>();
    p.mark = mark_from_json(pj.at("mark"));
    points.push_back(std::move(p));
  }
  return Configuration::from_points(j.at("mark_space").get<std::string>(),
                                    j.at("horizon").get<double>(), std::move(points));
}

Json to_json(const NondegeneracyReport& report) {
  return Json{
      {"n_samples", report.n_samples},
      {"n_above", report.n_above},
      {"fraction", report.fraction},
      {"threshold", report.threshold},
      {"truncation", report.truncation},
      {"min_eig_hist",
       Json{{"log10_lo", report.hist_lo},
            {"log10_hi", report.hist_hi},
            {"counts", report.min_eig_hist}}},
  };
}

Json to_json(const IsotropyReport& report) {
  Json rows = Json::array();
  for (const IsotropyReport::RadiusRow& row : report.rows) {
    rows.push_back(Json{
        {"radius", row.radius},
        {"mean_density", row.mean_density},
        {"max_rel_dev", row.max_rel_dev},
    });
  }
  return Json{
      {"n_angles", report.n_angles},
      {"tol", report.tol},
      {"max_rel_dev", report.max_rel_dev},
      {"pass", report.pass},
      {"radii", std::move(rows)},
  };
}

Json to_json(const SuiteReport& report) {
  Json rows = Json::array();
  for (const SuiteRow& row : report.rows) {
    rows.push_back(Json{
        {"name", row.name},
        {"max_dev", row.max_dev},
        {"tol", row.tol},
        {"pass", row.pass},
    });
  }
  return Json{{"all_pass", report.all_pass}, {"rows", std::move(rows)}};
}

Json to_json(const MomentCheckReport& report) {
  Json rows = Json::array();
  for (const MomentCheckReport::Row& row : report.rows) {
    rows.push_back(Json{
        {"x_norm", row.x_norm},
        {"ratio_p1", row.ratio_p1},
        {"ratio_p2", row.ratio_p2},
    });
  }
  return Json{
      {"t", report.t},
      {"max_ratio_p1", report.max_ratio_p1},
      {"max_ratio_p2", report.max_ratio_p2},
      {"spread_p2", report.spread_p2},
      {"fitted_k", report.fitted_k},
      {"bounded", report.bounded},
      {"rows", std::move(rows)},
  };
}

}  // namespace lent
