#include "latsub/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "latsub/lattice.hpp"

namespace latsub {

std::string to_string(Certainty c) {
  switch (c) {
    case Certainty::Certified: return "certified";
    case Certainty::Evidence: return "evidence";
    case Certainty::Inconclusive: return "inconclusive";
    case Certainty::Refuted: return "refuted";
  }
  return "inconclusive";
}

const std::vector<std::string>& report_blocks() {
  static const std::vector<std::string> names = {
      "expansivity", "primitivity", "pf",      "fixed_point", "legality",  "lprime",     "modcoin",
      "windows",     "overlap",     "density", "tiles",       "frequency", "diffraction"};
  return names;
}

AnalysisReport::AnalysisReport(std::string system) : system_(std::move(system)) {}

void AnalysisReport::set(const std::string& name, Json block) {
  const auto& names = report_blocks();
  if (std::find(names.begin(), names.end(), name) == names.end()) throw Error("unknown report block: " + name);
  if (!block.is_object() || !block.contains("verdict")) throw Error("report block without verdict: " + name);
  blocks_[name] = std::move(block);
}

const Json& AnalysisReport::block(const std::string& name) const {
  auto it = blocks_.find(name);
  if (it == blocks_.end()) throw Error("report block not run: " + name);
  return it->second;
}

Json AnalysisReport::to_json() const {
  Json out;
  out["schema_version"] = kReportSchemaVersion;
  out["system"] = system_;
  Json blocks = Json::object();
  for (const auto& name : report_blocks()) {
    auto it = blocks_.find(name);
    blocks[name] = it == blocks_.end() ? Json{{"verdict", "not run"}} : it->second;
  }
  out["blocks"] = std::move(blocks);
  out["overall"] = overall_.is_null() ? Json{{"verdict", "not run"}} : overall_;
  return out;
}

std::string AnalysisReport::text() const { return to_json().dump(2) + "\n"; }

void emit_report(const AnalysisReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open report file: " + path.string());
  out << report.text();
  out.flush();
  if (!out) throw Error("failed writing report file: " + path.string());
}

double tidy(double x) {
  if (!std::isfinite(x) || x == 0.0) return x == 0.0 ? 0.0 : x;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return std::strtod(buf, nullptr);
}

}  // namespace latsub
