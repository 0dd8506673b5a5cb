#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace latsub {

using Json = nlohmann::json;

/// How far a block's result can be trusted. Certified is reserved for exact
/// arithmetic; anything sampled or windowed is at most evidence.
enum class Certainty { Certified, Evidence, Inconclusive, Refuted };
std::string to_string(Certainty c);

inline constexpr int kReportSchemaVersion = 1;

/// Block names in report order.
const std::vector<std::string>& report_blocks();

class AnalysisReport {
 public:
  explicit AnalysisReport(std::string system = {});

  /// Stores a block; it must carry "verdict" and be a known block name.
  void set(const std::string& name, Json block);
  bool has(const std::string& name) const { return blocks_.count(name) > 0; }
  const Json& block(const std::string& name) const;
  void set_overall(Json overall) { overall_ = std::move(overall); }
  const Json& overall() const { return overall_; }
  const std::string& system() const { return system_; }

  /// Every block, with {"verdict": "not run"} for the ones never set.
  Json to_json() const;
  /// Pretty-printed, sorted keys, trailing newline.
  std::string text() const;

 private:
  std::string system_;
  std::map<std::string, Json> blocks_;
  Json overall_;
};

/// Writes text() to path; throws Error on I/O failure.
void emit_report(const AnalysisReport& report, const std::filesystem::path& path);

/// Rounds to 10 significant digits so reports stay readable and stable.
double tidy(double x);

}  // namespace latsub
