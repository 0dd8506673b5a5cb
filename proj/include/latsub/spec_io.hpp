#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "latsub/system.hpp"

namespace latsub {

struct SpecIssue {
  std::string field;
  std::string reason;
};

/// Every schema violation found in a system spec file, not just the first.
class SpecError : public Error {
 public:
  SpecError(std::string source, std::vector<SpecIssue> issues);
  const std::vector<SpecIssue>& issues() const { return issues_; }

 private:
  std::vector<SpecIssue> issues_;
};

/// Parses the JSON system spec format. Digit sets are stored sorted.
SubstitutionSystem parse_spec_text(std::string_view text, const std::string& source = "<text>");
SubstitutionSystem parse_spec(const std::filesystem::path& path);

/// Canonical text form: fixed key order, one digit row per line, trailing
/// newline. parse(serialize(s)) reproduces s and serialize is idempotent.
std::string serialize_spec(const SubstitutionSystem& sys);

std::string rational_to_string(const Rational& r);

}  // namespace latsub
