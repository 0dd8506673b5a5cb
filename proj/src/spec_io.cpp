#include "latsub/spec_io.hpp"

#include <algorithm>
#include <fstream>
#include <optional>
#include <regex>
#include <set>
#include <sstream>

#include "json.hpp"

namespace latsub {

using nlohmann::json;

namespace {

std::string join_issues(const std::string& source, const std::vector<SpecIssue>& issues) {
  std::string msg = source + ": " + std::to_string(issues.size()) + " schema violation(s)";
  for (const auto& i : issues) msg += "\n  " + i.field + ": " + i.reason;
  return msg;
}

std::optional<Rational> parse_rational(const std::string& s) {
  static const std::regex pattern(R"(^\s*(-?\d+)\s*(?:/\s*(\d+))?\s*$)");
  std::smatch match;
  if (!std::regex_match(s, match, pattern)) return std::nullopt;
  BigInt num(match[1].str());
  BigInt den = match[2].matched ? BigInt(match[2].str()) : BigInt(1);
  if (den == 0) return std::nullopt;
  return Rational(num, den);
}

class Reader {
 public:
  std::vector<SpecIssue> issues;

  void fail(const std::string& field, const std::string& reason) {
    issues.push_back({field, reason});
  }

  // Reads an integer vector of length d; reports non-integers as non-lattice.
  std::optional<IntVec> int_vector(const json& node, std::size_t d, const std::string& field,
                                   bool lattice_point) {
    if (!node.is_array()) {
      fail(field, "expected an array of " + std::to_string(d) + " integers");
      return std::nullopt;
    }
    if (node.size() != d) {
      fail(field, "expected length " + std::to_string(d) + ", got " + std::to_string(node.size()));
      return std::nullopt;
    }
    IntVec v;
    bool ok = true;
    for (std::size_t k = 0; k < node.size(); ++k) {
      const json& x = node[k];
      if (x.is_number_integer()) {
        v.push_back(x.get<Int>());
      } else if (x.is_number()) {
        fail(field + "[" + std::to_string(k) + "]",
             lattice_point ? "non-lattice digit: coordinate is not an integer in lattice coordinates"
                           : "expected an integer");
        ok = false;
      } else {
        fail(field + "[" + std::to_string(k) + "]", "expected an integer");
        ok = false;
      }
    }
    if (!ok) return std::nullopt;
    return v;
  }
};

std::string compact(const json& j) { return j.dump(); }

json vec_json(const IntVec& v) { return json(v); }

json vec_list_json(const std::vector<IntVec>& vs) {
  json arr = json::array();
  for (const auto& v : vs) arr.push_back(vec_json(v));
  return arr;
}

}  // namespace

SpecError::SpecError(std::string source, std::vector<SpecIssue> issues)
    : Error(join_issues(source, issues)), issues_(std::move(issues)) {}

std::string rational_to_string(const Rational& r) {
  const BigInt num = boost::multiprecision::numerator(r);
  const BigInt den = boost::multiprecision::denominator(r);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

SubstitutionSystem parse_spec_text(std::string_view text, const std::string& source) {
  Reader rd;
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    rd.fail("<document>", std::string("malformed JSON: ") + e.what());
    throw SpecError(source, rd.issues);
  }
  if (!doc.is_object()) {
    rd.fail("<document>", "top level must be an object");
    throw SpecError(source, rd.issues);
  }
  static const std::set<std::string> known{"name", "dim", "colors", "lattice_basis",
                                           "expansion", "digits", "seed"};
  for (const auto& [key, _] : doc.items())
    if (!known.count(key)) rd.fail(key, "unknown field");
  for (const auto& key : known)
    if (!doc.contains(key)) rd.fail(key, "missing required field");

  std::string name;
  if (doc.contains("name")) {
    if (doc["name"].is_string()) name = doc["name"].get<std::string>();
    else rd.fail("name", "expected a string");
  }

  std::optional<std::size_t> dim;
  if (doc.contains("dim")) {
    if (doc["dim"].is_number_unsigned() && doc["dim"].get<std::size_t>() > 0)
      dim = doc["dim"].get<std::size_t>();
    else
      rd.fail("dim", "expected a positive integer");
  }

  std::vector<std::string> colors;
  if (doc.contains("colors")) {
    const json& c = doc["colors"];
    if (!c.is_array() || c.empty()) {
      rd.fail("colors", "expected a non-empty array of labels");
    } else {
      std::set<std::string> seen;
      for (std::size_t k = 0; k < c.size(); ++k) {
        if (!c[k].is_string()) {
          rd.fail("colors[" + std::to_string(k) + "]", "expected a string");
          continue;
        }
        auto label = c[k].get<std::string>();
        if (!seen.insert(label).second)
          rd.fail("colors[" + std::to_string(k) + "]", "duplicate label '" + label + "'");
        colors.push_back(label);
      }
    }
  }
  const std::size_t m = colors.size();

  std::optional<RatMatrix> basis;
  if (doc.contains("lattice_basis") && dim) {
    const json& b = doc["lattice_basis"];
    if (!b.is_array() || b.size() != *dim) {
      rd.fail("lattice_basis", "expected " + std::to_string(*dim) + " rows");
    } else {
      RatMatrix mat(*dim, *dim);
      bool ok = true;
      for (std::size_t r = 0; r < *dim; ++r) {
        const std::string f = "lattice_basis[" + std::to_string(r) + "]";
        if (!b[r].is_array() || b[r].size() != *dim) {
          rd.fail(f, "expected " + std::to_string(*dim) + " entries");
          ok = false;
          continue;
        }
        for (std::size_t c = 0; c < *dim; ++c) {
          const json& e = b[r][c];
          std::optional<Rational> v;
          if (e.is_string()) v = parse_rational(e.get<std::string>());
          else if (e.is_number_integer()) v = Rational(e.get<Int>());
          if (!v) {
            rd.fail(f + "[" + std::to_string(c) + "]", "expected a rational string \"p/q\"");
            ok = false;
          } else {
            mat(r, c) = *v;
          }
        }
      }
      if (ok) {
        if (determinant(mat) == 0) rd.fail("lattice_basis", "basis is singular");
        else basis = mat;
      }
    }
  }

  std::optional<IntMatrix> expansion;
  if (doc.contains("expansion") && dim) {
    const json& q = doc["expansion"];
    if (!q.is_array() || q.size() != *dim) {
      rd.fail("expansion", "expected " + std::to_string(*dim) + " rows");
    } else {
      IntMatrix mat(*dim, *dim);
      bool ok = true;
      for (std::size_t r = 0; r < *dim; ++r) {
        auto row = rd.int_vector(q[r], *dim, "expansion[" + std::to_string(r) + "]", false);
        if (!row) {
          ok = false;
          continue;
        }
        for (std::size_t c = 0; c < *dim; ++c) mat(r, c) = (*row)[c];
      }
      if (ok) expansion = mat;
    }
  }

  DigitTable digits;
  bool digits_ok = false;
  if (doc.contains("digits") && dim && m > 0) {
    const json& dj = doc["digits"];
    if (!dj.is_array() || dj.size() != m) {
      rd.fail("digits", "expected " + std::to_string(m) + " rows (one per target color)");
    } else {
      digits_ok = true;
      digits.assign(m, std::vector<std::vector<IntVec>>(m));
      for (std::size_t i = 0; i < m; ++i) {
        const std::string fi = "digits[" + std::to_string(i) + "]";
        if (!dj[i].is_array() || dj[i].size() != m) {
          rd.fail(fi, "expected " + std::to_string(m) + " cells (one per source color)");
          digits_ok = false;
          continue;
        }
        for (std::size_t j = 0; j < m; ++j) {
          const std::string fij = fi + "[" + std::to_string(j) + "]";
          const json& cell = dj[i][j];
          if (!cell.is_array()) {
            rd.fail(fij, "expected a list of digit vectors");
            digits_ok = false;
            continue;
          }
          for (std::size_t k = 0; k < cell.size(); ++k) {
            auto v = rd.int_vector(cell[k], *dim, fij + "[" + std::to_string(k) + "]", true);
            if (v) digits[i][j].push_back(*v);
            else digits_ok = false;
          }
          auto& dij = digits[i][j];
          std::sort(dij.begin(), dij.end());
          if (std::adjacent_find(dij.begin(), dij.end()) != dij.end())
            rd.fail(fij, "repeated digit");
        }
      }
    }
  }

  std::vector<std::vector<IntVec>> seed_points;
  bool seed_ok = false;
  if (doc.contains("seed") && dim && m > 0) {
    const json& sj = doc["seed"];
    if (!sj.is_array() || sj.size() != m) {
      rd.fail("seed", "expected " + std::to_string(m) + " point lists (one per color)");
    } else {
      seed_ok = true;
      seed_points.resize(m);
      for (std::size_t i = 0; i < m; ++i) {
        const std::string fi = "seed[" + std::to_string(i) + "]";
        if (!sj[i].is_array()) {
          rd.fail(fi, "expected a list of points");
          seed_ok = false;
          continue;
        }
        for (std::size_t k = 0; k < sj[i].size(); ++k) {
          auto v = rd.int_vector(sj[i][k], *dim, fi + "[" + std::to_string(k) + "]", true);
          if (v) seed_points[i].push_back(*v);
          else seed_ok = false;
        }
      }
    }
  }

  if (expansion) {
    const auto det = abs(determinant(to_big(*expansion)));
    if (det < 2) rd.fail("expansion", "|det Q| must be at least 2");
  }

  if (!rd.issues.empty() || !basis || !expansion || !digits_ok || !seed_ok)
    throw SpecError(source, rd.issues.empty()
                                ? std::vector<SpecIssue>{{"<document>", "incomplete system"}}
                                : rd.issues);

  SubstitutionSystem sys{name,
                         colors,
                         LatticeBasis(*basis),
                         ExpansionMatrix(*expansion),
                         std::move(digits),
                         Cluster(*dim, std::move(seed_points))};
  auto problems = structural_problems(sys);
  if (!problems.empty()) {
    std::vector<SpecIssue> issues;
    for (auto& p : problems) issues.push_back({"<system>", p});
    throw SpecError(source, issues);
  }
  return sys;
}

SubstitutionSystem parse_spec(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open spec file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_spec_text(buf.str(), path.string());
}

std::string serialize_spec(const SubstitutionSystem& sys) {
  const std::size_t d = sys.dim();
  const std::size_t m = sys.color_count();
  std::ostringstream out;
  out << "{\n";
  out << "  \"name\": " << compact(json(sys.name)) << ",\n";
  out << "  \"dim\": " << d << ",\n";
  out << "  \"colors\": " << compact(json(sys.colors)) << ",\n";
  json basis = json::array();
  for (std::size_t r = 0; r < d; ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < d; ++c) row.push_back(rational_to_string(sys.lattice.basis()(r, c)));
    basis.push_back(row);
  }
  out << "  \"lattice_basis\": " << compact(basis) << ",\n";
  json q = json::array();
  for (std::size_t r = 0; r < d; ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < d; ++c) row.push_back(sys.expansion.entries()(r, c));
    q.push_back(row);
  }
  out << "  \"expansion\": " << compact(q) << ",\n";
  out << "  \"digits\": [\n";
  for (std::size_t i = 0; i < m; ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < m; ++j) {
      auto cell = sys.digit_set(i, j);
      std::sort(cell.begin(), cell.end());
      row.push_back(vec_list_json(cell));
    }
    out << "    " << compact(row) << (i + 1 < m ? ",\n" : "\n");
  }
  out << "  ],\n";
  json seed = json::array();
  for (std::size_t i = 0; i < m; ++i) seed.push_back(vec_list_json(sys.seed[i]));
  out << "  \"seed\": " << compact(seed) << "\n";
  out << "}\n";
  return out.str();
}

}  // namespace latsub
