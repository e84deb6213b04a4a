#pragma once

// Problem files (JSON), solution reports (JSON) and trajectory CSV.
//
// Problem schema:
//   { "n": 2, "n1": 1, "n2": 1,
//     "A": [[..],[..]], "B": [[..],[..]], "D": [[..],[..]],   // D optional
//     "Q": .., "R": .., "Gamma": .., "eta": [..], "x0": [..], "rho": 1.0 }

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mflq/problem.hpp"
#include "mflq/social_opt.hpp"

namespace mflq::io {

using json = nlohmann::ordered_json;

/// Malformed or unreadable input. Carries the offending field when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string field, const std::string& what)
      : std::runtime_error(field.empty() ? what
                                         : "field '" + field + "': " + what),
        field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

namespace detail {

inline Index read_dim(const json& doc, const char* field) {
  if (!doc.contains(field)) throw ParseError(field, "missing");
  const auto& v = doc.at(field);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ParseError(field, "must be a nonnegative integer");
  }
  return static_cast<Index>(v.get<long long>());
}

inline double read_number(const json& v, const std::string& field) {
  if (!v.is_number()) throw ParseError(field, "expected a number");
  return v.get<double>();
}

inline Matrix read_matrix(const json& doc, const std::string& field,
                          Index rows, Index cols) {
  if (!doc.contains(field)) throw ParseError(field, "missing");
  const auto& v = doc.at(field);
  if (!v.is_array() || static_cast<Index>(v.size()) != rows) {
    throw ParseError(field, "expected " + std::to_string(rows) + " rows");
  }
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const auto& row = v.at(static_cast<std::size_t>(r));
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
      throw ParseError(field, "row " + std::to_string(r) + " must have " +
                                  std::to_string(cols) + " entries");
    }
    for (Index c = 0; c < cols; ++c) {
      m(r, c) = read_number(row.at(static_cast<std::size_t>(c)), field);
    }
  }
  if (!m.allFinite()) throw ParseError(field, "non-finite entry");
  return m;
}

inline Vector read_vector(const json& doc, const std::string& field,
                          Index size) {
  if (!doc.contains(field)) throw ParseError(field, "missing");
  const auto& v = doc.at(field);
  if (!v.is_array() || static_cast<Index>(v.size()) != size) {
    throw ParseError(field, "expected " + std::to_string(size) + " entries");
  }
  Vector out(size);
  for (Index i = 0; i < size; ++i) {
    out(i) = read_number(v.at(static_cast<std::size_t>(i)), field);
  }
  if (!out.allFinite()) throw ParseError(field, "non-finite entry");
  return out;
}

}  // namespace detail

inline json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json vector_json(const Vector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline json spectrum_json(const std::vector<Complex>& ev) {
  json out = json::array();
  for (auto z : ev) out.push_back({{"re", z.real()}, {"im", z.imag()}});
  return out;
}

inline ProblemData problem_from_json(const json& doc) {
  if (!doc.is_object()) throw ParseError("", "problem file must be an object");
  const Index n = detail::read_dim(doc, "n");
  const Index n1 = detail::read_dim(doc, "n1");
  if (n < 1) throw ParseError("n", "must be >= 1");

  ProblemData p;
  p.A = detail::read_matrix(doc, "A", n, n);
  p.B = detail::read_matrix(doc, "B", n, n1);
  if (doc.contains("D") && !doc.at("D").is_null()) {
    const Index n2 = detail::read_dim(doc, "n2");
    p.D = detail::read_matrix(doc, "D", n, n2);
  }
  p.Q = detail::read_matrix(doc, "Q", n, n);
  p.R = detail::read_matrix(doc, "R", n1, n1);
  p.Gamma = detail::read_matrix(doc, "Gamma", n, n);
  p.eta = detail::read_vector(doc, "eta", n);
  p.x0 = detail::read_vector(doc, "x0", n);
  if (!doc.contains("rho")) throw ParseError("rho", "missing");
  p.rho = detail::read_number(doc.at("rho"), "rho");
  return p;
}

inline ProblemData parse_problem(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("", std::string("invalid JSON: ") + e.what());
  }
  return problem_from_json(doc);
}

inline ProblemData load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("", "cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_problem(buf.str());
}

inline json problem_to_json(const ProblemData& p) {
  json doc;
  doc["n"] = p.n();
  doc["n1"] = p.n1();
  if (p.D) {
    doc["n2"] = p.n2();
    doc["D"] = matrix_json(*p.D);
  }
  doc["A"] = matrix_json(p.A);
  doc["B"] = matrix_json(p.B);
  doc["Q"] = matrix_json(p.Q);
  doc["R"] = matrix_json(p.R);
  doc["Gamma"] = matrix_json(p.Gamma);
  doc["eta"] = vector_json(p.eta);
  doc["x0"] = vector_json(p.x0);
  doc["rho"] = p.rho;
  return doc;
}

inline json validation_json(const ValidationReport& v) {
  return {{"ok", v.ok()},
          {"shapes_ok", v.shapes_ok},
          {"rho_positive", v.rho_positive},
          {"q_symmetric", v.q_symmetric},
          {"r_positive_definite", v.r_positive_definite},
          {"stabilizable", v.stabilizable},
          {"stabilizability_margin", v.stabilizability_margin},
          {"h_a_no_axis_eigenvalues", v.h_a_no_axis_eigenvalues},
          {"h_a_axis_distance", v.h_a_axis_distance},
          {"h_a_axis_eigenvalues", spectrum_json(v.h_a_axis_eigenvalues)},
          {"messages", v.messages}};
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// CSV with header t,xbar_1..xbar_n,s_1..s_n; 17 significant digits, LF.
inline void write_trajectory_csv(std::ostream& out,
                                 const std::vector<MeanFieldSample>& samples) {
  if (samples.empty()) return;
  const Index n = samples.front().xbar.size();
  out << "t";
  for (Index i = 1; i <= n; ++i) out << ",xbar_" << i;
  for (Index i = 1; i <= n; ++i) out << ",s_" << i;
  out << '\n';
  for (const auto& s : samples) {
    out << format_double(s.t);
    for (Index i = 0; i < n; ++i) out << ',' << format_double(s.xbar(i));
    for (Index i = 0; i < n; ++i) out << ',' << format_double(s.s(i));
    out << '\n';
  }
}

}  // namespace mflq::io
