#pragma once

#include "core.hpp"
#include "fixedpoint.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>
#include <string>

namespace equiprox {

using json = nlohmann::json;

namespace detail {

inline Error field_error(const std::string& field, const std::string& what) {
  return Error(ErrorKind::parse_error, "field '" + field + "': " + what);
}

inline double read_number(const json& j, const std::string& field) {
  if (!j.is_number()) throw field_error(field, "expected a number");
  return j.get<double>();
}

inline Vec read_vector(const json& j, const std::string& field, Index expected = -1) {
  if (!j.is_array()) throw field_error(field, "expected an array of numbers");
  Vec v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v(static_cast<Index>(i)) = read_number(j[i], field + "[" + std::to_string(i) + "]");
  if (expected >= 0 && v.size() != expected)
    throw field_error(field, "has " + std::to_string(v.size()) + " entries, expected " + std::to_string(expected));
  return v;
}

/// Dense nested rows, flat row-major, {"diag": [...]}, or "identity".
inline Mat read_matrix(const json& j, const std::string& field, Index rows, Index cols) {
  if (j.is_string()) {
    if (j.get<std::string>() != "identity") throw field_error(field, "unknown matrix keyword");
    if (rows >= 0 && cols >= 0 && rows != cols)
      throw field_error(field, "identity requested for a " + dims(rows, cols) + " matrix");
    const Index k = cols >= 0 ? cols : rows;
    if (k < 0) throw field_error(field, "identity size cannot be inferred");
    return Mat::Identity(k, k);
  }
  if (j.is_object()) {
    if (!j.contains("diag") || j.size() != 1) throw field_error(field, "object form must be {\"diag\": [...]}");
    const Vec d = read_vector(j["diag"], field + ".diag");
    if ((rows >= 0 && rows != d.size()) || (cols >= 0 && cols != d.size()))
      throw field_error(field, "diagonal has " + std::to_string(d.size()) + " entries, expected " +
                                   dims(rows, cols));
    return d.asDiagonal();
  }
  if (!j.is_array()) throw field_error(field, "expected a matrix");
  if (!j.empty() && j[0].is_array()) {
    const Index r = static_cast<Index>(j.size());
    const Index c = static_cast<Index>(j[0].size());
    Mat m(r, c);
    for (Index i = 0; i < r; ++i) {
      const auto& row = j[static_cast<std::size_t>(i)];
      const std::string rf = field + "[" + std::to_string(i) + "]";
      if (!row.is_array() || static_cast<Index>(row.size()) != c)
        throw field_error(rf, "rows must all have " + std::to_string(c) + " entries");
      for (Index k = 0; k < c; ++k) m(i, k) = read_number(row[static_cast<std::size_t>(k)], rf);
    }
    if ((rows >= 0 && r != rows) || (cols >= 0 && c != cols))
      throw field_error(field, "is " + dims(r, c) + ", expected " + dims(rows, cols));
    return m;
  }
  if (rows < 0 && cols > 0 && j.size() % static_cast<std::size_t>(cols) == 0) rows = static_cast<Index>(j.size()) / cols;
  if (rows < 0 || cols < 0) throw field_error(field, "flat form needs known dimensions");
  const Vec flat = read_vector(j, field, rows * cols);
  Mat m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index k = 0; k < cols; ++k) m(i, k) = flat(i * cols + k);
  return m;
}

inline Index line_of_offset(const std::string& text, std::size_t offset) {
  Index line = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

inline json matrix_json(const Mat& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json vector_json(const Vec& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

}  // namespace detail

/// Parses the problem JSON. Syntax errors report the line, schema errors the field.
inline ProblemSpec parse_problem(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::parse_error,
                "line " + std::to_string(detail::line_of_offset(text, e.byte)) + ": " + e.what());
  }
  if (!j.is_object()) throw detail::field_error("<root>", "expected an object");
  auto need = [&](const char* key) -> const json& {
    if (!j.contains(key)) throw detail::field_error(key, "missing");
    return j[key];
  };
  const json& jq = need("q");
  const Vec q = detail::read_vector(jq, "q");
  const Index n = q.size();
  if (j.contains("n")) {
    const double nn = detail::read_number(j["n"], "n");
    if (nn != static_cast<double>(n)) throw detail::field_error("n", "does not match the size of q");
  }
  ProblemSpec s;
  s.quad_q = q;
  s.quad_Q = detail::read_matrix(need("Q"), "Q", n, n);
  s.alpha = detail::read_number(need("alpha"), "alpha");
  Index p = j.contains("p") ? static_cast<Index>(detail::read_number(j["p"], "p")) : -1;
  if (j.contains("F")) {
    const json& jf = j["F"];
    if (jf.is_string()) s.F = detail::read_matrix(jf, "F", p >= 0 ? p : n, n);
    else s.F = detail::read_matrix(jf, "F", p, n);
  } else {
    s.F = Mat::Identity(n, n);
  }
  if (p >= 0 && s.F.rows() != p) throw detail::field_error("p", "does not match the rows of F");
  s.A = j.contains("A") ? detail::read_matrix(j["A"], "A", p, n) : s.F;
  p = s.A.rows();
  if (j.contains("g")) {
    const json& jg = j["g"];
    if (!jg.is_object() || !jg.contains("Q") || !jg.contains("q"))
      throw detail::field_error("g", "expected {\"Q\": ..., \"q\": ...}");
    QuadraticTerm g;
    g.q = detail::read_vector(jg["q"], "g.q");
    g.Q = detail::read_matrix(jg["Q"], "g.Q", g.q.size(), g.q.size());
    s.g_quadratic = std::move(g);
  }
  const Index m = s.g_quadratic ? s.g_quadratic->q.size() : -1;
  s.B = j.contains("B") ? detail::read_matrix(j["B"], "B", p, m) : Mat::Identity(p, p);
  s.c = j.contains("c") ? detail::read_vector(j["c"], "c", p) : Vec::Zero(p);
  return s;
}

inline ProblemSpec read_problem_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::parse_error, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_problem(ss.str());
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + std::string(e.what()).substr(std::string(to_string(e.kind())).size() + 2));
  }
}

inline json problem_json(const ProblemSpec& s) {
  json j;
  j["n"] = s.n();
  j["p"] = s.F.rows();
  j["Q"] = detail::matrix_json(s.quad_Q);
  j["q"] = detail::vector_json(s.quad_q);
  j["alpha"] = s.alpha;
  j["F"] = detail::matrix_json(s.F);
  j["A"] = detail::matrix_json(s.A);
  j["B"] = detail::matrix_json(s.B);
  j["c"] = detail::vector_json(s.c);
  if (s.g_quadratic) j["g"] = {{"Q", detail::matrix_json(s.g_quadratic->Q)}, {"q", detail::vector_json(s.g_quadratic->q)}};
  return j;
}

/// Canonical JSON; doubles are printed in shortest round-trip form.
inline std::string write_problem(const ProblemSpec& s) { return problem_json(s).dump(1) + "\n"; }

inline json solution_json(const SolutionPair& sol) {
  return {{"x", detail::vector_json(sol.x_star)},
          {"lambda", detail::vector_json(sol.lambda_star)},
          {"z", detail::vector_json(sol.z_star)},
          {"objective", sol.objective},
          {"residual", sol.residual},
          {"tolerance", sol.tolerance},
          {"converged", sol.converged},
          {"iterations", sol.iterations}};
}

/// Metric vector m from {"m": [...]} or a bare array.
inline Vec parse_metric_vector(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::parse_error,
                "line " + std::to_string(detail::line_of_offset(text, e.byte)) + ": " + e.what());
  }
  if (j.is_object()) {
    if (!j.contains("m")) throw detail::field_error("m", "missing");
    return detail::read_vector(j["m"], "m");
  }
  return detail::read_vector(j, "m");
}

}  // namespace equiprox
