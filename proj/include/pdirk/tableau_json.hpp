#pragma once

// JSON form of a perturbed tableau:
//   {"name", "A": [[...]], "Aeps": [[...]], "b": [...],
//    "design_order", "perturbation_order", "consistency_class"}
// Matrices are row-major; doubles are written in round-trip form.

#include "pdirk/tableau.hpp"

#include "json.hpp"

#include <fstream>
#include <string>

namespace pdirk {

namespace detail {

inline nlohmann::json matrix_to_json(const Matrix& m) {
  auto rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    auto row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from_json(const nlohmann::json& j, const char* key) {
  if (!j.is_array() || j.empty()) throw Error(std::string("tableau JSON: '") + key + "' must be a non-empty array");
  const auto n = static_cast<Eigen::Index>(j.size());
  Matrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n)
      throw Error(std::string("tableau JSON: '") + key + "' must be square");
    for (Eigen::Index k = 0; k < n; ++k) m(i, k) = row[static_cast<std::size_t>(k)].get<double>();
  }
  return m;
}

}  // namespace detail

inline nlohmann::json to_json(const PerturbedTableau& pt) {
  nlohmann::json j;
  j["name"] = pt.name();
  j["A"] = detail::matrix_to_json(pt.A());
  j["Aeps"] = detail::matrix_to_json(pt.Aeps());
  j["b"] = std::vector<double>(pt.b().data(), pt.b().data() + pt.b().size());
  j["design_order"] = pt.design_order();
  j["perturbation_order"] = pt.perturbation_order();
  j["consistency_class"] = std::string(to_string(pt.consistency_class()));
  return j;
}

inline PerturbedTableau tableau_from_json(const nlohmann::json& j) {
  try {
    const Matrix A = detail::matrix_from_json(j.at("A"), "A");
    const Matrix Aeps = detail::matrix_from_json(j.at("Aeps"), "Aeps");
    const auto bv = j.at("b").get<std::vector<double>>();
    const Vector b = Eigen::Map<const Vector>(bv.data(), static_cast<Eigen::Index>(bv.size()));
    return PerturbedTableau(Tableau(j.at("name").get<std::string>(), A, b), Aeps, j.at("design_order").get<int>(),
                            j.at("perturbation_order").get<int>(),
                            parse_consistency_class(j.at("consistency_class").get<std::string>()));
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("tableau JSON: ") + e.what());
  }
}

inline PerturbedTableau load_tableau(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open tableau file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error("'" + path + "': " + e.what());
  }
  return tableau_from_json(j);
}

}  // namespace pdirk
