#pragma once

#include "popac/model.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>

namespace popac {

/// Model document: {states, actions, observations, horizon, reward_max,
/// b1, T, O, R}. T[a][s'][s], O[z][s], R[a][s]. Matrices are arrays of rows.
nlohmann::json model_to_json(const TabularPOMDP& model);

/// Strict parse: unknown or missing fields are rejected, shapes are checked
/// and every distribution must be stochastic within 1e-9 (then renormalized).
TabularPOMDP model_from_json(const nlohmann::json& doc);

void save_model(const TabularPOMDP& model, const std::filesystem::path& path);
TabularPOMDP load_model(const std::filesystem::path& path);

nlohmann::json matrix_to_json(const Matrix& m);
nlohmann::json vector_to_json(const Vector& v);

}  // namespace popac
