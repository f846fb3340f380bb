#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>

#include "mmjsq/model.hpp"
#include "json.hpp"

namespace mmjsq {

/// Contents of a model JSON file. See docs/schema.md for the key layout.
struct ModelFile {
  std::size_t n = 0;
  Eigen::MatrixXd alpha;        // m x m, diagonal ignored
  Eigen::VectorXd lambda_base;  // m
  Eigen::MatrixXd mu;           // m x n
  std::optional<double> rho;
  std::optional<double> alpha_scale;
  /// Externally published k* for this file as written, echoed into reports.
  std::optional<double> reference_k_star;
  std::string description;
};

/// Throws Error(ParseError) on missing keys, wrong types or inconsistent shapes.
ModelFile parse_model_file(const nlohmann::json& doc);
ModelFile load_model_file(const std::filesystem::path& path);
nlohmann::json to_json(const ModelFile& file);

/// Chain scaled by alpha_scale, then loads scaled to `rho_override` if given,
/// else to the file's "rho", else left as lambda_base.
MmJsqModel build_model(const ModelFile& file, std::optional<double> rho_override = std::nullopt);

/// Same as build_model without any load scaling.
MmJsqModel build_base_model(const ModelFile& file);

}  // namespace mmjsq
