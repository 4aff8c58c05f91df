#pragma once

#include <filesystem>
#include <string>
#include <variant>

#include <json.hpp>

#include "voltdmd/dmd.hpp"
#include "voltdmd/dmdc.hpp"
#include "voltdmd/evalsweep.hpp"

namespace voltdmd {

inline constexpr int kModelFormatVersion = 1;

/// Persisted model plus the settings and inputs that produced it.
struct ModelFile {
  std::variant<DmdModel, DmdcModel> model;
  double train_fraction = 0.6;
  RankPolicy policy;
  RankPolicy output_policy = default_output_policy();
  std::string input_sha256;
  std::string config_sha256;

  ModelKind kind() const {
    return std::holds_alternative<DmdModel>(model) ? ModelKind::dmd : ModelKind::dmdc;
  }
  const EmbeddingSpec& spec() const;
};

/// Matrices are stored row-major as {"rows", "cols", "data"}; doubles are
/// written in shortest round-trip form, so loading is lossless. The
/// top-level "digest" is the SHA-256 of the document without that key.
nlohmann::json model_to_json(const ModelFile& file);
ModelFile model_from_json(const nlohmann::json& j);

std::string dump_model(const ModelFile& file);
void save_model(const ModelFile& file, const std::filesystem::path& path);
ModelFile load_model(const std::filesystem::path& path);

nlohmann::json matrix_to_json(const Eigen::MatrixXd& M);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j);

}  // namespace voltdmd
