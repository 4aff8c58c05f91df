#include "voltdmd/model_io.hpp"

#include "io_util.hpp"

namespace voltdmd {

using nlohmann::json;

const EmbeddingSpec& ModelFile::spec() const {
  return std::visit([](const auto& m) -> const EmbeddingSpec& { return m.spec; }, model);
}

json matrix_to_json(const Eigen::MatrixXd& M) {
  json data = json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r)
    for (Eigen::Index c = 0; c < M.cols(); ++c) data.push_back(M(r, c));
  return {{"rows", M.rows()}, {"cols", M.cols()}, {"data", std::move(data)}};
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (rows < 0 || cols < 0 || !data.is_array() ||
      data.size() != static_cast<std::size_t>(rows * cols))
    throw DataError("model matrix has inconsistent shape");
  Eigen::MatrixXd M(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) M(r, c) = data[k++].get<double>();
  return M;
}

namespace {

json spec_json(const EmbeddingSpec& s) { return {{"m", s.m}, {"ell", s.ell}, {"tau", s.tau}}; }

EmbeddingSpec spec_from(const json& j) {
  EmbeddingSpec s{j.at("m").get<Eigen::Index>(), j.at("ell").get<Eigen::Index>(),
                  j.at("tau").get<Eigen::Index>()};
  s.validate();
  return s;
}

}  // namespace

json model_to_json(const ModelFile& file) {
  json j;
  j["format_version"] = kModelFormatVersion;
  j["kind"] = to_string(file.kind());
  j["embedding"] = spec_json(file.spec());
  j["train_fraction"] = file.train_fraction;
  j["rank_policy"] = file.policy.to_string();
  j["provenance"] = {{"input_sha256", file.input_sha256}, {"config_sha256", file.config_sha256}};
  if (const auto* d = std::get_if<DmdModel>(&file.model)) {
    j["variant"] = "autonomous";
    j["ranks"] = {{"r", d->rank_used}};
    j["fit"] = {{"residual", d->fit_residual}};
    j["matrices"] = {{"A", matrix_to_json(d->A)}};
  } else {
    const auto& c = std::get<DmdcModel>(file.model);
    const bool reduced = c.variant == DmdcVariant::reduced;
    j["variant"] = reduced ? "reduced" : "full";
    j["ranks"] = {{"r", c.rank_omega}, {"r_x", c.rank_out}};
    j["fit"] = {{"residual", c.fit_residual}, {"warnings", c.warnings}};
    j["matrices"] = {{"A", matrix_to_json(c.A)}, {"B", matrix_to_json(c.B)}};
    if (reduced) {
      j["matrices"]["basis"] = matrix_to_json(c.basis);
      j["output_rank_policy"] = file.output_policy.to_string();
    }
  }
  j["digest"] = detail::sha256_hex(j.dump());
  return j;
}

ModelFile model_from_json(const json& j_in) {
  try {
    if (j_in.at("format_version").get<int>() != kModelFormatVersion)
      throw DataError("unsupported model format version");
    json j = j_in;
    const auto stored = j.at("digest").get<std::string>();
    j.erase("digest");
    if (detail::sha256_hex(j.dump()) != stored)
      throw DataError("model digest mismatch: file was modified or corrupted");

    ModelFile f;
    f.train_fraction = j.at("train_fraction").get<double>();
    f.policy = RankPolicy::parse(j.at("rank_policy").get<std::string>());
    f.input_sha256 = j.at("provenance").at("input_sha256").get<std::string>();
    f.config_sha256 = j.at("provenance").at("config_sha256").get<std::string>();
    const auto spec = spec_from(j.at("embedding"));
    const auto& mats = j.at("matrices");
    const auto kind = parse_model_kind(j.at("kind").get<std::string>());
    if (kind == ModelKind::dmd) {
      DmdModel d;
      d.spec = spec;
      d.A = matrix_from_json(mats.at("A"));
      d.rank_used = j.at("ranks").at("r").get<Eigen::Index>();
      d.fit_residual = j.at("fit").at("residual").get<double>();
      if (d.A.rows() != spec.m || d.A.cols() != spec.m)
        throw DataError("model A does not match m");
      f.model = std::move(d);
    } else {
      DmdcModel c;
      c.spec = spec;
      const auto variant = j.at("variant").get<std::string>();
      if (variant != "full" && variant != "reduced")
        throw DataError("unknown DMDc variant '" + variant + "'");
      c.variant = variant == "full" ? DmdcVariant::full : DmdcVariant::reduced;
      c.A = matrix_from_json(mats.at("A"));
      c.B = matrix_from_json(mats.at("B"));
      c.rank_omega = j.at("ranks").at("r").get<Eigen::Index>();
      c.rank_out = j.at("ranks").at("r_x").get<Eigen::Index>();
      c.fit_residual = j.at("fit").at("residual").get<double>();
      c.warnings = j.at("fit").at("warnings").get<std::vector<std::string>>();
      const Eigen::Index state = c.variant == DmdcVariant::full ? spec.m : c.rank_out;
      if (c.variant == DmdcVariant::reduced) {
        c.basis = matrix_from_json(mats.at("basis"));
        f.output_policy = RankPolicy::parse(j.at("output_rank_policy").get<std::string>());
        if (c.basis.rows() != spec.m || c.basis.cols() != state)
          throw DataError("model basis has the wrong shape");
      }
      if (c.A.rows() != state || c.A.cols() != state || c.B.rows() != state ||
          c.B.cols() != spec.ell)
        throw DataError("model operators do not match the embedding");
      f.model = std::move(c);
    }
    return f;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed model file: ") + e.what());
  }
}

std::string dump_model(const ModelFile& file) { return model_to_json(file).dump(1) + "\n"; }

void save_model(const ModelFile& file, const std::filesystem::path& path) {
  detail::write_file_atomic(path, dump_model(file));
}

ModelFile load_model(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(detail::read_file(path));
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return model_from_json(j);
}

}  // namespace voltdmd
