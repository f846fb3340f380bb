#include "mmjsq/model_file.hpp"

#include <fstream>
#include <sstream>

#include "mmjsq/error.hpp"

namespace mmjsq {

namespace {

using nlohmann::json;

[[noreturn]] void parse_fail(const std::string& what) { throw Error(ErrorCode::ParseError, what); }

double number(const json& v, const std::string& where) {
  if (!v.is_number()) parse_fail(where + " must be a number");
  return v.get<double>();
}

Eigen::VectorXd vector_of(const json& v, const std::string& key) {
  if (!v.is_array()) parse_fail("\"" + key + "\" must be an array");
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t k = 0; k < v.size(); ++k)
    out(static_cast<Eigen::Index>(k)) = number(v[k], key + "[" + std::to_string(k) + "]");
  return out;
}

Eigen::MatrixXd matrix_of(const json& v, const std::string& key) {
  if (!v.is_array() || v.empty()) parse_fail("\"" + key + "\" must be a nonempty array of rows");
  const std::size_t rows = v.size();
  if (!v[0].is_array()) parse_fail("\"" + key + "\" rows must be arrays");
  const std::size_t cols = v[0].size();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (!v[r].is_array() || v[r].size() != cols) parse_fail("\"" + key + "\" rows must have equal length");
    for (std::size_t c = 0; c < cols; ++c)
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          number(v[r][c], key + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
  }
  return out;
}

json to_rows(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

ModelFile parse_model_file(const json& doc) {
  if (!doc.is_object()) parse_fail("model file must be a JSON object");
  for (const char* key : {"n", "alpha", "lambda_base", "mu"}) {
    if (!doc.contains(key)) parse_fail(std::string("missing key \"") + key + "\"");
  }
  ModelFile f;
  const json& n = doc.at("n");
  if (!n.is_number_integer() || n.get<long long>() < 1) parse_fail("\"n\" must be a positive integer");
  f.n = n.get<std::size_t>();
  f.alpha = matrix_of(doc.at("alpha"), "alpha");
  f.lambda_base = vector_of(doc.at("lambda_base"), "lambda_base");
  f.mu = matrix_of(doc.at("mu"), "mu");

  const auto m = f.alpha.rows();
  if (f.alpha.cols() != m) parse_fail("\"alpha\" must be square");
  if (f.lambda_base.size() != m) parse_fail("\"lambda_base\" length must match \"alpha\"");
  if (f.mu.rows() != m) parse_fail("\"mu\" must have one row per modulating state");
  if (f.mu.cols() != static_cast<Eigen::Index>(f.n)) parse_fail("\"mu\" must have \"n\" columns");

  if (doc.contains("rho")) f.rho = number(doc.at("rho"), "rho");
  if (doc.contains("alpha_scale")) f.alpha_scale = number(doc.at("alpha_scale"), "alpha_scale");
  if (doc.contains("reference_k_star")) f.reference_k_star = number(doc.at("reference_k_star"), "reference_k_star");
  if (doc.contains("description")) {
    if (!doc.at("description").is_string()) parse_fail("\"description\" must be a string");
    f.description = doc.at("description").get<std::string>();
  }
  return f;
}

ModelFile load_model_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) parse_fail("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  json doc;
  try {
    doc = json::parse(buf.str());
  } catch (const json::parse_error& e) {
    parse_fail(path.string() + ": " + e.what());
  }
  try {
    return parse_model_file(doc);
  } catch (const Error& e) {
    parse_fail(path.string() + ": " + e.what());
  }
}

json to_json(const ModelFile& f) {
  json doc;
  if (!f.description.empty()) doc["description"] = f.description;
  doc["n"] = f.n;
  doc["alpha"] = to_rows(f.alpha);
  json lam = json::array();
  for (Eigen::Index i = 0; i < f.lambda_base.size(); ++i) lam.push_back(f.lambda_base(i));
  doc["lambda_base"] = lam;
  doc["mu"] = to_rows(f.mu);
  if (f.rho) doc["rho"] = *f.rho;
  if (f.alpha_scale) doc["alpha_scale"] = *f.alpha_scale;
  if (f.reference_k_star) doc["reference_k_star"] = *f.reference_k_star;
  return doc;
}

MmJsqModel build_base_model(const ModelFile& file) {
  Eigen::MatrixXd alpha = file.alpha;
  if (file.alpha_scale) {
    if (!(*file.alpha_scale > 0.0)) throw Error(ErrorCode::InvalidModel, "alpha_scale must be positive");
    alpha *= *file.alpha_scale;
  }
  return MmJsqModel(validate_generator(alpha), file.lambda_base, file.mu);
}

MmJsqModel build_model(const ModelFile& file, std::optional<double> rho_override) {
  MmJsqModel base = build_base_model(file);
  const std::optional<double> rho = rho_override ? rho_override : file.rho;
  if (!rho) return base;
  return scale_to_load(base, *rho);
}

}  // namespace mmjsq
