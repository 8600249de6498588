#include <fstream>
#include <sstream>

#include "dcscr/harness.hpp"
#include "json.hpp"

namespace dcscr {

using nlohmann::json;

namespace {

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

Matrix matrix_from(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty() || !j[0].is_array() || j[0].empty())
    throw Error(ErrorCode::ParseError, where + ": expected a nonempty array of rows");
  Matrix m(j.size(), j[0].size());
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != m.cols())
      throw Error(ErrorCode::ParseError, where + ": row " + std::to_string(r) + " has wrong length");
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (!j[r][c].is_number()) throw Error(ErrorCode::ParseError, where + ": expected numbers");
      m(r, c) = j[r][c].get<double>();
    }
  }
  return m;
}

const json& field(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw Error(ErrorCode::ParseError, std::string("model: missing field '") + key + "'");
  return *it;
}

}  // namespace

std::string dump_model(const Model& model) {
  model.validate();
  const ModelConfig& c = model.config;
  json doc;
  doc["config"] = {{"input_dim", c.input_dim},
                   {"encoder_dim", c.encoder_dim},
                   {"grid", {c.grid->height, c.grid->width, c.grid->channels}},
                   {"embedding_dim", c.embedding_dim},
                   {"num_classes", c.num_classes},
                   {"use_attention", c.use_attention},
                   {"seed", c.seed}};
  doc["class_labels"] = model.class_labels;
  doc["encoder"] = matrix_json(model.encoder);
  if (model.attention) {
    doc["attention"] = {{"query", matrix_json(model.attention->query)},
                        {"key", matrix_json(model.attention->key)},
                        {"value", matrix_json(model.attention->value)},
                        {"output", matrix_json(model.attention->output)}};
  } else {
    doc["attention"] = nullptr;
  }
  doc["embedding"] = matrix_json(model.embedding);
  doc["head"] = matrix_json(model.head);
  doc["bias"] = model.bias.raw();
  return doc.dump();
}

Model parse_model(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text.begin(), json_text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, std::string("model: ") + e.what());
  }
  try {
    Model model;
    const json& c = field(doc, "config");
    model.config.input_dim = c.at("input_dim").get<std::size_t>();
    model.config.encoder_dim = c.at("encoder_dim").get<std::size_t>();
    const json& g = c.at("grid");
    model.config.grid = GridShape{g.at(0).get<std::size_t>(), g.at(1).get<std::size_t>(),
                                  g.at(2).get<std::size_t>()};
    model.config.embedding_dim = c.at("embedding_dim").get<std::size_t>();
    model.config.num_classes = c.at("num_classes").get<std::size_t>();
    model.config.use_attention = c.at("use_attention").get<bool>();
    model.config.seed = c.at("seed").get<std::uint64_t>();
    model.class_labels = field(doc, "class_labels").get<std::vector<std::string>>();
    model.encoder = matrix_from(field(doc, "encoder"), "encoder");
    const json& att = field(doc, "attention");
    if (!att.is_null()) {
      model.attention = AttentionParams{matrix_from(att.at("query"), "attention.query"),
                                        matrix_from(att.at("key"), "attention.key"),
                                        matrix_from(att.at("value"), "attention.value"),
                                        matrix_from(att.at("output"), "attention.output")};
    }
    model.embedding = matrix_from(field(doc, "embedding"), "embedding");
    model.head = matrix_from(field(doc, "head"), "head");
    model.bias = Vector(field(doc, "bias").get<std::vector<double>>());
    model.validate();
    return model;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("model: ") + e.what());
  }
}

void save_model(const Model& model, const std::filesystem::path& path) {
  const std::string text = dump_model(model);
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text << '\n';
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str());
}

Model init_model(const Dataset& dataset, ModelConfig config) {
  dataset.validate();
  if (dataset.kind != FeatureKind::RawPixels)
    throw Error(ErrorCode::InvalidConfig, "models apply to raw_pixels datasets");
  config.input_dim = dataset.dim;
  const std::vector<std::string> labels = dataset.labels();
  config.num_classes = labels.empty() ? 1 : labels.size();
  Model model = make_model(config);
  model.class_labels = labels;
  if (model.class_labels.empty()) model.class_labels.push_back("");
  return model;
}

}  // namespace dcscr
