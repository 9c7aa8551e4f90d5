#include "vecot/cli/instance_io.hpp"

#include "vecot/error.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace vecot::cli {

Document read_document(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  Document doc;
  doc.bytes = buf.str();
  try {
    doc.json = Json::parse(doc.bytes);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
  return doc;
}

namespace {

double number(const Json& v, const char* field) {
  if (!v.is_number())
    throw Error(ErrorCode::ParseError, std::string(field) + " must hold numbers");
  return v.get<double>();
}

}  // namespace

Matrix matrix_from_json(const Json& j, const char* field) {
  if (!j.is_array() || j.empty())
    throw Error(ErrorCode::ParseError, std::string(field) + " must be a non-empty array of rows");
  const std::size_t cols = j.front().is_array() ? j.front().size() : 0;
  Matrix m(static_cast<Index>(j.size()), static_cast<Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols)
      throw Error(ErrorCode::ParseError,
                  std::string(field) + " row " + std::to_string(r) + " has the wrong length", r);
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Index>(r), static_cast<Index>(c)) = number(j[r][c], field);
  }
  return m;
}

Vector vector_from_json(const Json& j, const char* field) {
  if (!j.is_array())
    throw Error(ErrorCode::ParseError, std::string(field) + " must be an array");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) v(static_cast<Index>(k)) = number(j[k], field);
  return v;
}

Json to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json to_json(const Vector& v) {
  Json out = Json::array();
  for (Index k = 0; k < v.size(); ++k) out.push_back(v(k));
  return out;
}

namespace {

const Json& field(const Json& j, const char* name) {
  if (!j.is_object() || !j.contains(name))
    throw Error(ErrorCode::ParseError, std::string("missing field \"") + name + "\"");
  return j.at(name);
}

}  // namespace

Instance parse_instance(const Json& j) {
  Matrix points = matrix_from_json(field(j, "points"), "points");
  Vector weights = vector_from_json(field(j, "weights"), "weights");
  Matrix densities = matrix_from_json(field(j, "densities"), "densities");
  Instance inst{build_measure(std::move(points), std::move(weights), std::move(densities)),
                std::nullopt, std::nullopt};
  if (j.contains("costs")) {
    inst.cost = CostField(matrix_from_json(j.at("costs"), "costs"));
    check_compatible(inst.measure, *inst.cost);
  }
  if (j.contains("target")) inst.target = parse_target(j.at("target"));
  return inst;
}

Json instance_to_json(const LayeredMeasure& m, const CostField* cost) {
  Json j;
  j["points"] = to_json(m.points());
  j["weights"] = to_json(m.weights());
  j["densities"] = to_json(m.densities());
  if (cost) j["costs"] = to_json(cost->values());
  return j;
}

DemandMatrix parse_target(const Json& j) {
  DemandMatrix d = matrix_from_json(field(j, "demand"), "demand");
  if ((d.array() < 0.0).any())
    throw Error(ErrorCode::ParseError, "demand entries must be non-negative");
  return d;
}

Assignment parse_labels(const Json& j) {
  const Json& labels = field(j, "labels");
  if (!labels.is_array()) throw Error(ErrorCode::ParseError, "labels must be an array");
  Assignment a;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (!labels[k].is_number_integer())
      throw Error(ErrorCode::ParseError, "label " + std::to_string(k) + " is not an integer", k);
    a.push_back(labels[k].get<int>());
  }
  return a;
}

PairInstance parse_pair(const Json& j) {
  Instance x = parse_instance(field(j, "x"));
  Instance y = parse_instance(field(j, "y"));
  PairInstance p{std::move(x.measure), std::move(y.measure), std::nullopt};
  if (j.contains("pair_cost")) p.pair_cost = matrix_from_json(j.at("pair_cost"), "pair_cost");
  return p;
}

Json witness_to_json(const WitnessInstance& wit) {
  Json j = instance_to_json(wit.measure, &wit.cost);
  j["target"] = {{"demand", to_json(wit.target)}};
  Json block;
  block["boundary"] = wit.boundary;
  block["w"] = to_json(wit.adversarial);
  block["designated"] = wit.designated;
  block["base_prices"] = to_json(wit.base_prices);
  block["boundary_row"] = to_json(Vector(wit.boundary_row.transpose()));
  block["pair"] = {wit.config.pair_i, wit.config.pair_k};
  Json split = Json::array();
  for (Index t : wit.boundary) split.push_back(wit.designated[static_cast<std::size_t>(t)]);
  block["split"] = split;
  j["witness"] = block;
  return j;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorCode::InvalidArgument, "SHA-256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int k = 0; k < length; ++k) {
    out.push_back(hex[digest[k] >> 4]);
    out.push_back(hex[digest[k] & 15]);
  }
  return out;
}

void write_atomic(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::ParseError, "cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) throw Error(ErrorCode::ParseError, "short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error(ErrorCode::ParseError, "cannot move output into " + path + ": " + ec.message());
  }
}

}  // namespace vecot::cli
