#ifndef VECOT_CLI_INSTANCE_IO_HPP
#define VECOT_CLI_INSTANCE_IO_HPP

#include "vecot/counterexample.hpp"
#include "vecot/measure.hpp"
#include "vecot/partition.hpp"

#include <json.hpp>

#include <optional>
#include <string>

namespace vecot::cli {

using Json = nlohmann::json;

/// Raw file contents plus the parsed document.
struct Document {
  std::string bytes;
  Json json;
};

/// Throws ParseError when the file is unreadable or not JSON.
Document read_document(const std::string& path);

Matrix matrix_from_json(const Json& j, const char* field);
Vector vector_from_json(const Json& j, const char* field);
Json to_json(const Matrix& m);
Json to_json(const Vector& v);

struct Instance {
  LayeredMeasure measure;
  std::optional<CostField> cost;
  std::optional<DemandMatrix> target;  ///< embedded "target" block, if any
};

/// {"points", "weights", "densities", optional "costs", optional "target"}.
Instance parse_instance(const Json& j);
Json instance_to_json(const LayeredMeasure& m, const CostField* cost);

/// {"demand": [[...]]}
DemandMatrix parse_target(const Json& j);
/// {"labels": [...]}
Assignment parse_labels(const Json& j);

struct PairInstance {
  LayeredMeasure x;
  LayeredMeasure y;
  std::optional<Matrix> pair_cost;
};

/// {"x": instance, "y": instance, optional "pair_cost"}.
PairInstance parse_pair(const Json& j);

/// Instance fields, "target", and a "witness" block.
Json witness_to_json(const WitnessInstance& wit);

/// Lower-case hex SHA-256.
std::string sha256_hex(const std::string& bytes);

/// Writes to a sibling temporary file, then renames over `path`.
void write_atomic(const std::string& path, const std::string& contents);

}  // namespace vecot::cli

#endif  // VECOT_CLI_INSTANCE_IO_HPP
