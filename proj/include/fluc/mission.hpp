#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "fluc/error.hpp"

namespace fluc::mission {

using NumberList = std::vector<double>;

/// A literal argument: number, list of numbers, or string.
using Value = std::variant<double, NumberList, std::string>;

enum class ValueKind { Number, NumberList, String };

ValueKind kind_of(const Value& v);
const char* to_string(ValueKind k);

struct PrimitiveCall {
  std::string name;
  std::vector<Value> args;
  std::vector<std::pair<std::string, Value>> kwargs;  // source order, names unique
  int source_line = 0;

  bool operator==(const PrimitiveCall&) const = default;
};

struct MissionScript {
  std::vector<PrimitiveCall> calls;
  std::string source_text;
};

// Structural equality ignores source text and line numbers.
bool structurally_equal(const MissionScript& a, const MissionScript& b);

// ---------------------------------------------------------------------------
// Function library

struct ParamSpec {
  std::string name;
  ValueKind kind = ValueKind::Number;
  std::string units;
  std::optional<double> min;  // for lists, applies to every element
  std::optional<double> max;
  bool min_exclusive = false;
};

struct FunctionSpec {
  std::string name;
  std::vector<ParamSpec> params;
  std::string doc;

  std::string signature() const;
};

/// The registered primitive set, in a fixed canonical order.
const std::vector<FunctionSpec>& default_library();

inline constexpr double kImplicitTakeoffAltM = 20.0;

// ---------------------------------------------------------------------------
// Extraction

struct Extracted {
  std::string text;
  bool unfenced = false;
};

/// Pulls the first ``` fenced block out of raw model output. Without any fence,
/// the trimmed text is returned and flagged `unfenced`.
/// Throws Error{"EmptyOutput"} when the result is blank.
Extracted extract_script(std::string_view raw_model_output);

// ---------------------------------------------------------------------------
// Parsing

struct ParseError {
  int line = 0;
  std::string message;

  std::string to_string() const;
};

struct ParseResult {
  std::optional<MissionScript> script;
  std::vector<ParseError> errors;

  bool ok() const { return script.has_value(); }
};

/// All-or-nothing: any error means no script.
ParseResult parse(std::string_view script_text);

/// Canonical text, one call per line.
std::string render(const MissionScript& script);
std::string render(const PrimitiveCall& call);
std::string render_number(double v);

// ---------------------------------------------------------------------------
// Validation

enum class SemanticErrorKind {
  UnknownPrimitive,
  BadArity,
  BadKind,
  RangeViolation,
  OrderingViolation,
  ListLengthMismatch,
  EmptyMission,
};

const char* to_string(SemanticErrorKind k);

struct SemanticError {
  int line = 0;
  SemanticErrorKind kind = SemanticErrorKind::UnknownPrimitive;
  std::string message;

  std::string to_string() const;
};

/// A call whose arguments were bound to the spec's parameter order.
struct BoundCall {
  std::string name;
  std::vector<Value> args;  // one per ParamSpec, in spec order
  int source_line = 0;
  bool inserted = false;  // added by the validator, not written by the model

  double number(std::size_t i) const { return std::get<double>(args.at(i)); }
  const NumberList& list(std::size_t i) const { return std::get<NumberList>(args.at(i)); }
  const std::string& text(std::size_t i) const { return std::get<std::string>(args.at(i)); }

  bool operator==(const BoundCall&) const = default;
};

struct ValidatedMission {
  std::vector<BoundCall> calls;
  MissionScript script;

  bool has_inserted_takeoff() const;
  /// Back to a script, keyword-free, positional in spec order.
  MissionScript to_script() const;
};

struct ValidationResult {
  std::optional<ValidatedMission> mission;
  std::vector<SemanticError> errors;

  bool ok() const { return mission.has_value(); }
};

ValidationResult validate(const MissionScript& script, const std::vector<FunctionSpec>& library);

/// extract -> parse -> validate; the first error message, if any, is returned verbatim
/// so the correction loop can quote it.
struct PipelineResult {
  std::optional<ValidatedMission> mission;
  std::string first_error;
  bool unfenced = false;
};

PipelineResult interpret(std::string_view raw_model_output, const std::vector<FunctionSpec>& library);

}  // namespace fluc::mission
