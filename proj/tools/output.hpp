#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace pfenergy::cli {

using Json = nlohmann::ordered_json;

/// 64-bit FNV-1a, printed as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);

/// Shortest text that reads back to the same double; "nan"/"inf" as is.
std::string format_number(double v);

/// CSV table preceded by one '#'-prefixed JSON metadata line.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};
std::string render_csv(const Json& meta, const CsvTable& table);

/// JSON object with "meta" first, then the fields of `body`.
std::string render_json(const Json& meta, const Json& body);

/// Non-finite values become strings so the document stays valid JSON.
Json number(double v);

}  // namespace pfenergy::cli
