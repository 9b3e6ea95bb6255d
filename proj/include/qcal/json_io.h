#ifndef QCAL_JSON_IO_H_
#define QCAL_JSON_IO_H_

#include <filesystem>
#include <string>

#include "json.hpp"

namespace qcal {

using json = nlohmann::json;

// Rounds to `digits` significant decimal digits (non-finite values pass through).
double round_significant(double value, int digits);

// Copy of `doc` with every floating point number rounded to `digits` significant digits.
json round_numbers(const json& doc, int digits);

// Sorted keys (nlohmann objects are ordered maps), two-space indent, trailing newline.
std::string dump_canonical(const json& doc);

// Non-finite doubles are stored as the strings "inf", "-inf" and "nan"; JSON has no literal for them.
json encode_double(double value);
double decode_double(const json& value);

std::string read_text_file(const std::filesystem::path& path);
// Writes through a temporary file and renames it into place.
void write_text_file(const std::filesystem::path& path, const std::string& content);
json read_json_file(const std::filesystem::path& path);

}  // namespace qcal

#endif  // QCAL_JSON_IO_H_
