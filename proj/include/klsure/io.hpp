#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "klsure/count_models.hpp"
#include "klsure/risk.hpp"
#include "klsure/simulate.hpp"

namespace klsure {

/// Shortest decimal that reads back to the same double.
std::string format_real(double value);

/// Headerless, row-major, comma-separated. Reals use format_real; counts
/// are written as integers.
std::string matrix_to_csv(const Matrix& values);
std::string counts_to_csv(const CountMatrix& counts);
/// One value per line.
std::string vector_to_csv(const Vector& values);

/// Parses a headerless numeric CSV. Blank lines are ignored; ragged rows,
/// empty files and unparsable fields throw DataError.
Matrix parse_matrix_csv(const std::string& text);
Matrix read_matrix_csv(const std::filesystem::path& path);
CountMatrix read_counts_csv(const std::filesystem::path& path);
/// Accepts one value per line or a single row.
Vector read_vector_csv(const std::filesystem::path& path);

/// Headered curve <parameter>,ukla,cv,kla_oracle; absent columns are left empty.
std::string curve_to_csv(const RiskCurve& curve);

nlohmann::ordered_json to_json(const SimSpec& spec);
nlohmann::ordered_json to_json(const RiskCurve& curve);

/// Writes `contents` to `path` exactly (binary mode). Throws Error if the
/// file cannot be written.
void write_text(const std::filesystem::path& path, const std::string& contents);
std::string read_text(const std::filesystem::path& path);

}  // namespace klsure
