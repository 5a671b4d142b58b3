#include "klsure/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "klsure/errors.hpp"

namespace klsure {
namespace {

double parse_field(std::string_view field, std::size_t line) {
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) field.remove_suffix(1);
  double value = 0.0;
  const auto [end, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (field.empty() || ec != std::errc() || end != field.data() + field.size()) {
    throw DataError("line " + std::to_string(line) + ": cannot parse '" + std::string(field) + "' as a number");
  }
  return value;
}

nlohmann::ordered_json real_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

nlohmann::ordered_json series(const std::vector<double>& values) {
  auto out = nlohmann::ordered_json::array();
  for (double v : values) out.push_back(real_or_null(v));
  return out;
}

}  // namespace

std::string format_real(double value) {
  char buf[32];
  const auto result = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, result.ptr);
}

std::string matrix_to_csv(const Matrix& values) {
  std::string out;
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      if (j > 0) out += ',';
      out += format_real(values(i, j));
    }
    out += '\n';
  }
  return out;
}

std::string counts_to_csv(const CountMatrix& counts) {
  std::string out;
  for (Eigen::Index i = 0; i < counts.rows(); ++i) {
    for (Eigen::Index j = 0; j < counts.cols(); ++j) {
      if (j > 0) out += ',';
      out += std::to_string(static_cast<long long>(counts(i, j)));
    }
    out += '\n';
  }
  return out;
}

std::string vector_to_csv(const Vector& values) {
  std::string out;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const double v = values(i);
    out += v == std::floor(v) && std::abs(v) < 1e15 ? std::to_string(static_cast<long long>(v)) : format_real(v);
    out += '\n';
  }
  return out;
}

Matrix parse_matrix_csv(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      row.push_back(parse_field(std::string_view(line).substr(start, comma - start), line_no));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(rows.front().size()) +
                      " fields, found " + std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("empty matrix file");
  Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return out;
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
  try {
    return parse_matrix_csv(read_text(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

CountMatrix read_counts_csv(const std::filesystem::path& path) {
  Matrix values = read_matrix_csv(path);
  try {
    return CountMatrix(std::move(values));
  } catch (const Error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

Vector read_vector_csv(const std::filesystem::path& path) {
  const Matrix values = read_matrix_csv(path);
  if (values.cols() != 1 && values.rows() != 1) throw DataError(path.string() + ": expected a single column or row");
  return values.cols() == 1 ? Vector(values.col(0)) : Vector(values.row(0).transpose());
}

std::string curve_to_csv(const RiskCurve& curve) {
  std::string out = curve.parameter + ",ukla,cv,kla_oracle\n";
  for (std::size_t g = 0; g < curve.grid.size(); ++g) {
    out += format_real(curve.grid[g]) + ',' + format_real(curve.ukla[g]) + ',';
    if (curve.cv) out += format_real((*curve.cv)[g]);
    out += ',';
    if (curve.kla_oracle) out += format_real((*curve.kla_oracle)[g]);
    out += '\n';
  }
  return out;
}

nlohmann::ordered_json to_json(const SimSpec& spec) {
  nlohmann::ordered_json j;
  j["scenario"] = scenario_name(spec.scenario);
  j["model"] = std::string(to_string(model_of(spec.scenario)));
  j["m"] = spec.m;
  j["k"] = spec.k;
  if (const auto* c2 = std::get_if<Case2>(&spec.scenario)) {
    j["rank"] = c2->rank;
    j["interpretation"] = "V_jl = 0.1*|N(0,1)| + b_l, b_l ~ U[0.5,1.5] shared down column l";
  }
  if (const auto* ps = std::get_if<PoissonSinusoid>(&spec.scenario)) {
    j["amplitude"] = ps->amplitude;
    j["interpretation"] = "sinusoid is the latent Z; intensity X = exp(Z)";
  } else {
    j["n0"] = spec.n0;
  }
  j["seed"] = spec.seed;
  return j;
}

nlohmann::ordered_json to_json(const RiskCurve& curve) {
  nlohmann::ordered_json j;
  j["model"] = std::string(to_string(curve.model));
  j["parameter"] = curve.parameter;
  j["grid"] = series(curve.grid);
  j["ukla"] = series(curve.ukla);
  if (curve.cv) j["cv"] = series(*curve.cv);
  if (curve.kla_oracle) j["kla_oracle"] = series(*curve.kla_oracle);
  j["selected"] = curve.selected_lambda;
  j["constant_offset"] = curve.constant_offset;
  j["constant_offset_note"] = curve.constant_offset_note;
  return j;
}

void write_text(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << contents;
  out.close();
  if (!out) throw Error("cannot write " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace klsure
