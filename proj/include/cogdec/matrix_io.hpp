#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace cogdec {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Binary matrix container.
//
//   magic    8 bytes, "COGMAT01" (float32 payload) or "COGMAT02" (float64)
//   rows     uint64, little-endian
//   cols     uint64, little-endian
//   payload  rows*cols floats, little-endian, row-major
//
// COGMAT01 is the interchange format for corpus data; COGMAT02 carries model
// parameters, where a float32 round trip would lose precision. CSV files
// (plain rows of comma-separated numbers) are accepted on read for matrices
// below 10^6 entries.

enum class MatrixPrecision { f32, f64 };

void write_matrix(const std::filesystem::path& path, const Matrix& m,
                  MatrixPrecision prec = MatrixPrecision::f32);
Matrix read_matrix(const std::filesystem::path& path);

void write_matrix(std::ostream& out, const Matrix& m, MatrixPrecision prec);
Matrix read_matrix(std::istream& in, const std::string& context);

// True when the stream positioned at `in` starts with a COGMAT magic.
bool has_matrix_magic(std::istream& in);

// Bundle container: "COGBND01", uint64 header length, JSON header bytes,
// then one COGMAT block per name in header["blocks"], in order. Used for
// model checkpoints and ground-truth files.
struct Bundle {
    std::string header_json;
    std::vector<std::pair<std::string, Matrix>> blocks;

    const Matrix& block(const std::string& name) const;
    bool has_block(const std::string& name) const;
};

void write_bundle(const std::filesystem::path& path, const std::string& header_json,
                  const std::vector<std::pair<std::string, Matrix>>& blocks,
                  MatrixPrecision prec = MatrixPrecision::f64);
Bundle read_bundle(const std::filesystem::path& path);

}  // namespace cogdec
