#include "cogdec/matrix_io.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "cogdec/errors.hpp"

namespace cogdec {

namespace {

constexpr char kMagicF32[8] = {'C', 'O', 'G', 'M', 'A', 'T', '0', '1'};
constexpr char kMagicF64[8] = {'C', 'O', 'G', 'M', 'A', 'T', '0', '2'};

static_assert(std::endian::native == std::endian::little,
              "container I/O assumes a little-endian host");

void put_u64(std::ostream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint64_t get_u64(std::istream& in, const std::string& context) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw data_error("truncated matrix header: " + context);
    return v;
}

Matrix read_csv(std::istream& in, const std::string& context) {
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw data_error("bad CSV cell '" + cell + "' in " + context);
            }
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw data_error("ragged CSV rows in " + context);
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw data_error("empty matrix file: " + context);
    Matrix m(static_cast<Eigen::Index>(rows.size()),
             static_cast<Eigen::Index>(rows.front().size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    if (m.size() >= 1000000) {
        throw data_error("CSV fallback limited to <10^6 entries: " + context);
    }
    return m;
}

}  // namespace

bool has_matrix_magic(std::istream& in) {
    std::array<char, 8> magic{};
    const auto pos = in.tellg();
    in.read(magic.data(), 8);
    const bool ok = in.gcount() == 8 &&
                    (std::memcmp(magic.data(), kMagicF32, 8) == 0 ||
                     std::memcmp(magic.data(), kMagicF64, 8) == 0);
    in.clear();
    in.seekg(pos);
    return ok;
}

void write_matrix(std::ostream& out, const Matrix& m, MatrixPrecision prec) {
    out.write(prec == MatrixPrecision::f32 ? kMagicF32 : kMagicF64, 8);
    put_u64(out, static_cast<std::uint64_t>(m.rows()));
    put_u64(out, static_cast<std::uint64_t>(m.cols()));
    if (prec == MatrixPrecision::f32) {
        std::vector<float> buf(static_cast<std::size_t>(m.size()));
        std::size_t idx = 0;
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j) buf[idx++] = static_cast<float>(m(i, j));
        out.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(buf.size() * sizeof(float)));
    } else {
        std::vector<double> buf(static_cast<std::size_t>(m.size()));
        std::size_t idx = 0;
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j) buf[idx++] = m(i, j);
        out.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(buf.size() * sizeof(double)));
    }
    if (!out) throw data_error("matrix write failed");
}

Matrix read_matrix(std::istream& in, const std::string& context) {
    std::array<char, 8> magic{};
    in.read(magic.data(), 8);
    if (in.gcount() != 8) throw data_error("truncated matrix header: " + context);
    MatrixPrecision prec;
    if (std::memcmp(magic.data(), kMagicF32, 8) == 0) {
        prec = MatrixPrecision::f32;
    } else if (std::memcmp(magic.data(), kMagicF64, 8) == 0) {
        prec = MatrixPrecision::f64;
    } else {
        throw data_error("bad matrix magic in " + context);
    }
    const std::uint64_t rows = get_u64(in, context);
    const std::uint64_t cols = get_u64(in, context);
    if (rows == 0 || cols == 0) throw data_error("degenerate matrix dims in " + context);
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    const std::size_t n = static_cast<std::size_t>(rows) * cols;
    if (prec == MatrixPrecision::f32) {
        std::vector<float> buf(n);
        in.read(reinterpret_cast<char*>(buf.data()),
                static_cast<std::streamsize>(n * sizeof(float)));
        if (static_cast<std::size_t>(in.gcount()) != n * sizeof(float))
            throw data_error("truncated matrix payload: " + context);
        std::size_t idx = 0;
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = buf[idx++];
    } else {
        std::vector<double> buf(n);
        in.read(reinterpret_cast<char*>(buf.data()),
                static_cast<std::streamsize>(n * sizeof(double)));
        if (static_cast<std::size_t>(in.gcount()) != n * sizeof(double))
            throw data_error("truncated matrix payload: " + context);
        std::size_t idx = 0;
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = buf[idx++];
    }
    return m;
}

void write_matrix(const std::filesystem::path& path, const Matrix& m,
                  MatrixPrecision prec) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("cannot open for write: " + path.string());
    write_matrix(out, m, prec);
}

namespace {
constexpr char kBundleMagic[8] = {'C', 'O', 'G', 'B', 'N', 'D', '0', '1'};
}

const Matrix& Bundle::block(const std::string& name) const {
    for (const auto& [n, m] : blocks)
        if (n == name) return m;
    throw data_error("bundle is missing block '" + name + "'");
}

bool Bundle::has_block(const std::string& name) const {
    for (const auto& [n, m] : blocks)
        if (n == name) return true;
    return false;
}

void write_bundle(const std::filesystem::path& path, const std::string& header_json,
                  const std::vector<std::pair<std::string, Matrix>>& blocks,
                  MatrixPrecision prec) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("cannot open for write: " + path.string());
    out.write(kBundleMagic, 8);
    put_u64(out, header_json.size());
    out.write(header_json.data(), static_cast<std::streamsize>(header_json.size()));
    for (const auto& [name, m] : blocks) {
        put_u64(out, name.size());
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_matrix(out, m, prec);
    }
    if (!out) throw data_error("bundle write failed: " + path.string());
}

Bundle read_bundle(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("missing file: " + path.string());
    std::array<char, 8> magic{};
    in.read(magic.data(), 8);
    if (in.gcount() != 8 || std::memcmp(magic.data(), kBundleMagic, 8) != 0)
        throw data_error("bad bundle magic (wrong file type or version): " + path.string());
    Bundle bundle;
    const std::uint64_t hlen = get_u64(in, path.string());
    bundle.header_json.resize(hlen);
    in.read(bundle.header_json.data(), static_cast<std::streamsize>(hlen));
    if (static_cast<std::uint64_t>(in.gcount()) != hlen)
        throw data_error("truncated bundle header: " + path.string());
    while (true) {
        in.peek();
        if (in.eof()) break;
        const std::uint64_t nlen = get_u64(in, path.string());
        std::string name(nlen, '\0');
        in.read(name.data(), static_cast<std::streamsize>(nlen));
        if (static_cast<std::uint64_t>(in.gcount()) != nlen)
            throw data_error("truncated bundle block name: " + path.string());
        bundle.blocks.emplace_back(std::move(name), read_matrix(in, path.string()));
    }
    return bundle;
}

Matrix read_matrix(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("missing matrix file: " + path.string());
    if (has_matrix_magic(in)) return read_matrix(in, path.string());
    return read_csv(in, path.string());
}

}  // namespace cogdec
