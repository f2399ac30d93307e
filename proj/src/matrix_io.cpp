#include "tsdlab/matrix_io.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace tsdlab {

namespace {

constexpr char kMagic[4] = {'T', 'S', 'D', 'W'};

void put_u32le(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32le(std::istream& is, const std::filesystem::path& path) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) throw IoError("truncated TSDW header: " + path.string());
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f64le(std::ostream& os, double x) {
    std::uint64_t v;
    std::memcpy(&v, &x, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

double get_f64le(std::istream& is, const std::filesystem::path& path) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8)) throw IoError("truncated TSDW payload: " + path.string());
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double x;
    std::memcpy(&x, &v, 8);
    return x;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode) {
    std::ofstream os(path, mode);
    if (!os) throw IoError("cannot open for writing: " + path.string());
    return os;
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode) {
    std::ifstream is(path, mode);
    if (!is) throw IoError("cannot open for reading: " + path.string());
    return is;
}

}  // namespace

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

void save_tsdw(const Matrix& m, const std::filesystem::path& path) {
    auto os = open_out(path, std::ios::binary);
    os.write(kMagic, 4);
    put_u32le(os, static_cast<std::uint32_t>(m.rows()));
    put_u32le(os, static_cast<std::uint32_t>(m.cols()));
    for (double x : m.data()) put_f64le(os, x);
    if (!os) throw IoError("write failed: " + path.string());
}

Matrix load_tsdw(const std::filesystem::path& path) {
    auto is = open_in(path, std::ios::binary);
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        throw IoError("not a TSDW file: " + path.string());
    std::uint32_t rows = get_u32le(is, path);
    std::uint32_t cols = get_u32le(is, path);
    if (rows == 0 || cols == 0) throw IoError("TSDW with zero dimension: " + path.string());
    std::vector<double> data(static_cast<std::size_t>(rows) * cols);
    for (double& x : data) x = get_f64le(is, path);
    return Matrix(static_cast<int>(rows), static_cast<int>(cols), std::move(data));
}

void save_matrix_csv(const Matrix& m, const std::filesystem::path& path) {
    auto os = open_out(path, std::ios::out);
    os << m.rows() << "," << m.cols() << "\n";
    for (int i = 0; i < m.rows(); ++i) {
        for (int j = 0; j < m.cols(); ++j) {
            if (j) os << ",";
            os << format_double(m(i, j));
        }
        os << "\n";
    }
    if (!os) throw IoError("write failed: " + path.string());
}

Matrix load_matrix_csv(const std::filesystem::path& path) {
    auto is = open_in(path, std::ios::in);
    std::string line;
    if (!std::getline(is, line)) throw IoError("empty matrix CSV: " + path.string());
    int rows = 0, cols = 0;
    if (std::sscanf(line.c_str(), "%d,%d", &rows, &cols) != 2 || rows < 1 || cols < 1)
        throw IoError("bad matrix CSV header '" + line + "' in " + path.string());
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(rows) * cols);
    for (int i = 0; i < rows; ++i) {
        if (!std::getline(is, line)) throw IoError("matrix CSV truncated at row " + std::to_string(i) + ": " + path.string());
        std::stringstream ss(line);
        std::string cell;
        int got = 0;
        while (std::getline(ss, cell, ',')) {
            try {
                data.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw IoError("bad number '" + cell + "' in " + path.string());
            }
            ++got;
        }
        if (got != cols)
            throw IoError("row " + std::to_string(i) + " has " + std::to_string(got) + " cells, expected " +
                          std::to_string(cols) + ": " + path.string());
    }
    return Matrix(rows, cols, std::move(data));
}

Matrix load_matrix(const std::filesystem::path& path) {
    {
        auto is = open_in(path, std::ios::binary);
        char magic[4];
        if (is.read(magic, 4) && std::memcmp(magic, kMagic, 4) == 0) {
            is.close();
            return load_tsdw(path);
        }
    }
    return load_matrix_csv(path);
}

void save_matrix(const Matrix& m, const std::filesystem::path& path) {
    if (path.extension() == ".csv")
        save_matrix_csv(m, path);
    else
        save_tsdw(m, path);
}

}  // namespace tsdlab
