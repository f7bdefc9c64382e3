#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "glova/error.hpp"

// Little-endian host assumed; checkpoints are not portable across endianness.
namespace glova::bin {

template <typename T>
void put(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw StateError("truncated checkpoint");
    return v;
}

inline void put_string(std::ostream& out, const std::string& s) {
    put<std::uint64_t>(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_string(std::istream& in) {
    const auto n = get<std::uint64_t>(in);
    if (n > (1u << 20)) throw StateError("corrupt checkpoint string");
    std::string s(n, '\0');
    in.read(s.data(), static_cast<std::streamsize>(n));
    if (!in) throw StateError("truncated checkpoint");
    return s;
}

inline void put_doubles(std::ostream& out, const double* data, std::size_t n) {
    put<std::uint64_t>(out, n);
    out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(double)));
}

inline std::vector<double> get_doubles(std::istream& in) {
    const auto n = get<std::uint64_t>(in);
    if (n > (1ull << 32)) throw StateError("corrupt checkpoint array");
    std::vector<double> v(n);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) throw StateError("truncated checkpoint");
    return v;
}

inline void put_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
    put<std::uint64_t>(out, m.rows());
    put<std::uint64_t>(out, m.cols());
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(m.size() * sizeof(double)));
}

inline Eigen::MatrixXd get_matrix(std::istream& in) {
    const auto rows = get<std::uint64_t>(in);
    const auto cols = get<std::uint64_t>(in);
    if (rows * cols > (1ull << 28)) throw StateError("corrupt checkpoint matrix");
    Eigen::MatrixXd m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!in) throw StateError("truncated checkpoint");
    return m;
}

}  // namespace glova::bin
