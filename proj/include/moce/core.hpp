#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace moce {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Sorted, duplicate-free list of 0-based column indices.
using IndexSet = std::vector<Index>;

inline constexpr const char* kVersion = "1.0.0";

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad caller input: dimensions, ranges, malformed files. CLI exit code 2.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A numerical procedure could not deliver its postcondition. CLI exit code 3.
class NumericalError : public Error {
public:
    using Error::Error;
};

namespace detail {

inline void require(bool ok, const std::string& msg)
{
    if (!ok) throw InvalidArgument(msg);
}

inline Vector gather(const Eigen::Ref<const Vector>& v, const IndexSet& idx)
{
    Vector out(static_cast<Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) out(static_cast<Index>(k)) = v(idx[k]);
    return out;
}

inline Matrix gather_columns(const Eigen::Ref<const Matrix>& m, const IndexSet& idx)
{
    Matrix out(m.rows(), static_cast<Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) out.col(static_cast<Index>(k)) = m.col(idx[k]);
    return out;
}

inline Matrix gather_rows(const Eigen::Ref<const Matrix>& m, const IndexSet& idx)
{
    Matrix out(static_cast<Index>(idx.size()), m.cols());
    for (std::size_t k = 0; k < idx.size(); ++k) out.row(static_cast<Index>(k)) = m.row(idx[k]);
    return out;
}

inline void scatter(const Eigen::Ref<const Vector>& src, const IndexSet& idx, Eigen::Ref<Vector> dst)
{
    for (std::size_t k = 0; k < idx.size(); ++k) dst(idx[k]) = src(static_cast<Index>(k));
}

/// {0..p-1} \ idx, ascending. `idx` must be sorted.
inline IndexSet complement(const IndexSet& idx, Index p)
{
    IndexSet out;
    out.reserve(static_cast<std::size_t>(p) - std::min<std::size_t>(idx.size(), p));
    auto it = idx.begin();
    for (Index j = 0; j < p; ++j) {
        if (it != idx.end() && *it == j) { ++it; continue; }
        out.push_back(j);
    }
    return out;
}

inline bool is_sorted_unique(const IndexSet& idx)
{
    return std::adjacent_find(idx.begin(), idx.end(),
                              [](Index a, Index b) { return a >= b; }) == idx.end();
}

} // namespace detail
} // namespace moce
