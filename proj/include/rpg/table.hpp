#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace rpg {

/// Dense row-major table of doubles, indexed (row, col). Used for rewards,
/// Q-functions, logits and log-policies alike.
class Table {
public:
    Table() = default;
    Table(std::size_t rows, std::size_t cols, double fill = 0.0);
    Table(std::size_t rows, std::size_t cols, std::vector<double> values);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return values_.size(); }

    double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }

    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }

    bool same_shape(const Table& other) const noexcept {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    friend bool operator==(const Table&, const Table&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
};

/// Throws DimensionError naming `what` unless `t` is rows x cols.
void require_shape(const Table& t, std::size_t rows, std::size_t cols, const char* what);

}  // namespace rpg
