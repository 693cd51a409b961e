#include "rpg/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rpg/errors.hpp"
#include "rpg/table.hpp"

namespace rpg {

namespace {

std::string join_problems(const std::vector<std::string>& problems) {
    std::ostringstream out;
    out << "invalid configuration:";
    for (const auto& p : problems) out << "\n  - " << p;
    return out.str();
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : Error(join_problems(problems)), problems_(std::move(problems)) {}

Table::Table(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

Table::Table(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows * cols) {
        throw DimensionError("table expects " + std::to_string(rows * cols) + " values, got " +
                             std::to_string(values_.size()));
    }
}

void require_shape(const Table& t, std::size_t rows, std::size_t cols, const char* what) {
    if (t.rows() != rows || t.cols() != cols) {
        throw DimensionError(std::string(what) + " has shape " + std::to_string(t.rows()) + "x" +
                             std::to_string(t.cols()) + ", expected " + std::to_string(rows) + "x" +
                             std::to_string(cols));
    }
}

double log_sum_exp(std::span<const double> xs) {
    if (xs.empty()) return kNegInf;
    const double m = *std::max_element(xs.begin(), xs.end());
    if (m == kNegInf) return kNegInf;
    if (std::isinf(m)) return m;
    double acc = 0.0;
    for (double x : xs) acc += std::exp(x - m);
    return m + std::log(acc);
}

double soft_maximum(std::span<const double> xs, double temperature) {
    std::vector<double> scaled(xs.begin(), xs.end());
    for (double& x : scaled) x /= temperature;
    return temperature * log_sum_exp(scaled);
}

std::vector<double> log_softmax(std::span<const double> xs) {
    const double z = log_sum_exp(xs);
    if (z == kNegInf) throw DegenerateDistributionError("softmax over a row with no support");
    std::vector<double> out(xs.begin(), xs.end());
    for (double& x : out) x -= z;
    return out;
}

std::vector<double> softmax(std::span<const double> xs) {
    auto out = log_softmax(xs);
    for (double& x : out) x = std::exp(x);
    return out;
}

double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double log_sigmoid(double x) { return -softplus(-x); }

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double total_variation(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) throw DimensionError("total_variation: size mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) acc += std::abs(p[i] - q[i]);
    return 0.5 * acc;
}

}  // namespace rpg
