#pragma once

#include <limits>
#include <span>
#include <vector>

namespace rpg {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// log(sum(exp(x))) with max-subtraction. Returns -inf for an empty input or
/// when every entry is -inf.
double log_sum_exp(std::span<const double> xs);

/// temperature * log(sum(exp(x / temperature))).
double soft_maximum(std::span<const double> xs, double temperature);

/// Normalized log-probabilities of softmax(xs). Throws
/// DegenerateDistributionError when every entry is -inf.
std::vector<double> log_softmax(std::span<const double> xs);
std::vector<double> softmax(std::span<const double> xs);

double softplus(double x);
/// log(sigmoid(x)) computed as -softplus(-x).
double log_sigmoid(double x);
double sigmoid(double x);

/// Half the L1 distance between two distributions given as probabilities.
double total_variation(std::span<const double> p, std::span<const double> q);

/// `coeff * log_p`, with the convention 0 * (-inf) = 0 so that a vanishing
/// coefficient removes a forbidden action's log-weight entirely.
inline double scaled_log(double coeff, double log_p) {
    return coeff == 0.0 ? 0.0 : coeff * log_p;
}

}  // namespace rpg
