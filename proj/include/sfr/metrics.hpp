#pragma once

#include <vector>

#include "sfr/likelihood.hpp"

namespace sfr {

/// Mean negative log predictive density over labelled points; probabilities
/// are clamped at 1e-12 before the log.
double nlpd(const std::vector<OutputDistribution>& predictions,
            const Eigen::Ref<const Eigen::VectorXd>& labels);

/// Fraction of points whose argmax class matches the label; ties break toward
/// the lowest class index. Classification outputs only.
double accuracy(const std::vector<OutputDistribution>& predictions,
                const Eigen::Ref<const Eigen::VectorXd>& labels);

}  // namespace sfr
