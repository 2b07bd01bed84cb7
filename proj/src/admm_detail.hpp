#pragma once

#include <utility>
#include <vector>

#include "uwadmm/admm.hpp"
#include "uwadmm/types.hpp"

namespace uwadmm::admm_detail {

double total_misfit(const Problem& prob, const Vector& z);
double trace_relerr(const Vector& z, const Vector* truth);
std::pair<double, double> stopping_eps(const AdmmConfig& cfg,
                                       const ConsensusState& state,
                                       const std::vector<DiagonalWeight>& w);

}  // namespace uwadmm::admm_detail
