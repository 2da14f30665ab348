#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "funess/montecarlo.hpp"
#include "funess/randomwalk.hpp"

namespace funess {

/// Shortest text that parses back to the same double.
std::string format_double(double v);

/// Header `trajectory_id,jump_index,time,state`. Row jump_index 0 holds the
/// initial state at t0; later rows hold the state entered at each jump.
/// States are written as indices (0 for x1, 1 for x2).
void write_ensemble_csv(std::ostream& out, const Ensemble& ens);

/// Inverse of write_ensemble_csv. Throws IoFailure on malformed input.
Ensemble read_ensemble_csv(std::istream& in, const FunessParams& p, double horizon);

/// Header `trajectory_id,time,S`, one row per sample and grid point.
void write_walk_csv(std::ostream& out, std::span<const WalkSample> samples);

struct MomentsRow {
    double t = 0.0;
    double mean_analytic = 0.0;
    double mean_mc = 0.0;
    double mean_stderr = 0.0;
    double var_analytic = 0.0;
    double var_mc = 0.0;
    double var_stderr = 0.0;
};

/// Header `t,mean_analytic,mean_mc,mean_stderr,var_analytic,var_mc,var_stderr`.
void write_moments_csv(std::ostream& out, std::span<const MomentsRow> rows);

/// Generic table writer: header then rows, values via format_double.
void write_table_csv(std::ostream& out, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows);

}  // namespace funess
