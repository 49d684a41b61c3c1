#pragma once

#include "htfid/sim.hpp"

#include <string>
#include <vector>

namespace htfid {

/// Identification input: n_segments copies of a linear chirp, copy k delayed
/// by k T / n_segments against the forcing clock.
struct ChirpPlan {
    double amplitude = 0.004;       ///< [N]
    double f_lo = 0.0;              ///< [Hz]
    double f_hi = 7.0;              ///< [Hz]
    double segment_duration = 30.0; ///< chirp sweep length [s]
    int n_segments = 9;
    double T = 1.0;                 ///< system period [s]
    double dt = 1e-3;               ///< [s]
    double record_duration = 40.0;  ///< recorded length incl. decay tail [s]; 0 means segment_duration

    void validate() const;
    double record_length() const { return record_duration > 0.0 ? record_duration : segment_duration; }
    /// Clock delay of copy k.
    double offset(int phase_index) const { return phase_index * T / n_segments; }
};

/// u_k(t) for a record starting at clock time 0; zero before the delayed start
/// and after the sweep ends.
double chirp_value(const ChirpPlan& plan, int phase_index, double t);

/// u_k sampled on the record grid.
std::vector<double> gen_chirp(const ChirpPlan& plan, int phase_index);

struct ExperimentRecord {
    int phase_index = 0;
    double chirp_offset = 0.0;  ///< clock delay of the chirp start [s]
    double clock_phase = 0.0;   ///< clock phase of the first sample [s]
    Trajectory error;           ///< xi samples with the exogenous input in `u`
};

struct ExperimentBundle {
    ChirpPlan plan;
    std::vector<ExperimentRecord> records;
    std::vector<std::string> warnings;
};

/// Simulates one record per phase index, each starting on the cycle at clock
/// phase 0 with total input F(t) + u_k(t), and subtracts the cycle.
ExperimentBundle run_experiments(const HybridModel& model, const LimitCycle& cycle,
                                 const ChirpPlan& plan);

}  // namespace htfid
