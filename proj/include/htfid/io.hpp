#pragma once

#include "htfid/estimate.hpp"
#include "htfid/excite.hpp"
#include "htfid/fit.hpp"
#include "htfid/hss.hpp"
#include "htfid/sim.hpp"

#include <json.hpp>

#include <string>

namespace htfid {

/// Shortest round-trip decimal form (17 significant digits).
std::string format_double(double v);

/// Header `t,x,xdot,u,chart`; chart is 1 while the damper is on.
void write_trajectory_csv(const Trajectory& traj, const std::string& path);
Trajectory read_trajectory_csv(const std::string& path);

/// Header `omega_rad_s,n,re,im`, one row per valid (grid point, harmonic),
/// grouped by grid point.
void write_htf_csv(const HarmonicTransferSet& htf, const std::string& path);
HarmonicTransferSet read_htf_csv(const std::string& path,
                                 FrequencyReference reference = FrequencyReference::Output);

/// Header `omega_rad_s,n,mag_db,phase_deg` for figure reproduction.
void write_htf_plot_csv(const HarmonicTransferSet& htf, const std::string& path);

/// Writes `rec_<k>.csv` per record and `plan.json` into `dir`.
void write_bundle(const ExperimentBundle& bundle, const std::string& dir);

nlohmann::ordered_json to_json(const ModelParams& p);
nlohmann::ordered_json to_json(const ChirpPlan& plan);
nlohmann::ordered_json to_json(const FitResult& r);
nlohmann::ordered_json to_json(const EstimateDiagnostics& d);
nlohmann::ordered_json cycle_summary(const LimitCycle& cycle);

void write_json(const nlohmann::ordered_json& j, const std::string& path);

}  // namespace htfid
