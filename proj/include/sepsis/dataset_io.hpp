#pragma once

#include "sepsis/core.hpp"

#include <istream>
#include <ostream>

namespace sepsis {

/// One row per unit step: `unit_id,patient_id,step,<8 channels>,label`.
void write_units_csv(std::ostream& out, const CohortDataset& dataset);

/// One row per unit: `unit_id,patient_id,start_time,label,qsofa,gcs_missing,<channel>_obs...`.
void write_units_summary_csv(std::ostream& out, const CohortDataset& dataset);

/// Rebuilds the units written by the two writers above; grid values read back
/// bit-exactly. Demographics are not part of these files.
CohortDataset read_units(std::istream& units, std::istream& summary);

}  // namespace sepsis
