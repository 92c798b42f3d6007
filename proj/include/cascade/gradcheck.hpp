#pragma once

#include <string>
#include <vector>

#include "cascade/corpus.hpp"
#include "cascade/model.hpp"

namespace cascade {

struct GradCheckOptions {
  double step = 1e-5;        ///< central-difference step
  double tolerance = 1e-4;   ///< on the relative error
  /// Denominator floor: error = |a - n| / max(|a|, |n|, floor). Central
  /// differences at step 1e-5 carry about 3e-10 of cancellation noise on
  /// this loss, so relative errors below the floor are not measurable.
  double floor = 1e-5;
  /// Entries checked per parameter tensor; 0 checks all of them.
  long max_entries = 0;
};

struct GroupCheck {
  std::string group;
  long entries = 0;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::string worst_parameter;
  long worst_index = -1;
};

struct GradCheckReport {
  std::vector<GroupCheck> groups;
  double max_rel_error = 0.0;
  double loss = 0.0;
  bool passed = false;
};

/// Compares the analytic gradient of the summed teacher-forced joint loss
/// over `batch` (no dropout) with central differences, entry by entry.
GradCheckReport gradient_check(CascadeModel& model, const std::vector<Sentence>& batch,
                               const GradCheckOptions& options = {});

/// The desk-scale setup used by the command-line check: toy encoder over a
/// two-sentence synthetic batch with three relations.
ModelConfig gradcheck_config();
std::vector<Sentence> gradcheck_batch(std::uint64_t seed, int num_relations = 3);

}  // namespace cascade
