#pragma once
#include <compare>
#include <string>
#include <string_view>
#include <vector>

#include "trackinspect/labels.hpp"

namespace trackinspect {

enum class Medium { Frame, Video };

// Identity of one captured frame: "01_F_T2" = case 1, still frame, trial 2.
struct FootageId {
  int case_number = 1;  // 1..15
  Medium medium = Medium::Frame;
  int trial = 1;  // 1..5

  auto operator<=>(const FootageId&) const = default;
};

// Parses "01_F_T2" (an image extension such as ".png" or ".jpg" is stripped
// first).  Throws std::invalid_argument on malformed names, case numbers
// outside 1..15, or trial digits outside 1..5.
FootageId parse_footage_name(std::string_view text);
std::string format_footage_name(const FootageId& id);

enum class PairingPolicy { SameTrial, ShiftedTrial };

// One control/variable comparison together with the injected defects the
// pipeline is expected to recover.
struct RunPairSpec {
  FootageId control;
  FootageId variable;
  DefectSet expected;
};

struct RunManifest {
  PairingPolicy policy = PairingPolicy::SameTrial;
  std::vector<RunPairSpec> pairs;
};

// Builds the run list for the given cases and trials.  The control frame is
// always the intact-track case 01; SameTrial pairs XX_F_Tt with 01_F_Tt,
// ShiftedTrial pairs XX_F_Tt with 01_F_T((t mod 5) + 1) so trial 5 wraps
// back to control trial 1.
RunManifest build_run_manifest(const std::vector<int>& cases,
                               const std::vector<int>& trials,
                               PairingPolicy policy);

}  // namespace trackinspect
