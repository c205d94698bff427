#include "trackinspect/footage.hpp"

#include <stdexcept>

#include "trackinspect/cases.hpp"

namespace trackinspect {

FootageId parse_footage_name(std::string_view text) {
  std::string_view name = text;
  // Strip one image extension if present ("01_F_T2.png" -> "01_F_T2").
  if (auto dot = name.rfind('.'); dot != std::string_view::npos) name = name.substr(0, dot);

  auto bad = [&](const char* why) {
    throw std::invalid_argument("bad footage name \"" + std::string(text) + "\": " + why);
  };
  if (name.size() != 7) bad("expected form CC_F_Tn");
  if (name[0] < '0' || name[0] > '9' || name[1] < '0' || name[1] > '9')
    bad("case number must be two digits");
  if (name[2] != '_' || name[4] != '_') bad("expected '_' separators");
  if (name[3] != 'F' && name[3] != 'V') bad("medium must be F or V");
  if (name[5] != 'T') bad("expected 'T' before the trial digit");
  if (name[6] < '1' || name[6] > '5') bad("trial must be 1..5");

  FootageId id;
  id.case_number = (name[0] - '0') * 10 + (name[1] - '0');
  if (id.case_number < 1 || id.case_number > 15) bad("case number must be 01..15");
  id.medium = name[3] == 'F' ? Medium::Frame : Medium::Video;
  id.trial = name[6] - '0';
  return id;
}

std::string format_footage_name(const FootageId& id) {
  if (id.case_number < 1 || id.case_number > 15)
    throw std::invalid_argument("case number must be 1..15");
  if (id.trial < 1 || id.trial > 5)
    throw std::invalid_argument("trial must be 1..5");
  std::string s;
  s += char('0' + id.case_number / 10);
  s += char('0' + id.case_number % 10);
  s += '_';
  s += id.medium == Medium::Frame ? 'F' : 'V';
  s += "_T";
  s += char('0' + id.trial);
  return s;
}

RunManifest build_run_manifest(const std::vector<int>& cases,
                               const std::vector<int>& trials,
                               PairingPolicy policy) {
  if (cases.empty()) throw std::invalid_argument("manifest needs at least one case");
  if (trials.empty()) throw std::invalid_argument("manifest needs at least one trial");
  for (int c : cases)
    if (c < 1 || c > 15)
      throw std::invalid_argument("manifest case out of range: " + std::to_string(c));
  for (int t : trials)
    if (t < 1 || t > 5)
      throw std::invalid_argument("manifest trial out of range: " + std::to_string(t));

  RunManifest m;
  m.policy = policy;
  for (int c : cases) {
    for (int t : trials) {
      RunPairSpec pair;
      pair.variable = {c, Medium::Frame, t};
      int control_trial = policy == PairingPolicy::SameTrial ? t : (t % 5) + 1;
      pair.control = {1, Medium::Frame, control_trial};
      pair.expected = test_case(c).defects;
      m.pairs.push_back(std::move(pair));
    }
  }
  return m;
}

}  // namespace trackinspect
