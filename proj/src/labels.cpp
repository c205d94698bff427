#include "trackinspect/labels.hpp"

#include <stdexcept>

namespace trackinspect {

char kind_letter(ComponentKind kind) {
  switch (kind) {
    case ComponentKind::Block: return 'B';
    case ComponentKind::Screw: return 'S';
    case ComponentKind::Washer: return 'W';
    case ComponentKind::Connector: return 'C';
  }
  throw std::invalid_argument("unknown component kind");
}

ComponentKind kind_from_letter(char c) {
  switch (c) {
    case 'B': return ComponentKind::Block;
    case 'S': return ComponentKind::Screw;
    case 'W': return ComponentKind::Washer;
    case 'C': return ComponentKind::Connector;
  }
  throw std::invalid_argument(std::string("unknown component kind letter '") + c + "'");
}

static void validate(const ComponentId& id, std::string_view text) {
  auto bad = [&](const char* why) {
    throw std::invalid_argument("bad component label \"" + std::string(text) + "\": " + why);
  };
  if (id.tie < 1 || id.tie > 9) bad("tie must be 1..9");
  if (id.kind == ComponentKind::Block) {
    if (id.rail != 0) bad("blocks carry no rail prefix");
  } else {
    if (id.rail != 1 && id.rail != 2) bad("rail must be 1 or 2");
    if (id.kind == ComponentKind::Connector && id.tie != 1 && id.tie != 9)
      bad("connectors exist only at ties 1 and 9");
  }
}

ComponentId parse_component_label(std::string_view text) {
  auto bad = [&](const char* why) {
    throw std::invalid_argument("bad component label \"" + std::string(text) + "\": " + why);
  };
  ComponentId id;
  if (text.size() == 2) {
    // tie + "B"
    if (text[1] != 'B') bad("expected form <tie>B or <rail>-<tie><kind>");
    if (text[0] < '1' || text[0] > '9') bad("tie must be 1..9");
    id.kind = ComponentKind::Block;
    id.rail = 0;
    id.tie = text[0] - '0';
  } else if (text.size() == 4) {
    // rail "-" tie kind
    if (text[1] != '-') bad("expected '-' after rail digit");
    if (text[0] != '1' && text[0] != '2') bad("rail must be 1 or 2");
    if (text[2] < '1' || text[2] > '9') bad("tie must be 1..9");
    if (text[3] != 'S' && text[3] != 'W' && text[3] != 'C')
      bad("kind must be S, W or C");
    id.kind = kind_from_letter(text[3]);
    id.rail = text[0] - '0';
    id.tie = text[2] - '0';
  } else {
    bad("expected form <tie>B or <rail>-<tie><kind>");
  }
  validate(id, text);
  return id;
}

std::string format_component_label(const ComponentId& id) {
  validate(id, "<unformatted>");
  if (id.kind == ComponentKind::Block) return std::string(1, char('0' + id.tie)) + "B";
  std::string s;
  s += char('0' + id.rail);
  s += '-';
  s += char('0' + id.tie);
  s += kind_letter(id.kind);
  return s;
}

const std::vector<ComponentId>& inventory() {
  static const std::vector<ComponentId> items = [] {
    std::vector<ComponentId> v;
    for (int tie = 1; tie <= 9; ++tie) v.push_back({ComponentKind::Block, 0, tie});
    for (int rail = 1; rail <= 2; ++rail)
      for (int tie = 1; tie <= 9; ++tie) v.push_back({ComponentKind::Screw, rail, tie});
    for (int rail = 1; rail <= 2; ++rail)
      for (int tie = 1; tie <= 9; ++tie) v.push_back({ComponentKind::Washer, rail, tie});
    for (int rail = 1; rail <= 2; ++rail)
      for (int tie : {1, 9}) v.push_back({ComponentKind::Connector, rail, tie});
    return v;
  }();
  return items;
}

const DefectSet& inventory_set() {
  static const DefectSet s(inventory().begin(), inventory().end());
  return s;
}

}  // namespace trackinspect
