#include "jointdst/schema.h"

#include <array>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <utility>

#include "jointdst/error.h"
#include "jointdst/io_util.h"
#include "jointdst/random.h"

namespace jointdst {

namespace {

constexpr std::array<CopyClass, 5> kOpenClasses = {
    CopyClass::kNone, CopyClass::kDontcare, CopyClass::kSpan,
    CopyClass::kInform, CopyClass::kRefer};
constexpr std::array<CopyClass, 4> kBooleanClasses = {
    CopyClass::kNone, CopyClass::kDontcare, CopyClass::kTrue,
    CopyClass::kFalse};

bool IsIdentifier(std::string_view text) {
  if (text.empty()) return false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

}  // namespace

std::string_view ToString(ValueKind kind) {
  return kind == ValueKind::kOpen ? "open" : "boolean";
}

std::string_view ToString(DataTypeGroup group) {
  switch (group) {
    case DataTypeGroup::kTime: return "time";
    case DataTypeGroup::kPlace: return "place";
    case DataTypeGroup::kInteger: return "integer";
    case DataTypeGroup::kName: return "name";
    case DataTypeGroup::kOther: return "other";
  }
  return "other";
}

std::string_view ToString(CopyClass cls) {
  switch (cls) {
    case CopyClass::kNone: return "none";
    case CopyClass::kDontcare: return "dontcare";
    case CopyClass::kSpan: return "span";
    case CopyClass::kInform: return "inform";
    case CopyClass::kRefer: return "refer";
    case CopyClass::kTrue: return "true";
    case CopyClass::kFalse: return "false";
  }
  return "none";
}

ValueKind ParseValueKind(std::string_view text) {
  if (text == "open") return ValueKind::kOpen;
  if (text == "boolean") return ValueKind::kBoolean;
  throw Error(ErrorKind::kParse, "unknown value_kind '" + std::string(text) + "'");
}

DataTypeGroup ParseDataTypeGroup(std::string_view text) {
  static const std::map<std::string_view, DataTypeGroup> kByName = {
      {"time", DataTypeGroup::kTime},       {"place", DataTypeGroup::kPlace},
      {"integer", DataTypeGroup::kInteger}, {"name", DataTypeGroup::kName},
      {"other", DataTypeGroup::kOther}};
  auto it = kByName.find(text);
  if (it == kByName.end()) {
    throw Error(ErrorKind::kParse,
                "unknown data_type_group '" + std::string(text) + "'");
  }
  return it->second;
}

CopyClass ParseCopyClass(std::string_view text) {
  for (int k = 0; k < kNumCopyClasses; ++k) {
    auto cls = static_cast<CopyClass>(k);
    if (ToString(cls) == text) return cls;
  }
  throw Error(ErrorKind::kParse, "unknown copy class '" + std::string(text) + "'");
}

std::span<const CopyClass> AdmissibleClasses(ValueKind kind) {
  if (kind == ValueKind::kOpen) return kOpenClasses;
  return kBooleanClasses;
}

bool IsAdmissible(ValueKind kind, CopyClass cls) {
  return ClassIndex(kind, cls) >= 0;
}

int ClassIndex(ValueKind kind, CopyClass cls) {
  auto classes = AdmissibleClasses(kind);
  for (std::size_t k = 0; k < classes.size(); ++k) {
    if (classes[k] == cls) return static_cast<int>(k);
  }
  return -1;
}

SlotSchema::SlotSchema(std::vector<SlotDef> slots) : slots_(std::move(slots)) {
  std::set<std::pair<std::string, std::string>> seen;
  std::map<std::string, int> domain_index;
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    SlotDef& slot = slots_[i];
    slot.index = static_cast<int>(i);
    if (!IsIdentifier(slot.domain) || !IsIdentifier(slot.name)) {
      throw Error(ErrorKind::kSchema,
                  "slot " + std::to_string(i) + " has an empty or blank identifier");
    }
    if (!seen.emplace(slot.domain, slot.name).second) {
      throw Error(ErrorKind::kSchema, "duplicate slot '" + slot.FullName() + "'");
    }
    auto [it, inserted] =
        domain_index.emplace(slot.domain, static_cast<int>(domains_.size()));
    if (inserted) domains_.push_back(DomainInfo{slot.domain, {}});
    DomainInfo& domain = domains_[it->second];
    domain_of_.push_back(it->second);
    position_in_domain_.push_back(static_cast<int>(domain.slots.size()));
    domain.slots.push_back(slot.index);
    if (static_cast<int>(domain.slots.size()) > kMaxSlotsPerDomain) {
      throw Error(ErrorKind::kSchema,
                  "domain '" + slot.domain + "' has more than " +
                      std::to_string(kMaxSlotsPerDomain) + " slots");
    }
  }
}

std::optional<int> SlotSchema::Find(std::string_view domain,
                                    std::string_view name) const {
  for (const SlotDef& slot : slots_) {
    if (slot.domain == domain && slot.name == name) return slot.index;
  }
  return std::nullopt;
}

std::optional<int> SlotSchema::FindByFullName(std::string_view full_name) const {
  for (const SlotDef& slot : slots_) {
    if (slot.FullName() == full_name) return slot.index;
  }
  return std::nullopt;
}

std::uint64_t SlotSchema::Fingerprint() const {
  std::uint64_t h = HashBytes("jointdst-schema");
  for (const SlotDef& slot : slots_) {
    std::string record = slot.domain;
    record += '\x1f';
    record += slot.name;
    record += '\x1f';
    record += ToString(slot.value_kind);
    record += '\x1f';
    record += ToString(slot.data_type_group);
    h = MixHash(h, HashBytes(record));
  }
  return h;
}

std::string SlotSchema::FingerprintHex() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(Fingerprint()));
  return buf;
}

bool SlotSchema::operator==(const SlotSchema& other) const {
  if (slots_.size() != other.slots_.size()) return false;
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    const SlotDef& a = slots_[i];
    const SlotDef& b = other.slots_[i];
    if (a.domain != b.domain || a.name != b.name ||
        a.value_kind != b.value_kind || a.data_type_group != b.data_type_group) {
      return false;
    }
  }
  return true;
}

json SchemaToJson(const SlotSchema& schema) {
  json slots = json::array();
  for (const SlotDef& slot : schema.slots()) {
    slots.push_back({{"domain", slot.domain},
                     {"name", slot.name},
                     {"value_kind", ToString(slot.value_kind)},
                     {"data_type_group", ToString(slot.data_type_group)}});
  }
  return {{"format_version", kFormatVersion}, {"slots", slots}};
}

SlotSchema SchemaFromJson(const json& doc) {
  CheckFormatVersion(doc, "schema");
  const json& slots = RequireField(doc, "slots", "schema");
  if (!slots.is_array()) throw Error(ErrorKind::kParse, "schema: 'slots' must be an array");
  std::vector<SlotDef> defs;
  for (const json& record : slots) {
    CheckKeys(record, {"domain", "name", "value_kind", "data_type_group"},
              "schema slot");
    SlotDef def;
    def.domain = GetString(record, "domain", "schema slot");
    def.name = GetString(record, "name", "schema slot");
    def.value_kind = ParseValueKind(GetString(record, "value_kind", "schema slot"));
    def.data_type_group =
        ParseDataTypeGroup(GetString(record, "data_type_group", "schema slot"));
    defs.push_back(std::move(def));
  }
  return SlotSchema(std::move(defs));
}

SlotSchema LoadSchema(const std::string& path) {
  return SchemaFromJson(ReadJsonFile(path));
}

void SaveSchema(const SlotSchema& schema, const std::string& path) {
  WriteJsonFile(path, SchemaToJson(schema));
}

std::string Value::ToDisplay() const {
  switch (kind_) {
    case Kind::kNone: return "<none>";
    case Kind::kDontcare: return "<dontcare>";
    case Kind::kTrue: return "<true>";
    case Kind::kFalse: return "<false>";
    case Kind::kText: return text_;
  }
  return text_;
}

std::string NormalizeValueText(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

bool ValuesEqual(const Value& a, const Value& b) {
  if (a.kind() != b.kind()) return false;
  if (!a.is_text()) return true;
  return NormalizeValueText(a.text()) == NormalizeValueText(b.text());
}

json ValueToJson(const Value& value) {
  if (value.is_none()) return nullptr;
  return value.ToDisplay();
}

Value ValueFromJson(const json& doc) {
  if (doc.is_null()) return Value::None();
  if (!doc.is_string()) throw Error(ErrorKind::kParse, "value must be a string or null");
  const std::string& text = doc.get_ref<const std::string&>();
  if (text == "<dontcare>") return Value::Dontcare();
  if (text == "<true>") return Value::True();
  if (text == "<false>") return Value::False();
  if (text == "<none>") return Value::None();
  if (text.size() >= 2 && text.front() == '<' && text.back() == '>') {
    throw Error(ErrorKind::kParse, "unknown sentinel value '" + text + "'");
  }
  return Value::Text(text);
}

}  // namespace jointdst
