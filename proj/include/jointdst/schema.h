#ifndef JOINTDST_SCHEMA_H_
#define JOINTDST_SCHEMA_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace jointdst {

using json = nlohmann::json;

// Version written into every file this library emits. Readers reject others.
inline constexpr int kFormatVersion = 1;

enum class ValueKind { kOpen, kBoolean };

enum class DataTypeGroup { kTime, kPlace, kInteger, kName, kOther };

// Per-slot copy decision. Index 0 of every admissible list is kNone.
enum class CopyClass : std::uint8_t {
  kNone,
  kDontcare,
  kSpan,
  kInform,
  kRefer,
  kTrue,
  kFalse,
};

inline constexpr int kNumCopyClasses = 7;

std::string_view ToString(ValueKind kind);
std::string_view ToString(DataTypeGroup group);
std::string_view ToString(CopyClass cls);
ValueKind ParseValueKind(std::string_view text);
DataTypeGroup ParseDataTypeGroup(std::string_view text);
CopyClass ParseCopyClass(std::string_view text);

// Classes a slot of the given kind may take, in head output order.
std::span<const CopyClass> AdmissibleClasses(ValueKind kind);
bool IsAdmissible(ValueKind kind, CopyClass cls);
// Position of `cls` in AdmissibleClasses(kind), or -1.
int ClassIndex(ValueKind kind, CopyClass cls);

struct SlotDef {
  std::string domain;
  std::string name;
  int index = 0;
  ValueKind value_kind = ValueKind::kOpen;
  DataTypeGroup data_type_group = DataTypeGroup::kOther;

  std::string FullName() const { return domain + "-" + name; }
  int num_classes() const {
    return static_cast<int>(AdmissibleClasses(value_kind).size());
  }
  CopyClass ClassAt(int k) const { return AdmissibleClasses(value_kind)[k]; }
};

struct DomainInfo {
  std::string name;
  std::vector<int> slots;  // canonical order
};

// Ordered slot ontology. Indices are positions in the constructor argument.
class SlotSchema {
 public:
  // Bound on slots per domain; the MRF head enumerates 2^n assignments.
  static constexpr int kMaxSlotsPerDomain = 12;

  SlotSchema() = default;
  // Throws Error(kSchema) on duplicate (domain, name), empty identifiers or an
  // oversized domain. Incoming `index` fields are overwritten.
  explicit SlotSchema(std::vector<SlotDef> slots);

  int size() const { return static_cast<int>(slots_.size()); }
  const SlotDef& slot(int s) const { return slots_.at(s); }
  const std::vector<SlotDef>& slots() const { return slots_; }
  const std::vector<DomainInfo>& domains() const { return domains_; }
  int domain_of(int s) const { return domain_of_.at(s); }
  // Bit position of slot `s` inside its domain's assignment encoding.
  int position_in_domain(int s) const { return position_in_domain_.at(s); }

  std::optional<int> Find(std::string_view domain, std::string_view name) const;
  std::optional<int> FindByFullName(std::string_view full_name) const;

  // Stable 64-bit digest of the ordered slot records.
  std::uint64_t Fingerprint() const;
  std::string FingerprintHex() const;

  bool operator==(const SlotSchema& other) const;

 private:
  std::vector<SlotDef> slots_;
  std::vector<DomainInfo> domains_;
  std::vector<int> domain_of_;
  std::vector<int> position_in_domain_;
};

json SchemaToJson(const SlotSchema& schema);
SlotSchema SchemaFromJson(const json& doc);
SlotSchema LoadSchema(const std::string& path);
void SaveSchema(const SlotSchema& schema, const std::string& path);

// A slot value: either literal text or one of the sentinels.
class Value {
 public:
  enum class Kind : std::uint8_t { kNone, kDontcare, kTrue, kFalse, kText };

  Value() = default;
  static Value None() { return Value(); }
  static Value Dontcare() { return Value(Kind::kDontcare, {}); }
  static Value True() { return Value(Kind::kTrue, {}); }
  static Value False() { return Value(Kind::kFalse, {}); }
  static Value Text(std::string text) { return Value(Kind::kText, std::move(text)); }

  Kind kind() const { return kind_; }
  const std::string& text() const { return text_; }
  bool is_none() const { return kind_ == Kind::kNone; }
  bool is_text() const { return kind_ == Kind::kText; }

  // Bit identity; use ValuesEqual for the evaluation semantics.
  bool operator==(const Value& other) const = default;

  // "<none>", "<dontcare>", "<true>", "<false>" or the text itself.
  std::string ToDisplay() const;

 private:
  Value(Kind kind, std::string text) : kind_(kind), text_(std::move(text)) {}

  Kind kind_ = Kind::kNone;
  std::string text_;
};

// Case-folded, trimmed, internal whitespace collapsed to one space.
std::string NormalizeValueText(std::string_view text);
bool ValuesEqual(const Value& a, const Value& b);

// null for NONE, "<dontcare>"/"<true>"/"<false>" for sentinels, else text.
json ValueToJson(const Value& value);
Value ValueFromJson(const json& doc);

}  // namespace jointdst

#endif  // JOINTDST_SCHEMA_H_
