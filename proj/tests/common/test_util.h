#ifndef JOINTDST_TESTS_UNIT_TEST_UTIL_H_
#define JOINTDST_TESTS_UNIT_TEST_UTIL_H_

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "jointdst/dialogue.h"
#include "jointdst/heads.h"
#include "jointdst/params.h"
#include "jointdst/random.h"
#include "jointdst/schema.h"

namespace jointdst::testing {

inline SlotDef Slot(std::string domain, std::string name, DataTypeGroup group,
                    ValueKind kind = ValueKind::kOpen) {
  SlotDef def;
  def.domain = std::move(domain);
  def.name = std::move(name);
  def.data_type_group = group;
  def.value_kind = kind;
  return def;
}

// Two domains, six slots, one boolean.
inline SlotSchema SmallSchema() {
  return SlotSchema({Slot("hotel", "arrive", DataTypeGroup::kTime),
                     Slot("hotel", "area", DataTypeGroup::kPlace),
                     Slot("hotel", "parking", DataTypeGroup::kOther, ValueKind::kBoolean),
                     Slot("taxi", "leave", DataTypeGroup::kTime),
                     Slot("taxi", "dest", DataTypeGroup::kPlace),
                     Slot("taxi", "people", DataTypeGroup::kInteger)});
}

inline TokenList Tokens(const std::string& text) {
  TokenList out;
  std::string cur;
  for (char c : text) {
    if (c == ' ') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

inline SlotLabel NoneLabel(Value value = Value::None()) {
  SlotLabel l;
  l.gold_value = std::move(value);
  return l;
}

inline std::vector<Unary> RandomUnaries(Rng& rng, int n, double scale = 2.0) {
  std::vector<Unary> out(n);
  for (Unary& u : out) {
    u.inactive = scale * rng.Normal();
    u.active = scale * rng.Normal();
  }
  return out;
}

inline std::vector<double> RandomTable(Rng& rng, int n, double scale = 2.0) {
  std::vector<double> t(std::size_t{1} << n);
  for (double& x : t) x = scale * rng.Normal();
  return t;
}

inline void FillNormal(ParamSet& params, Rng& rng, double scale) {
  for (double& v : params.values()) v = scale * rng.Normal();
}

// Fresh directory under the system temp dir, removed first if present.
inline std::string TempDir(const std::string& name) {
  const std::filesystem::path dir =
      std::filesystem::temp_directory_path() / ("jointdst_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

}  // namespace jointdst::testing

#endif  // JOINTDST_TESTS_UNIT_TEST_UTIL_H_
