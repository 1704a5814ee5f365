#include "jointdst/io_util.h"

#include <fstream>
#include <sstream>

#include "jointdst/error.h"

namespace jointdst {

using nlohmann::json;

std::string ReadTextFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open '" + path + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void WriteTextFile(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot open '" + path + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorKind::kIo, "write to '" + path + "' failed");
}

json ReadJsonFile(const std::string& path) {
  const std::string text = ReadTextFile(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kParse, path + ": " + e.what());
  }
}

void WriteJsonFile(const std::string& path, const json& doc, int indent) {
  std::string text = doc.dump(indent);
  text += '\n';
  WriteTextFile(path, text);
}

void CheckFormatVersion(const json& doc, std::string_view what) {
  if (!doc.is_object()) {
    throw Error(ErrorKind::kParse, std::string(what) + ": expected an object");
  }
  auto it = doc.find("format_version");
  if (it == doc.end()) {
    throw Error(ErrorKind::kParse, std::string(what) + ": missing format_version");
  }
  if (!it->is_number_integer() || it->get<int>() != 1) {
    throw Error(ErrorKind::kVersion,
                std::string(what) + ": unsupported format_version " + it->dump());
  }
}

const json& RequireField(const json& doc, std::string_view key,
                         std::string_view what) {
  if (!doc.is_object()) {
    throw Error(ErrorKind::kParse, std::string(what) + ": expected an object");
  }
  auto it = doc.find(key);
  if (it == doc.end()) {
    throw Error(ErrorKind::kParse,
                std::string(what) + ": missing field '" + std::string(key) + "'");
  }
  return *it;
}

void CheckKeys(const json& doc, std::initializer_list<std::string_view> allowed,
               std::string_view what) {
  if (!doc.is_object()) {
    throw Error(ErrorKind::kParse, std::string(what) + ": expected an object");
  }
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    bool known = false;
    for (std::string_view key : allowed) known = known || key == it.key();
    if (!known) {
      throw Error(ErrorKind::kParse,
                  std::string(what) + ": unknown field '" + it.key() + "'");
    }
  }
}

std::string GetString(const json& doc, std::string_view key,
                      std::string_view what) {
  const json& field = RequireField(doc, key, what);
  if (!field.is_string()) {
    throw Error(ErrorKind::kParse, std::string(what) + ": field '" +
                                       std::string(key) + "' must be a string");
  }
  return field.get<std::string>();
}

long long GetInt(const json& doc, std::string_view key, std::string_view what) {
  const json& field = RequireField(doc, key, what);
  if (!field.is_number_integer()) {
    throw Error(ErrorKind::kParse, std::string(what) + ": field '" +
                                       std::string(key) + "' must be an integer");
  }
  return field.get<long long>();
}

}  // namespace jointdst
