#ifndef JOINTDST_IO_UTIL_H_
#define JOINTDST_IO_UTIL_H_

#include <initializer_list>
#include <string>
#include <string_view>

#include "json.hpp"

namespace jointdst {

// Helpers shared by the file formats. All failures throw jointdst::Error.

nlohmann::json ReadJsonFile(const std::string& path);
// indent < 0 writes compact JSON. Output always ends with a newline.
void WriteJsonFile(const std::string& path, const nlohmann::json& doc,
                   int indent = 1);
void WriteTextFile(const std::string& path, std::string_view text);
std::string ReadTextFile(const std::string& path);

void CheckFormatVersion(const nlohmann::json& doc, std::string_view what);
const nlohmann::json& RequireField(const nlohmann::json& doc,
                                   std::string_view key, std::string_view what);
// Rejects keys outside `allowed`.
void CheckKeys(const nlohmann::json& doc,
               std::initializer_list<std::string_view> allowed,
               std::string_view what);
std::string GetString(const nlohmann::json& doc, std::string_view key,
                      std::string_view what);
long long GetInt(const nlohmann::json& doc, std::string_view key,
                 std::string_view what);

}  // namespace jointdst

#endif  // JOINTDST_IO_UTIL_H_
