#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace privrec {

// "key = value" lines; '#' starts a comment; blank lines ignored. Later
// occurrences of a key win.
std::map<std::string, std::string> parse_key_values(std::string_view text);

std::map<std::string, std::string> load_config_file(const std::filesystem::path& path);

// Path of the config to use: the PRIVREC_CONFIG environment variable when
// set, else the --config flag value, else nothing.
std::optional<std::filesystem::path> resolve_config_path(
    const std::optional<std::string>& flag_path);

}  // namespace privrec
