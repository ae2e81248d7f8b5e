#pragma once

#include <filesystem>
#include <string_view>
#include <vector>

#include "refinery/analytics.hpp"

namespace refinery {

/// Built-in list for a language-script code (e.g. "spa_Latn"); empty set when none ships.
StopwordSet builtin_stopwords(std::string_view language);

std::vector<std::string> builtin_stopword_languages();

/// One word per line; blank lines and lines starting with '#' are ignored. Words are lowercased.
StopwordSet load_stopwords(const std::filesystem::path& path);

}  // namespace refinery
